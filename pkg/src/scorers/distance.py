from typing import Sequence

import numpy as np

from src.errors import ContractError
from src.graphfilter.network import NetworkOutput
from src.scorers.base import BaseScorer
from src.styles import STYLE_ORDER


class DistanceScorer(BaseScorer):
    """Euclidean-distance baseline: 1 / (1 + mean pairwise distance).

    It has no style opinion and returns a uniform style distribution.
    """

    name = "distance"

    def score_embeddings(self, sets: Sequence[np.ndarray]) -> list[NetworkOutput]:
        uniform = np.full(len(STYLE_ORDER), 1.0 / len(STYLE_ORDER))
        out = []
        for emb in sets:
            if len(emb) < 2:
                raise ContractError(f"Distance scoring needs at least 2 items, got {len(emb)}")
            i, j = np.triu_indices(len(emb), k=1)
            mean_dist = float(np.linalg.norm(emb[i] - emb[j], axis=1).mean())
            out.append(NetworkOutput(1.0 / (1.0 + mean_dist), uniform.copy()))
        return out
