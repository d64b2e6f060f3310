import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from src.config import AggregationMode
from src.graphfilter.network import NetworkOutput, NetworkParams, build_graph, forward_batch
from src.scorers.base import BaseScorer

logger = logging.getLogger(__name__)

CHUNK_SIZE = 256


class GraphScorer(BaseScorer):
    """Scores sets with the trained graph network.

    Parameters are read-only here, so chunks of sets are scored on up to
    ``threads`` worker threads.
    """

    name = "graph"

    def __init__(
        self,
        params: NetworkParams,
        mode: Optional[AggregationMode] = None,
        threads: int = 1,
        chunk_size: int = CHUNK_SIZE,
    ):
        params.validate(mode)
        self.params = params
        self.mode = mode
        self.threads = max(1, threads)
        self.chunk_size = chunk_size

    def _score_chunk(self, sets: Sequence[np.ndarray]) -> list[NetworkOutput]:
        return forward_batch([build_graph(s) for s in sets], self.params, self.mode)

    def score_embeddings(self, sets: Sequence[np.ndarray]) -> list[NetworkOutput]:
        chunks = [sets[k:k + self.chunk_size] for k in range(0, len(sets), self.chunk_size)]
        if self.threads == 1 or len(chunks) < 2:
            results = [self._score_chunk(c) for c in chunks]
        else:
            logger.debug("Scoring %d chunk(s) on %d thread(s)", len(chunks), self.threads)
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(self._score_chunk, chunks))
        return [out for chunk in results for out in chunk]
