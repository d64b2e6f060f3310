from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from src.data.corpus import Corpus
from src.graphfilter.network import NetworkOutput


class BaseScorer(ABC):
    name: str = "base"

    @abstractmethod
    def score_embeddings(self, sets: Sequence[np.ndarray]) -> list[NetworkOutput]:
        """Score each set, given as an [n, D] array of item embeddings.

        Must return one output per set, in order.
        """

    def score_sets(self, corpus: Corpus, item_lists: Sequence[Sequence[str]]) -> list[NetworkOutput]:
        if not item_lists:
            return []
        return self.score_embeddings([corpus.embeddings(ids) for ids in item_lists])

    def score(self, corpus: Corpus, item_ids: Sequence[str]) -> NetworkOutput:
        return self.score_sets(corpus, [item_ids])[0]
