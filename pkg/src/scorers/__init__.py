from src.scorers.base import BaseScorer
from src.scorers.distance import DistanceScorer
from src.scorers.graph import GraphScorer

__all__ = ["BaseScorer", "DistanceScorer", "GraphScorer"]
