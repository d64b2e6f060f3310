from src.autodiff.tensor import Tensor, backward, reduce

__all__ = ["Tensor", "backward", "reduce"]
