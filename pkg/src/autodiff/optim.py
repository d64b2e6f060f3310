from typing import Iterable, MutableMapping, Optional

import numpy as np

from src.autodiff.tensor import Tensor
from src.config import OptimizerConfig


class Adam:
    """Adam over a mutable name -> Tensor mapping.

    Tensors are immutable, so each step rebinds the updated names to fresh
    leaves (which also clears their gradients). Names not listed in
    ``names`` are never touched.
    """

    def __init__(
        self,
        params: MutableMapping[str, Tensor],
        config: OptimizerConfig,
        names: Optional[Iterable[str]] = None,
    ):
        self.params = params
        self.config = config
        self.names = list(params) if names is None else list(names)
        self.t = 0
        self._m = {name: np.zeros_like(params[name].values) for name in self.names}
        self._v = {name: np.zeros_like(params[name].values) for name in self.names}

    def zero_grad(self) -> None:
        for name in self.names:
            self.params[name].zero_grad()

    def step(self) -> None:
        cfg = self.config
        self.t += 1
        if cfg.lr == 0:
            self.zero_grad()
            return
        bias1 = 1.0 - cfg.beta1 ** self.t
        bias2 = 1.0 - cfg.beta2 ** self.t
        for name in self.names:
            param = self.params[name]
            grad = param.grad
            if grad is None:
                continue
            self._m[name] = cfg.beta1 * self._m[name] + (1.0 - cfg.beta1) * grad
            self._v[name] = cfg.beta2 * self._v[name] + (1.0 - cfg.beta2) * grad * grad
            m_hat = self._m[name] / bias1
            v_hat = self._v[name] / bias2
            updated = param.values - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
            self.params[name] = Tensor(updated, requires_grad=True)
