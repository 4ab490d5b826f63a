from __future__ import annotations

from collections.abc import Mapping, MutableMapping
from dataclasses import dataclass, field

import numpy as np

from action_words.errors import BadConfig


@dataclass
class RmsProp:
    """
    acc ← ρ·acc + (1−ρ)·g²;  p ← p − η·g / (√acc + ε)

    每个参数名一个累加器，首次使用时置零；参数原地更新。
    """

    lr: float = 1e-4
    rho: float = 0.9
    eps: float = 1e-8
    acc: dict[str, np.ndarray] = field(default_factory=dict)
    steps: int = 0

    def __post_init__(self) -> None:
        if not self.lr > 0:
            raise BadConfig(f"learning rate must be > 0, got {self.lr}")
        if not 0.0 <= self.rho < 1.0:
            raise BadConfig(f"rho must be in [0, 1), got {self.rho}")
        if not self.eps > 0:
            raise BadConfig(f"eps must be > 0, got {self.eps}")

    def step(
        self, params: MutableMapping[str, np.ndarray], grads: Mapping[str, np.ndarray]
    ) -> MutableMapping[str, np.ndarray]:
        # 固定按参数名排序更新，保证可复现
        for name in sorted(grads):
            g = grads[name]
            p = params[name]
            acc = self.acc.get(name)
            if acc is None:
                acc = np.zeros_like(p)
                self.acc[name] = acc
            acc *= self.rho
            acc += (1.0 - self.rho) * g * g
            p -= self.lr * g / (np.sqrt(acc) + self.eps)
        self.steps += 1
        return params
