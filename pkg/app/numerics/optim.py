from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .tensor import Tensor
from ..config import LEARNING_RATE, ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from ..utils.errors import ShapeError


@dataclass
class AdamState:
    """First/second moment buffers and the bias-correction step counter"""
    lr: float = LEARNING_RATE
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    step_count: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Dict[str, Tensor],
    grads: Dict[str, Optional[np.ndarray]],
    state: AdamState,
) -> AdamState:
    """One bias-corrected Adam update; parameters without a gradient are left alone"""
    for name, g in grads.items():
        if g is not None and name in params and np.shape(g) != params[name].shape:
            raise ShapeError(f"gradient for '{name}' does not match its parameter", params[name].shape, np.shape(g))

    state.step_count += 1
    bias1 = 1.0 - state.beta1 ** state.step_count
    bias2 = 1.0 - state.beta2 ** state.step_count

    for name, param in params.items():
        g = grads.get(name)
        if g is None:
            continue
        m = state.m.get(name, np.zeros_like(param.data))
        v = state.v.get(name, np.zeros_like(param.data))
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        state.m[name], state.v[name] = m, v

        update = state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
        param.assign(param.data - update)
    return state


class Adam:
    """Adam over a named parameter set, reading gradients from each tensor's .grad"""

    def __init__(self, params: Dict[str, Tensor], lr: float = LEARNING_RATE,
                 beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2, eps: float = ADAM_EPS):
        self.params = dict(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def step(self) -> None:
        adam_step(self.params, {name: p.grad for name, p in self.params.items()}, self.state)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()
