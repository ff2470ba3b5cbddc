"""
Central finite-difference oracle for the analytic gradients.

The error of one element is |analytic - numeric| / max(|analytic|, |numeric|, floor);
the floor keeps gradients that are zero up to roundoff (e.g. of a constant
function) from being judged relatively.
"""

from typing import Callable, Dict

import numpy as np

from .tensor import Tensor, no_grad
from ..utils.errors import ContractError
from ..utils.logging import numerics_logger

DEFAULT_STEP = 1e-5
DEFAULT_FLOOR = 1e-3


def _relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float) -> float:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


def _numeric_gradient(evaluate: Callable[[], float], leaf: Tensor, h: float) -> np.ndarray:
    base = leaf.numpy()
    numeric = np.zeros_like(base)
    try:
        for index in np.ndindex(base.shape):
            shifted = base.copy()
            shifted[index] = base[index] + h
            leaf.assign(shifted)
            f_plus = evaluate()
            shifted[index] = base[index] - h
            leaf.assign(shifted)
            f_minus = evaluate()
            numeric[index] = (f_plus - f_minus) / (2.0 * h)
    finally:
        leaf.assign(base)
    return numeric


def finite_diff_check(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    h: float = DEFAULT_STEP,
    floor: float = DEFAULT_FLOOR,
) -> float:
    """Max relative error between backward() and central differences of a scalar f at x"""
    if h <= 0:
        raise ContractError(f"finite difference step must be positive, got {h}")

    leaf = Tensor(x.data, requires_grad=True)
    loss = f(leaf)
    loss.backward()
    analytic = np.zeros_like(leaf.data) if leaf.grad is None else leaf.grad

    def evaluate() -> float:
        with no_grad():
            return f(leaf).item()

    numeric = _numeric_gradient(evaluate, leaf, h)
    error = _relative_error(analytic, numeric, floor)
    numerics_logger.debug(f"📊 finite_diff_check shape={x.shape} max_rel_error={error:.3e}")
    return error


def finite_diff_check_params(
    loss_fn: Callable[[], Tensor],
    params: Dict[str, Tensor],
    h: float = DEFAULT_STEP,
    floor: float = DEFAULT_FLOOR,
) -> Dict[str, float]:
    """Per-parameter max relative error for a loss closing over leaf parameters"""
    if h <= 0:
        raise ContractError(f"finite difference step must be positive, got {h}")

    for p in params.values():
        p.zero_grad()
    loss_fn().backward()
    analytic = {name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy()) for name, p in params.items()}

    def evaluate() -> float:
        with no_grad():
            return loss_fn().item()

    errors = {}
    for name, p in params.items():
        numeric = _numeric_gradient(evaluate, p, h)
        errors[name] = _relative_error(analytic[name], numeric, floor)
    worst = max(errors.values()) if errors else 0.0
    numerics_logger.debug(f"📊 finite_diff_check_params n={len(params)} worst={worst:.3e}")
    return errors
