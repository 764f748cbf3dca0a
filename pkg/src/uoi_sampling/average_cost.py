"""Relative value iteration and Dinkelbach bisection for average-cost MDPs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonConvergence

_TIE_TOL = 1e-12


@dataclass(frozen=True)
class RviOutcome:
    gain: float
    values: np.ndarray
    policy: np.ndarray
    iterations: int
    residual: float


def span(x: np.ndarray) -> float:
    return float(np.max(x) - np.min(x))


def greedy_actions(q: np.ndarray) -> np.ndarray:
    """Row-wise argmin; exact or last-ulp ties go to the smallest action."""
    best = q.min(axis=1, keepdims=True)
    near = q <= best + _TIE_TOL * (1.0 + np.abs(best))
    return np.argmax(near, axis=1)


def relative_value_iteration(
    cost: np.ndarray,
    trans: np.ndarray,
    anchor: int,
    span_tol: float = 1e-9,
    max_iters: int = 100_000,
    initial: np.ndarray | None = None,
) -> RviOutcome:
    """Solve g + h(s) = min_a [cost(s, a) + sum_s' trans(s, a, s') h(s')].

    ``cost`` has shape (S, A), ``trans`` shape (S, A, S). Values are
    anchored so that h(anchor) = 0 and g is the anchor's backup. Stops when
    the span of successive value changes drops below ``span_tol``.
    """
    n_states = cost.shape[0]
    h = np.zeros(n_states) if initial is None else initial - initial[anchor]
    for it in range(1, max_iters + 1):
        backup = (cost + trans @ h).min(axis=1)
        h_new = backup - backup[anchor]
        delta = h_new - h
        h = h_new
        if span(delta) < span_tol:
            break
    else:
        raise NonConvergence(
            f"relative value iteration did not converge in {max_iters} iterations "
            f"(last span {span(delta):.3e})"
        )
    q = cost + trans @ h
    backup = q.min(axis=1)
    gain = float(backup[anchor])
    residual = float(np.max(np.abs(backup - (gain + h))))
    return RviOutcome(gain, h, greedy_actions(q), it, residual)


def dinkelbach_bisection(
    sign_fn: Callable[[float], float],
    lower: float,
    upper: float,
    tol: float,
) -> tuple[float, int]:
    """Bisect on the sign of a nonincreasing function with a unique root.

    Returns the last midpoint and the number of evaluations. Positive values
    raise the lower bound, anything else lowers the upper bound.
    """
    if not upper > lower:
        raise ValueError("need lower < upper")
    if tol <= 0:
        raise ValueError("tol must be positive")
    beta = 0.5 * (lower + upper)
    n = 0
    while upper - lower >= tol:
        beta = 0.5 * (lower + upper)
        n += 1
        if sign_fn(beta) > 0:
            lower = beta
        else:
            upper = beta
    return beta, n
