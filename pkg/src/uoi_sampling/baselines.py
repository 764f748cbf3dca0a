"""Comparison policies: zero-wait and AoI-optimal waiting.

The AoI-optimal policy is solved with the same Dinkelbach bisection and
relative value iteration as the UoI solver, with the per-slot cost set to
the current age. Its decision state is the age at delivery, which equals
the delivered packet's delay.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .average_cost import dinkelbach_bisection, relative_value_iteration
from .errors import CapBindingWarning
from .markov import DelayPmf
from .policy import DecisionState, PolicyTable
from .smdp import SolverConfig


def zero_wait_policy() -> PolicyTable:
    """Sample as soon as the previous update is delivered."""
    return PolicyTable("zero-wait", {}, default=0)


def zero_wait_aoi(delay: DelayPmf) -> float:
    """Average AoI of zero-wait: E[Y] + E[Y(Y-1)] / (2 E[Y])."""
    y, m = delay.support, delay.masses
    return float(delay.mean + (m @ (y * (y - 1))) / (2.0 * delay.mean))


@dataclass(frozen=True)
class AoiSolveResult:
    beta_aoi: float
    policy: dict[int, int]
    z_max: int
    bisection_steps: int

    def as_table(self) -> PolicyTable:
        waits = {DecisionState(s, y): z for y, z in self.policy.items() for s in (0, 1)}
        return PolicyTable("aoi-optimal", waits)


def aoi_tables(delay: DelayPmf, z_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cycle AoI cost, cycle length and transitions over states y in the support.

    A cycle of length L = Z + Y' that starts at age y accumulates
    sum_{k<L} (y + k) = L*y + L(L-1)/2.
    """
    support, masses = delay.support, delay.masses
    zs = np.arange(z_max + 1)
    cyc = zs[None, :, None] + support[None, None, :]
    y = support[:, None, None]
    cost = (cyc * y + cyc * (cyc - 1) / 2.0) @ masses
    length = np.broadcast_to(zs + delay.mean, cost.shape).copy()
    trans = np.broadcast_to(masses, cost.shape + (len(support),)).copy()
    return cost, length, trans


def aoi_optimal_solve(delay: DelayPmf, config: SolverConfig = SolverConfig()) -> AoiSolveResult:
    upper = zero_wait_aoi(delay) + 1.0
    z_max = config.z_max if config.z_max is not None else int(math.ceil(upper)) + delay.max_delay
    cost, length, trans = aoi_tables(delay, z_max)
    last = {}

    def gain(beta: float) -> float:
        out = relative_value_iteration(
            cost - beta * length, trans, 0, config.rvi_span_tol, config.rvi_max_iters
        )
        last["out"] = out
        return out.gain

    beta, steps = dinkelbach_bisection(gain, 0.0, upper, config.bisection_tol)
    out = last["out"]
    if np.any(out.policy == z_max):
        warnings.warn(f"aoi_optimal_solve: waiting time hit z_max={z_max}", CapBindingWarning, stacklevel=2)
    policy = {int(y): int(z) for y, z in zip(delay.support, out.policy)}
    return AoiSolveResult(beta, policy, z_max, steps)
