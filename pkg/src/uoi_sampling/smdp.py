"""UoI-optimal sampling: Dinkelbach bisection over an inner RVI solve.

The decision epochs are delivery instants. The decision state is the pair
(observed source value, delay of that packet); the action is the number of
slots Z to wait before the next sample. Between deliveries the belief
evolves deterministically, so every quantity of a cycle is a lookup into
the per-age belief curves.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .average_cost import RviOutcome, dinkelbach_bisection, relative_value_iteration
from .errors import CapBindingWarning, ConfigError
from .markov import DelayPmf, SourceModel, belief_curve, binary_entropy, propagate_belief
from .policy import DecisionState, PolicyTable

KERNELS = ("corrected", "paper")


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for :func:`bisec_rvi`.

    ``kernel="corrected"`` draws the next observed state from the belief at
    the sampling instant, tau^Z(omega). ``kernel="paper"`` uses
    tau^(Z + Y')(omega), i.e. the belief at the next delivery instead.
    """

    z_max: int | None = None
    bisection_tol: float = 1e-4
    rvi_span_tol: float = 1e-9
    rvi_max_iters: int = 100_000
    kernel: str = "corrected"
    anchor: DecisionState | None = None

    def __post_init__(self) -> None:
        if self.z_max is not None and self.z_max < 1:
            raise ConfigError("z_max must be at least 1")
        if self.bisection_tol <= 0 or self.rvi_span_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.rvi_max_iters < 1:
            raise ConfigError("rvi_max_iters must be positive")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")


def default_z_max(model: SourceModel, delay: DelayPmf) -> int:
    return int(math.ceil(4.0 * (delay.mean + 1.0 / min(model.p, model.q))))


def decision_states(delay: DelayPmf) -> list[DecisionState]:
    return [DecisionState(s, int(y)) for s in (0, 1) for y in delay.support]


def default_anchor(delay: DelayPmf) -> DecisionState:
    # belief p after one slot from state 0 when Y=1 is possible; otherwise
    # the shortest-delay state-0 belief
    return DecisionState(0, 1 if 1 in delay.support else delay.min_delay)


def cycle_cost(
    model: SourceModel, delay: DelayPmf, omega: float, z: int, beta: float
) -> float:
    """E[sum_{k=0}^{z+Y-1} (H(tau^k(omega)) - beta)] over the delay law."""
    if z < 0:
        raise ValueError("waiting time must be nonnegative")
    horizon = z + delay.max_delay
    terms = [binary_entropy(propagate_belief(model, omega, k)) - beta for k in range(horizon)]
    prefix = np.concatenate(([0.0], np.cumsum(terms)))
    return float(sum(m * prefix[z + y] for y, m in delay))


def transition_kernel(
    model: SourceModel, omega: float, z: int, y_next: int, kernel: str = "corrected"
) -> float:
    """Probability that the next sampled source value is 1."""
    if kernel == "corrected":
        return propagate_belief(model, omega, z)
    if kernel == "paper":
        return propagate_belief(model, omega, z + y_next)
    raise ConfigError(f"unknown kernel {kernel!r}")


@dataclass
class SmdpTables:
    """Dense cost/transition arrays for one (model, delay, z_max, kernel).

    ``entropy_cost[i, z]`` is the expected entropy accumulated over the cycle,
    ``length[i, z]`` the expected cycle length and ``trans[i, z, j]`` the
    probability of moving from state i to state j.
    """

    states: list[DecisionState]
    z_max: int
    entropy_cost: np.ndarray
    length: np.ndarray
    trans: np.ndarray

    def index(self, state: DecisionState) -> int:
        return self.states.index(DecisionState(*state))

    def cost(self, beta: float) -> np.ndarray:
        return self.entropy_cost - beta * self.length


def build_tables(
    model: SourceModel, delay: DelayPmf, z_max: int, kernel: str = "corrected"
) -> SmdpTables:
    states = decision_states(delay)
    support, masses = delay.support, delay.masses
    n_y = len(support)
    y_max = delay.max_delay
    zs = np.arange(z_max + 1)
    max_age = 2 * y_max + z_max
    curves = [belief_curve(model, s, max_age) for s in (0, 1)]
    prefix = [np.concatenate(([0.0], np.cumsum(binary_entropy(c)))) for c in curves]

    n = len(states)
    entropy_cost = np.empty((n, z_max + 1))
    trans = np.zeros((n, z_max + 1, n))
    for i, (s, y) in enumerate(states):
        ends = y + zs[:, None] + support[None, :]
        entropy_cost[i] = (prefix[s][ends] - prefix[s][y]) @ masses
        if kernel == "corrected":
            hi = np.repeat(curves[s][y + zs][:, None], n_y, axis=1)
        elif kernel == "paper":
            hi = curves[s][ends]
        else:
            raise ConfigError(f"unknown kernel {kernel!r}")
        trans[i, :, :n_y] = (1.0 - hi) * masses
        trans[i, :, n_y:] = hi * masses
    length = np.repeat((zs + delay.mean)[None, :], n, axis=0)
    return SmdpTables(states, z_max, entropy_cost, length, trans)


@dataclass(frozen=True)
class RviSolution:
    g_beta: float
    values: dict[DecisionState, float]
    policy: dict[DecisionState, int]
    iterations: int
    residual: float
    raw: RviOutcome = field(repr=False)


def _warn_if_capped(policy: np.ndarray, z_max: int, what: str) -> None:
    if np.any(policy == z_max):
        warnings.warn(
            f"{what}: greedy waiting time equals the cap z_max={z_max}; raise z_max",
            CapBindingWarning,
            stacklevel=3,
        )


def _resolve(model, delay, config):
    z_max = config.z_max if config.z_max is not None else default_z_max(model, delay)
    anchor = config.anchor if config.anchor is not None else default_anchor(delay)
    if DecisionState(*anchor) not in decision_states(delay):
        raise ConfigError(f"anchor {tuple(anchor)} is not a decision state")
    return z_max, DecisionState(*anchor)


def _rvi_on_tables(tables, beta, anchor_idx, config, initial=None) -> RviOutcome:
    return relative_value_iteration(
        tables.cost(beta),
        tables.trans,
        anchor_idx,
        span_tol=config.rvi_span_tol,
        max_iters=config.rvi_max_iters,
        initial=initial,
    )


def _wrap(tables: SmdpTables, out: RviOutcome) -> RviSolution:
    return RviSolution(
        g_beta=out.gain,
        values={s: float(v) for s, v in zip(tables.states, out.values)},
        policy={s: int(z) for s, z in zip(tables.states, out.policy)},
        iterations=out.iterations,
        residual=out.residual,
        raw=out,
    )


def rvi_solve(
    model: SourceModel,
    delay: DelayPmf,
    beta: float,
    config: SolverConfig = SolverConfig(),
    tables: SmdpTables | None = None,
) -> RviSolution:
    """Gain g(beta) and relative values of the beta-parametrised MDP."""
    z_max, anchor = _resolve(model, delay, config)
    if tables is None:
        tables = build_tables(model, delay, z_max, config.kernel)
    out = _rvi_on_tables(tables, beta, tables.index(anchor), config)
    _warn_if_capped(out.policy, tables.z_max, f"rvi_solve(beta={beta:.6g})")
    return _wrap(tables, out)


@dataclass(frozen=True)
class SolveResult:
    beta_opt: float
    policy: PolicyTable
    rel_values: dict[DecisionState, float]
    g_beta: float
    bisection_steps: int
    rvi_iterations: int
    kernel: str
    z_max: int
    anchor: DecisionState

    def rows(self) -> list[tuple[int, int, int, float]]:
        return [(s, y, z, self.rel_values[DecisionState(s, y)]) for s, y, z in self.policy.rows()]


def bisec_rvi(
    model: SourceModel, delay: DelayPmf, config: SolverConfig = SolverConfig()
) -> SolveResult:
    """Minimal long-run average UoI and a policy attaining it."""
    z_max, anchor = _resolve(model, delay, config)
    tables = build_tables(model, delay, z_max, config.kernel)
    anchor_idx = tables.index(anchor)
    state = {"h": None, "out": None, "iters": 0}

    def gain(beta: float) -> float:
        out = _rvi_on_tables(tables, beta, anchor_idx, config, initial=state["h"])
        state["h"], state["out"] = out.values, out
        state["iters"] += out.iterations
        return out.gain

    beta, steps = dinkelbach_bisection(gain, 0.0, 1.0, config.bisection_tol)
    final: RviOutcome = state["out"]
    _warn_if_capped(final.policy, z_max, "bisec_rvi")
    sol = _wrap(tables, final)
    return SolveResult(
        beta_opt=beta,
        policy=PolicyTable(f"optimal[{config.kernel}]", sol.policy),
        rel_values=sol.values,
        g_beta=final.gain,
        bisection_steps=steps,
        rvi_iterations=state["iters"],
        kernel=config.kernel,
        z_max=z_max,
        anchor=anchor,
    )
