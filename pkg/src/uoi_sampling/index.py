"""Index-based threshold sampling.

Under the equilibrium kernel the next observed value is 1 with probability
omega* whatever the waiting time, so the waiting decision decouples from
future values and reduces to a threshold rule on the index

    eta(omega) = min_{Z >= 1} (1/Z) sum_{k<Z} E_Y[H(tau^{k+Y}(omega))].

The rule waits the smallest k with eta(tau^k(omega)) >= beta. The threshold
beta_psi is the root of f(beta) = f1(beta) - beta * f2(beta), the expected
cycle entropy minus beta times the expected cycle length.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .average_cost import dinkelbach_bisection
from .errors import CapBindingWarning, ConfigError
from .markov import (
    Belief,
    DelayPmf,
    SourceModel,
    belief_curve,
    binary_entropy,
    equilibrium_belief,
    propagate_belief,
)
from .policy import DecisionState, PolicyTable

OMEGA0_CHOICES = ("sampled", "next-slot")


def default_z_search_max(model: SourceModel) -> int:
    return 64 + int(math.ceil(10.0 / abs(math.log(abs(model.lam)))))


_TAIL_TOL = 1e-9


def _running_min_average(x: np.ndarray, limit: float) -> tuple[float, bool]:
    """Infimum over Z >= 1 of mean(x[:Z]) for a sequence converging to ``limit``.

    Past the window the terms equal ``limit`` up to rounding, so the running
    average there moves monotonically towards ``limit`` and the infimum is
    min(finite minimum, limit). The flag reports a window too short for
    that argument to hold.
    """
    avg = np.cumsum(x) / np.arange(1, len(x) + 1)
    z = int(np.argmin(avg))
    unconverged = z == len(x) - 1 and abs(x[-1] - limit) > _TAIL_TOL
    return min(float(avg[z]), limit), unconverged


def index_eta(
    model: SourceModel, delay: DelayPmf, omega: float, z_search_max: int | None = None
) -> float:
    """Index of an arbitrary belief ``omega``.

    Waiting times up to ``z_search_max`` are searched explicitly; longer
    ones are covered by the limit H(omega*) of the running average.
    """
    z_search_max = z_search_max or default_z_search_max(model)
    if z_search_max < 1:
        raise ConfigError("z_search_max must be at least 1")
    ks = range(z_search_max + delay.max_delay)
    h = binary_entropy(np.array([propagate_belief(model, omega, k) for k in ks]))
    terms = sum(m * h[y : y + z_search_max] for y, m in delay)
    eta, capped = _running_min_average(terms, binary_entropy(equilibrium_belief(model)))
    if capped:
        warnings.warn(f"index minimiser hit z_search_max={z_search_max}", CapBindingWarning, stacklevel=2)
    return eta


class IndexTable:
    """Memoised index values at canonical beliefs (last_state, age).

    One instance per solve; not shared between threads.
    """

    def __init__(self, model: SourceModel, delay: DelayPmf, z_search_max: int | None = None):
        self.model = model
        self.delay = delay
        self.z_search_max = z_search_max or default_z_search_max(model)
        if self.z_search_max < 1:
            raise ConfigError("z_search_max must be at least 1")
        self._max_age = 0
        self._expected_h: list[np.ndarray] = []
        self._cache: dict[tuple[int, int], float] = {}
        self.cap_hits = 0
        self._limit = binary_entropy(equilibrium_belief(model))
        self._extend(2 * self.z_search_max + 2 * delay.max_delay)

    def _extend(self, max_age: int) -> None:
        # expected_h[s][a] = E_Y[H(belief at age a + Y after observing s)]
        horizon = max_age + self.z_search_max + self.delay.max_delay
        self._expected_h = []
        for s in (0, 1):
            h = binary_entropy(belief_curve(self.model, s, horizon))
            self._expected_h.append(
                sum(m * h[y : y + max_age + self.z_search_max] for y, m in self.delay)
            )
        self._max_age = max_age

    def __call__(self, last_state: int, age: int) -> float:
        key = (last_state, age)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if age > self._max_age:
            self._extend(2 * age)
        window = self._expected_h[last_state][age : age + self.z_search_max]
        eta, capped = _running_min_average(window, self._limit)
        if capped:
            self.cap_hits += 1
        self._cache[key] = eta
        return eta

    def items(self) -> dict[Belief, float]:
        return {Belief.observed(self.model, s, a): v for (s, a), v in sorted(self._cache.items())}


def _wait(table: IndexTable, last_state: int, age: int, beta: float, cap: int) -> tuple[int, bool]:
    for k in range(cap + 1):
        if table(last_state, age + k) >= beta:
            return k, False
    return cap, True


def waiting_rule(
    model: SourceModel,
    delay: DelayPmf,
    belief_at_delivery: Belief,
    beta: float,
    z_search_max: int | None = None,
    table: IndexTable | None = None,
) -> int:
    """Smallest k >= 0 whose index eta(tau^k(omega)) reaches ``beta``."""
    table = table or IndexTable(model, delay, z_search_max)
    z, capped = _wait(table, belief_at_delivery.last_state, belief_at_delivery.age, beta, table.z_search_max)
    if capped:
        warnings.warn(
            f"waiting rule hit the cap {table.z_search_max} at belief "
            f"{(belief_at_delivery.last_state, belief_at_delivery.age)}",
            CapBindingWarning,
            stacklevel=2,
        )
    return z


@dataclass(frozen=True)
class DinkelbachValue:
    f: float
    f1: float
    f2: float
    waits: dict[DecisionState, int] = field(default_factory=dict)
    capped: bool = False


def _start_offset(omega0: str) -> int:
    if omega0 not in OMEGA0_CHOICES:
        raise ConfigError(f"omega0 must be one of {OMEGA0_CHOICES}, got {omega0!r}")
    # "next-slot" starts the belief one slot after the sampled value (1-q or p)
    return 0 if omega0 == "sampled" else 1


def dinkelbach_f(
    model: SourceModel,
    delay: DelayPmf,
    beta: float,
    z_search_max: int | None = None,
    omega0: str = "sampled",
    table: IndexTable | None = None,
) -> DinkelbachValue:
    """Exact f(beta) = f1 - beta * f2 under the equilibrium kernel.

    The delivered value is 1 with probability omega* and 0 otherwise; the
    delivery belief sits ``Y_i`` slots after it. Waiting times come from
    :func:`waiting_rule` at ``beta``.
    """
    table = table or IndexTable(model, delay, z_search_max)
    offset = _start_offset(omega0)
    w1 = equilibrium_belief(model)
    support, masses = delay.support, delay.masses
    curves_h = [
        binary_entropy(belief_curve(model, s, offset + 2 * delay.max_delay + table.z_search_max + 1))
        for s in (0, 1)
    ]
    f1 = f2 = 0.0
    waits: dict[DecisionState, int] = {}
    capped = False
    for s, ws in ((1, w1), (0, 1.0 - w1)):
        prefix = np.concatenate(([0.0], np.cumsum(curves_h[s])))
        for y_i, m_i in zip(support, masses):
            a = int(y_i) + offset
            z, hit = _wait(table, s, a, beta, table.z_search_max)
            capped |= hit
            waits[DecisionState(s, int(y_i))] = z
            ends = a + z + support
            f1 += ws * m_i * float((prefix[ends] - prefix[a]) @ masses)
            f2 += ws * m_i * (z + delay.mean)
    return DinkelbachValue(f1 - beta * f2, f1, f2, waits, capped)


@dataclass(frozen=True)
class IndexConfig:
    bisection_tol: float = 1e-4
    z_search_max: int | None = None
    omega0: str = "sampled"

    def __post_init__(self) -> None:
        if self.bisection_tol <= 0:
            raise ConfigError("bisection_tol must be positive")
        if self.z_search_max is not None and self.z_search_max < 1:
            raise ConfigError("z_search_max must be at least 1")
        _start_offset(self.omega0)


@dataclass(frozen=True)
class IndexResult:
    beta_psi: float
    eta_table: dict[Belief, float]
    f_diagnostics: tuple[float, float]
    policy: PolicyTable
    bisection_steps: int
    z_search_max: int

    @property
    def f_value(self) -> float:
        f1, f2 = self.f_diagnostics
        return f1 - self.beta_psi * f2


def index_policy_table(
    model: SourceModel,
    delay: DelayPmf,
    beta: float,
    z_search_max: int | None = None,
    table: IndexTable | None = None,
) -> PolicyTable:
    """Threshold waits for every post-delivery state (s, y), y in the support."""
    table = table or IndexTable(model, delay, z_search_max)
    waits, capped = {}, False
    for s in (0, 1):
        for y in delay.support:
            z, hit = _wait(table, s, int(y), beta, table.z_search_max)
            capped |= hit
            waits[DecisionState(s, int(y))] = z
    if capped:
        warnings.warn("index waiting rule hit its cap", CapBindingWarning, stacklevel=2)
    return PolicyTable("index", waits)


def bisec_index(
    model: SourceModel, delay: DelayPmf, config: IndexConfig = IndexConfig()
) -> IndexResult:
    """Threshold beta_psi and the induced waiting policy."""
    table = IndexTable(model, delay, config.z_search_max)
    last: dict[str, DinkelbachValue] = {}

    def f(beta: float) -> float:
        val = dinkelbach_f(model, delay, beta, omega0=config.omega0, table=table)
        last["v"] = val
        return val.f

    beta, steps = dinkelbach_bisection(f, 0.0, 1.0, config.bisection_tol)
    val = last["v"]
    policy = index_policy_table(model, delay, beta, table=table)
    if table.cap_hits:
        warnings.warn(
            f"index minimiser hit z_search_max={table.z_search_max} at {table.cap_hits} beliefs",
            CapBindingWarning,
            stacklevel=2,
        )
    return IndexResult(
        beta_psi=beta,
        eta_table=table.items(),
        f_diagnostics=(val.f1, val.f2),
        policy=policy,
        bisection_steps=steps,
        z_search_max=table.z_search_max,
    )
