"""Experiment grids: solve each policy, simulate it, collect one row per point."""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .baselines import aoi_optimal_solve, zero_wait_policy
from .errors import ConfigError
from .index import IndexConfig, bisec_index
from .markov import DelayPmf, SourceModel
from .policy import PolicyTable
from .simulator import DEFAULT_HORIZON, DEFAULT_WARMUP, SimConfig, run_episode
from .smdp import KERNELS, SolverConfig, bisec_rvi

POLICIES = ("optimal", "index", "zero-wait", "aoi-optimal")


def parse_policies(text: str | list[str]) -> tuple[str, ...]:
    items = text.split(",") if isinstance(text, str) else [p for t in text for p in t.split(",")]
    names = tuple(p.strip() for p in items if p.strip())
    if not names:
        raise ConfigError("policy list is empty")
    bad = [p for p in names if p not in POLICIES]
    if bad:
        raise ConfigError(f"unknown policies {bad}; choose from {POLICIES}")
    return names


def parse_range(text: str) -> list[int]:
    """``"2-20"``, ``"2-20:2"`` or ``"2,6,10"``."""
    out: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "-" in chunk:
            span, _, step = chunk.partition(":")
            lo, hi = (int(v) for v in span.split("-"))
            out.extend(range(lo, hi + 1, int(step) if step else 1))
        else:
            out.append(int(chunk))
    if not out:
        raise ConfigError("empty range")
    if min(out) < 1:
        raise ConfigError("delays must be positive")
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment.

    ``ys`` lists the tail delay of the bimodal family P[Y=1]=0.8,
    P[Y=y]=0.2. For a single point ``delay`` may be given instead.
    """

    p: float
    q: float
    policies: tuple[str, ...] = POLICIES
    ys: tuple[int, ...] = ()
    delay: DelayPmf | None = None
    horizon: int = DEFAULT_HORIZON
    warmup: int = DEFAULT_WARMUP
    seed: int = 42
    tol: float = 1e-4
    z_max: int | None = None
    kernel: str = "corrected"
    model: SourceModel = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", SourceModel(self.p, self.q))
        object.__setattr__(self, "policies", parse_policies(list(self.policies)))
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if not self.horizon > self.warmup >= 0:
            raise ConfigError("need horizon > warmup >= 0")
        if self.z_max is not None and self.z_max < 1:
            raise ConfigError("z_max must be at least 1")
        if any(y < 1 for y in self.ys):
            raise ConfigError("delays must be positive")
        for y in self.ys:
            DelayPmf.bimodal(y)

    def delays(self) -> list[tuple[int | None, DelayPmf]]:
        if self.ys:
            return [(y, DelayPmf.bimodal(y)) for y in self.ys]
        if self.delay is None:
            raise ConfigError("either ys or delay is required")
        return [(None, self.delay)]

    def solver_config(self) -> SolverConfig:
        return SolverConfig(z_max=self.z_max, bisection_tol=self.tol, kernel=self.kernel)

    def provenance(self) -> dict[str, object]:
        d = {k: v for k, v in asdict(self).items() if k not in ("model", "delay")}
        d["policies"] = ",".join(self.policies)
        d["ys"] = ",".join(str(y) for y in self.ys)
        d["delay"] = str(self.delay) if self.delay is not None else "bimodal P[Y=1]=0.8, P[Y=y]=0.2"
        d["z_max"] = "auto" if self.z_max is None else self.z_max
        d["rvi_span_tol"] = SolverConfig().rvi_span_tol
        d["n_batches"] = 100
        return d


@dataclass(frozen=True)
class PolicySolution:
    name: str
    table: PolicyTable
    beta_analytic: float | None


def solve_policy(
    name: str,
    model: SourceModel,
    delay: DelayPmf,
    solver: SolverConfig = SolverConfig(),
) -> PolicySolution:
    """Waiting table and the analytic objective value for one named policy.

    ``beta_analytic`` is average UoI for optimal/index, average AoI for
    aoi-optimal and None for zero-wait.
    """
    if name == "optimal":
        res = bisec_rvi(model, delay, solver)
        return PolicySolution(name, res.policy, res.beta_opt)
    if name == "index":
        res = bisec_index(model, delay, IndexConfig(bisection_tol=solver.bisection_tol))
        return PolicySolution(name, res.policy, res.beta_psi)
    if name == "zero-wait":
        return PolicySolution(name, zero_wait_policy(), None)
    if name == "aoi-optimal":
        res = aoi_optimal_solve(delay, SolverConfig(bisection_tol=solver.bisection_tol))
        return PolicySolution(name, res.as_table(), res.beta_aoi)
    raise ConfigError(f"unknown policy {name!r}")


SWEEP_COLUMNS = (
    "policy", "p", "q", "y", "beta_analytic", "avg_uoi", "stderr_uoi",
    "avg_aoi", "stderr_aoi", "mean_cycle", "horizon", "seed", "error",
)


@dataclass(frozen=True)
class SweepRow:
    policy: str
    p: float
    q: float
    y: int | None
    beta_analytic: float | None
    avg_uoi: float | None
    stderr_uoi: float | None
    avg_aoi: float | None
    stderr_aoi: float | None
    mean_cycle: float | None
    horizon: int
    seed: int
    error: str = ""


def run_point(spec: ExperimentSpec, y: int | None, delay: DelayPmf) -> list[SweepRow]:
    """Solve and simulate every requested policy at one delay law.

    A failing policy yields a row with its error message; the others still run.
    """
    rows = []
    for name in spec.policies:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sol = solve_policy(name, spec.model, delay, spec.solver_config())
            rep = run_episode(
                SimConfig(spec.model, delay, sol.table, spec.horizon, spec.warmup, spec.seed)
            )
            rows.append(
                SweepRow(name, spec.p, spec.q, y, sol.beta_analytic, rep.avg_uoi, rep.stderr_uoi,
                         rep.avg_aoi, rep.stderr_aoi, rep.mean_cycle_len, spec.horizon, spec.seed)
            )
        except Exception as exc:  # recorded per point, sweep continues
            rows.append(
                SweepRow(name, spec.p, spec.q, y, None, None, None, None, None, None,
                         spec.horizon, spec.seed, f"{type(exc).__name__}: {exc}")
            )
    return rows


def _point(args):
    return run_point(*args)


def sweep(spec: ExperimentSpec, jobs: int = 1) -> list[SweepRow]:
    """Rows in (y, policy) order, independent of ``jobs``."""
    tasks = [(spec, y, d) for y, d in spec.delays()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_point, tasks))
    else:
        chunks = [_point(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]
