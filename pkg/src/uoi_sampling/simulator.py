"""Discrete-time Monte Carlo of the sample/transmit/deliver loop.

Conventions:

* Slot 0 is a delivery epoch. The packet delivered there was sampled
  ``Y_0`` slots earlier from a stationary source, so every counted slot has
  a delivered observation and a finite AoI.
* A delivery at slot ``R`` takes effect in slot ``R``: AoI there equals the
  packet's delay and the belief uses the new observation.
* The receiver's history is summarised by (last observed value, its age);
  by the Markov property this is lossless.

Randomness comes from Philox (a counter-based generator). Episode ``rep``
of seed ``seed`` uses ``SeedSequence(seed, spawn_key=(rep,))`` and spawns
independent child streams for the source path and the delays, so
replications never share state and are reproducible in any order.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import IO

import numpy as np

from .errors import ConfigError
from .markov import DelayPmf, SourceModel, belief_curve, binary_entropy, stationary_distribution
from .policy import PolicyTable

DEFAULT_HORIZON = 1_000_000
DEFAULT_WARMUP = 10_000
DEFAULT_BATCHES = 100
TRACE_FIELDS = ("t", "state", "omega", "uoi", "aoi", "event")


@dataclass(frozen=True)
class SimConfig:
    model: SourceModel
    delay: DelayPmf
    policy: PolicyTable
    horizon: int = DEFAULT_HORIZON
    warmup: int = DEFAULT_WARMUP
    seed: int = 42
    n_batches: int = DEFAULT_BATCHES

    def __post_init__(self) -> None:
        if not self.horizon > self.warmup >= 0:
            raise ConfigError(f"need horizon > warmup >= 0, got {self.horizon}, {self.warmup}")
        if not 1 <= self.n_batches <= self.horizon - self.warmup:
            raise ConfigError("n_batches must be in [1, horizon - warmup]")


@dataclass(frozen=True)
class SimReport:
    avg_uoi: float
    avg_aoi: float
    stderr_uoi: float
    stderr_aoi: float
    cycles: int
    mean_cycle_len: float
    slots: int
    avg_uoi_untrimmed: float
    avg_aoi_untrimmed: float
    n_reps: int = 1


@dataclass
class Trajectory:
    """Raw output of one episode.

    Per-slot arrays cover slots [0, horizon). Cycle arrays list every
    delivery at or after slot 0: ``deliveries[i]`` is the slot, ``sampled``
    the sampling slot, ``observed`` the delivered source value and ``waits``
    the waiting time chosen there.
    """

    source: np.ndarray
    last_state: np.ndarray
    aoi: np.ndarray
    omega: np.ndarray
    uoi: np.ndarray
    deliveries: np.ndarray
    sampled: np.ndarray
    observed: np.ndarray
    waits: np.ndarray


def step_source(model: SourceModel, state: int, rng: np.random.Generator) -> int:
    """One slot of the source chain."""
    flip = model.p if state == 0 else model.q
    return 1 - state if rng.random() < flip else state


def sample_source_path(model: SourceModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Stationary path of length n, built from geometric sojourn times.

    Equivalent in law to iterating :func:`step_source` n - 1 times from a
    stationary draw, but vectorised.
    """
    pi1 = stationary_distribution(model)[1]
    start = int(rng.random() < pi1)
    mean_sojourn = 0.5 * (1.0 / model.p + 1.0 / model.q)
    chunks, total, state = [], 0, start
    while total < n:
        k = int(n / mean_sojourn) + 16
        leave = np.where(np.arange(k) % 2 == 0, *((model.p, model.q) if state == 0 else (model.q, model.p)))
        lens = rng.geometric(leave)
        vals = (state + np.arange(k)) % 2
        chunks.append(np.repeat(vals.astype(np.int8), lens))
        total += int(lens.sum())
        state = int(vals[-1]) ^ 1
    return np.concatenate(chunks)[:n]


def _rng(seed: int, rep: int) -> tuple[np.random.Generator, np.random.Generator]:
    src_seq, delay_seq = np.random.SeedSequence(seed, spawn_key=(rep,)).spawn(2)
    return np.random.Generator(np.random.Philox(src_seq)), np.random.Generator(np.random.Philox(delay_seq))


def simulate(config: SimConfig, rep: int = 0) -> Trajectory:
    model, delay, horizon = config.model, config.delay, config.horizon
    src_rng, delay_rng = _rng(config.seed, rep)
    # upper bound on the number of deliveries in [0, horizon]: each cycle >= 1 slot
    delays = delay_rng.choice(delay.support, size=horizon + 2, p=delay.masses)
    y0 = int(delays[0])
    # source[j] is S(j - y0)
    source = sample_source_path(model, horizon + y0, src_rng)
    waits_lut = config.policy.as_array(delay.max_delay)

    deliveries, sampled, observed, waits = [], [], [], []
    r, g, s, y = 0, -y0, int(source[0]), y0
    i = 1
    while r < horizon:
        deliveries.append(r)
        sampled.append(g)
        observed.append(s)
        z = int(waits_lut[s, y])
        if z < 0:
            raise ConfigError(f"policy {config.policy.name!r} has no action for state {(s, y)}")
        g = r + z
        if g >= horizon:
            waits.append(z)
            break
        y = int(delays[i])
        i += 1
        s = int(source[g + y0])
        waits.append(z)
        r = g + y

    deliveries_a = np.asarray(deliveries, dtype=np.int64)
    sampled_a = np.asarray(sampled, dtype=np.int64)
    observed_a = np.asarray(observed, dtype=np.int8)
    seg_len = np.diff(np.append(deliveries_a, horizon))
    gen = np.repeat(sampled_a, seg_len)
    last_state = np.repeat(observed_a, seg_len)
    aoi = np.arange(horizon, dtype=np.int64) - gen
    max_age = int(aoi.max())
    curves = np.stack([belief_curve(model, s_, max_age) for s_ in (0, 1)])
    omega = curves[last_state, aoi]
    uoi = binary_entropy(curves)[last_state, aoi]
    return Trajectory(
        source=source[y0:],
        last_state=last_state,
        aoi=aoi,
        omega=omega,
        uoi=uoi,
        deliveries=deliveries_a,
        sampled=sampled_a,
        observed=observed_a,
        waits=np.asarray(waits, dtype=np.int64),
    )


def batch_means_stderr(x: np.ndarray, n_batches: int) -> float:
    """Standard error of the mean of a correlated series via batch means."""
    if n_batches < 2:
        return float("nan")
    usable = (len(x) // n_batches) * n_batches
    means = x[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def summarize(traj: Trajectory, config: SimConfig) -> SimReport:
    w = config.warmup
    uoi, aoi = traj.uoi[w:], traj.aoi[w:]
    cycles = traj.deliveries[traj.deliveries >= w]
    n_cycles = max(len(cycles) - 1, 1)
    mean_cycle = float((cycles[-1] - cycles[0]) / (len(cycles) - 1)) if len(cycles) > 1 else float("nan")
    return SimReport(
        avg_uoi=float(uoi.mean()),
        avg_aoi=float(aoi.mean()),
        stderr_uoi=batch_means_stderr(uoi, config.n_batches),
        stderr_aoi=batch_means_stderr(aoi.astype(float), config.n_batches),
        cycles=n_cycles,
        mean_cycle_len=mean_cycle,
        slots=len(uoi),
        avg_uoi_untrimmed=float(traj.uoi.mean()),
        avg_aoi_untrimmed=float(traj.aoi.mean()),
    )


def write_trace(traj: Trajectory, out: IO[str]) -> None:
    """Per-slot dump as comma-separated text with a header row.

    ``event`` is ``none``, ``sample``, ``deliver`` or ``deliver+sample``
    when a zero wait samples in the delivery slot.
    """
    horizon = len(traj.uoi)
    events = np.full(horizon, "none", dtype=object)
    d = traj.deliveries[traj.deliveries < horizon]
    events[d] = "deliver"
    g = traj.deliveries + traj.waits
    g = g[g < horizon]
    events[g] = np.where(events[g] == "deliver", "deliver+sample", "sample")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_FIELDS)
    for t in range(horizon):
        writer.writerow(
            (t, int(traj.source[t]), f"{traj.omega[t]:.6g}", f"{traj.uoi[t]:.6g}", int(traj.aoi[t]), events[t])
        )


def run_episode(config: SimConfig, rep: int = 0, trace: IO[str] | None = None) -> SimReport:
    traj = simulate(config, rep)
    if trace is not None:
        write_trace(traj, trace)
    return summarize(traj, config)


def _episode(args: tuple[SimConfig, int]) -> SimReport:
    return run_episode(*args)


def aggregate(reports: list[SimReport]) -> SimReport:
    """Equal-weight mean of episode reports; standard errors add in quadrature."""
    n = len(reports)
    if n == 1:
        return reports[0]

    def mean(attr):
        return float(np.mean([getattr(r, attr) for r in reports]))

    def se(attr):
        return float(math.sqrt(sum(getattr(r, attr) ** 2 for r in reports)) / n)

    return SimReport(
        avg_uoi=mean("avg_uoi"),
        avg_aoi=mean("avg_aoi"),
        stderr_uoi=se("stderr_uoi"),
        stderr_aoi=se("stderr_aoi"),
        cycles=sum(r.cycles for r in reports),
        mean_cycle_len=mean("mean_cycle_len"),
        slots=sum(r.slots for r in reports),
        avg_uoi_untrimmed=mean("avg_uoi_untrimmed"),
        avg_aoi_untrimmed=mean("avg_aoi_untrimmed"),
        n_reps=n,
    )


def replicate(config: SimConfig, n_reps: int, workers: int = 1) -> SimReport:
    """Run ``n_reps`` independent episodes and aggregate them."""
    if n_reps < 1:
        raise ConfigError("n_reps must be at least 1")
    jobs = [(config, rep) for rep in range(n_reps)]
    if workers > 1 and n_reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_episode, jobs))
    else:
        reports = [_episode(j) for j in jobs]
    return aggregate(reports)


def with_policy(config: SimConfig, policy: PolicyTable) -> SimConfig:
    return replace(config, policy=policy)
