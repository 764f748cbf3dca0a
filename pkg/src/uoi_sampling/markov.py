"""Binary Markov source algebra: n-step probabilities, beliefs and UoI."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ModelError

_MASS_TOL = 1e-12


@dataclass(frozen=True)
class SourceModel:
    """Two-state source with P[1|0] = p and P[0|1] = q per slot."""

    p: float
    q: float

    def __post_init__(self) -> None:
        p, q = float(self.p), float(self.q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
            raise ModelError(f"p and q must lie in (0, 1), got p={p}, q={q}")
        if p > q:
            raise ModelError(f"expected p <= q, got p={p}, q={q}")
        if p + q == 1.0:
            raise ModelError("p + q == 1 makes UoI constant under every policy")

    @property
    def lam(self) -> float:
        """Damping factor 1 - p - q of the two-state chain."""
        return 1.0 - self.p - self.q

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[1.0 - self.p, self.p], [self.q, 1.0 - self.q]])

    def mixing_slots(self) -> float:
        """Slots for |lam|**k to shrink by a factor e."""
        return 1.0 / abs(math.log(abs(self.lam)))


def n_step_probs(model: SourceModel, n: int) -> tuple[float, float]:
    """Return (P[1|0], P[0|1]) after n slots."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 0.0, 0.0
    lam_n = model.lam**n
    s = model.p + model.q
    return (model.p - model.p * lam_n) / s, (model.q - model.q * lam_n) / s


def binary_entropy(x):
    """Binary entropy in bits, with 0 log 0 = 0.

    Accepts a scalar or an array; the result is clamped to [0, 1].
    """
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise ValueError("binary_entropy is defined on [0, 1] only")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(
            np.where(arr > 0.0, arr * np.log2(arr), 0.0)
            + np.where(arr < 1.0, (1.0 - arr) * np.log2(1.0 - arr), 0.0)
        )
    h = np.clip(h, 0.0, 1.0)
    if h.ndim == 0:
        return float(h)
    return h


def propagate_belief(model: SourceModel, omega: float, k: int) -> float:
    """Belief that the source is in state 1, k slots after belief ``omega``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return float(omega)
    lam_k = model.lam**k
    return (model.p - model.p * lam_k) / (model.p + model.q) + omega * lam_k


def equilibrium_belief(model: SourceModel) -> float:
    return model.p / (model.p + model.q)


def stationary_distribution(model: SourceModel) -> tuple[float, float]:
    s = model.p + model.q
    return model.q / s, model.p / s


def observed_belief(model: SourceModel, last_state: int, age: int) -> float:
    """P[S(t)=1] given S(t - age) = last_state, via the n-step probabilities."""
    p_n, q_n = n_step_probs(model, age)
    return p_n if last_state == 0 else 1.0 - q_n


def belief_curve(model: SourceModel, last_state: int, max_age: int) -> np.ndarray:
    """Beliefs for ages 0..max_age after observing ``last_state``.

    Entries are bit-identical to :func:`observed_belief`, so table lookups
    and per-belief evaluation never disagree.
    """
    return np.array([observed_belief(model, last_state, a) for a in range(max_age + 1)])


@dataclass(frozen=True)
class Belief:
    """Receiver belief, identified by the integer pair (last_state, age).

    ``omega`` is cached and excluded from equality and hashing.
    """

    last_state: int
    age: int
    omega: float = field(compare=False)

    def __post_init__(self) -> None:
        if self.last_state not in (0, 1):
            raise ModelError("last_state must be 0 or 1")
        if self.age < 0:
            raise ModelError("age must be nonnegative")
        if not 0.0 <= self.omega <= 1.0:
            raise ModelError("omega must be a probability")

    @classmethod
    def observed(cls, model: SourceModel, last_state: int, age: int) -> "Belief":
        return cls(int(last_state), int(age), observed_belief(model, last_state, age))

    def advance(self, model: SourceModel, k: int = 1) -> "Belief":
        return Belief.observed(model, self.last_state, self.age + k)


def uoi_of_belief(belief: Belief) -> float:
    return binary_entropy(belief.omega)


@dataclass(frozen=True)
class DelayPmf:
    """Finite-support distribution of the transmission delay in slots."""

    atoms: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        merged: dict[int, float] = {}
        for y, m in self.atoms:
            if int(y) != y or y < 1:
                raise ModelError(f"delays must be positive integers, got {y!r}")
            if not m > 0.0:
                raise ModelError(f"delay masses must be positive, got {m!r} at y={y}")
            merged[int(y)] = merged.get(int(y), 0.0) + float(m)
        if not merged:
            raise ModelError("delay distribution needs at least one atom")
        total = math.fsum(merged.values())
        if abs(total - 1.0) > _MASS_TOL:
            raise ModelError(f"delay masses sum to {total!r}, not 1")
        object.__setattr__(self, "atoms", tuple(sorted(merged.items())))

    @classmethod
    def from_dict(cls, masses: dict[int, float]) -> "DelayPmf":
        return cls(tuple(masses.items()))

    @classmethod
    def deterministic(cls, y: int) -> "DelayPmf":
        return cls(((y, 1.0),))

    @classmethod
    def bimodal(cls, y: int, p_short: float = 0.8) -> "DelayPmf":
        """P[Y=1] = p_short and P[Y=y] = 1 - p_short; y=1 collapses to Y=1."""
        if y == 1:
            return cls.deterministic(1)
        return cls(((1, p_short), (y, 1.0 - p_short)))

    @classmethod
    def parse(cls, text: str) -> "DelayPmf":
        """Parse ``"y1:m1,y2:m2,..."``."""
        atoms = []
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            m = re.fullmatch(r"(\d+)\s*:\s*([0-9.eE+-]+)", chunk)
            if m is None:
                raise ModelError(f"bad delay atom {chunk!r}; expected 'y:mass'")
            atoms.append((int(m.group(1)), float(m.group(2))))
        return cls(tuple(atoms))

    @property
    def support(self) -> np.ndarray:
        return np.array([y for y, _ in self.atoms], dtype=int)

    @property
    def masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms])

    @property
    def mean(self) -> float:
        return math.fsum(y * m for y, m in self.atoms)

    @property
    def max_delay(self) -> int:
        return self.atoms[-1][0]

    @property
    def min_delay(self) -> int:
        return self.atoms[0][0]

    def __iter__(self) -> Iterable[tuple[int, float]]:
        return iter(self.atoms)

    def __str__(self) -> str:
        return ",".join(f"{y}:{m:g}" for y, m in self.atoms)
