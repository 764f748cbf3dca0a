"""Stationary waiting-time policies keyed by the post-delivery state."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np


class DecisionState(NamedTuple):
    """Post-delivery state: observed source value and the delay it suffered."""

    last_state: int
    delay: int


@dataclass(frozen=True)
class PolicyTable:
    """Waiting time Z for each decision state.

    States missing from ``waits`` fall back to ``default``; with no default
    a missing state is an error.
    """

    name: str
    waits: Mapping[DecisionState, int] = field(default_factory=dict)
    default: int | None = None

    def wait(self, last_state: int, delay: int) -> int:
        z = self.waits.get(DecisionState(last_state, delay), self.default)
        if z is None:
            raise KeyError(f"policy {self.name!r} has no action for state {(last_state, delay)}")
        return int(z)

    __call__ = wait

    @property
    def max_wait(self) -> int:
        vals = list(self.waits.values())
        if self.default is not None:
            vals.append(self.default)
        return max(vals) if vals else 0

    def as_array(self, max_delay: int) -> np.ndarray:
        """Dense (2, max_delay + 1) lookup; unknown entries are -1."""
        out = np.full((2, max_delay + 1), -1 if self.default is None else self.default, dtype=np.int64)
        for (s, y), z in self.waits.items():
            if y <= max_delay:
                out[s, y] = z
        return out

    def rows(self) -> list[tuple[int, int, int]]:
        return [(s, y, int(z)) for (s, y), z in sorted(self.waits.items())]
