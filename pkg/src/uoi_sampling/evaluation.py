"""Exact long-run averages of a stationary waiting policy.

The embedded chain on post-delivery states (s, y) is finite, so the
renewal-reward ratio sum(pi * cycle cost) / sum(pi * cycle length) gives the
time averages without simulation. Transitions use the true sampling law:
the next observed value is 1 with the belief at the sampling instant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .markov import DelayPmf, SourceModel, belief_curve, binary_entropy
from .policy import DecisionState, PolicyTable
from .smdp import decision_states


@dataclass(frozen=True)
class PolicyEvaluation:
    avg_uoi: float
    avg_aoi: float
    mean_cycle_len: float
    state_probs: dict[DecisionState, float]


def evaluate_policy(model: SourceModel, delay: DelayPmf, policy: PolicyTable) -> PolicyEvaluation:
    states = decision_states(delay)
    support, masses = delay.support, delay.masses
    n_y = len(support)
    waits = [policy.wait(s, y) for s, y in states]
    max_age = 2 * delay.max_delay + max(waits) + 1
    curves = [belief_curve(model, s, max_age) for s in (0, 1)]
    prefix = [np.concatenate(([0.0], np.cumsum(binary_entropy(c)))) for c in curves]

    n = len(states)
    trans = np.zeros((n, n))
    uoi_cost = np.empty(n)
    aoi_cost = np.empty(n)
    length = np.empty(n)
    for i, ((s, y), z) in enumerate(zip(states, waits)):
        ends = y + z + support
        uoi_cost[i] = (prefix[s][ends] - prefix[s][y]) @ masses
        # ages y .. y + L - 1 over a cycle of length L = z + y'
        cyc = z + support
        aoi_cost[i] = (cyc * y + cyc * (cyc - 1) / 2) @ masses
        length[i] = z + delay.mean
        hi = curves[s][y + z]
        trans[i, :n_y] = (1.0 - hi) * masses
        trans[i, n_y:] = hi * masses

    # stationary distribution: pi (P - I) = 0, sum pi = 1
    a = np.vstack([(trans - np.eye(n)).T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi = np.linalg.lstsq(a, b, rcond=None)[0]
    mean_len = float(pi @ length)
    return PolicyEvaluation(
        avg_uoi=float(pi @ uoi_cost) / mean_len,
        avg_aoi=float(pi @ aoi_cost) / mean_len,
        mean_cycle_len=mean_len,
        state_probs={s: float(v) for s, v in zip(states, pi)},
    )
