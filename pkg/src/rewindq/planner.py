"""Schedules for recycling rewound qubits into a larger effective circuit.

A plan starts with ``k_0 = n_q`` fresh qubits and, in each of ``t`` rounds,
reuses all but ``delta_k`` of them. The qubits reset in round ``i`` have
rewinding length ``k_{i-1} - k_i`` and are used in ``t - i + 1`` later rounds,
so with infidelity ``c * exp(-alpha * length)`` per reset the total error is at
most ``sum_i c (t - i + 1) exp(-alpha (k_{i-1} - k_i))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

from rewindq.exceptions import ValidationError


def error_budget(k_values: Sequence[int], c: float, alpha: float) -> float:
    """Upper bound on the accumulated error of a schedule ``k_0 > k_1 > ... > k_t``."""
    k = list(k_values)
    if any(b >= a for a, b in zip(k, k[1:])):
        raise ValidationError(f"k values must be strictly decreasing, got {k}")
    t = len(k) - 1
    return sum(c * (t - i + 1) * math.exp(-alpha * (k[i - 1] - k[i])) for i in range(1, t + 1))


@dataclass(frozen=True)
class RecyclingPlan:
    """Constant-gap recycling schedule.

    ``degenerate`` marks plans with no rounds (``t = 0``), where recycling
    gives no advantage and ``n_circuit == n_q``.
    """

    n_q: int
    epsilon: float
    alpha: float
    c: float
    t: int
    delta_k: int
    k_values: tuple[int, ...]
    epsilon_total_bound: float
    n_circuit: int
    degenerate: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out["k_values"] = list(self.k_values)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def leading_rounds(n_q: int, epsilon: float, alpha: float) -> int:
    """Leading-order number of rounds ``alpha n_q / (ln(1/eps) ln n_q)``, rounded down."""
    return int(math.floor(alpha * n_q / (math.log(1.0 / epsilon) * math.log(n_q))))


def _gap(t: int, epsilon: float, alpha: float, c: float) -> int:
    return max(1, math.ceil(math.log(c * t * t / epsilon) / alpha))


def _degenerate(n_q: int, epsilon: float, alpha: float, c: float) -> RecyclingPlan:
    return RecyclingPlan(n_q, epsilon, alpha, c, 0, 0, (n_q,), 0.0, n_q, True)


def constant_gap_plan(n_q: int, epsilon: float, alpha: float, c: float = 1.0) -> RecyclingPlan:
    """Largest constant-gap plan (starting from the leading-order round count) whose exact bound is ``<= epsilon``.

    The gap is ``ceil(ln(c t^2 / eps) / alpha)``; schedules stop before ``k``
    would drop below 1, and ``t`` is reduced until the exact error budget fits.
    """
    if n_q < 2:
        raise ValidationError(f"n_q must be at least 2, got {n_q}")
    if not 0.0 < epsilon < 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1), got {epsilon}")
    if alpha <= 0 or c <= 0:
        raise ValidationError("alpha and c must be positive")
    t = leading_rounds(n_q, epsilon, alpha)
    while t >= 1:
        dk = _gap(t, epsilon, alpha, c)
        if dk >= n_q:
            t -= 1
            continue
        t_eff = min(t, (n_q - 1) // dk)
        k = tuple(n_q - i * dk for i in range(t_eff + 1))
        bound = error_budget(k, c, alpha)
        if t_eff >= 1 and bound <= epsilon:
            return RecyclingPlan(n_q, epsilon, alpha, c, t_eff, dk, k, bound, sum(k))
        t -= 1
    return _degenerate(n_q, epsilon, alpha, c)


def leading_order_size(n_q: int, epsilon: float, alpha: float) -> float:
    """Asymptotic effective size ``alpha / (2 ln(1/eps)) * n_q^2 / ln n_q``."""
    return alpha / (2.0 * math.log(1.0 / epsilon)) * n_q * n_q / math.log(n_q)


def break_even(epsilon: float, alpha: float, c: float = 1.0, n_max: int = 10_000) -> int | None:
    """Smallest ``n_q`` whose plan uses more qubits than it has (``n_circuit > n_q``)."""
    for n_q in range(2, n_max + 1):
        if constant_gap_plan(n_q, epsilon, alpha, c).n_circuit > n_q:
            return n_q
    return None


def sample_budget(delta: float, epsilon_est: float) -> int:
    """Samples needed to estimate an infidelity ``delta`` to precision ``epsilon_est``."""
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    if epsilon_est <= 0:
        raise ValidationError(f"epsilon_est must be positive, got {epsilon_est}")
    # guard against float noise pushing an exact integer ratio up by one
    return math.ceil(delta * (1.0 - delta) / epsilon_est**2 - 1e-9)
