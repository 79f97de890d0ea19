"""Closed-form expected tests per infected individual found (ETI) and rates."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import DesignParams, ParameterError, PracticalParams, RatePoint, TheoreticalParams

LN2 = math.log(2.0)
R_SAFFRON = 1.0 / (2.0 * math.e)
# alpha below which the full-recovery rate is capped at 1
ALPHA_FULL_CAP = LN2**2 / (1.0 + LN2**2)
# alpha above which the SAFFRON rate exceeds the full-recovery rate
ALPHA_CROSSOVER = LN2**2 / (LN2**2 + R_SAFFRON)

_LARGE_S = 10_000


@dataclass(frozen=True)
class EtiBreakdown:
    stage1_tests_per_individual: float
    stage2_tests_per_individual: float
    find_probability_per_individual: float
    eti: float

    def to_dict(self) -> dict:
        return {
            "stage1_tests_per_individual": self.stage1_tests_per_individual,
            "stage2_tests_per_individual": self.stage2_tests_per_individual,
            "find_probability_per_individual": self.find_probability_per_individual,
            "eti": self.eti,
        }


def eti_individual(params: PracticalParams) -> float:
    return 1.0 / (params.p * params.u)


def _q_power(q: float, exponent: int) -> float:
    if exponent > _LARGE_S:
        return math.exp(exponent * math.log(q))
    return q**exponent


def eti_pooled(params: PracticalParams, design: DesignParams | tuple[int, int]) -> EtiBreakdown:
    """ETI of trivial two-stage testing with ``r`` pools per individual of size ``s``.

    A non-infected individual is retested when each of its ``r`` pools holds
    another infected member and all ``r`` pools read positive.
    """
    r, s = (design.r, design.s) if isinstance(design, DesignParams) else design
    if s <= 1:
        raise ParameterError("eti_pooled requires s > 1; use eti_individual for r = s = 1")
    p, q, u = params.p, params.q, params.u
    stage1 = r / s
    others_positive = (1.0 - _q_power(q, s - 1)) ** r
    stage2 = u**r * (p + q * others_positive)
    find = p * u ** (r + 1)
    return EtiBreakdown(stage1, stage2, find, (stage1 + stage2) / find)


def eti_hypercube(params: PracticalParams, r: int, a: int) -> EtiBreakdown:
    """Exact ETI of the hypercube design with side ``a`` in ``r`` dimensions.

    The ``r`` slices through an individual pairwise share other members, so
    for ``r >= 3`` their contamination is correlated and :func:`eti_pooled`
    underestimates the retest load. Inclusion-exclusion over the set ``D`` of
    slices left clean: those slices cover ``a**r - (a-1)**|D| * a**(r-|D|) - 1``
    other individuals. For ``r = 2`` this equals :func:`eti_pooled`.
    """
    if r < 2 or a < 2:
        raise ParameterError("hypercube needs r >= 2 and a >= 2")
    p, q, u = params.p, params.q, params.u
    s = a ** (r - 1)
    all_contaminated = 1.0
    for j in range(1, r + 1):
        covered = a**r - (a - 1) ** j * a ** (r - j) - 1
        all_contaminated += math.comb(r, j) * (-1) ** j * _q_power(q, covered)
    stage1 = r / s
    stage2 = u**r * (p + q * all_contaminated)
    find = p * u ** (r + 1)
    return EtiBreakdown(stage1, stage2, find, (stage1 + stage2) / find)


def eti_design(params: PracticalParams, design: DesignParams) -> float:
    if design.is_individual:
        return eti_individual(params)
    return eti_pooled(params, design).eti


def eti_full(params: TheoreticalParams) -> float:
    return max(math.log2(params.n / params.k), math.log(params.k) / LN2)


def tests_full(params: TheoreticalParams) -> float:
    """Tests needed to find all ``k`` infected individuals: ``k * eti_full``."""
    return params.k * eti_full(params)


def eti_saffron(params: TheoreticalParams) -> float:
    return 2.0 * math.e * math.log2(params.n / params.k)


def eti_theoretical(params: TheoreticalParams) -> float:
    return min(eti_full(params), eti_saffron(params))


def eti_theoretical_alpha(n: float, alpha: float) -> float:
    return eti_theoretical(TheoreticalParams.from_alpha(n, alpha))


def binary_entropy(p: float) -> float:
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"probability must lie in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -(p * math.log(p) + (1.0 - p) * math.log1p(-p)) / LN2


def rate_from_eti(p: float, eti: float) -> float:
    if not (0.0 < p < 1.0):
        raise ParameterError(f"p must lie in (0, 1), got {p!r}")
    if not eti > 0.0:
        raise ParameterError(f"eti must be positive, got {eti!r}")
    return binary_entropy(p) / (p * eti)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 <= alpha < 1.0):
        raise ParameterError(f"alpha must lie in [0, 1), got {alpha!r}")
    return alpha


def achievable_rates(alpha: float) -> RatePoint:
    """Achievable rates for sparsity exponent ``alpha``.

    ``R_full = min(1, ln(2)**2 (1 - alpha) / alpha)``, ``R_saff = 1/(2e)``,
    ``R = max(R_full, R_saff)``. At ``alpha = 0`` the cap of 1 binds.
    """
    alpha = _check_alpha(alpha)
    r_full = 1.0 if alpha == 0.0 else min(1.0, LN2**2 * (1.0 - alpha) / alpha)
    return RatePoint(alpha, r_full, R_SAFFRON, max(r_full, R_SAFFRON))


def rate_full_from_eti_full(alpha: float) -> float:
    """Asymptotic ``H(p)/(p ETI_full)`` with ``k = n**alpha``: ``min(1, (1-alpha)/alpha)``.

    Differs from the ``R_full`` of :func:`achievable_rates` by the ``ln(2)**2``
    factor; both are exposed so the two can be compared.
    """
    alpha = _check_alpha(alpha)
    return 1.0 if alpha == 0.0 else min(1.0, (1.0 - alpha) / alpha)


def rate_curve(alpha_min: float, alpha_max: float, steps: int) -> list[RatePoint]:
    """Uniform grid of ``steps`` points from ``alpha_min`` to ``alpha_max`` inclusive."""
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    _check_alpha(alpha_min)
    _check_alpha(alpha_max)
    if alpha_min > alpha_max:
        raise ParameterError("alpha_min must not exceed alpha_max")
    if steps == 1:
        return [achievable_rates(alpha_min)]
    width = alpha_max - alpha_min
    return [achievable_rates(alpha_min + width * i / (steps - 1)) for i in range(steps)]
