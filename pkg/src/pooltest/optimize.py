"""Exhaustive search over trivial two-stage designs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .analytic import eti_individual, eti_pooled
from .model import DesignParams, ParameterError, PracticalParams

DEFAULT_R_MAX = 5
DEFAULT_S_MAX = 200

TABLE_P = (0.1, 0.05, 0.02, 0.01, 0.005)
TABLE_U = (0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class Optimum:
    params: PracticalParams
    design: DesignParams
    eti: float
    runner_up: tuple[DesignParams, float] | None = None

    @property
    def rs(self) -> tuple[int, int]:
        return self.design.r, self.design.s


def candidate_etis(params: PracticalParams, r_max: int, s_max: int):
    """Yield ``(eti, r, s)`` for individual testing and every pooled ``(r, s)``."""
    yield eti_individual(params), 1, 1
    for r in range(1, r_max + 1):
        for s in range(2, s_max + 1):
            yield eti_pooled(params, (r, s)).eti, r, s


def _as_design(r: int, s: int) -> DesignParams:
    if s == 1:
        return DesignParams.individual()
    return DesignParams.random_regular(r, s)


def optimize_design(
    params: PracticalParams, r_max: int = DEFAULT_R_MAX, s_max: int = DEFAULT_S_MAX
) -> Optimum:
    """Minimise ETI over ``{1..r_max} x {2..s_max}`` plus individual testing.

    Ties go to the smaller ``r``, then the smaller ``s``, so the result does
    not depend on evaluation order.
    """
    if r_max < 1:
        raise ParameterError("r_max must be >= 1")
    if s_max < 2:
        raise ParameterError("s_max must be >= 2")
    ranked = sorted(candidate_etis(params, r_max, s_max))
    best_eti, r, s = ranked[0]
    runner = ranked[1]
    return Optimum(
        params=params,
        design=_as_design(r, s),
        eti=best_eti,
        runner_up=(_as_design(runner[1], runner[2]), runner[0]),
    )


def individual_optimum(params: PracticalParams) -> Optimum:
    return Optimum(params, DesignParams.individual(), eti_individual(params))


def table(
    params_grid: Sequence[Sequence[PracticalParams]],
    r_max: int = DEFAULT_R_MAX,
    s_max: int = DEFAULT_S_MAX,
    individual_only: bool = False,
) -> list[list[Optimum]]:
    """Apply :func:`optimize_design` to every cell of a rows x columns grid."""
    solve = individual_optimum if individual_only else (lambda c: optimize_design(c, r_max, s_max))
    return [[solve(cell) for cell in row] for row in params_grid]


def screening_grid(ps: Sequence[float] = TABLE_P, us: Sequence[float] = TABLE_U):
    """Prevalence x sensitivity screening grid, ``p`` rows by ``u`` columns."""
    return [[PracticalParams(p, u) for u in us] for p in ps]
