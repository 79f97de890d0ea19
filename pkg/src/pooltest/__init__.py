"""Pooled testing for isolating infected individuals under a test budget."""

from .analytic import (
    EtiBreakdown,
    binary_entropy,
    eti_full,
    eti_individual,
    eti_pooled,
    eti_saffron,
    eti_theoretical,
    rate_from_eti,
    achievable_rates,
)
from .design import (
    grid_design,
    hypercube_design,
    random_regular_design,
    saffron_block_code,
    saffron_decode,
)
from .model import (
    DesignKind,
    DesignParams,
    InfeasibleDesignError,
    ParameterError,
    PoolingDesign,
    PracticalParams,
    RatePoint,
    SimulationReport,
    TheoreticalParams,
)
from .optimize import Optimum, optimize_design, table
from .simulate import SimulationConfig, simulate_individual, simulate_saffron, simulate_two_stage

__all__ = [
    "DesignKind",
    "DesignParams",
    "EtiBreakdown",
    "InfeasibleDesignError",
    "Optimum",
    "ParameterError",
    "PoolingDesign",
    "PracticalParams",
    "RatePoint",
    "SimulationConfig",
    "SimulationReport",
    "TheoreticalParams",
    "binary_entropy",
    "eti_full",
    "eti_individual",
    "eti_pooled",
    "eti_saffron",
    "eti_theoretical",
    "grid_design",
    "hypercube_design",
    "optimize_design",
    "random_regular_design",
    "rate_from_eti",
    "achievable_rates",
    "saffron_block_code",
    "saffron_decode",
    "simulate_individual",
    "simulate_saffron",
    "simulate_two_stage",
    "table",
]
