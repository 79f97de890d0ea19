"""Value types shared across the package.

Everything here is a frozen dataclass. Validation happens in ``__post_init__``
so an invalid object can never be constructed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class ParameterError(ValueError):
    """An argument lies outside its allowed domain."""


class InfeasibleDesignError(ValueError):
    """No pooling design exists for the requested sizes."""


def _check_int(name: str, value: Any, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


@dataclass(frozen=True)
class PracticalParams:
    """Prevalence ``p`` and test sensitivity ``u`` of the screening model."""

    p: float
    u: float

    def __post_init__(self):
        p, u = float(self.p), float(self.u)
        if not (0.0 < p < 1.0):
            raise ParameterError(f"prevalence p must lie in (0, 1), got {self.p!r}")
        if not (0.0 < u <= 1.0):
            raise ParameterError(f"sensitivity u must lie in (0, 1], got {self.u!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", u)

    @property
    def q(self) -> float:
        return 1.0 - self.p


class DesignKind(str, enum.Enum):
    INDIVIDUAL = "individual"
    RANDOM_REGULAR = "random"
    GRID = "grid"
    HYPERCUBE = "hypercube"


def _integer_root(value: int, degree: int) -> int | None:
    """Return ``a`` with ``a**degree == value``, or None."""
    if degree == 1:
        return value
    a = round(value ** (1.0 / degree))
    for cand in (a - 1, a, a + 1):
        if cand > 0 and cand**degree == value:
            return cand
    return None


@dataclass(frozen=True)
class DesignParams:
    """First-stage design: ``r`` pools per individual, ``s`` individuals per pool.

    ``a`` is the side length for grid and hypercube designs (``s = a**(r-1)``)
    and ``None`` otherwise. Prefer the classmethod constructors.
    """

    r: int
    s: int
    kind: DesignKind = DesignKind.RANDOM_REGULAR
    a: int | None = None

    def __post_init__(self):
        r = _check_int("r", self.r, 1)
        s = _check_int("s", self.s, 1)
        kind = DesignKind(self.kind)
        a = self.a
        if kind is DesignKind.INDIVIDUAL:
            if r != 1 or s != 1:
                raise ParameterError("individual testing requires r = s = 1")
            a = None
        elif kind is DesignKind.RANDOM_REGULAR:
            if s < 2:
                raise ParameterError("random regular design requires s > 1")
            a = None
        else:
            if kind is DesignKind.GRID and r != 2:
                raise ParameterError("grid design requires r = 2")
            if r < 2:
                raise ParameterError("hypercube design requires r >= 2")
            root = _integer_root(s, r - 1)
            if root is None or root < 2:
                raise ParameterError(
                    f"hypercube design requires s = a**(r-1) for an integer a > 1; "
                    f"got r={r}, s={s}"
                )
            if a is not None and a != root:
                raise ParameterError(f"side length a={a} inconsistent with s={s}, r={r}")
            a = root
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "a", a)

    @classmethod
    def individual(cls) -> DesignParams:
        return cls(1, 1, DesignKind.INDIVIDUAL)

    @classmethod
    def random_regular(cls, r: int, s: int) -> DesignParams:
        return cls(r, s, DesignKind.RANDOM_REGULAR)

    @classmethod
    def grid(cls, s: int) -> DesignParams:
        return cls(2, s, DesignKind.GRID, s)

    @classmethod
    def hypercube(cls, r: int, a: int) -> DesignParams:
        a = _check_int("a", a, 2)
        r = _check_int("r", r, 2)
        return cls(r, a ** (r - 1), DesignKind.HYPERCUBE, a)

    @property
    def is_individual(self) -> bool:
        return self.kind is DesignKind.INDIVIDUAL

    @property
    def granularity(self) -> int:
        """Smallest population step for which this design can be built."""
        if self.kind is DesignKind.INDIVIDUAL:
            return 1
        if self.kind is DesignKind.RANDOM_REGULAR:
            return self.s // math.gcd(self.r, self.s)
        return self.a**self.r

    def minimum_m(self) -> int:
        g = self.granularity
        if self.kind is DesignKind.RANDOM_REGULAR:
            # a pool needs s distinct members
            return g * -(-self.s // g)
        return g

    def fit_m(self, requested: int) -> int:
        """Largest buildable population size not exceeding ``requested``."""
        g = self.granularity
        m = (requested // g) * g
        if m < self.minimum_m():
            raise InfeasibleDesignError(
                f"requested m={requested} is below the smallest feasible size "
                f"{self.minimum_m()} for {self.describe()}"
            )
        return m

    def describe(self) -> str:
        if self.kind is DesignKind.INDIVIDUAL:
            return "individual"
        if self.kind is DesignKind.RANDOM_REGULAR:
            return f"random(r={self.r}, s={self.s})"
        return f"{self.kind.value}(r={self.r}, a={self.a}, s={self.s})"

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "r": self.r, "s": self.s, "a": self.a}


@dataclass(frozen=True, eq=False)
class PoolingDesign:
    """Explicit incidence of ``m`` individuals into ``t`` pools.

    ``pools`` has shape ``(t, s)``; row ``j`` lists the members of pool ``j``.
    """

    m: int
    r: int
    s: int
    pools: np.ndarray

    def __post_init__(self):
        pools = np.ascontiguousarray(self.pools, dtype=np.int64)
        pools.setflags(write=False)
        object.__setattr__(self, "pools", pools)

    @property
    def t(self) -> int:
        return int(self.pools.shape[0])

    def membership(self) -> np.ndarray:
        """Array of shape ``(m, r)``: the pools each individual belongs to."""
        order = np.argsort(self.pools.ravel(), kind="stable")
        return (order // self.s).reshape(self.m, self.r)

    def members(self, pool: int) -> list[int]:
        return sorted(int(i) for i in self.pools[pool])

    def validate(self) -> None:
        """Raise AssertionError unless the design is exactly (r, s)-regular."""
        pools = self.pools
        if pools.ndim != 2 or pools.shape[1] != self.s:
            raise AssertionError(f"pools must have shape (t, {self.s})")
        if self.t * self.s != self.m * self.r:
            raise AssertionError("t * s != m * r")
        if pools.size and (pools.min() < 0 or pools.max() >= self.m):
            raise AssertionError("individual index out of range")
        degrees = np.bincount(pools.ravel(), minlength=self.m)
        if not np.all(degrees == self.r):
            raise AssertionError("individual degree differs from r")
        srt = np.sort(pools, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]):
            raise AssertionError("duplicate membership within a pool")

    def incidence_rows(self) -> list[tuple[int, int]]:
        """``(pool, individual)`` pairs sorted by pool, then individual."""
        srt = np.sort(self.pools, axis=1)
        return [(j, int(i)) for j in range(self.t) for i in srt[j]]

    def canonical(self) -> frozenset[frozenset[int]]:
        """The design as a set of pools, ignoring pool labels."""
        return frozenset(frozenset(int(i) for i in row) for row in self.pools)


@dataclass(frozen=True)
class TheoreticalParams:
    """Population ``n`` with ``k`` expected infected (``k`` may be real)."""

    n: float
    k: float

    def __post_init__(self):
        n, k = float(self.n), float(self.k)
        if not (1.0 <= k < n):
            raise ParameterError(f"need 1 <= k < n, got n={self.n!r}, k={self.k!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)

    @classmethod
    def from_alpha(cls, n: float, alpha: float) -> TheoreticalParams:
        if not (0.0 <= alpha < 1.0):
            raise ParameterError(f"alpha must lie in [0, 1), got {alpha!r}")
        return cls(n, float(n) ** alpha)

    @property
    def alpha(self) -> float:
        return math.log(self.k) / math.log(self.n)

    @property
    def p(self) -> float:
        return self.k / self.n


@dataclass(frozen=True)
class RatePoint:
    alpha: float
    r_full: float
    r_saff: float
    r: float


@dataclass(frozen=True)
class SimulationReport:
    """Aggregated Monte Carlo totals.

    ETI is the ratio of totals, never the mean of per-replicate ratios.
    ``extra`` carries mode-specific tallies (e.g. SAFFRON block outcomes).
    """

    mode: str
    config: dict
    m: int
    replicates: int
    total_tests: int
    total_found: int
    total_infected: int
    stage2_tests: int
    eti_estimate: float
    eti_stderr: float
    seed: int
    rng_algorithm: str
    extra: dict = field(default_factory=dict)
    wall_time: float | None = None
    # (tests, stage2_tests, found, infected) per replicate
    per_replicate: tuple = ()

    def __post_init__(self):
        if self.total_found > self.total_infected:
            raise AssertionError("found more infected individuals than exist")

    @property
    def false_negatives(self) -> int:
        return self.total_infected - self.total_found

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "mode": self.mode,
            "config": self.config,
            "m": self.m,
            "replicates": self.replicates,
            "totals": {
                "tests": self.total_tests,
                "stage2_tests": self.stage2_tests,
                "found": self.total_found,
                "infected": self.total_infected,
                "false_negatives": self.false_negatives,
            },
            "eti_estimate": _json_float(self.eti_estimate),
            "eti_stderr": _json_float(self.eti_stderr),
            "rng": {"algorithm": self.rng_algorithm, "seed": self.seed},
        }
        if self.extra:
            d["extra"] = {k: _json_float(v) for k, v in self.extra.items()}
        if include_timing and self.wall_time is not None:
            d["wall_time_s"] = self.wall_time
        return d


def _json_float(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x
