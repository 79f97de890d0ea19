"""Seeded Monte Carlo runs of the two-stage protocol and the SAFFRON block scheme.

Every replicate draws from its own generators, keyed by
``SeedSequence(seed, spawn_key=(replicate, stream))``, so the result does not
depend on how replicates are scheduled across threads.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .design import build_design, decode_words, next_power_of_two, saffron_block_code
from .model import (
    DesignKind,
    DesignParams,
    ParameterError,
    PracticalParams,
    SimulationReport,
)

RNG_ALGORITHM = "numpy.PCG64 seeded by SeedSequence(seed, spawn_key=(replicate, stream))"

STREAM_DESIGN = 0
STREAM_INFECTION = 1
STREAM_POOL_TESTS = 2
STREAM_INDIVIDUAL_TESTS = 3

# cap on individuals materialised at once in the SAFFRON simulation
_SAFFRON_CHUNK = 1 << 22
MAX_SIMULATED_BLOCK = 1 << 24


def replicate_rng(seed: int, replicate: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replicate, stream))))


@dataclass(frozen=True)
class SimulationConfig:
    params: PracticalParams
    design: DesignParams
    m: int
    replicates: int
    seed: int

    def __post_init__(self):
        if self.replicates < 1:
            raise ParameterError("replicates must be >= 1")
        if self.m < 1:
            raise ParameterError("m must be >= 1")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ParameterError("seed must be a non-negative integer")

    @property
    def actual_m(self) -> int:
        return self.design.fit_m(self.m)

    def to_dict(self) -> dict:
        return {
            "p": self.params.p,
            "u": self.params.u,
            "design": self.design.to_dict(),
            "requested_m": self.m,
            "replicates": self.replicates,
            "seed": self.seed,
        }


def ratio_stderr(tests: np.ndarray, found: np.ndarray) -> float:
    """Delta-method standard error of ``sum(tests) / sum(found)``."""
    n = len(tests)
    total_found = found.sum()
    if n < 2 or total_found == 0:
        return math.nan
    ratio = tests.sum() / total_found
    resid = tests - ratio * found
    return math.sqrt((resid**2).sum() / (n * (n - 1))) / (total_found / n)


def _map(fn, n: int, threads: int):
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def _report(mode, config, m, rows, seed, extra, started) -> SimulationReport:
    arr = np.asarray(rows, dtype=np.int64).reshape(-1, 4)
    tests, stage2, found, infected = (int(x) for x in arr.sum(axis=0))
    return SimulationReport(
        mode=mode,
        config=config,
        m=m,
        replicates=len(rows),
        total_tests=tests,
        total_found=found,
        total_infected=infected,
        stage2_tests=stage2,
        eti_estimate=tests / found if found else math.inf,
        eti_stderr=ratio_stderr(arr[:, 0].astype(float), arr[:, 2].astype(float)),
        seed=config["seed"],
        rng_algorithm=RNG_ALGORITHM,
        extra=extra,
        wall_time=time.perf_counter() - started,
        per_replicate=tuple(tuple(int(v) for v in row) for row in arr),
    )


def _individual_replicate(params: PracticalParams, m: int, seed: int, rep: int):
    infected = replicate_rng(seed, rep, STREAM_INFECTION).random(m) < params.p
    positive = replicate_rng(seed, rep, STREAM_INDIVIDUAL_TESTS).random(m) < params.u
    found = int(np.count_nonzero(infected & positive))
    return m, 0, found, int(np.count_nonzero(infected))


def _two_stage_replicate(params: PracticalParams, design_params: DesignParams, m: int, seed: int, rep: int):
    design = build_design(design_params, m, replicate_rng(seed, rep, STREAM_DESIGN))
    infected = replicate_rng(seed, rep, STREAM_INFECTION).random(m) < params.p
    # specificity 1: only pools holding an infected sample can read positive
    contaminated = infected[design.pools].any(axis=1)
    pool_positive = contaminated & (replicate_rng(seed, rep, STREAM_POOL_TESTS).random(design.t) < params.u)
    positive_memberships = np.bincount(design.pools[pool_positive].ravel(), minlength=m)
    retest = positive_memberships == design.r
    confirmed = retest & infected & (replicate_rng(seed, rep, STREAM_INDIVIDUAL_TESTS).random(m) < params.u)
    stage2 = int(np.count_nonzero(retest))
    return design.t + stage2, stage2, int(np.count_nonzero(confirmed)), int(np.count_nonzero(infected))


def simulate_individual(config: SimulationConfig, threads: int = 1) -> SimulationReport:
    """One test per individual; an infected individual is found when the test reads positive."""
    started = time.perf_counter()
    m = config.m
    rows = _map(lambda rep: _individual_replicate(config.params, m, config.seed, rep), config.replicates, threads)
    cfg = config.to_dict()
    cfg["design"] = DesignParams.individual().to_dict()
    return _report("individual", cfg, m, rows, config.seed, {}, started)


def simulate_two_stage(config: SimulationConfig, threads: int = 1) -> SimulationReport:
    """Trivial two-stage testing on a freshly drawn design per replicate.

    Stage 1 runs the pooled tests; a pool containing an infected sample reads
    positive with probability ``u``, a clean pool never does. Stage 2 tests
    individually everyone whose ``r`` pools all read positive.
    """
    if config.design.kind is DesignKind.INDIVIDUAL:
        return simulate_individual(config, threads)
    started = time.perf_counter()
    # raises InfeasibleDesignError before any sampling
    m = config.actual_m
    rows = _map(
        lambda rep: _two_stage_replicate(config.params, config.design, m, config.seed, rep),
        config.replicates,
        threads,
    )
    return _report("two-stage", config.to_dict(), m, rows, config.seed, {}, started)


def saffron_layout(p: float) -> tuple[int, int]:
    """``(real_per_block, block_size)``: about ``1/p`` individuals padded to a power of two."""
    if not (0.0 < p < 1.0):
        raise ParameterError(f"p must lie in (0, 1), got {p!r}")
    real = max(1, round(1.0 / p))
    return real, next_power_of_two(real)


def _saffron_replicate(p, n_blocks, real, code, seed, rep):
    rng = replicate_rng(seed, rep, STREAM_INFECTION)
    words = code.words[:real]
    tally = np.zeros(6, dtype=np.int64)  # clean, found, too_many, exactly_one, nonempty, infected
    per_chunk = max(1, _SAFFRON_CHUNK // real)
    done = 0
    while done < n_blocks:
        chunk = min(per_chunk, n_blocks - done)
        infected = rng.random((chunk, real)) < p
        outcome = np.bitwise_or.reduce(np.where(infected, words, np.uint64(0)), axis=1)
        status, index = decode_words(code.l, outcome)
        found = status == 1
        if not np.all(infected[np.flatnonzero(found), index[found]]):
            raise AssertionError("decoder reported an uninfected individual")
        counts = infected.sum(axis=1)
        tally += [
            np.count_nonzero(status == 0),
            np.count_nonzero(found),
            np.count_nonzero(status == 2),
            np.count_nonzero(counts == 1),
            np.count_nonzero(counts > 0),
            counts.sum(),
        ]
        done += chunk
    return tally


def simulate_saffron(
    n: int, p: float, replicates: int, seed: int, threads: int = 1, block_size: int | None = None
) -> SimulationReport:
    """Noiseless SAFFRON-style blocks over ``n`` individuals per replicate.

    Each block of about ``1/p`` individuals uses ``2l`` tests and finds one
    infected individual exactly when it holds exactly one. Passing
    ``block_size`` (a power of two) fixes the block to exactly that many
    individuals instead.
    """
    started = time.perf_counter()
    if block_size is None:
        real, block_size = saffron_layout(p)
    else:
        if not (0.0 < p < 1.0):
            raise ParameterError(f"p must lie in (0, 1), got {p!r}")
        real = block_size
    if block_size > MAX_SIMULATED_BLOCK:
        raise ParameterError(f"block of {block_size} individuals is too large to simulate (p too small)")
    if n < real:
        raise ParameterError(f"n={n} is smaller than one block of {real} individuals")
    if replicates < 1:
        raise ParameterError("replicates must be >= 1")
    code = saffron_block_code(block_size)
    n_blocks = n // real
    tallies = _map(lambda rep: _saffron_replicate(p, n_blocks, real, code, seed, rep), replicates, threads)
    tallies = np.asarray(tallies)
    clean, found, too_many, one, nonempty, infected = (int(x) for x in tallies.sum(axis=0))
    total_blocks = n_blocks * replicates
    tests_per_block = code.tests
    rows = [(n_blocks * tests_per_block, 0, int(t[1]), int(t[5])) for t in tallies]
    p_one = one / total_blocks
    p_one_exact = real * p * (1.0 - p) ** (real - 1)
    extra = {
        "blocks": total_blocks,
        "block_size": block_size,
        "individuals_per_block": real,
        "tests_per_block": tests_per_block,
        "clean_blocks": clean,
        "found_blocks": found,
        "too_many_blocks": too_many,
        "blocks_exactly_one": one,
        "blocks_nonempty": nonempty,
        "p_exactly_one": p_one,
        "p_exactly_one_stderr": math.sqrt(p_one * (1.0 - p_one) / total_blocks),
        "p_exactly_one_exact": p_one_exact,
        "found_fraction_of_infected": found / infected if infected else math.nan,
        "found_fraction_given_nonempty": found / nonempty if nonempty else math.nan,
        "eti_exact": tests_per_block / (real * p * (1.0 - p) ** (real - 1)),
    }
    config = {"n": n, "p": p, "replicates": replicates, "seed": seed}
    return _report("saffron", config, n_blocks * real, rows, seed, extra, started)
