"""Stage-1 pooling designs and the SAFFRON-style single-infected block code."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .model import DesignKind, DesignParams, InfeasibleDesignError, ParameterError, PoolingDesign

LOCAL_REPAIR_ATTEMPTS = 100
MAX_RESTARTS = 10_000


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _positive(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_random_feasible(m: int, r: int, s: int) -> None:
    m, r, s = _positive("m", m), _positive("r", r), _positive("s", s)
    if (m * r) % s:
        raise InfeasibleDesignError(
            f"s must divide m*r so that every pool has exactly s members "
            f"(m={m}, r={r}, s={s}, m*r={m * r})"
        )
    if m < s:
        raise InfeasibleDesignError(f"need m >= s for pools of s distinct individuals (m={m}, s={s})")


def _duplicate_rows(pools: np.ndarray) -> np.ndarray:
    srt = np.sort(pools, axis=1)
    return np.flatnonzero(np.any(srt[:, 1:] == srt[:, :-1], axis=1))


def _first_repeat(row: np.ndarray) -> int | None:
    """Position of the second occurrence of the first repeated value in ``row``."""
    seen = set()
    for pos, v in enumerate(row.tolist()):
        if v in seen:
            return pos
        seen.add(v)
    return None


def _swap_gain(row_a, row_b, x, y) -> int:
    # change in repeat count when x (a repeat in row_a) trades places with y in row_b
    return -1 + bool(np.any(row_a == y)) - (np.count_nonzero(row_b == y) > 1) + bool(np.any(row_b == x))


def _improving_swaps(pools: np.ndarray, a: int, x) -> np.ndarray:
    """Flat indices ``b * s + j`` of every swap partner that lowers the repeat count."""
    order = np.argsort(pools, axis=1, kind="stable")
    srt = np.take_along_axis(pools, order, axis=1)
    same = srt[:, 1:] == srt[:, :-1]
    dup_sorted = np.zeros(pools.shape, dtype=bool)
    dup_sorted[:, 1:] |= same
    dup_sorted[:, :-1] |= same
    dup = np.empty_like(dup_sorted)
    np.put_along_axis(dup, order, dup_sorted, axis=1)
    x_in_b = np.any(pools == x, axis=1)[:, None]
    y_in_a = np.isin(pools, pools[a])
    delta = -1 + y_in_a.astype(int) - dup + x_in_b
    ok = (delta < 0) & (pools != x)
    ok[a] = False
    return np.flatnonzero(ok)


def _repair(pools: np.ndarray, rng: np.random.Generator) -> bool:
    """Remove repeated members by swaps with other pools; False if stuck.

    A swap is taken only when it strictly lowers the total number of repeats.
    Random partners are tried first; after ``LOCAL_REPAIR_ATTEMPTS`` misses
    the partner is drawn uniformly from all improving swaps, and the repair
    fails only if there are none.
    """
    t, s = pools.shape
    for a in _duplicate_rows(pools):
        row_a = pools[a]
        while (i := _first_repeat(row_a)) is not None:
            x = row_a[i]
            for _ in range(LOCAL_REPAIR_ATTEMPTS):
                b = int(rng.integers(t - 1))
                b += b >= a
                j = int(rng.integers(s))
                y = pools[b, j]
                if x != y and _swap_gain(row_a, pools[b], x, y) < 0:
                    break
            else:
                choices = _improving_swaps(pools, a, x)
                if choices.size == 0:
                    return False
                b, j = divmod(int(rng.choice(choices)), s)
                y = pools[b, j]
            row_a[i], pools[b, j] = y, x
    return True


def random_regular_design(m: int, r: int, s: int, seed=None) -> PoolingDesign:
    """Random design with every individual in ``r`` pools and every pool of size ``s``.

    Configuration model: ``r`` copies of each individual are shuffled and cut
    into pools of ``s``. Pools holding someone twice are repaired by swapping
    with random other pools; if a repeat resists ``LOCAL_REPAIR_ATTEMPTS``
    swaps the whole assignment is reshuffled. ``seed`` may be an int or a
    ``numpy.random.Generator``.
    """
    check_random_feasible(m, r, s)
    rng = _rng(seed)
    t = m * r // s
    if m == s:
        # the only such design: everyone in every pool
        return PoolingDesign(m, r, s, np.tile(rng.permutation(m), (r, 1)))
    stubs = np.repeat(np.arange(m, dtype=np.int64), r)
    for _ in range(MAX_RESTARTS):
        pools = rng.permutation(stubs).reshape(t, s)
        if r == 1 or _repair(pools, rng):
            return PoolingDesign(m, r, s, pools)
    raise InfeasibleDesignError(f"could not sample a ({r}, {s})-regular design on m={m}")


def hypercube_design(m: int, r: int, a: int) -> PoolingDesign:
    """Blocks of ``a**r`` individuals arranged in an ``r``-dimensional cube.

    Each block gets ``r * a`` pools, one per axis-aligned slice; pool
    ``d * a + v`` of a block holds the individuals whose coordinate on axis
    ``d`` equals ``v``. Individual ``b * a**r + c`` sits at the cube position
    whose row-major index is ``c``.
    """
    m, r, a = _positive("m", m), _positive("r", r, 2), _positive("a", a, 2)
    block = a**r
    if m % block:
        raise InfeasibleDesignError(f"m={m} must be a multiple of a**r = {block}")
    cube = np.arange(block, dtype=np.int64).reshape((a,) * r)
    slices = np.stack([np.take(cube, v, axis=d).ravel() for d in range(r) for v in range(a)])
    n_blocks = m // block
    pools = (slices[None, :, :] + block * np.arange(n_blocks)[:, None, None]).reshape(-1, a ** (r - 1))
    return PoolingDesign(m, r, a ** (r - 1), pools)


def grid_design(m: int, s: int) -> PoolingDesign:
    """``s x s`` grids: per block, ``s`` row pools followed by ``s`` column pools."""
    m, s = _positive("m", m), _positive("s", s)
    if s < 2:
        raise ParameterError("grid design requires s > 1")
    if m % (s * s):
        raise InfeasibleDesignError(f"m={m} must be a multiple of s**2 = {s * s}")
    return hypercube_design(m, 2, s)


def individual_design(m: int) -> PoolingDesign:
    m = _positive("m", m)
    return PoolingDesign(m, 1, 1, np.arange(m).reshape(m, 1))


def build_design(params: DesignParams, m: int, seed=None) -> PoolingDesign:
    kind = params.kind
    if kind is DesignKind.INDIVIDUAL:
        return individual_design(m)
    if kind is DesignKind.RANDOM_REGULAR:
        return random_regular_design(m, params.r, params.s, seed)
    if kind is DesignKind.GRID:
        return grid_design(m, params.a)
    return hypercube_design(m, params.r, params.a)


def write_design_csv(design: PoolingDesign, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["pool", "individual"])
    writer.writerows(design.incidence_rows())


# --- SAFFRON-style block code -------------------------------------------------

MAX_L = 31


class Outcome(enum.Enum):
    CLEAN = "clean"
    FOUND = "found"
    TOO_MANY = "too_many"


@dataclass(frozen=True)
class DecodeResult:
    outcome: Outcome
    index: int | None = None


@dataclass(frozen=True, eq=False)
class SaffronBlockCode:
    """Codeword of individual ``i`` is ``i`` in ``l``-bit binary followed by its complement.

    ``codewords`` is a ``(block_size, 2l)`` 0/1 array; ``words`` holds the
    same patterns as integers, most significant bit first.
    """

    block_size: int
    l: int
    codewords: np.ndarray
    words: np.ndarray

    @property
    def tests(self) -> int:
        return 2 * self.l

    def codeword(self, i: int) -> str:
        return "".join(map(str, self.codewords[i]))


def saffron_block_code(block_size: int) -> SaffronBlockCode:
    block_size = _positive("block_size", block_size, 2)
    if block_size & (block_size - 1):
        raise ParameterError(
            f"block_size={block_size} is not a power of two; pad the block with "
            f"known-negative dummies up to {next_power_of_two(block_size)}"
        )
    l = block_size.bit_length() - 1
    if l > MAX_L:
        raise ParameterError(f"block_size must be at most 2**{MAX_L}")
    idx = np.arange(block_size, dtype=np.uint64)
    mask = np.uint64((1 << l) - 1)
    words = (idx << np.uint64(l)) | (~idx & mask)
    shifts = np.arange(2 * l - 1, -1, -1, dtype=np.uint64)
    bits = ((words[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    bits.setflags(write=False)
    words.setflags(write=False)
    return SaffronBlockCode(block_size, l, bits, words)


def next_power_of_two(x: int) -> int:
    return max(2, 1 << (int(x) - 1).bit_length())


def saffron_outcomes(code: SaffronBlockCode, infected: Iterable[int]) -> np.ndarray:
    """Noiseless test outcomes: the bitwise OR of the infected codewords."""
    out = np.zeros(code.tests, dtype=np.uint8)
    for i in infected:
        out |= code.codewords[i]
    return out


def saffron_decode(code: SaffronBlockCode, outcomes) -> DecodeResult:
    bits = np.asarray(outcomes).astype(np.int64).ravel()
    if bits.size != code.tests:
        raise ParameterError(f"expected {code.tests} outcomes, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise ParameterError("outcomes must be 0/1")
    weight = int(bits.sum())
    if weight == 0:
        return DecodeResult(Outcome.CLEAN)
    l = code.l
    first, second = bits[:l], bits[l:]
    if weight == l and np.all(first + second == 1):
        return DecodeResult(Outcome.FOUND, int("".join(map(str, first)), 2))
    return DecodeResult(Outcome.TOO_MANY)


def decode_words(l: int, words: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised decoder on integer outcome words.

    Returns ``(status, index)`` where status is 0 clean, 1 found, 2 too many,
    and ``index`` is meaningful only where status is 1.
    """
    words = np.asarray(words, dtype=np.uint64)
    mask = np.uint64((1 << l) - 1)
    first = words >> np.uint64(l)
    found = (np.bitwise_count(words) == l) & ((words & mask) == (~first & mask))
    status = np.where(words == 0, 0, np.where(found, 1, 2)).astype(np.int8)
    return status, first.astype(np.int64)


def write_code_csv(code: SaffronBlockCode, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["individual", "codeword"])
    for i in range(code.block_size):
        writer.writerow([i, code.codeword(i)])


def design_csv(design: PoolingDesign) -> str:
    buf = io.StringIO()
    write_design_csv(design, buf)
    return buf.getvalue()
