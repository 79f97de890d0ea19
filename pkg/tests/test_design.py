import io
import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pooltest.design import (
    Outcome,
    build_design,
    decode_words,
    grid_design,
    hypercube_design,
    next_power_of_two,
    random_regular_design,
    saffron_block_code,
    saffron_decode,
    saffron_outcomes,
    write_code_csv,
    write_design_csv,
)
from pooltest.model import DesignParams, InfeasibleDesignError, ParameterError


def degree_counts(design):
    return Counter(int(i) for row in design.pools for i in row)


def test_dorfman_partition():
    d = random_regular_design(6, 1, 3, seed=0)
    assert d.t == 2
    assert sorted(int(i) for i in d.pools.ravel()) == list(range(6))


def test_single_pool_with_everyone():
    d = random_regular_design(8, 1, 8, seed=3)
    assert d.t == 1 and set(d.pools[0].tolist()) == set(range(8))


def test_small_regular_design_degrees():
    d = random_regular_design(12, 2, 4, seed=7)
    assert d.t == 6
    assert all(c == 2 for c in degree_counts(d).values()) and len(degree_counts(d)) == 12
    assert all(len(set(row.tolist())) == 4 for row in d.pools)


def test_everyone_in_every_pool_when_m_equals_s():
    d = random_regular_design(10, 4, 10, seed=1)
    d.validate()
    assert all(set(row.tolist()) == set(range(10)) for row in d.pools)


@pytest.mark.parametrize("m,r,s,needle", [(10, 2, 3, r"divide m\*r"), (4, 2, 8, "m >= s")])
def test_random_infeasible(m, r, s, needle):
    with pytest.raises(InfeasibleDesignError, match=needle):
        random_regular_design(m, r, s, seed=0)


def test_random_design_reproducible():
    a = random_regular_design(600, 3, 20, seed=42)
    b = random_regular_design(600, 3, 20, seed=42)
    c = random_regular_design(600, 3, 20, seed=43)
    assert np.array_equal(a.pools, b.pools)
    assert not np.array_equal(a.pools, c.pools)


def test_random_design_repairs_repeats():
    # dense case where the raw shuffle almost surely repeats someone in a pool
    for seed in range(20):
        random_regular_design(40, 5, 20, seed=seed).validate()


def test_grid_three_by_three():
    d = grid_design(9, 3)
    assert d.t == 6
    for i in range(3):
        for j in range(3):
            cell = 3 * i + j
            assert cell in d.pools[i]
            assert cell in d.pools[3 + j]


def test_grid_two_blocks():
    d = grid_design(18, 3)
    d.validate()
    assert d.t == 12
    assert set(d.pools[:6].ravel().tolist()) == set(range(9))
    assert set(d.pools[6:].ravel().tolist()) == set(range(9, 18))


def test_grid_rejects_degenerate_and_indivisible():
    with pytest.raises(ParameterError):
        grid_design(1, 1)
    with pytest.raises(InfeasibleDesignError):
        grid_design(10, 3)


def test_hypercube_3x3x3_slices():
    d = hypercube_design(27, 3, 3)
    d.validate()
    assert d.t == 9 and d.s == 9
    coords = np.array(np.unravel_index(np.arange(27), (3, 3, 3))).T
    expected = {frozenset(np.flatnonzero(coords[:, axis] == v).tolist()) for axis in range(3) for v in range(3)}
    assert d.canonical() == expected


def test_hypercube_binary_four_cube():
    d = hypercube_design(16, 4, 2)
    d.validate()
    assert d.t == 8 and d.s == 8
    assert set(degree_counts(d).values()) == {4}


@pytest.mark.parametrize("s", [2, 3, 5, 8])
def test_two_dimensional_hypercube_is_grid(s):
    assert hypercube_design(2 * s * s, 2, s).canonical() == grid_design(2 * s * s, s).canonical()


def test_hypercube_indivisible():
    with pytest.raises(InfeasibleDesignError):
        hypercube_design(28, 3, 3)


def test_structured_designs_every_block_shape():
    for r in range(2, 14):
        for a in range(2, 101):
            block = a**r
            if block > 10_000:
                break
            for m in {block, (10_000 // block) * block}:
                d = hypercube_design(m, r, a)
                d.validate()
                assert d.t * d.s == m * r and d.t == r * a * (m // block)


@st.composite
def random_sizes(draw):
    r = draw(st.integers(1, 5))
    s = draw(st.integers(2, 200))
    g = s // math.gcd(r, s)
    lo = -(-s // g)
    hi = 10_000 // g
    return draw(st.integers(lo, hi)) * g, r, s


@settings(max_examples=200, deadline=None)
@given(random_sizes(), st.integers(0, 2**32 - 1))
def test_random_design_invariants(sizes, seed):
    m, r, s = sizes
    d = random_regular_design(m, r, s, seed=seed)
    d.validate()
    assert d.t * s == m * r


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 100).flatmap(lambda s: st.tuples(st.just(s), st.integers(1, 10_000 // (s * s)))))
def test_grid_invariants(args):
    s, blocks = args
    d = grid_design(blocks * s * s, s)
    d.validate()
    assert d.t == 2 * s * blocks


def test_build_design_dispatch():
    assert build_design(DesignParams.individual(), 5).t == 5
    assert build_design(DesignParams.grid(3), 9).t == 6
    assert build_design(DesignParams.hypercube(3, 2), 16).t == 12
    build_design(DesignParams.random_regular(2, 4), 20, seed=1).validate()


def test_design_csv_ordering():
    buf = io.StringIO()
    write_design_csv(grid_design(4, 2), buf)
    assert buf.getvalue() == "pool,individual\n0,0\n0,1\n1,2\n1,3\n2,0\n2,2\n3,1\n3,3\n"


# --- block code ---------------------------------------------------------------


def test_codeword_examples():
    code = saffron_block_code(8)
    assert code.l == 3 and code.tests == 6
    assert code.codeword(5) == "101010"
    assert code.codeword(3) == "011100"
    assert code.codeword(4) == "100011"
    one_bit = saffron_block_code(2)
    assert one_bit.codeword(0) == "01" and one_bit.codeword(1) == "10"


@pytest.mark.parametrize("block", [2, 4, 8, 16, 32, 64])
def test_codeword_structure(block):
    code = saffron_block_code(block)
    l = code.l
    for i in range(block):
        word = code.codeword(i)
        assert word.count("1") == l
        assert word[:l] == format(i, f"0{l}b")
        assert all(a != b for a, b in zip(word[:l], word[l:]))
    for i, j in itertools.combinations(range(block), 2):
        assert int((code.codewords[i] | code.codewords[j]).sum()) > l


def test_or_of_three_and_four():
    code = saffron_block_code(8)
    assert saffron_outcomes(code, [3, 4]).tolist() == [1, 1, 1, 1, 1, 1]


def test_decode_examples():
    code = saffron_block_code(8)
    assert saffron_decode(code, [0] * 6).outcome is Outcome.CLEAN
    found = saffron_decode(code, [1, 0, 1, 0, 1, 0])
    assert found.outcome is Outcome.FOUND and found.index == 5
    assert saffron_decode(code, [1, 1, 1, 1, 0, 0]).outcome is Outcome.TOO_MANY
    # weight l but not a codeword
    assert saffron_decode(code, [1, 1, 0, 1, 0, 0]).outcome is Outcome.TOO_MANY


def test_decode_rejects_bad_input():
    code = saffron_block_code(4)
    with pytest.raises(ParameterError):
        saffron_decode(code, [0, 1, 0])
    with pytest.raises(ParameterError):
        saffron_decode(code, [0, 2, 0, 1])


@pytest.mark.parametrize("block", [3, 6, 1000])
def test_code_requires_power_of_two(block):
    with pytest.raises(ParameterError, match="pad"):
        saffron_block_code(block)


def test_next_power_of_two():
    assert [next_power_of_two(x) for x in (1, 2, 3, 1000, 1024, 1025)] == [2, 2, 4, 1024, 1024, 2048]


@pytest.mark.parametrize("block", [2, 4, 8, 16, 32])
def test_vectorised_decoder_matches_scalar_on_every_word(block):
    code = saffron_block_code(block)
    l = code.l
    words = np.arange(1 << (2 * l), dtype=np.uint64)
    status, index = decode_words(l, words)
    names = {0: Outcome.CLEAN, 1: Outcome.FOUND, 2: Outcome.TOO_MANY}
    for w, st_, idx in zip(words.tolist(), status.tolist(), index.tolist()):
        bits = [int(b) for b in format(w, f"0{2 * l}b")]
        res = saffron_decode(code, bits)
        assert res.outcome is names[st_]
        if res.outcome is Outcome.FOUND:
            assert res.index == idx


def test_word_integers_match_bit_rows():
    code = saffron_block_code(16)
    for i in range(16):
        assert int(code.words[i]) == int(code.codeword(i), 2)


def test_code_csv():
    buf = io.StringIO()
    write_code_csv(saffron_block_code(2), buf)
    assert buf.getvalue() == "individual,codeword\n0,01\n1,10\n"
