import math

import numpy as np
import pytest

from zetawb.catalog import catalog_validate
from zetawb.errors import ModelError, ParameterError
from zetawb.linalg_ext import SmallMatrix
from zetawb.sources.sft import sft_catalog

FULL2 = [[1, 1], [1, 1]]
GOLDEN = [[1, 1], [1, 0]]


def mobius(n):
    result, m = 1, n
    p = 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            result = -result
        p += 1
    if m > 1:
        result = -result
    return result


def lyndon_count_full_shift(n, k):
    """Necklace/Mobius oracle: (1/n) sum_{d|n} mobius(d) k^(n/d)."""
    return sum(mobius(d) * k ** (n // d)
               for d in range(1, n + 1) if n % d == 0) // n


def trace_oracle_prime_cycles(adjacency, n_max):
    """Prime-cycle counts from traces of adjacency powers + Mobius."""
    adj = np.array(adjacency, dtype=np.int64)
    traces = {}
    power = np.eye(len(adj), dtype=np.int64)
    for n in range(1, n_max + 1):
        power = power @ adj
        traces[n] = int(np.trace(power))
    counts = {}
    for n in range(1, n_max + 1):
        counts[n] = sum(mobius(n // d) * traces[d]
                        for d in range(1, n + 1) if n % d == 0) // n
    return counts


def test_full_shift_lyndon_counts():
    cat = sft_catalog(FULL2, n_max=4)
    by_len = {}
    for orbit in cat.orbits:
        by_len[orbit.base_period] = by_len.get(orbit.base_period, 0) + 1
    assert [by_len.get(n, 0) for n in range(1, 5)] == [2, 1, 2, 3]
    for n in range(1, 5):
        assert by_len[n] == lyndon_count_full_shift(n, 2)
    assert len(cat) == 8


def test_full_shift_larger_alphabet_oracle():
    k = 3
    adj = [[1] * k for _ in range(k)]
    cat = sft_catalog(adj, n_max=5)
    by_len = {}
    for orbit in cat.orbits:
        by_len[orbit.base_period] = by_len.get(orbit.base_period, 0) + 1
    for n in range(1, 6):
        assert by_len[n] == lyndon_count_full_shift(n, k)


def test_roof_additivity():
    cat = sft_catalog(FULL2, roof={0: math.log(2), 1: math.log(3)}, n_max=2)
    orbit = next(o for o in cat.orbits if o.word == "01")
    assert orbit.length == pytest.approx(math.log(6), abs=1e-15)


def test_golden_mean_counts_vs_trace_oracle():
    cat = sft_catalog(GOLDEN, n_max=5)
    by_len = {}
    for orbit in cat.orbits:
        by_len[orbit.base_period] = by_len.get(orbit.base_period, 0) + 1
    oracle = trace_oracle_prime_cycles(GOLDEN, 5)
    assert [by_len.get(n, 0) for n in range(1, 6)] == [1, 1, 1, 1, 2]
    for n in range(1, 6):
        assert by_len.get(n, 0) == oracle[n]
    assert all(o.word != "11"[:len(o.word)] or "11" not in o.word * 2
               for o in cat.orbits)


def test_reducible_adjacency_rejected():
    with pytest.raises(ModelError):
        sft_catalog([[1, 1], [0, 1]], n_max=2)
    with pytest.raises(ModelError):
        sft_catalog([[1, 0], [0, 1]], n_max=2)


def test_default_cocycle_structure():
    cat = sft_catalog(FULL2, n_max=3, expansion=2.0)
    assert (cat.d, cat.d_s, cat.d_u) == (3, 1, 1)
    for orbit in cat.orbits:
        rows = orbit.linearization.rows
        assert rows[0][0] == pytest.approx(2.0 ** orbit.base_period)
        assert rows[1][1] == pytest.approx(0.5 ** orbit.base_period)
        assert orbit.orientation == +1
    assert cat.lattice_delta == 1.0
    assert catalog_validate(cat).ok


def test_custom_cocycle_and_rejection():
    expand = SmallMatrix([[3.0, 0.0], [0.0, 1.0 / 3.0]])
    rotate = SmallMatrix([[0.0, -1.0], [1.0, 0.0]])  # elliptic cycle product
    cocycle = {(0, 0): expand, (0, 1): expand, (1, 0): expand, (1, 1): rotate}
    with pytest.warns(UserWarning, match="not hyperbolic"):
        cat = sft_catalog(FULL2, cocycle=cocycle, n_max=2)
    # the pure-1 fixed point is rejected, the rest survive
    assert all(o.word != "1" for o in cat.orbits)
    assert any(o.word == "0" for o in cat.orbits)
    assert any(o.word == "01" for o in cat.orbits)


def test_roof_validation_errors():
    with pytest.raises(ParameterError):
        sft_catalog(FULL2, roof={0: 1.0}, n_max=2)          # missing symbol
    with pytest.raises(ParameterError):
        sft_catalog(FULL2, roof={0: 1.0, 1: -2.0}, n_max=2)  # negative
    with pytest.raises(ParameterError):
        sft_catalog(FULL2, n_max=0)


def test_t_complete_scaling():
    cat = sft_catalog(FULL2, roof={0: 0.5, 1: 2.0}, n_max=4)
    assert cat.t_complete == pytest.approx(4 * 0.5)
    assert cat.lattice_delta is None
