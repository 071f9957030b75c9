import math
import random
from fractions import Fraction

import pytest

from zetawb.catalog import RoofFunction, catalog_to_json
from zetawb.errors import ModelError, ParameterError, TruncationError
from zetawb.sources.toral import (smith_normal_form, toral_periodic_points,
                                  toral_suspension_catalog,
                                  validate_toral_matrix)

CAT = [[2, 1], [1, 1]]
FIB = [[1, 1], [1, 0]]
MU = (3 + math.sqrt(5)) / 2


def brute_force_periodic_count(matrix, n):
    """Independent lattice oracle: scan all q^2 candidate rationals."""
    a, b = matrix[0]
    c, d = matrix[1]
    pn = [[a, b], [c, d]]
    for _ in range(n - 1):
        pn = [[pn[0][0] * a + pn[0][1] * c, pn[0][0] * b + pn[0][1] * d],
              [pn[1][0] * a + pn[1][1] * c, pn[1][0] * b + pn[1][1] * d]]
    l00, l01 = pn[0][0] - 1, pn[0][1]
    l10, l11 = pn[1][0], pn[1][1] - 1
    q = abs(l00 * l11 - l01 * l10)
    count = 0
    for i in range(q):
        for j in range(q):
            if (l00 * i + l01 * j) % q == 0 and (l10 * i + l11 * j) % q == 0:
                count += 1
    return count


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


def test_matrix_validation():
    validate_toral_matrix(CAT)
    validate_toral_matrix(FIB)
    with pytest.raises(ModelError):
        validate_toral_matrix([[1, 1], [0, 1]])     # parabolic
    with pytest.raises(ModelError):
        validate_toral_matrix([[2, 0], [0, 2]])     # det 4
    with pytest.raises(ModelError):
        validate_toral_matrix([[0, 1], [-1, 0]])    # elliptic, det 1
    with pytest.raises(ModelError):
        validate_toral_matrix([[1.0, 1.0], [1.0, 0.0]])  # non-integer


def test_smith_normal_form_random():
    rng = random.Random(3)
    for _ in range(200):
        mat = [[rng.randint(-20, 20) for _ in range(2)] for _ in range(2)]
        if mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0] == 0:
            continue
        u, d, v = smith_normal_form(mat)

        def mul(x, y):
            return [[sum(x[i][k] * y[k][j] for k in range(2))
                     for j in range(2)] for i in range(2)]

        assert mul(mul(u, mat), v) == d
        assert d[0][1] == d[1][0] == 0
        assert d[0][0] > 0 and d[1][1] % d[0][0] == 0
        assert abs(u[0][0] * u[1][1] - u[0][1] * u[1][0]) == 1
        assert abs(v[0][0] * v[1][1] - v[0][1] * v[1][0]) == 1


def test_periodic_points_counts_and_oracle():
    assert toral_periodic_points(CAT, 1) == [(Fraction(0), Fraction(0))]
    counts = [len(toral_periodic_points(CAT, n)) for n in range(1, 7)]
    assert counts == [1, 5, 16, 45, 121, 320]
    for n in range(1, 5):
        assert counts[n - 1] == brute_force_periodic_count(CAT, n)
    # closed form mu^n + mu^-n - 2
    for n, count in enumerate(counts, start=1):
        assert count == round(MU ** n + MU ** (-n) - 2)


def test_periodic_points_are_fixed_and_exact():
    pts = toral_periodic_points(CAT, 3)
    for x1, x2 in pts:
        y1 = 2 * x1 + x2
        y2 = x1 + x2
        for _ in range(2):
            y1, y2 = 2 * y1 + y2, y1 + y2
        assert (y1 - x1).denominator == 1 and (y2 - x2).denominator == 1


def test_prime_counts_and_bookkeeping(cat14):
    by_period = {}
    for orbit in cat14.orbits:
        by_period[orbit.base_period] = by_period.get(orbit.base_period, 0) + 1
    n_counts = {n: len(toral_periodic_points(CAT, n)) for n in range(1, 9)}
    for n in range(1, 9):
        mob = sum(mobius(n // d) * n_counts[d]
                  for d in range(1, n + 1) if n % d == 0) // n
        assert by_period[n] == mob
        assert sum(d * by_period[d]
                   for d in range(1, n + 1) if n % d == 0) == n_counts[n]
    assert [by_period[n] for n in range(1, 7)] == [1, 2, 5, 10, 24, 50]
    assert by_period[6] == (320 - 16 - 5 + 1) // 6


def test_constant_roof_lengths_exact(cat6):
    for orbit in cat6.orbits:
        assert orbit.length == float(orbit.base_period)
    assert cat6.t_complete == 6.0
    assert cat6.lattice_delta == 1.0


def test_words_are_least_points(cat6):
    for orbit in cat6.orbits[:20]:
        parts = orbit.word.split(",")
        nums = [Fraction(p) for p in parts]
        # iterate the orbit and confirm the stored point is the least
        x1, x2 = nums
        best = (x1, x2)
        for _ in range(orbit.base_period - 1):
            x1, x2 = (2 * x1 + x2) % 1, (x1 + x2) % 1
            best = min(best, (x1, x2))
        assert best == tuple(nums)


def test_fibonacci_orientations(fib12):
    seen = {}
    for orbit in fib12.orbits:
        seen.setdefault(orbit.base_period, set()).add(orbit.orientation)
    for n, signs in seen.items():
        assert signs == {(-1) ** n}
    assert {+1, -1} == {o.orientation for o in fib12.orbits}


def test_mixing_roof_birkhoff_sum_oracle(mixing16):
    # recompute one period-3 orbit length by exact rational stepping
    roof_orbits = [o for o in mixing16.orbits if o.base_period == 3]
    orbit = roof_orbits[0]
    x1, x2 = [Fraction(p) for p in orbit.word.split(",")]
    terms = []
    for _ in range(3):
        terms.append(1.0 + 0.3 * math.cos(2 * math.pi * (x1 % 1)))
        x1, x2 = (2 * x1 + x2) % 1, (x1 + x2) % 1
    assert orbit.length == pytest.approx(math.fsum(terms), abs=1e-12)
    assert mixing16.t_complete == pytest.approx(16 * 0.7)
    assert mixing16.lattice_delta is None


def test_thread_count_does_not_change_bytes():
    roof = RoofFunction.trig(1.0, {(1, 0): 0.3})
    texts = [catalog_to_json(toral_suspension_catalog(CAT, roof, 7,
                                                      threads=t))
             for t in (1, 2, 8)]
    assert texts[0] == texts[1] == texts[2]


def test_overflow_guard():
    with pytest.raises(TruncationError):
        toral_periodic_points(CAT, 50)


def test_bad_parameters():
    with pytest.raises(ParameterError):
        toral_periodic_points(CAT, 0)
    with pytest.raises(ParameterError):
        toral_suspension_catalog(CAT, RoofFunction.constant(1.0), 0)
