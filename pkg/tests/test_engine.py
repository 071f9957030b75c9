import cmath
import math
from fractions import Fraction

import pytest

from zetawb.catalog import OrbitCatalog, OrbitInstance, PrimeOrbit
from zetawb.engine import (MockDeterminantPoly, TruncationPolicy,
                           alternating_product_log, chi_ell,
                           dyn_determinant_log, flat_trace,
                           mock_determinant_log, natural_trace_check,
                           ruelle_log, ruelle_log_derivative, selberg_log)
from zetawb.errors import EvaluationError, ParameterError
from zetawb.linalg_ext import SmallMatrix

MU = (3 + math.sqrt(5)) / 2
H = math.log(MU)
POL14 = TruncationPolicy(t_max=14.0)
POL12 = TruncationPolicy(t_max=12.0)


def n_counts(n_max):
    """Exact N_n = mu^n + mu^-n - 2 via the integer trace recurrence."""
    traces = {0: 2, 1: 3}
    for n in range(2, n_max + 1):
        traces[n] = 3 * traces[n - 1] - traces[n - 2]
    return {n: traces[n] - 2 for n in range(1, n_max + 1)}


def empty_catalog():
    return OrbitCatalog((), 3, 1, 1, 10.0, {"kind": "synthetic"})


def single_orbit_catalog(length=1.0, expansion=math.e):
    lin = SmallMatrix.diagonal([expansion, 1.0 / expansion])
    orbit = PrimeOrbit(length, "syn", lin, +1, 1)
    return OrbitCatalog((orbit,), 3, 1, 1, 100.0, {"kind": "synthetic"})


def test_policy_validation(cat6):
    with pytest.raises(ParameterError):
        TruncationPolicy(t_max=0.0)
    with pytest.raises(ParameterError):
        TruncationPolicy(t_max=1.0, n_max=0)
    policy = TruncationPolicy(t_max=8.0)
    with pytest.raises(ParameterError):
        policy.check_catalog(cat6)  # t_complete = 6 < 8
    TruncationPolicy(t_max=8.0, allow_partial=True).check_catalog(cat6)


def test_ruelle_log_empty_and_nan():
    assert ruelle_log(empty_catalog(), 1.5 + 0j, TruncationPolicy(5.0)) == 0j
    with pytest.raises(ParameterError):
        ruelle_log(empty_catalog(), complex(float("nan"), 0),
                   TruncationPolicy(5.0))


def test_ruelle_log_closed_form(cat14):
    x = math.exp(-1.5)
    closed = math.log((1 - x) ** 2 / ((1 - MU * x) * (1 - x / MU)))
    value = ruelle_log(cat14, 1.5 + 0j, POL14)
    assert value.imag == 0.0
    assert value.real == pytest.approx(closed, abs=1e-3)


def test_ruelle_log_matches_truncated_euler_product(cat6):
    policy = TruncationPolicy(t_max=6.0)
    value = ruelle_log(cat6, 1.2 + 0.4j, policy)
    product = 1.0 + 0.0j
    for orbit in cat6.orbits:
        m = 1
        while m * orbit.length <= 6.0:
            product *= cmath.exp(cmath.exp(-(1.2 + 0.4j) * m * orbit.length)
                                 / m)
            m += 1
    assert value == pytest.approx(cmath.log(product), abs=1e-12)


def test_ruelle_truncation_tail_bound(cat14):
    x = math.exp(-1.5)
    closed = math.log((1 - x) ** 2 / ((1 - MU * x) * (1 - x / MU)))
    for t_max in range(8, 15):
        policy = TruncationPolicy(t_max=float(t_max))
        value = ruelle_log(cat14, 1.5 + 0j, policy).real
        tail = sum(r ** (t_max + 1) / ((t_max + 1) * (1 - r))
                   for r in (MU * x, x / MU)) + \
            2 * x ** (t_max + 1) / ((t_max + 1) * (1 - x))
        assert abs(value - closed) <= tail * 1.0000001


def test_dyn_determinant_grouped_oracle(cat14):
    z = 1.5
    counts = n_counts(14)
    oracle = -math.fsum((counts[n] + 2) * math.exp(-z * n) / n
                        for n in range(1, 15))
    value = dyn_determinant_log(cat14, 1, complex(z), POL14)
    assert value.real == pytest.approx(oracle, rel=1e-12)
    assert value.imag == 0.0
    # degree 0: chi_0 = 1/N_n, and the instance weights sum to N_n/n,
    # so the degree-0 determinant collapses to the plain -sum x^n / n
    oracle0 = -math.fsum(math.exp(-z * n) / n for n in range(1, 15))
    value0 = dyn_determinant_log(cat14, 0, complex(z), POL14)
    assert value0.real == pytest.approx(oracle0, rel=1e-12)
    with pytest.raises(ParameterError):
        dyn_determinant_log(cat14, 3, complex(z), POL14)


def test_alternating_product_matches_zeta(cat14, fib12):
    for catalog, policy in ((cat14, POL12), (fib12, POL12)):
        for z in (1.5 + 0j, 1.1 + 0.7j):
            zeta = ruelle_log(catalog, z, policy)
            alt = alternating_product_log(catalog, z, policy)
            assert abs(alt - zeta) <= 1e-12 * (1 + abs(zeta))


def test_alternating_product_single_orbit_exact():
    cat = single_orbit_catalog()
    policy = TruncationPolicy(t_max=3.5)
    zeta = ruelle_log(cat, 2.0 + 0j, policy)
    alt = alternating_product_log(cat, 2.0 + 0j, policy)
    assert abs(alt - zeta) <= 1e-15


def test_chi_ell_exact_values(cat14):
    counts = n_counts(14)
    one = next(o for o in cat14.orbits if o.base_period == 1)
    chi1 = chi_ell(OrbitInstance(one, 1), 1, 1)
    assert chi1 == Fraction(3, 1)  # exact rational
    chi1_m3 = chi_ell(OrbitInstance(one, 3), 1, 1)
    assert chi1_m3 == Fraction(18, 16)
    three = next(o for o in cat14.orbits if o.base_period == 3)
    assert chi_ell(OrbitInstance(three, 1), 0, 1) == Fraction(1, 16)
    assert counts[3] == 16


def test_flat_trace_closed_form(cat14):
    x = math.exp(-1.5)
    closed = MU * x / (1 - MU * x) + (x / MU) / (1 - x / MU)
    value = flat_trace(cat14, 1, 1.5 + 0j, 1, 0.0, POL14)
    assert value.real == pytest.approx(closed, abs=1e-3)
    assert value.real == pytest.approx(1.4979, abs=1e-3)


def test_flat_trace_edge_cases(cat6):
    policy = TruncationPolicy(t_max=6.0)
    assert flat_trace(empty_catalog(), 1, 1.5 + 0j, 2, 0.0,
                      TruncationPolicy(5.0)) == 0j
    assert flat_trace(cat6, 1, 1.5 + 0j, 1, 6.5, policy) == 0j
    with pytest.raises(EvaluationError):
        flat_trace(cat6, 1, 1.5 + 0j, 1, 3.0 + 1e-14, policy)
    with pytest.raises(ParameterError):
        flat_trace(cat6, 1, 1.5 + 0j, 0, 0.0, policy)


def test_mock_determinant_series(cat14):
    policy = TruncationPolicy(t_max=14.0, n_max=30)
    assert mock_determinant_log(cat14, 1, 0j, 1.5 + 0j, policy) == 0j
    xi = complex(H + 1.0)
    z = complex(H + 0.8)
    lhs = mock_determinant_log(cat14, 1, xi - z, xi, policy)
    rhs = (dyn_determinant_log(cat14, 1, z, policy)
           - dyn_determinant_log(cat14, 1, xi, policy))
    assert abs(lhs - rhs) <= 1e-10
    # shared accumulator: the series rebuilt from flat_trace is bitwise
    rebuilt = []
    power = 1.0 + 0.0j
    for n in range(1, policy.n_max + 1):
        power *= (xi - z)
        rebuilt.append(-(power / n) * flat_trace(cat14, 1, xi, n, 0.0, policy))
    assert complex(math.fsum(t.real for t in rebuilt),
                   math.fsum(t.imag for t in rebuilt)) == lhs


def test_flat_trace_factorial_scaling_shares_sums(cat6):
    # (n-1)! * flat_trace(n) is the raw power sum S_n; with n=1 they match
    policy = TruncationPolicy(t_max=6.0)
    ft1 = flat_trace(cat6, 1, 2.0 + 0j, 1, 0.0, policy)
    ft2 = flat_trace(cat6, 1, 2.0 + 0j, 2, 0.0, policy)
    assert math.isfinite(ft2.real)
    assert ft1 != ft2


def test_natural_trace_identity(cat14):
    policy = POL12
    z = 1.5 + 0j
    rhs = abs(flat_trace(cat14, 1, z, 4, 0.0, policy))
    assert natural_trace_check(cat14, 1, z, 3, policy,
                               route="analytic") <= 1e-12 * max(1.0, rhs)
    assert natural_trace_check(cat14, 1, z, 3, policy,
                               route="quadrature") <= 1e-8 * max(1.0, rhs)


def test_natural_trace_single_orbit():
    cat = single_orbit_catalog()
    policy = TruncationPolicy(t_max=1.5)
    assert natural_trace_check(cat, 1, 2.0 + 0j, 2, policy,
                               route="analytic") <= 1e-15


def test_periodicity_bitwise(cat14):
    two_pi = 2.0 * math.pi
    for z in (1.5 + 0j, 2.0 + 0.25j):
        zs = complex(z.real, z.imag + two_pi)
        assert ruelle_log(cat14, z, POL14) == ruelle_log(cat14, zs, POL14)
        assert dyn_determinant_log(cat14, 1, z, POL14) == \
            dyn_determinant_log(cat14, 1, zs, POL14)
        assert flat_trace(cat14, 1, z, 3, 0.0, POL14) == \
            flat_trace(cat14, 1, zs, 3, 0.0, POL14)


def test_conjugation_symmetry(cat14, ptorus5):
    z = 1.4 + 0.6j
    assert ruelle_log(cat14, z.conjugate(), POL14) == \
        ruelle_log(cat14, z, POL14).conjugate()
    assert flat_trace(cat14, 1, z.conjugate(), 2, 0.0, POL14) == \
        flat_trace(cat14, 1, z, 2, 0.0, POL14).conjugate()
    policy = TruncationPolicy(t_max=10.0, allow_partial=True)
    assert selberg_log(ptorus5, z.conjugate(), 10, policy) == \
        selberg_log(ptorus5, z, 10, policy).conjugate()


def test_ruelle_derivative_analytic(cat6):
    policy = TruncationPolicy(t_max=6.0)
    z = 1.6 + 0.2j
    h = 1e-6
    fd = (ruelle_log(cat6, z + h, policy)
          - ruelle_log(cat6, z - h, policy)) / (2 * h)
    exact = ruelle_log_derivative(cat6, z, policy)
    assert exact == pytest.approx(fd, rel=1e-8)


def test_selberg_examples(ptorus5):
    policy = TruncationPolicy(t_max=14.0, allow_partial=True)
    assert selberg_log(empty_catalog(), 2.0 + 0j, 5,
                       TruncationPolicy(5.0)) == 0j
    single = single_orbit_catalog()
    value = selberg_log(single, 3.0 + 0j, 0, TruncationPolicy(2.0))
    assert value == pytest.approx(cmath.log(1 - math.exp(-3.0)), abs=1e-15)
    resid = abs(ruelle_log(ptorus5, 2.5 + 0j, policy)
                + selberg_log(ptorus5, 2.5 + 0j, 40, policy)
                - selberg_log(ptorus5, 3.5 + 0j, 40, policy))
    assert resid <= 1e-8


def test_selberg_guards(fib12, cat6):
    policy = TruncationPolicy(t_max=6.0)
    with pytest.raises(ParameterError):
        selberg_log(fib12, 2.0 + 0j, 5,
                    TruncationPolicy(t_max=12.0))  # mixed orientations
    single = single_orbit_catalog()
    with pytest.raises(EvaluationError):
        selberg_log(single, 1e-15 + 0j, 0, TruncationPolicy(2.0))
    with pytest.raises(ParameterError):
        selberg_log(cat6, 2.0 + 0j, -1, policy)


def test_mock_poly_consistent_with_log_series(cat14):
    policy = TruncationPolicy(t_max=14.0, n_max=20)
    xi = complex(H + 1.0)
    poly = MockDeterminantPoly(cat14, 1, xi, policy)
    for z in (xi - 0.15, xi - 0.3 + 0.1j):
        series = cmath.exp(mock_determinant_log(cat14, 1, xi - z, xi, policy))
        assert poly.value(z) == pytest.approx(series, rel=1e-8)
    h = 1e-6
    z0 = xi - 0.2 + 0.05j
    fd = (poly.value(z0 + h) - poly.value(z0 - h)) / (2 * h)
    assert poly.derivative(z0) == pytest.approx(fd, rel=1e-7)


def test_monotone_truncation_cauchy(cat14):
    # increasing t_max: successive differences shrink geometrically
    z = H + 0.5
    values = [ruelle_log(cat14, complex(z), TruncationPolicy(float(t))).real
              for t in range(8, 15)]
    diffs = [abs(values[i + 1] - values[i]) for i in range(len(values) - 1)]
    rate = math.exp(-(z - H))
    for i in range(len(diffs) - 1):
        assert diffs[i + 1] <= diffs[i] * rate * 1.5


def test_alternating_flat_traces_give_zeta_derivative(cat6):
    # sum_l (-1)^(l + d_s + 1) tr(R(z)) over degrees equals d/dz of the
    # zeta log: per instance the degree sum telescopes to -lambda e^{-z
    # lambda}/m, the derivative's term
    policy = TruncationPolicy(t_max=6.0)
    z = 1.4 + 0.5j
    total = 0j
    for ell in range(cat6.d):
        sign = -1.0 if (ell + cat6.d_s + 1) % 2 else 1.0
        total += sign * flat_trace(cat6, ell, z, 1, 0.0, policy)
    deriv = ruelle_log_derivative(cat6, z, policy)
    assert abs(total - deriv) <= 1e-12 * (1.0 + abs(deriv))


def test_selberg_derivative_analytic(ptorus5):
    from zetawb.engine import selberg_log_derivative
    policy = TruncationPolicy(t_max=10.0, allow_partial=True)
    z = 2.2 + 0.3j
    h = 1e-6
    fd = (selberg_log(ptorus5, z + h, 10, policy)
          - selberg_log(ptorus5, z - h, 10, policy)) / (2 * h)
    exact = selberg_log_derivative(ptorus5, z, 10, policy)
    assert exact == pytest.approx(fd, rel=1e-7)
