"""Truncated zeta functions, dynamical determinants and flat traces.

Every quantity here is a finite sum over orbit *instances*: pairs
(prime orbit, repetition m) with total length m * lambda_p <= t_max.
The instance weights are

    chi_l = tr(wedge^l M^m) / (eps(M^m) * |det(I - M^m)|),

with M the prime linearization and eps the stable-bundle orientation of
the power.  Exact linearizations are powered and minored exactly and
rounded once, at table-build time.

Numerical policy:

* every sum is evaluated with ``math.fsum`` (exact compensated
  summation) over instances sorted by (length, word, repetition) --
  results are deterministic bitwise, independent of thread count;
* log-of-product quantities are computed as sums of logs/series terms
  and never by exponentiating and re-logging;
* z-derivatives are analytic (the length-multiplied term sums), never
  finite differences;
* catalogs whose lengths all sit on an exact lattice k * delta
  (constant-roof suspensions) get their imaginary part reduced modulo
  2*pi/delta before exponentiation, which makes the mathematical
  periodicity z -> z + 2*pi*i/delta hold bitwise.

Quoted tolerances assume double precision and t_max <= 16; beyond that
``condition_scale`` grows and callers should widen acceptance bands
accordingly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import OrbitCatalog
from .errors import EvaluationError, ParameterError
from .linalg_ext import det_one_minus, exterior_trace, orientation_sign

TWO_PI = 2.0 * math.pi


def _require_finite(z: complex, name: str = "z") -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParameterError(f"{name} must be finite, got {z!r}")
    return z


@dataclass(frozen=True)
class TruncationPolicy:
    """Finite truncation realizing 'Re(z) large enough' convergence.

    t_max          length cutoff: instances with m * lambda_p <= t_max enter
    n_max          series depth for mock determinants / trace polynomials
    abs_tol        summation tolerance target (reported, fsum beats it)
    allow_partial  permit t_max beyond the catalog's certified threshold
    """

    t_max: float
    n_max: int = 30
    abs_tol: float = 1e-12
    allow_partial: bool = False

    def __post_init__(self):
        if not self.t_max > 0:
            raise ParameterError("t_max must be positive")
        if self.n_max < 1:
            raise ParameterError("n_max must be >= 1")

    def check_catalog(self, catalog: OrbitCatalog) -> None:
        if not self.allow_partial and self.t_max > catalog.t_complete:
            raise ParameterError(
                f"t_max {self.t_max} exceeds certified completeness "
                f"{catalog.t_complete}; set allow_partial to override")

    def condition_scale(self) -> float:
        """Growth factor for quoted tolerances when t_max exceeds 16."""
        return max(1.0, math.exp(self.t_max - 16.0))


class InstanceTable:
    """Flattened, length-sorted arrays of all instances below t_max.

    chi has one row per degree l = 0..d-1.  Built once per
    (catalog, policy truncation) and cached on the catalog.
    """

    def __init__(self, catalog: OrbitCatalog, policy: TruncationPolicy):
        policy.check_catalog(catalog)
        d = catalog.d
        records = []
        memo = {}
        for orbit in catalog.orbits:
            if orbit.length > policy.t_max:
                break  # catalog is length-sorted
            m = 1
            while m * orbit.length <= policy.t_max:
                key = (orbit.linearization.key(), m)
                if key not in memo:
                    power = orbit.linearization.power(m)
                    eps = orientation_sign(power, catalog.d_s)
                    den = abs(det_one_minus(power))
                    chis = tuple(
                        float(exterior_trace(power, l)) / (eps * float(den))
                        for l in range(d))
                    memo[key] = (chis, eps)
                chis, eps = memo[key]
                records.append((m * orbit.length, orbit.word, m, chis, eps))
                m += 1
        records.sort(key=lambda r: (r[0], r[1], r[2]))
        n = len(records)
        self.lam = np.array([r[0] for r in records], dtype=float)
        self.mu = np.array([r[2] for r in records], dtype=float)
        self.eps = np.array([r[4] for r in records], dtype=np.int8)
        self.chi = np.array([[r[3][l] for r in records] for l in range(d)],
                            dtype=float) if n else np.zeros((d, 0))
        self.inv_mu = 1.0 / self.mu if n else np.zeros(0)
        self.d = d
        self.d_s = catalog.d_s
        self.t_max = policy.t_max
        self.lattice_delta = catalog.lattice_delta
        self.n_instances = n
        self._ft_cache = {}

    # -- helpers -------------------------------------------------------

    def reduce_z(self, z: complex) -> complex:
        """Exact-lattice reduction of Im(z) modulo 2*pi/delta.

        Only valid for kernels in exp(-z * lambda) with lambda = k*delta;
        shifts the imaginary part by an exact multiple of the catalog's
        imaginary period, which changes nothing mathematically and makes
        the periodicity bitwise.
        """
        if self.lattice_delta is None:
            return z
        period = TWO_PI / self.lattice_delta
        k = round(z.imag / period)
        if k == 0:
            return z
        return complex(z.real, z.imag - k * period)

    def _csum(self, re_terms, im_terms) -> complex:
        return complex(math.fsum(re_terms), math.fsum(im_terms))

    def _exp_terms(self, z: complex, base: np.ndarray):
        """(cos, sin, amp) arrays for exp(-z * base)."""
        amp = np.exp(-z.real * base)
        phase = z.imag * base
        return np.cos(phase) * amp, -np.sin(phase) * amp


def instance_table(catalog: OrbitCatalog, policy: TruncationPolicy) -> InstanceTable:
    key = ("instance_table", policy.t_max, policy.allow_partial)
    table = catalog._caches.get(key)
    if table is None:
        table = InstanceTable(catalog, policy)
        catalog._caches[key] = table
    return table


# ---------------------------------------------------------------------------
# Euler-product side


def ruelle_log(catalog: OrbitCatalog, z: complex, policy: TruncationPolicy) -> complex:
    """Truncated log of the Ruelle zeta: sum of exp(-z m lambda_p) / m.

    Identical to the log of the truncated Euler product over the same
    instances; exposed in log form to stay branch-cut free.
    """
    z = _require_finite(z)
    t = instance_table(catalog, policy)
    if t.n_instances == 0:
        return 0.0 + 0.0j
    zr = t.reduce_z(z)
    c, s = t._exp_terms(zr, t.lam)
    return t._csum(c * t.inv_mu, s * t.inv_mu)


def ruelle_log_derivative(catalog, z, policy) -> complex:
    """d/dz of ruelle_log: -sum lambda exp(-z lambda) / m (analytic)."""
    z = _require_finite(z)
    t = instance_table(catalog, policy)
    if t.n_instances == 0:
        return 0.0 + 0.0j
    zr = t.reduce_z(z)
    c, s = t._exp_terms(zr, t.lam)
    w = t.lam * t.inv_mu
    return -t._csum(c * w, s * w)


def dyn_determinant_log(catalog, ell: int, z, policy) -> complex:
    """Truncated log of the degree-ell dynamical determinant:
    -sum chi_l(instance) exp(-z lambda) / m."""
    z = _require_finite(z)
    t = instance_table(catalog, policy)
    if not 0 <= ell <= t.d - 1:
        raise ParameterError(f"ell={ell} outside 0..{t.d - 1}")
    if t.n_instances == 0:
        return 0.0 + 0.0j
    zr = t.reduce_z(z)
    c, s = t._exp_terms(zr, t.lam)
    w = t.chi[ell] * t.inv_mu
    return -t._csum(c * w, s * w)


def alternating_product_log(catalog, z, policy) -> complex:
    """sum_l (-1)**(l + d_s + 1) log D_l(z); per instance this telescopes
    to the plain zeta term, so the value reproduces ruelle_log up to
    per-instance rounding."""
    t = instance_table(catalog, policy)
    total = 0.0 + 0.0j
    for ell in range(t.d):
        sign = -1.0 if (ell + t.d_s + 1) % 2 else 1.0
        total += sign * dyn_determinant_log(catalog, ell, z, policy)
    return total


def flat_trace(catalog, ell: int, z, n: int, s: float = 0.0,
               policy: TruncationPolicy = None) -> complex:
    """Orbit-sum value of the regularized trace of the n-th resolvent
    power (composed with time-s flow transport when s > 0):

        (1/(n-1)!) sum_{s < lambda <= t_max}
            chi_l * lambda * (lambda - s)^(n-1) * exp(-z (lambda-s)) / m.

    s must stay clear of every instance length (the value jumps there).
    """
    z = _require_finite(z)
    if n < 1:
        raise ParameterError("n must be >= 1")
    if s < 0:
        raise ParameterError("s must be >= 0")
    t = instance_table(catalog, policy)
    if not 0 <= ell <= t.d - 1:
        raise ParameterError(f"ell={ell} outside 0..{t.d - 1}")
    key = ("ft", ell, complex(z), n, float(s))
    cached = t._ft_cache.get(key)
    if cached is not None:
        return cached
    if t.n_instances == 0:
        return 0.0 + 0.0j
    if s > 0.0:
        near = np.min(np.abs(t.lam - s)) if t.n_instances else math.inf
        if near < 1e-12:
            raise EvaluationError(
                f"s={s} collides with an instance length (within 1e-12)")
        mask = t.lam > s
        lam = t.lam[mask]
        w = (t.chi[ell])[mask] * t.inv_mu[mask]
        zr = z
    else:
        lam = t.lam
        w = t.chi[ell] * t.inv_mu
        zr = t.reduce_z(z)
    if lam.size == 0:
        return 0.0 + 0.0j
    base = lam - s
    poly = w * lam * base ** (n - 1) / math.factorial(n - 1)
    c, si = t._exp_terms(zr, base)
    value = t._csum(c * poly, si * poly)
    t._ft_cache[key] = value
    return value


def flat_trace_values(catalog, ell, z, n_lo, n_hi, policy):
    """flat_trace for n = n_lo..n_hi at fixed z (shared table pass)."""
    return [flat_trace(catalog, ell, z, n, 0.0, policy)
            for n in range(n_lo, n_hi + 1)]


def mock_determinant_log(catalog, ell: int, xi_arg: complex, z: complex,
                         policy: TruncationPolicy = None) -> complex:
    """Truncated log of the two-variable determinant series:

        -sum_{n=1..n_max} xi_arg^n / n * tr_n(z),

    where tr_n(z) = flat_trace(n) (the same accumulator, so the n-th
    power sums agree bitwise with (n-1)! * flat_trace(n)).  At
    xi_arg = xi - z this reproduces log D_l(z) - log D_l(xi) with tail
    (|xi - z| t_max)^(n_max+1) / (n_max+1)!.
    """
    xi_arg = _require_finite(xi_arg, "xi_arg")
    z = _require_finite(z)
    if policy.n_max < 1:
        raise ParameterError("n_max must be >= 1")
    if xi_arg == 0:
        return 0.0 + 0.0j
    re_terms, im_terms = [], []
    power = 1.0 + 0.0j
    for n in range(1, policy.n_max + 1):
        power *= xi_arg
        term = -(power / n) * flat_trace(catalog, ell, z, n, 0.0, policy)
        re_terms.append(term.real)
        im_terms.append(term.imag)
    return complex(math.fsum(re_terms), math.fsum(im_terms))


class MockDeterminantPoly:
    """Degree-n_max polynomial truncation of the determinant itself.

    Expanding exp(-sum xi'^n / n * tr_n) as a power series in xi' gives
    coefficients via the Newton-identity recursion

        c_0 = 1,   c_k = -(1/k) * sum_{n=1..k} tr_n * c_{k-n}.

    Evaluated at xi' = xi - z this is a polynomial in z whose zeros
    approximate the resolvent spectrum near the base point xi; unlike
    the exp-of-series form it genuinely vanishes, so winding counts and
    Newton refinement act on it.
    """

    def __init__(self, catalog, ell: int, xi: complex, policy: TruncationPolicy):
        xi = _require_finite(xi, "xi")
        traces = [flat_trace(catalog, ell, xi, n, 0.0, policy)
                  for n in range(1, policy.n_max + 1)]
        coeffs = [1.0 + 0.0j]
        for k in range(1, policy.n_max + 1):
            acc = 0.0 + 0.0j
            for n in range(1, k + 1):
                acc += traces[n - 1] * coeffs[k - n]
            coeffs.append(-acc / k)
        self.xi = xi
        self.coeffs = coeffs

    def value(self, z: complex) -> complex:
        u = self.xi - z
        acc = 0.0 + 0.0j
        for c in reversed(self.coeffs):
            acc = acc * u + c
        return acc

    def derivative(self, z: complex) -> complex:
        # d/dz of sum c_k (xi - z)^k
        u = self.xi - z
        acc = 0.0 + 0.0j
        for k in range(len(self.coeffs) - 1, 0, -1):
            acc = acc * u + k * self.coeffs[k]
        return -acc

    def logderiv(self, z: complex) -> complex:
        v = self.value(z)
        if v == 0:
            raise EvaluationError("log-derivative evaluated at a zero")
        return self.derivative(z) / v


def dyn_determinant_logderiv(catalog, ell, policy):
    """z -> d/dz log D_l(z) as a callable (equals flat_trace(n=1)).

    Derivatives of the other truncated sums are analytic as well:
    d/dz flat_trace(n) = -n * flat_trace(n+1), and the mock series
    differentiates term by term through the same traces.
    """

    def logderiv(z):
        return flat_trace(catalog, ell, z, 1, 0.0, policy)

    return logderiv


def selberg_log_derivative(catalog, z, k_max: int,
                           policy: TruncationPolicy) -> complex:
    """Analytic d/dz of selberg_log:
    sum lambda_p exp(-(z+k) lambda_p) / (1 - exp(-(z+k) lambda_p))."""
    z = _require_finite(z)
    if catalog.d_s != 1 or catalog.d_u != 1:
        raise ParameterError("selberg derivative needs a geodesic-type "
                             "catalog (d_s = d_u = 1)")
    policy.check_catalog(catalog)
    re_terms, im_terms = [], []
    for orbit in catalog.orbits:
        lam = orbit.length
        if lam > policy.t_max:
            break
        for k in range(k_max + 1):
            w = cmath.exp(-(z + k) * lam)
            denom = 1.0 - w
            if abs(denom) < 1e-14:
                raise EvaluationError(
                    f"Selberg factor vanishes at orbit {orbit.word!r}, k={k}")
            term = lam * w / denom
            re_terms.append(term.real)
            im_terms.append(term.imag)
    return complex(math.fsum(re_terms), math.fsum(im_terms))


def natural_trace_check(catalog, ell: int, z, n: int,
                        policy: TruncationPolicy,
                        route: str = "analytic",
                        panel_order: int = 32) -> float:
    """Residual of the resolvent-power integral identity

        int_0^inf exp(-z s) s^(n-1)/(n-1)! * flat_trace(1, s) ds
            = flat_trace(n+1, 0).

    analytic route: per-instance the s-integral closes to lambda^n / n!,
    so the left side is re-accumulated termwise (different evaluation
    order, same identity).  quadrature route: Gauss-Legendre panels
    between consecutive instance lengths, whose interiors avoid the
    integrand's jump points.
    """
    z = _require_finite(z)
    if n < 1:
        raise ParameterError("n must be >= 1")
    t = instance_table(catalog, policy)
    rhs = flat_trace(catalog, ell, z, n + 1, 0.0, policy)
    if t.n_instances == 0:
        return abs(rhs)
    if route == "analytic":
        zr = t.reduce_z(z)
        w = t.chi[ell] * t.inv_mu
        c, si = t._exp_terms(zr, t.lam)
        factor = t.lam ** n / math.factorial(n)
        lhs = t._csum((c * (w * t.lam)) * factor, (si * (w * t.lam)) * factor)
        return abs(lhs - rhs)
    if route != "quadrature":
        raise ParameterError("route must be 'analytic' or 'quadrature'")
    nodes, weights = np.polynomial.legendre.leggauss(panel_order)
    breakpoints = np.unique(t.lam)
    lam = t.lam
    w_all = t.chi[ell] * t.inv_mu * t.lam
    fact = math.factorial(n - 1)
    acc = 0.0 + 0.0j
    lo = 0.0
    for hi in breakpoints:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        svals = mid + half * nodes
        # instances with lambda > s for s inside this panel
        idx = int(np.searchsorted(breakpoints, hi, side="left"))
        start = int(np.searchsorted(lam, breakpoints[idx], side="left"))
        lam_act = lam[start:]
        w_act = w_all[start:]
        for sv, wt in zip(svals, weights):
            inner = np.sum(w_act * np.exp(-z * (lam_act - sv)))
            g = cmath.exp(-z * sv) * sv ** (n - 1) / fact * inner
            acc += wt * half * g
        lo = hi
    return abs(acc - rhs)


def selberg_log(catalog, z, k_max: int, policy: TruncationPolicy) -> complex:
    """Truncated log of the double-product zeta over prime geodesics:

        sum_{lambda_p <= t_max} sum_{k=0..k_max} log(1 - exp(-(z+k) lambda_p)).

    Requires a geodesic-type catalog (d_s = d_u = 1, orientation +1
    throughout); each factor has positive real part for Re(z) > 0 so the
    principal branch is unambiguous in the tested range.
    """
    z = _require_finite(z)
    if k_max < 0:
        raise ParameterError("k_max must be >= 0")
    if catalog.d_s != 1 or catalog.d_u != 1:
        raise ParameterError("selberg_log needs a geodesic-type catalog "
                             "(d_s = d_u = 1)")
    if any(o.orientation != 1 for o in catalog.orbits):
        raise ParameterError("selberg_log needs an orientable catalog "
                             "(orientation +1 throughout)")
    policy.check_catalog(catalog)
    re_terms, im_terms = [], []
    for orbit in catalog.orbits:
        lam = orbit.length
        if lam > policy.t_max:
            break
        for k in range(k_max + 1):
            factor = 1.0 - cmath.exp(-(z + k) * lam)
            if abs(factor) < 1e-14:
                raise EvaluationError(
                    f"Selberg factor vanishes at orbit {orbit.word!r}, k={k} "
                    f"(evaluation at a zero)")
            term = cmath.log(factor)
            re_terms.append(term.real)
            im_terms.append(term.imag)
    return complex(math.fsum(re_terms), math.fsum(im_terms))


# ---------------------------------------------------------------------------
# chi as a standalone operation (single-instance weights)


def chi_ell(instance, ell: int, d_s: int):
    """chi_l of one orbit instance: exterior trace of the m-th power of
    the prime linearization over (eps * |det(I - M^m)|)."""
    power = instance.prime.linearization.power(instance.repetition)
    if not 0 <= ell <= power.dim:
        raise ParameterError(f"ell={ell} outside 0..{power.dim}")
    eps = orientation_sign(power, d_s)
    den = abs(det_one_minus(power))
    value = exterior_trace(power, ell) / (eps * den)
    return value
