"""Pole/zero estimation for the truncated determinants and zeta objects.

Three tools:

* ``leading_resonance`` -- ratio estimates from consecutive flat traces.
  The raw ratio z - tr_n/tr_{n+1} converges to the resonance nearest the
  probe for untruncated traces, but a finite length horizon t_max biases
  it; the returned headline estimate therefore inverts the truncated
  single-pole model (continuum incomplete-gamma kernel, or the discrete
  kernel when the catalog lengths sit on an exact lattice).  Both values
  are reported, together with consecutive-n stability diagnostics and
  Aitken acceleration.

* ``winding_count`` -- argument-principle zero count of an analytic
  function over a rectangle from its log-derivative (trapezoid boundary
  integral with adaptive refinement).  Meaningful for the polynomial
  truncation of the determinant (``MockDeterminantPoly``), which has
  genuine zeros; exp-of-series truncations are zero-free and correctly
  count 0.

* ``newton_refine`` -- Newton iteration on any (value, derivative) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .catalog import OrbitCatalog
from .engine import TruncationPolicy, flat_trace
from .errors import NonConvergenceError, ParameterError


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned search rectangle in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ParameterError("rectangle needs re_min < re_max and "
                                 "im_min < im_max")

    def boundary(self, per_side: int, offset: float = 0.0) -> np.ndarray:
        """Closed counterclockwise boundary polyline (last point = first).

        ``offset`` in [0,1) shifts the sample grid along each side, used
        to re-sample away from awkward points.
        """
        t = (np.arange(per_side) + offset) / per_side
        corners = [complex(self.re_min, self.im_min),
                   complex(self.re_max, self.im_min),
                   complex(self.re_max, self.im_max),
                   complex(self.re_min, self.im_max)]
        pts = []
        for k in range(4):
            a, b = corners[k], corners[(k + 1) % 4]
            pts.extend(a + (b - a) * t)
        pts.append(pts[0])
        return np.array(pts, dtype=complex)


# ---------------------------------------------------------------------------
# Flat-trace sources


class CatalogTraceSource:
    """Resolvent-power traces of a catalog at a fixed probe point."""

    def __init__(self, catalog: OrbitCatalog, ell: int, z_probe: complex,
                 policy: TruncationPolicy):
        self.catalog = catalog
        self.ell = ell
        self.z = complex(z_probe)
        self.policy = policy
        self.horizon = policy.t_max
        self.lattice_delta = catalog.lattice_delta

    def trace(self, n: int) -> complex:
        return flat_trace(self.catalog, self.ell, self.z, n, 0.0, self.policy)


class SyntheticPoleSource:
    """Exact single-pole trace model: trace(n) = (z - pole)**(-n).

    No truncation horizon, so raw and corrected estimates coincide and
    recover the pole to rounding.
    """

    def __init__(self, pole: complex, z_probe: complex):
        self.pole = complex(pole)
        self.z = complex(z_probe)
        self.horizon = None
        self.lattice_delta = None

    def trace(self, n: int) -> complex:
        return (self.z - self.pole) ** (-n)


def _model_ratio(alpha: float, n: int, horizon, lattice_delta) -> float:
    """trace(n)/trace(n+1) of a pure resonance at distance alpha from the
    probe, under the same truncation as the data."""
    if horizon is None:
        return alpha
    if lattice_delta is not None:
        delta = lattice_delta
        count = int(horizon / delta + 1e-9)
        if count < 1:
            return alpha
        k = np.arange(1, count + 1) * delta
        g_n = float(np.sum(k ** (n - 1) * np.exp(-alpha * k)))
        g_n1 = float(np.sum(k ** n * np.exp(-alpha * k)))
        return n * g_n / g_n1
    x = alpha * horizon
    lo_n = gammainc(n, x)
    lo_n1 = gammainc(n + 1, x)
    if lo_n1 <= 0.0:
        return math.inf
    return alpha * lo_n / lo_n1


def _invert_model_ratio(rho: float, n: int, horizon, lattice_delta) -> float:
    """Solve _model_ratio(alpha) = rho for alpha > 0 by bisection (the
    model ratio is increasing in alpha)."""
    lo, hi = 1e-12, 1.0
    for _ in range(200):
        if _model_ratio(hi, n, horizon, lattice_delta) >= rho:
            break
        hi *= 2.0
        if hi > 1e6:
            raise NonConvergenceError("model-ratio inversion failed to bracket",
                                      {"rho": rho, "n": n})
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _model_ratio(mid, n, horizon, lattice_delta) < rho:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class ResonanceEstimate:
    """Leading-resonance estimate with diagnostics.

    estimate       truncation-corrected value at the requested depth
    raw_estimate   the plain ratio z - tr_n / tr_{n+1}
    aitken         Aitken delta-squared of the corrected sequence (or None)
    raw_aitken     same for the raw sequence
    history        rows (n, raw, corrected)
    diagnostic     |corrected_n - corrected_{n-1}| consecutive-n agreement
    """

    estimate: complex
    raw_estimate: complex
    aitken: complex
    raw_aitken: complex
    history: list
    diagnostic: float


def _aitken_last(seq):
    if len(seq) < 3:
        return None
    x0, x1, x2 = seq[-3], seq[-2], seq[-1]
    denom = x2 - 2 * x1 + x0
    if denom == 0:
        return x2
    return x2 - (x2 - x1) ** 2 / denom


def leading_resonance(source, ell: int = None, z_probe: complex = None,
                      n: int = None, policy: TruncationPolicy = None,
                      h_estimate: float = None,
                      stability_tol: float = 0.02) -> ResonanceEstimate:
    """Estimate the resonance nearest to the probe point.

    ``source`` is either an OrbitCatalog (then ell, z_probe and policy
    are required; the probe must sit to the right of the empirical
    entropy, and the summand peak (n-1)/(Re z - h) must fit below t_max)
    or any object with .trace(n)/.horizon/.lattice_delta (synthetic
    models; guards that need an entropy then only apply when one is
    given).

    Raises NonConvergenceError when consecutive corrected estimates
    disagree by more than 10 * stability_tol.
    """
    if n is None or n < 2:
        raise ParameterError("need ratio depth n >= 2")
    if isinstance(source, OrbitCatalog):
        if ell is None or z_probe is None or policy is None:
            raise ParameterError("catalog input needs ell, z_probe and policy")
        if h_estimate is None:
            from .counting import entropy_estimate
            h_estimate = entropy_estimate(source).value
        src = CatalogTraceSource(source, ell, z_probe, policy)
    else:
        src = source
        z_probe = src.z
    z_probe = complex(z_probe)
    if h_estimate is not None:
        gap = z_probe.real - h_estimate
        if gap <= 0:
            raise ParameterError(
                f"probe Re z = {z_probe.real:.4f} must exceed the entropy "
                f"estimate {h_estimate:.4f}")
        if src.horizon is not None and (n - 1) / gap > src.horizon * (1 + 1e-9):
            raise ParameterError(
                f"ratio peak (n-1)/(Re z - h) = {(n - 1) / gap:.2f} exceeds "
                f"t_max = {src.horizon}; lower n or raise the probe")

    traces = {k: src.trace(k) for k in range(2, n + 2)}
    history = []
    raws, correcteds = [], []
    for k in range(2, n + 1):
        t_k, t_k1 = traces[k], traces[k + 1]
        if t_k1 == 0:
            raise NonConvergenceError("flat trace vanished; ratio undefined",
                                      {"n": k})
        rho = t_k / t_k1
        raw = z_probe - rho
        if src.horizon is None or rho.real <= 0:
            corrected = raw
        else:
            alpha = _invert_model_ratio(rho.real, k, src.horizon,
                                        src.lattice_delta)
            model = _model_ratio(alpha, k, src.horizon, src.lattice_delta)
            corrected = z_probe - rho * (alpha / model)
        history.append((k, raw, corrected))
        raws.append(raw)
        correcteds.append(corrected)

    diagnostic = (abs(correcteds[-1] - correcteds[-2])
                  if len(correcteds) >= 2 else math.inf)
    if len(correcteds) >= 2 and diagnostic > 10.0 * stability_tol:
        raise NonConvergenceError(
            f"ratio estimates not stabilising: last step {diagnostic:.3e} "
            f"> 10 * {stability_tol:g}",
            {"history": history, "diagnostic": diagnostic})
    return ResonanceEstimate(
        estimate=correcteds[-1],
        raw_estimate=raws[-1],
        aitken=_aitken_last(correcteds),
        raw_aitken=_aitken_last(raws),
        history=history,
        diagnostic=diagnostic,
    )


# ---------------------------------------------------------------------------
# Argument principle


def winding_count(logderiv, rect: Rectangle, samples_per_side: int = 64,
                  max_refinements: int = 8) -> int:
    """(1/2 pi i) * boundary integral of f'/f, rounded zero count.

    ``logderiv`` maps z to f'(z)/f(z) and must be analytic on the
    boundary (truncated determinants are entire, so only zeros are
    counted).  Trapezoid sampling is refined (doubling) until the
    integral is within 0.25 of an integer; if a sample hits a wild value
    the boundary grid is shifted and re-sampled.
    """
    if samples_per_side < 64:
        raise ParameterError("samples_per_side must be >= 64")
    for offset in (0.0, 0.37, 0.61, 0.13):
        per_side = samples_per_side
        for _ in range(max_refinements + 1):
            pts = rect.boundary(per_side, offset)
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.array([logderiv(z) for z in pts], dtype=complex)
            if not np.all(np.isfinite(vals)) or np.max(np.abs(vals)) > 1e8:
                break  # boundary too close to a zero: re-sample shifted
            dz = np.diff(pts)
            integral = np.sum(0.5 * (vals[:-1] + vals[1:]) * dz)
            w = integral / (2j * math.pi)
            nearest = round(w.real)
            if abs(w - nearest) <= 0.25:
                return int(nearest)
            per_side *= 2
    raise NonConvergenceError(
        "winding integral did not settle near an integer "
        "(inconclusive region; move the rectangle boundary)",
        {"rect": rect})


def newton_refine(func, z0: complex, tol: float) -> complex:
    """Newton iteration on func.value / func.derivative from z0.

    Stops at |f| <= tol or |step| <= tol * (1 + |z|); at most 60
    iterations; three consecutive growing steps raise
    NonConvergenceError.
    """
    z = complex(z0)
    d0 = func.derivative(z)
    if abs(d0) <= 1e-12:
        raise ParameterError(f"derivative at start {abs(d0):.2e} <= 1e-12")
    prev_step = math.inf
    growth = 0
    for _ in range(60):
        f = func.value(z)
        if abs(f) <= tol:
            return z
        df = func.derivative(z)
        if df == 0:
            raise NonConvergenceError("derivative vanished during refinement",
                                      {"z": z})
        step = -f / df
        z = z + step
        if abs(step) <= tol * (1.0 + abs(z)):
            return z
        if abs(step) > abs(prev_step):
            growth += 1
            if growth >= 3:
                raise NonConvergenceError(
                    "Newton steps growing three times in a row",
                    {"z": z, "step": abs(step)})
        else:
            growth = 0
        prev_step = step
    raise NonConvergenceError("Newton iteration exceeded 60 steps", {"z": z})
