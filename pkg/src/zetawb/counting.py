"""Prime-orbit counting suite: li, psi, psi1, pi0, pi1, pi and fits.

Conventions:

* the logarithmic integral is normalized from 2:  li(x) = int_2^x dt/ln t
  (values in (1, 2] are allowed and negative; this is NOT the
  principal-value li from 0, which would sit ~1.045 higher);
* the counting functions live on the exponential scale T ~ e^{h length}:

      psi(T)  = sum h*lambda_p          over pairs (p, n>=1), e^{n h lambda_p} <= T
      psi1(T) = sum h*lambda_p (T - e^{n h lambda_p})      (integral of psi)
      pi0(T)  = #pairs,   pi1(T) = #primes with e^{h lambda_p} <= T

  and the prime-orbit counter is pi(T) = pi1(e^{h T}).

The asymptotics pi(T) ~ li(e^{hT}) requires (topological weak) mixing;
constant-roof suspensions put all lengths on one arithmetic progression
and genuinely violate it, so ``pgt_error_fit`` refuses them unless
overridden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .catalog import OrbitCatalog
from .errors import ParameterError, ZetawbError


def li(x: float) -> float:
    """Logarithmic integral from 2: int_2^x dt / ln t.

    Adaptive Gauss-Kronrod quadrature to absolute tolerance
    1e-10 * (1 + |result|).  x must exceed 1 (the integrand's pole);
    x in (1, 2] gives the negative-direction integral, li(2) = 0.
    """
    if not x > 1.0:
        raise ParameterError(f"li needs x > 1, got {x}")
    if x == 2.0:
        return 0.0
    value, err = quad(lambda t: 1.0 / math.log(t), 2.0, x,
                      epsabs=1e-12, epsrel=1e-12, limit=200)
    if err > 1e-10 * (1.0 + abs(value)):
        value, err = quad(lambda t: 1.0 / math.log(t), 2.0, x,
                          epsabs=1e-14, epsrel=1e-14, limit=500)
    return value


@dataclass
class CountingArrays:
    """chebyshev_functions output on a T grid (exponential scale)."""

    grid: np.ndarray
    psi: np.ndarray
    psi1: np.ndarray
    pi0: np.ndarray
    pi1: np.ndarray
    complete: np.ndarray  # False where the grid point needs pairs beyond t_max


def _instance_pairs(catalog: OrbitCatalog, h: float, t_max: float):
    """(x, weight) rows, x = e^{n h lambda_p}, sorted ascending, for all
    pairs with n * lambda_p <= t_max; plus the prime-level x values."""
    xs, ws = [], []
    prime_x = []
    for orbit in catalog.orbits:
        if orbit.length > t_max:
            break
        prime_x.append(math.exp(h * orbit.length))
        n = 1
        while n * orbit.length <= t_max:
            xs.append(math.exp(n * h * orbit.length))
            ws.append(h * orbit.length)
            n += 1
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    xs = np.array([xs[i] for i in order])
    ws = np.array([ws[i] for i in order])
    prime_x = np.array(sorted(prime_x))
    return xs, ws, prime_x


def chebyshev_functions(catalog: OrbitCatalog, h: float, t_grid,
                        t_max: float = None) -> CountingArrays:
    """psi, psi1, pi0, pi1 on the given grid, truncated to the catalog.

    Grid points with ln(T)/h beyond the truncation get an advisory
    ``complete = False`` flag rather than an error.
    """
    if not h > 0:
        raise ParameterError("entropy h must be positive")
    t_grid = np.asarray(list(t_grid), dtype=float)
    if np.any(t_grid <= 0):
        raise ParameterError("grid values must be positive")
    if t_max is None:
        t_max = catalog.t_complete
    xs, ws, prime_x = _instance_pairs(catalog, h, t_max)
    psi = np.empty(len(t_grid))
    psi1 = np.empty(len(t_grid))
    pi0 = np.empty(len(t_grid), dtype=np.int64)
    pi1 = np.empty(len(t_grid), dtype=np.int64)
    complete = np.empty(len(t_grid), dtype=bool)
    for i, t_val in enumerate(t_grid):
        k = int(np.searchsorted(xs, t_val, side="right"))
        psi[i] = math.fsum(ws[:k])
        psi1[i] = math.fsum(ws[:k] * (t_val - xs[:k]))
        pi0[i] = k
        pi1[i] = int(np.searchsorted(prime_x, t_val, side="right"))
        complete[i] = math.log(t_val) <= h * t_max if t_val > 1 else True
    return CountingArrays(t_grid, psi, psi1, pi0, pi1, complete)


@dataclass(frozen=True)
class PrimeCount:
    count: int
    complete: bool

    def __int__(self):
        return self.count


def prime_counting(catalog: OrbitCatalog, t_value: float) -> PrimeCount:
    """Number of prime orbits of length <= T; flagged advisory when T
    exceeds the certified completeness threshold."""
    count = 0
    for orbit in catalog.orbits:
        if orbit.length > t_value:
            break
        count += 1
    return PrimeCount(count, complete=t_value <= catalog.t_complete)


@dataclass
class EntropyEstimate:
    value: float
    residual: float
    window: tuple
    n_points: int


def entropy_estimate(catalog: OrbitCatalog) -> EntropyEstimate:
    """Exponential growth rate of the instance count N(T) = #{length <= T}
    over the upper half of [lambda_min, t_complete].

    Orbit counts grow like C * e^{hT} / T, so the fit regresses
    ln N(T) + ln T linearly on T; fitting ln N alone would understate h
    by about (d/dT) ln T over the window, far outside the quoted
    tolerances at desk scale.  The empirical counting function is a
    staircase, so the fit is taken at its jump points (T_j, ln N(T_j))
    with T_j the distinct instance lengths in the window.  Needs at
    least 20 primes spanning at least 3 length units.
    """
    if len(catalog.orbits) < 20:
        raise ZetawbError(f"entropy estimate needs >= 20 primes, "
                          f"catalog has {len(catalog.orbits)}")
    lam_min = catalog.orbits[0].length
    span = catalog.t_complete - lam_min
    if span < 3.0:
        raise ZetawbError(f"entropy estimate needs >= 3 length units of "
                          f"certified span, got {span:.3f}")
    lengths = []
    for orbit in catalog.orbits:
        if orbit.length > catalog.t_complete:
            break
        n = 1
        while n * orbit.length <= catalog.t_complete:
            lengths.append(n * orbit.length)
            n += 1
    lengths = np.sort(np.array(lengths))
    lo = 0.5 * (lam_min + catalog.t_complete)
    uniq, last_idx = np.unique(lengths, return_index=True)
    counts = np.searchsorted(lengths, uniq, side="right")
    keep = uniq >= lo
    if keep.sum() < 4:
        raise ZetawbError("too few counting jumps in the entropy-fit window")
    x = uniq[keep]
    y = np.log(counts[keep].astype(float)) + np.log(x)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return EntropyEstimate(float(slope), resid, (float(lo), catalog.t_complete),
                           int(keep.sum()))


def detect_length_lattice(catalog: OrbitCatalog, tol: float = 1e-9):
    """Spacing delta when all orbit lengths sit on one arithmetic
    progression k * delta within tol, else None."""
    if catalog.lattice_delta is not None:
        return catalog.lattice_delta
    lengths = sorted({o.length for o in catalog.orbits})
    if not lengths:
        return None
    g = lengths[0]
    for lam in lengths[1:]:
        a, b = max(g, lam), min(g, lam)
        while b > tol:
            a, b = b, math.fmod(a, b)
        g = a
        if g < 1e-6:
            return None
    if all(abs(lam / g - round(lam / g)) * g <= tol for lam in lengths):
        return g
    return None


@dataclass
class PgtFit:
    """Error table and fitted exponent for the prime-counting law.

    delta_hat = h - slope of ln|pi(T) - li(e^{hT})| over sliding-window
    maxima (the signed error oscillates through zero, so pointwise slopes
    are meaningless).  Descriptive only; finiteness and sign are the only
    meaningful claims at desk scale.
    """

    h: float
    delta_hat: float
    table: list  # rows (T, pi, li(e^{hT}), error, complete)
    window_points: list


def pgt_error_fit(catalog: OrbitCatalog, h: float, t_grid,
                  override_nonmixing: bool = False,
                  n_windows: int = 4) -> PgtFit:
    """Fit the error exponent of pi(T) against li(e^{hT}).

    Refuses non-mixing catalogs (lengths on one arithmetic progression,
    where the li asymptotics genuinely fails) unless overridden.
    """
    if not h > 0:
        raise ParameterError("entropy h must be positive")
    if not override_nonmixing:
        delta = detect_length_lattice(catalog)
        if delta is not None:
            raise ZetawbError(
                f"catalog is non-mixing (all lengths on a lattice of spacing "
                f"{delta:g}); the li asymptotics fails there -- pass "
                f"override_nonmixing=True to fit anyway")
    rows = []
    for t_val in t_grid:
        pc = prime_counting(catalog, t_val)
        target = li(math.exp(h * t_val))
        rows.append((float(t_val), pc.count, target, pc.count - target,
                     pc.complete))
    errs = np.array([abs(r[3]) for r in rows])
    ts = np.array([r[0] for r in rows])
    # sliding-window maxima of |error|
    edges = np.linspace(ts[0], ts[-1], n_windows + 1)
    win_pts = []
    for k in range(n_windows):
        mask = (ts >= edges[k]) & (ts <= edges[k + 1]) & (errs > 0)
        if mask.any():
            idx = np.argmax(np.where(mask, errs, -np.inf))
            win_pts.append((float(ts[idx]), float(errs[idx])))
    if len(win_pts) >= 2:
        wx = np.array([p[0] for p in win_pts])
        wy = np.log(np.array([p[1] for p in win_pts]))
        slope = float(np.polyfit(wx, wy, 1)[0])
        delta_hat = h - slope
    else:
        delta_hat = math.nan
    return PgtFit(h=h, delta_hat=delta_hat, table=rows, window_points=win_pts)


@dataclass
class CountingReport:
    """Everything cmd_count emits: grid, counters, li targets, fit."""

    grid: np.ndarray
    pi: np.ndarray
    psi: np.ndarray
    psi1: np.ndarray
    pi0: np.ndarray
    pi1: np.ndarray
    li_eht: np.ndarray
    complete: np.ndarray
    h: float
    delta_hat: float

    def csv_rows(self):
        for i in range(len(self.grid)):
            yield (self.grid[i], int(self.pi[i]), self.psi[i], self.psi1[i],
                   int(self.pi0[i]), int(self.pi1[i]), self.li_eht[i],
                   bool(self.complete[i]))


def counting_report(catalog: OrbitCatalog, h: float, t_grid,
                    t_max: float = None,
                    override_nonmixing: bool = False) -> CountingReport:
    """Assemble the full counting report over a grid of lengths T.

    The Chebyshev-style functions are evaluated at e^{hT}; pi comes from
    prime_counting directly (and equals pi1(e^{hT}) by construction).
    delta_hat is NaN when the error fit is refused or underdetermined.
    """
    t_grid = np.asarray(list(t_grid), dtype=float)
    if t_max is None:
        t_max = catalog.t_complete
    exp_grid = np.exp(h * t_grid)
    arrays = chebyshev_functions(catalog, h, exp_grid, t_max)
    pi_vals = np.array([prime_counting(catalog, t).count for t in t_grid])
    complete = np.array([t <= catalog.t_complete for t in t_grid])
    li_vals = np.array([li(x) if x > 1 else math.nan for x in exp_grid])
    try:
        fit = pgt_error_fit(catalog, h, t_grid,
                            override_nonmixing=override_nonmixing)
        delta_hat = fit.delta_hat
    except ZetawbError:
        delta_hat = math.nan
    return CountingReport(
        grid=t_grid, pi=pi_vals, psi=arrays.psi, psi1=arrays.psi1,
        pi0=arrays.pi0, pi1=arrays.pi1, li_eht=li_vals,
        complete=complete & arrays.complete, h=h, delta_hat=delta_hat)
