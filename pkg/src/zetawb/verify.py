"""One-shot identity-verification suite for a catalog.

Runs every cross-identity the engine is built on, each as an
independent check with an explicit residual and tolerance:

1. minor-sum determinant identity  (alternating exterior-trace sum
   equals det(I - M), exactly for exact matrices, seeded random floats
   as well as every catalog linearization)
2. orientation-sign consistency    (stored sign vs recomputed)
3. model linearization consistency (stored matrices vs re-derivation
   from the source descriptor, plus all structural catalog invariants)
4. alternating product vs zeta     (degree-alternating determinant
   combination reproduces the plain orbit sum)
5. determinant quotient series     (two-variable series at (xi-z, xi)
   vs the log difference)
6. resolvent-power integral identity (analytic and quadrature routes)
7. imaginary-period invariance     (bitwise, lattice catalogs only)
8. zeta double-product relation    (Ruelle vs Selberg, geodesic
   catalogs only)

All randomness is seeded.  A failed check names the offending orbit or
value; skipped checks state why they do not apply.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .catalog import OrbitCatalog, catalog_validate
from .engine import (TruncationPolicy, alternating_product_log,
                     dyn_determinant_log, mock_determinant_log,
                     natural_trace_check, flat_trace, ruelle_log, selberg_log)
from .linalg_ext import SmallMatrix, det_one_minus, exterior_trace

TWO_PI = 2.0 * math.pi


@dataclass
class CheckResult:
    name: str
    status: str            # pass | fail | skip
    residual: float
    detail: str = ""

    @property
    def failed(self):
        return self.status == "fail"

    def line(self) -> str:
        tag = self.status.upper()
        if self.status == "skip":
            return f"{tag:4s} {self.name}: {self.detail}"
        res = f"residual={self.residual:.3e}"
        return f"{tag:4s} {self.name}: {res}" + (
            f" ({self.detail})" if self.detail else "")


def _policy_for(catalog: OrbitCatalog) -> TruncationPolicy:
    return TruncationPolicy(t_max=min(catalog.t_complete, 14.0), n_max=30)


def _check_minor_sums(catalog, seed) -> CheckResult:
    worst = 0.0
    detail = ""
    rng = random.Random(seed)
    for trial in range(200):
        dim = rng.randint(2, 6)
        m = SmallMatrix([[rng.uniform(-3, 3) for _ in range(dim)]
                         for _ in range(dim)])
        alt = math.fsum((-1.0) ** l * exterior_trace(m, l)
                        for l in range(dim + 1))
        direct = det_one_minus(m)
        rel = abs(alt - direct) / max(1.0, abs(direct))
        if rel > worst:
            worst, detail = rel, f"random draw {trial}"
    for orbit in catalog.orbits:
        m = orbit.linearization
        if m.exact:
            alt = sum((-1) ** l * exterior_trace(m, l)
                      for l in range(m.dim + 1))
            if alt != det_one_minus(m):
                return CheckResult("minor-sum determinant identity", "fail",
                                   math.inf, f"exact mismatch at {orbit.word}")
        else:
            alt = math.fsum((-1.0) ** l * exterior_trace(m, l)
                            for l in range(m.dim + 1))
            direct = det_one_minus(m)
            rel = abs(alt - direct) / max(1.0, abs(direct))
            if rel > worst:
                worst, detail = rel, f"orbit {orbit.word}"
    status = "pass" if worst <= 1e-10 else "fail"
    return CheckResult("minor-sum determinant identity", status, worst, detail)


def _check_catalog(catalog) -> list:
    report = catalog_validate(catalog)
    orientation_fails = [f for f in report.failures if "orientation" in f]
    other_fails = [f for f in report.failures if "orientation" not in f]
    out = [CheckResult("orientation-sign consistency",
                       "fail" if orientation_fails else "pass",
                       float(len(orientation_fails)),
                       orientation_fails[0] if orientation_fails else "")]
    out.append(CheckResult("model linearization consistency",
                           "fail" if other_fails else "pass",
                           float(len(other_fails)),
                           other_fails[0] if other_fails else ""))
    return out


def _check_alternating(catalog, policy) -> CheckResult:
    worst = 0.0
    for z in (complex(1.5, 0.3), complex(2.0, 0.0)):
        zeta = ruelle_log(catalog, z, policy)
        alt = alternating_product_log(catalog, z, policy)
        rel = abs(alt - zeta) / (1.0 + abs(zeta))
        worst = max(worst, rel)
    tol = 1e-12 * policy.condition_scale()
    return CheckResult("alternating product vs zeta",
                       "pass" if worst <= tol else "fail", worst,
                       f"tol {tol:.1e}")


def _check_quotient(catalog, policy) -> CheckResult:
    gap = min(0.2, 2.5 / policy.t_max)
    xi = complex(2.0, 0.0)
    z = xi - gap
    worst = 0.0
    for ell in range(catalog.d):
        lhs = mock_determinant_log(catalog, ell, xi - z, xi, policy)
        rhs = (dyn_determinant_log(catalog, ell, z, policy)
               - dyn_determinant_log(catalog, ell, xi, policy))
        worst = max(worst, abs(lhs - rhs))
    return CheckResult("determinant quotient series",
                       "pass" if worst <= 1e-10 else "fail", worst,
                       f"xi={xi.real:g}, gap={gap:g}")


def _check_natural_trace(catalog, policy) -> CheckResult:
    z = complex(1.5, 0.0)
    rhs = abs(flat_trace(catalog, min(1, catalog.d - 1), z, 4, 0.0, policy))
    scale = max(1.0, rhs)
    r_an = natural_trace_check(catalog, min(1, catalog.d - 1), z, 3, policy,
                               route="analytic")
    r_qu = natural_trace_check(catalog, min(1, catalog.d - 1), z, 3, policy,
                               route="quadrature")
    ok = r_an <= 1e-12 * scale and r_qu <= 1e-8 * scale
    return CheckResult("resolvent-power integral identity",
                       "pass" if ok else "fail", max(r_an, r_qu),
                       f"analytic {r_an:.2e}, quadrature {r_qu:.2e}")


def _check_periodicity(catalog, policy) -> CheckResult:
    delta = catalog.lattice_delta
    if delta is None:
        return CheckResult("imaginary-period invariance", "skip", 0.0,
                           "catalog lengths not on an exact lattice")
    shift = TWO_PI / delta
    z = complex(1.5, 0.0)
    zs = complex(1.5, shift)
    same = (ruelle_log(catalog, z, policy) == ruelle_log(catalog, zs, policy)
            and dyn_determinant_log(catalog, 0, z, policy)
            == dyn_determinant_log(catalog, 0, zs, policy)
            and flat_trace(catalog, min(1, catalog.d - 1), z, 3, 0.0, policy)
            == flat_trace(catalog, min(1, catalog.d - 1), zs, 3, 0.0, policy))
    return CheckResult("imaginary-period invariance",
                       "pass" if same else "fail",
                       0.0 if same else math.inf, "bitwise")


def _check_selberg(catalog) -> CheckResult:
    if catalog.d_s != 1 or catalog.d_u != 1 or any(
            o.orientation != 1 for o in catalog.orbits):
        return CheckResult("zeta double-product relation", "skip", 0.0,
                           "not a geodesic-type catalog")
    policy = TruncationPolicy(t_max=max(14.0, catalog.t_complete),
                              allow_partial=True)
    z = complex(2.5, 0.0)
    resid = abs(ruelle_log(catalog, z, policy)
                + selberg_log(catalog, z, 40, policy)
                - selberg_log(catalog, z + 1, 40, policy))
    return CheckResult("zeta double-product relation",
                       "pass" if resid <= 1e-8 else "fail", resid,
                       "z=2.5, k_max=40")


def run_verification(catalog: OrbitCatalog, seed: int = 0) -> list:
    """Run the full identity suite; returns CheckResult rows in order."""
    policy = _policy_for(catalog)
    results = [_check_minor_sums(catalog, seed)]
    results.extend(_check_catalog(catalog))
    results.append(_check_alternating(catalog, policy))
    results.append(_check_quotient(catalog, policy))
    results.append(_check_natural_trace(catalog, policy))
    results.append(_check_periodicity(catalog, policy))
    results.append(_check_selberg(catalog))
    return results
