"""Suspensions of hyperbolic 2x2 toral automorphisms.

Periodic points of A^n on the 2-torus are the solutions of
(A^n - I) x in Z^2; there are exactly |det(A^n - I)| of them and they are
rational with common denominator q = |det(A^n - I)|.  They are enumerated
as lattice cosets through the Smith normal form of A^n - I and kept as
integer numerators mod q, so orbit grouping and deduplication are exact
(no float collisions; the point count grows like the expansion factor to
the n-th power, which floats could not separate).

A prime orbit of the suspension flow is an A-orbit of least period n,
with length equal to the Birkhoff sum of the roof function along the
orbit (exact n*c for a constant roof, compensated double summation
otherwise) and linearization A^{-n}, exact in integer arithmetic.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from ..catalog import OrbitCatalog, PrimeOrbit, RoofFunction
from ..errors import ModelError, ParameterError, TruncationError
from ..linalg_ext import SmallMatrix, orientation_sign

# Largest admissible q = |det(A^n - I)|: the int64 coset arithmetic uses
# products bounded by 2 q^2.
MAX_EXACT_DENOMINATOR = 2_000_000_000


def validate_toral_matrix(matrix) -> tuple:
    """Check A is an integer 2x2 hyperbolic automorphism of the torus.

    Requires det A = +-1 and real eigenvalues off the unit circle:
    det = +1 needs |tr| > 2, det = -1 needs tr != 0.
    """
    rows = [list(r) for r in matrix]
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ModelError("toral model needs a 2x2 matrix")
    if not all(isinstance(x, int) and not isinstance(x, bool)
               for r in rows for x in r):
        raise ModelError("toral matrix entries must be integers")
    a, b = rows[0]
    c, d = rows[1]
    det = a * d - b * c
    tr = a + d
    if det not in (1, -1):
        raise ModelError(f"toral matrix must have det +-1, got {det}")
    if det == 1 and abs(tr) <= 2:
        raise ModelError(f"non-hyperbolic toral matrix (det 1, |tr|={abs(tr)})")
    if det == -1 and tr == 0:
        raise ModelError("non-hyperbolic toral matrix (det -1, tr 0)")
    return (a, b, c, d, det, tr)


def _matrix_power_int(flat, n: int):
    """n-th power of a flat (a, b, c, d) integer 2x2 matrix, exact."""
    def mul(m1, m2):
        return (m1[0] * m2[0] + m1[1] * m2[2], m1[0] * m2[1] + m1[1] * m2[3],
                m1[2] * m2[0] + m1[3] * m2[2], m1[2] * m2[1] + m1[3] * m2[3])

    res = (1, 0, 0, 1)
    base = tuple(flat)
    while n:
        if n & 1:
            res = mul(res, base)
        n >>= 1
        if n:
            base = mul(base, base)
    return res


def smith_normal_form(matrix):
    """Smith normal form of an integer 2x2 matrix L with det != 0.

    Returns (U, D, V) with U @ L @ V = D, U and V unimodular and
    D = diag(d1, d2), d1, d2 > 0 and d1 | d2.  All arithmetic in exact
    python integers.
    """
    a = [list(map(int, row)) for row in matrix]
    u = [[1, 0], [0, 1]]
    v = [[1, 0], [0, 1]]

    def row_op(i, j, t):          # row_i -= t * row_j  (applied to a and u)
        for k in range(2):
            a[i][k] -= t * a[j][k]
            u[i][k] -= t * u[j][k]

    def col_op(i, j, t):          # col_i -= t * col_j
        for k in range(2):
            a[k][i] -= t * a[k][j]
            v[k][i] -= t * v[k][j]

    def swap_rows():
        a[0], a[1] = a[1], a[0]
        u[0], u[1] = u[1], u[0]

    def swap_cols():
        for k in range(2):
            a[k][0], a[k][1] = a[k][1], a[k][0]
            v[k][0], v[k][1] = v[k][1], v[k][0]

    # Clear the off-diagonal entries by Euclidean reduction.
    while a[0][1] != 0 or a[1][0] != 0:
        if a[0][0] == 0:
            if a[1][0] != 0:
                swap_rows()
            else:
                swap_cols()
            continue
        if a[1][0] != 0:
            t = a[1][0] // a[0][0]
            row_op(1, 0, t)
            if a[1][0] != 0:
                swap_rows()
            continue
        if a[0][1] != 0:
            t = a[0][1] // a[0][0]
            col_op(1, 0, t)
            if a[0][1] != 0:
                swap_cols()

    # Fix signs, then enforce the divisibility d1 | d2.
    for i in range(2):
        if a[i][i] < 0:
            for k in range(2):
                a[i][k] = -a[i][k]
                u[i][k] = -u[i][k]
    if a[0][0] == 0 or a[1][1] == 0:
        raise ModelError("singular matrix has no positive Smith form")
    if a[1][1] % a[0][0] != 0:
        # Standard trick: add the second column to the first, re-reduce.
        col_op(0, 1, -1)
        return _resmith(a, u, v)
    return u, [[a[0][0], 0], [0, a[1][1]]], v


def _resmith(a, u, v):
    """One more reduction pass after the divisibility fix-up column op."""
    u2, d, v2 = smith_normal_form(a)
    uu = [[sum(u2[i][k] * u[k][j] for k in range(2)) for j in range(2)]
          for i in range(2)]
    vv = [[sum(v[i][k] * v2[k][j] for k in range(2)) for j in range(2)]
          for i in range(2)]
    return uu, d, vv


def _period_numerators(flat_a, n: int):
    """Fixed points of A^n as integer numerator pairs over q.

    Returns (q, xa, xb) with q = |det(A^n - I)| and int64 arrays xa, xb of
    length q such that the fixed points are exactly {(xa/q, xb/q)}.
    """
    p = _matrix_power_int(flat_a, n)
    l_mat = [[p[0] - 1, p[1]], [p[2], p[3] - 1]]
    det_l = l_mat[0][0] * l_mat[1][1] - l_mat[0][1] * l_mat[1][0]
    q = abs(det_l)
    if q == 0:
        raise ModelError(f"A^{n} - I singular; matrix not hyperbolic")
    if q > MAX_EXACT_DENOMINATOR:
        raise TruncationError(
            f"period {n} needs exact denominator q = {q} > "
            f"{MAX_EXACT_DENOMINATOR}; reduce n_max")
    _, d, v = smith_normal_form(l_mat)
    d1, d2 = d[0][0], d[1][1]
    # Solutions are x = V (i/d1, j/d2) mod 1, numerators mod q = d1*d2.
    i = np.arange(d1, dtype=np.int64) * d2        # i * (q/d1)
    j = np.arange(d2, dtype=np.int64) * d1        # j * (q/d2)
    v00, v01, v10, v11 = (v[0][0] % q, v[0][1] % q, v[1][0] % q, v[1][1] % q)
    xa = (v00 * i[:, None] + v01 * j[None, :]) % q
    xb = (v10 * i[:, None] + v11 * j[None, :]) % q
    return q, xa.reshape(-1), xb.reshape(-1)


def toral_periodic_points(matrix, n: int):
    """All x in [0,1)^2 with (A^n - I) x in Z^2, as exact rationals.

    The list is sorted and has exactly |det(A^n - I)| entries, each a
    pair of Fractions with denominator dividing q = |det(A^n - I)|.
    """
    flat = validate_toral_matrix(matrix)[:4]
    if n < 1:
        raise ParameterError("period n must be >= 1")
    q, xa, xb = _period_numerators(flat, n)
    order = np.lexsort((xb, xa))
    return [(Fraction(int(xa[k]), q), Fraction(int(xb[k]), q))
            for k in order]


def _step(flat_a, q, xa, xb):
    a, b, c, d = flat_a
    return (a * xa + b * xb) % q, (c * xa + d * xb) % q


def _roof_values(roof: RoofFunction, xa, xb, q):
    """Vectorized roof evaluation at rational points (xa/q, xb/q)."""
    if roof.kind == "constant":
        return np.full(xa.shape, roof.c)
    if roof.kind != "trig":
        raise ParameterError("toral suspensions take constant or trig roofs")
    out = np.full(xa.shape, roof.c)
    two_pi = 2.0 * math.pi
    for (k1, k2), amp in sorted(roof.cos_terms.items()):
        phase = two_pi * (((k1 * xa + k2 * xb) % q) / q)
        out += amp * np.cos(phase)
    for (k1, k2), amp in sorted(roof.sin_terms.items()):
        phase = two_pi * (((k1 * xa + k2 * xb) % q) / q)
        out += amp * np.sin(phase)
    return out


def _prime_reps_for_period(flat_a, n: int):
    """Least-period-n orbit representatives among Fix(A^n).

    Returns (q, ra, rb): numerators of the lexicographically least point
    of every prime orbit of least period exactly n.
    """
    q, xa, xb = _period_numerators(flat_a, n)
    cur_a, cur_b = xa.copy(), xb.copy()
    min_a, min_b = xa.copy(), xb.copy()
    period = np.zeros(xa.shape, dtype=np.int32)
    for k in range(1, n + 1):
        cur_a, cur_b = _step(flat_a, q, cur_a, cur_b)
        smaller = (cur_a < min_a) | ((cur_a == min_a) & (cur_b < min_b))
        np.copyto(min_a, cur_a, where=smaller)
        np.copyto(min_b, cur_b, where=smaller)
        first = (period == 0) & (cur_a == xa) & (cur_b == xb)
        period[first] = k
    if not bool(np.all(period > 0)):
        raise ModelError("internal error: point failed to return after n steps")
    keep = (period == n) & (xa == min_a) & (xb == min_b)
    return q, xa[keep], xb[keep]


def _birkhoff_lengths(flat_a, roof, q, ra, rb, n):
    """Compensated (Neumaier) Birkhoff sums of the roof along each orbit."""
    if roof.kind == "constant":
        return np.full(ra.shape, n * roof.c)
    total = np.zeros(ra.shape)
    comp = np.zeros(ra.shape)
    a, b = ra.copy(), rb.copy()
    for _ in range(n):
        r = _roof_values(roof, a, b, q)
        t = total + r
        big = np.abs(total) >= np.abs(r)
        comp += np.where(big, (total - t) + r, (r - t) + total)
        total = t
        a, b = _step(flat_a, q, a, b)
    return total + comp


def toral_suspension_catalog(matrix, roof: RoofFunction, n_max: int,
                             threads: int = 1) -> OrbitCatalog:
    """Complete catalog of the suspension flow over A up to period n_max.

    One PrimeOrbit per A-orbit of least return period n <= n_max.  The
    certified completeness threshold is n_max times the roof's certified
    lower bound: any orbit of period > n_max is at least that long.
    Enumeration shards by period; the shards are independent and merged
    in deterministic order, so the result is identical for any thread
    count.
    """
    flat = validate_toral_matrix(matrix)[:4]
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    det = flat[0] * flat[3] - flat[1] * flat[2]
    a, b, c, d = flat
    inv = SmallMatrix([[d * det, -b * det], [-c * det, a * det]])

    def build_shard(n):
        q, ra, rb = _prime_reps_for_period(flat, n)
        lengths = _birkhoff_lengths(flat, roof, q, ra, rb, n)
        lin = inv.power(n)
        eps = orientation_sign(lin, 1)
        orbits = [
            PrimeOrbit(length=float(lengths[k]),
                       word=f"{int(ra[k])}/{q},{int(rb[k])}/{q}",
                       linearization=lin,
                       orientation=eps,
                       base_period=n)
            for k in range(len(ra))
        ]
        return orbits

    periods = list(range(1, n_max + 1))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            shards = list(pool.map(build_shard, periods))
    else:
        shards = [build_shard(n) for n in periods]

    orbits = [o for shard in shards for o in shard]
    source = {
        "kind": "toral",
        "matrix": [[a, b], [c, d]],
        "roof": roof.to_params(),
        "n_max": n_max,
    }
    if roof.is_constant:
        source["lattice_delta"] = roof.constant_value()
    return OrbitCatalog(
        orbits=tuple(orbits),
        d=3, d_s=1, d_u=1,
        t_complete=n_max * roof.min_bound,
        source=source,
    )
