"""Exact and floating small-matrix exterior-power algebra.

Everything here operates on square matrices of dimension 1..8 (the
transverse dimension d-1 of the flows we catalog).  A matrix is either
*exact* (all entries ``fractions.Fraction``) or *float* (all entries
``float``); mixed matrices are rejected rather than silently promoted, so
exact pipelines stay exact end to end.

The three public operations:

* ``exterior_trace(M, l)``      -- trace of the l-th exterior power,
  computed as the sum of principal l x l minors,
* ``det_one_minus(M)``          -- det(I - M) by direct elimination,
* ``orientation_sign(M, d_s)``  -- the sign (-1)**d_s * sign(det(I - M)),
  i.e. the orientation of the backward return map on the stable bundle.

The alternating sum of exterior traces equals det(I - M); the two code
paths are kept independent so one can cross-check the other.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import NonHyperbolicError, ParameterError

MAX_DIM = 8

# An eigenvalue counts as "on the unit circle" when ||lam| - 1| < UNIT_TOL.
UNIT_TOL = 1e-9

# det(I - M) below this fraction of its Hadamard bound means 1 is
# numerically an eigenvalue of M.
DET_REL_TOL = 1e-12


class SmallMatrix:
    """Immutable square matrix, dim 1..8, uniformly exact or float.

    Construct from an iterable of rows.  ``int`` entries are taken as
    exact and become Fractions; ``float`` entries make the whole matrix
    floating.  A mix of the two kinds raises ParameterError.
    """

    __slots__ = ("dim", "rows", "exact")

    def __init__(self, rows):
        rows = [list(r) for r in rows]
        dim = len(rows)
        if not 1 <= dim <= MAX_DIM:
            raise ParameterError(f"matrix dimension {dim} outside 1..{MAX_DIM}")
        if any(len(r) != dim for r in rows):
            raise ParameterError("matrix is not square")
        kinds = set()
        for r in rows:
            for x in r:
                if isinstance(x, bool):
                    raise ParameterError("bool is not a matrix scalar")
                if isinstance(x, (int, Fraction)):
                    kinds.add("exact")
                elif isinstance(x, float):
                    kinds.add("float")
                else:
                    raise ParameterError(f"unsupported scalar {type(x).__name__}")
        if kinds == {"exact"}:
            exact = True
            rows = [[Fraction(x) for x in r] for r in rows]
        elif kinds == {"float"}:
            exact = False
        else:
            raise ParameterError("mixed exact/float entries are rejected; "
                                 "convert the matrix uniformly first")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "rows", tuple(tuple(r) for r in rows))
        object.__setattr__(self, "exact", exact)

    def __setattr__(self, name, value):
        raise AttributeError("SmallMatrix is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def identity(cls, dim: int, exact: bool = True) -> "SmallMatrix":
        one, zero = (1, 0) if exact else (1.0, 0.0)
        return cls([[one if i == j else zero for j in range(dim)]
                    for i in range(dim)])

    @classmethod
    def diagonal(cls, values) -> "SmallMatrix":
        values = list(values)
        n = len(values)
        zero = 0 if all(isinstance(v, (int, Fraction)) for v in values) else 0.0
        return cls([[values[i] if i == j else zero for j in range(n)]
                    for i in range(n)])

    # -- arithmetic ---------------------------------------------------

    def __matmul__(self, other: "SmallMatrix") -> "SmallMatrix":
        if self.dim != other.dim or self.exact != other.exact:
            raise ParameterError("matrix product needs equal dim and kind")
        n = self.dim
        return SmallMatrix([[sum(self.rows[i][k] * other.rows[k][j]
                                 for k in range(n))
                             for j in range(n)] for i in range(n)])

    def power(self, m: int) -> "SmallMatrix":
        """m-th power, m >= 1, by binary exponentiation (exact stays exact)."""
        if m < 1:
            raise ParameterError("power expects m >= 1")
        result = None
        base = self
        while m:
            if m & 1:
                result = base if result is None else result @ base
            m >>= 1
            if m:
                base = base @ base
        return result

    def trace(self):
        return sum(self.rows[i][i] for i in range(self.dim))

    def to_float_array(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.rows], dtype=float)

    def key(self):
        """Hashable value identity, used for memoising per-matrix work."""
        return (self.exact, self.rows)

    def __eq__(self, other):
        return (isinstance(other, SmallMatrix)
                and self.exact == other.exact and self.rows == other.rows)

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        return f"SmallMatrix({kind}, {self.rows!r})"


def _det_exact(rows) -> Fraction:
    """Determinant over Fractions by Gaussian elimination (exact)."""
    n = len(rows)
    a = [list(r) for r in rows]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = a[col][col]
        for r in range(col + 1, n):
            if a[r][col] != 0:
                factor = a[r][col] / inv
                for c in range(col, n):
                    a[r][c] -= factor * a[col][c]
    return det


def _det_float(rows) -> float:
    """Determinant by partial-pivot elimination; deterministic and cheap
    for the dim <= 8 matrices handled here (no LAPACK call overhead)."""
    n = len(rows)
    a = [list(map(float, r)) for r in rows]
    det = 1.0
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0.0:
            return 0.0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = a[col][col]
        for r in range(col + 1, n):
            if a[r][col] != 0.0:
                factor = a[r][col] / inv
                for c in range(col + 1, n):
                    a[r][c] -= factor * a[col][c]
    return det


def _det(rows, exact: bool):
    if exact:
        return _det_exact(rows)
    return _det_float(rows)


def exterior_trace(matrix: SmallMatrix, ell: int):
    """Trace of the ell-th exterior power: sum of principal ell-minors.

    ell = 0 gives 1 and ell = dim gives det(M).  Minor enumeration (at
    most 2**8 subsets) keeps exact inputs exact.
    """
    if not 0 <= ell <= matrix.dim:
        raise ParameterError(f"ell={ell} outside 0..{matrix.dim}")
    if ell == 0:
        return Fraction(1) if matrix.exact else 1.0
    total = Fraction(0) if matrix.exact else 0.0
    terms = []
    for subset in combinations(range(matrix.dim), ell):
        sub = [[matrix.rows[i][j] for j in subset] for i in subset]
        terms.append(_det(sub, matrix.exact))
    if matrix.exact:
        for t in terms:
            total += t
        return total
    return math.fsum(terms)


def exterior_trace_vector(matrix: SmallMatrix):
    """All exterior traces t_0..t_dim as a tuple (t_0 = 1, t_dim = det)."""
    return tuple(exterior_trace(matrix, ell) for ell in range(matrix.dim + 1))


def det_one_minus(matrix: SmallMatrix):
    """det(I - M) by direct elimination (not via the alternating sum;
    that identity is the cross-check, not the implementation)."""
    one = Fraction(1) if matrix.exact else 1.0
    zero = Fraction(0) if matrix.exact else 0.0
    rows = [[(one if i == j else zero) - matrix.rows[i][j]
             for j in range(matrix.dim)] for i in range(matrix.dim)]
    return _det(rows, matrix.exact)


def _hadamard_bound(matrix: SmallMatrix) -> float:
    """Row-norm (Hadamard) bound for |det(I - M)|, used as the relative
    scale of the hyperbolicity tolerance."""
    a = np.eye(matrix.dim) - matrix.to_float_array()
    norms = np.sqrt((a * a).sum(axis=1))
    return float(np.prod(np.maximum(norms, 1.0)))


def orientation_sign(matrix: SmallMatrix, d_s: int) -> int:
    """Orientation of the backward flow on the stable bundle.

    Returns (-1)**d_s * sign(det(I - M)), which equals the sign of the
    determinant of the backward derivative restricted to the stable
    directions.  Raises NonHyperbolicError when det(I - M) is too close
    to zero relative to its Hadamard bound (eigenvalue ~ 1).
    """
    det = det_one_minus(matrix)
    scale = _hadamard_bound(matrix)
    if abs(float(det)) < DET_REL_TOL * scale:
        raise NonHyperbolicError(
            f"det(I - M) = {float(det):.3e} within {DET_REL_TOL:g} of zero "
            f"(relative scale {scale:.3e}); matrix has an eigenvalue ~ 1")
    sign = 1 if det > 0 else -1
    return sign if d_s % 2 == 0 else -sign


def is_hyperbolic(matrix: SmallMatrix, tol: float = UNIT_TOL) -> bool:
    """True when no eigenvalue has modulus within tol of 1."""
    eigs = np.linalg.eigvals(matrix.to_float_array())
    return bool(np.all(np.abs(np.abs(eigs) - 1.0) >= tol))
