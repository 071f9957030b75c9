"""Suspension semiflows over subshifts of finite type.

Prime cycles of the shift are exactly the admissible Lyndon words: each
primitive necklace has a unique lexicographically minimal rotation.  The
generator below is the Cattell-Ruskey recursion with adjacency pruning
(branches whose last transition is inadmissible are abandoned early),
which emits each admissible Lyndon word once in lexicographic order;
the wrap-around transition is checked at emission.

Cycle lengths are sums of per-transition roof times; linearizations are
ordered products of per-transition cocycle matrices (by default the
diagonal expansion/contraction pair diag(f, 1/f) with a user-chosen
factor f, making every cycle product hyperbolic with one stable and one
unstable direction).
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from ..catalog import OrbitCatalog, PrimeOrbit
from ..errors import ModelError, ParameterError
from ..linalg_ext import SmallMatrix, is_hyperbolic, orientation_sign

MAX_ALPHABET = 10  # words are digit strings


def _validate_adjacency(adjacency) -> np.ndarray:
    adj = np.asarray(adjacency, dtype=np.int64)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ModelError("adjacency must be a square matrix")
    if adj.shape[0] > MAX_ALPHABET:
        raise ModelError(f"alphabet larger than {MAX_ALPHABET} not supported")
    if not np.isin(adj, (0, 1)).all():
        raise ModelError("adjacency entries must be 0 or 1")
    k = adj.shape[0]
    # irreducible <=> strongly connected: BFS forward and backward from 0
    for mat in (adj, adj.T):
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in range(k):
                if mat[u][v] and v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != k:
            raise ModelError("adjacency matrix is reducible "
                             "(not strongly connected)")
    return adj


def _lyndon_words(length: int, k: int, adj) -> list:
    """Admissible Lyndon words of exactly this length (lexicographic)."""
    word = [0] * length
    out = []

    def rec(t, p):
        if t == length:
            if p == length and adj[word[-1]][word[0]]:
                out.append(tuple(word))
            return
        start = word[t - p]
        for c in range(start, k):
            if t > 0 and not adj[word[t - 1]][c]:
                continue
            word[t] = c
            rec(t + 1, p if c == start else t + 1)

    for c in range(k):
        word[0] = c
        rec(1, 1)
    return out


def _normalize_roof(roof, k: int, adj) -> dict:
    """Per-transition roof table from flexible input.

    Accepts a scalar (uniform), a per-symbol mapping {a: r}, or a
    per-transition mapping {(a, b): r}; validates positivity on every
    admissible transition.
    """
    table = {}
    if roof is None:
        roof = 1.0
    if isinstance(roof, (int, float)):
        for a in range(k):
            for b in range(k):
                if adj[a][b]:
                    table[(a, b)] = float(roof)
    elif isinstance(roof, dict):
        by_symbol = all(isinstance(key, int) for key in roof)
        for a in range(k):
            for b in range(k):
                if not adj[a][b]:
                    continue
                if by_symbol:
                    if a not in roof:
                        raise ParameterError(f"roof missing symbol {a}")
                    table[(a, b)] = float(roof[a])
                else:
                    if (a, b) not in roof:
                        raise ParameterError(f"roof missing transition {(a, b)}")
                    table[(a, b)] = float(roof[(a, b)])
    else:
        raise ParameterError("roof must be a scalar or a mapping")
    if not all(v > 0 for v in table.values()):
        raise ParameterError("all roof times must be positive")
    return table


def _cocycle_table(cocycle, k: int, adj, expansion: float) -> dict:
    if cocycle is None:
        if not expansion > 1.0:
            raise ParameterError("default cocycle needs expansion factor > 1")
        base = SmallMatrix.diagonal([float(expansion), 1.0 / float(expansion)])
        return {(a, b): base for a in range(k) for b in range(k) if adj[a][b]}
    table = {}
    dims = set()
    for a in range(k):
        for b in range(k):
            if not adj[a][b]:
                continue
            if (a, b) not in cocycle:
                raise ParameterError(f"cocycle missing transition {(a, b)}")
            m = cocycle[(a, b)]
            if not isinstance(m, SmallMatrix):
                m = SmallMatrix(m)
            table[(a, b)] = m
            dims.add(m.dim)
    if len(dims) != 1:
        raise ModelError("cocycle matrices must share one dimension")
    return table


def sft_catalog(adjacency, roof=None, cocycle=None, n_max: int = 1,
                expansion: float = 2.0) -> OrbitCatalog:
    """Catalog of prime cycles of an irreducible subshift, as a suspension.

    One PrimeOrbit per admissible Lyndon word of length <= n_max whose
    wrap-around closure is admissible; length is the roof sum around the
    cycle and the linearization the ordered cocycle product.  Cycles
    whose product fails hyperbolicity are rejected individually with a
    warning naming the word.
    """
    adj = _validate_adjacency(adjacency)
    k = adj.shape[0]
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    roof_table = _normalize_roof(roof, k, adj)
    coc = _cocycle_table(cocycle, k, adj, expansion)

    rows = []
    d_s_seen = set()
    for length in range(1, n_max + 1):
        for word in _lyndon_words(length, k, adj):
            transitions = [(word[i], word[(i + 1) % length])
                           for i in range(length)]
            lam = math.fsum(roof_table[tr] for tr in transitions)
            lin = None
            for tr in transitions:
                lin = coc[tr] if lin is None else coc[tr] @ lin
            if not is_hyperbolic(lin):
                warnings.warn(f"cycle {''.join(map(str, word))!r} rejected: "
                              f"cocycle product not hyperbolic")
                continue
            eigs = np.linalg.eigvals(lin.to_float_array())
            d_s = int(np.sum(np.abs(eigs) > 1.0))
            d_s_seen.add(d_s)
            rows.append((lam, "".join(map(str, word)), lin, length))

    if not rows:
        raise ModelError("no admissible prime cycles below n_max")
    if len(d_s_seen) != 1:
        raise ModelError(f"inconsistent stable dimensions across cycles: "
                         f"{sorted(d_s_seen)}")
    d_s = d_s_seen.pop()
    dim = rows[0][2].dim
    d_u = dim - d_s
    if d_s < 1 or d_u < 1:
        raise ModelError(f"cycle products need both expansion and "
                         f"contraction; got d_s={d_s}, d_u={d_u}")

    primes = tuple(
        PrimeOrbit(length=lam, word=word, linearization=lin,
                   orientation=orientation_sign(lin, d_s), base_period=bp)
        for lam, word, lin, bp in rows)
    source = {
        "kind": "sft",
        "adjacency": adj.tolist(),
        "roof": {f"{a},{b}": v for (a, b), v in sorted(roof_table.items())},
        "n_max": n_max,
    }
    if cocycle is None:
        source["expansion"] = float(expansion)
    roof_values = set(roof_table.values())
    if len(roof_values) == 1:
        source["lattice_delta"] = roof_values.pop()
    return OrbitCatalog(
        orbits=primes, d=dim + 1, d_s=d_s, d_u=d_u,
        t_complete=n_max * min(roof_table.values()),
        source=source)
