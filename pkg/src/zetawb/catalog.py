"""Orbit-catalog data model, validation and JSON persistence.

An OrbitCatalog is the complete, deduplicated set of prime closed orbits
of one model flow up to a certified length threshold ``t_complete``,
together with the splitting dimensions (d, d_s, d_u).  Each PrimeOrbit
carries its length, a canonical symbolic word, the linearized backward
return map (exact when the model admits it) and the orientation sign of
the backward flow on the stable bundle.

Catalog files are JSON with a fixed schema::

    {"meta": {"source": ..., "d": ..., "ds": ..., "du": ...,
              "t_complete": ..., "generator_params": {...}},
     "orbits": [{"lambda": ..., "word": ..., "lin": [[...]],
                 "eps": +-1, "base_period": ...}, ...]}

Orbits are sorted by (lambda, word); doubles are emitted with 17
significant digits; exact matrix entries are "p/q" strings.  Writing is
byte-deterministic so identical catalogs compare equal as files.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .errors import ModelError, ParameterError, ValidationFailure
from .linalg_ext import SmallMatrix, is_hyperbolic, orientation_sign


# ---------------------------------------------------------------------------
# Roof functions


class RoofFunction:
    """Strictly positive return-time function of a suspension.

    Variants:
      constant(c)              -- every step takes time c,
      trig(c, cos_terms, sin_terms)
                               -- c + sum a_k cos(2 pi <k,x>) + b_k sin(...),
                                  keyed by integer frequency vectors k,
      table(values)            -- per-symbol or per-transition times for
                                  symbolic models.

    Positivity is validated on construction: a constant needs c > 0, a
    trig polynomial needs c - sum(|a_k| + |b_k|) > 0, a table needs all
    entries > 0.  ``min_bound`` is the certified pointwise lower bound
    used for completeness thresholds.
    """

    def __init__(self, kind, c=None, cos_terms=None, sin_terms=None, values=None):
        self.kind = kind
        if kind == "constant":
            if not c > 0:
                raise ParameterError("constant roof needs c > 0")
            self.c = float(c)
        elif kind == "trig":
            self.c = float(c)
            self.cos_terms = {tuple(int(v) for v in k): float(a)
                              for k, a in (cos_terms or {}).items()}
            self.sin_terms = {tuple(int(v) for v in k): float(b)
                              for k, b in (sin_terms or {}).items()}
            margin = self.c - sum(abs(a) for a in self.cos_terms.values()) \
                            - sum(abs(b) for b in self.sin_terms.values())
            if not margin > 0:
                raise ParameterError(
                    f"trig roof not certifiably positive (margin {margin:g})")
        elif kind == "table":
            self.values = {k: float(v) for k, v in values.items()}
            if not self.values or not all(v > 0 for v in self.values.values()):
                raise ParameterError("table roof needs all entries > 0")
        else:
            raise ParameterError(f"unknown roof kind {kind!r}")

    @classmethod
    def constant(cls, c):
        return cls("constant", c=c)

    @classmethod
    def trig(cls, c, cos_terms=None, sin_terms=None):
        return cls("trig", c=c, cos_terms=cos_terms, sin_terms=sin_terms)

    @classmethod
    def table(cls, values):
        return cls("table", values=values)

    @property
    def min_bound(self) -> float:
        if self.kind == "constant":
            return self.c
        if self.kind == "trig":
            return self.c - sum(abs(a) for a in self.cos_terms.values()) \
                          - sum(abs(b) for b in self.sin_terms.values())
        return min(self.values.values())

    @property
    def is_constant(self) -> bool:
        if self.kind == "constant":
            return True
        if self.kind == "trig":
            return not self.cos_terms and not self.sin_terms
        return len(set(self.values.values())) == 1

    def constant_value(self) -> float:
        if not self.is_constant:
            raise ParameterError("roof is not constant")
        if self.kind == "table":
            return next(iter(self.values.values()))
        return self.c

    def to_params(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "c": self.c}
        if self.kind == "trig":
            return {"kind": "trig", "c": self.c,
                    "cos": {",".join(map(str, k)): v
                            for k, v in sorted(self.cos_terms.items())},
                    "sin": {",".join(map(str, k)): v
                            for k, v in sorted(self.sin_terms.items())}}
        return {"kind": "table",
                "values": {str(k): v for k, v in sorted(self.values.items())}}

    @classmethod
    def from_params(cls, params: dict) -> "RoofFunction":
        kind = params["kind"]
        if kind == "constant":
            return cls.constant(params["c"])
        if kind == "trig":
            cos_terms = {tuple(int(s) for s in k.split(",")): v
                         for k, v in params.get("cos", {}).items()}
            sin_terms = {tuple(int(s) for s in k.split(",")): v
                         for k, v in params.get("sin", {}).items()}
            return cls.trig(params["c"], cos_terms, sin_terms)
        if kind == "table":
            return cls.table(params["values"])
        raise ParameterError(f"unknown roof kind {kind!r}")


# ---------------------------------------------------------------------------
# Orbits


@dataclass(frozen=True)
class PrimeOrbit:
    """One prime closed orbit.

    length        flow time of a single traversal (> 0)
    word          canonical symbolic representative (sort/dedup key)
    linearization backward return-map derivative, a (d-1)x(d-1) SmallMatrix
    orientation   +-1, orientation of the backward flow on the stable bundle
    base_period   return-map period / word length (0 when not applicable)
    """

    length: float
    word: str
    linearization: SmallMatrix
    orientation: int
    base_period: int = 0

    def __post_init__(self):
        if not self.length > 0:
            raise ParameterError(f"orbit length {self.length} must be > 0")
        if self.orientation not in (+1, -1):
            raise ParameterError("orientation must be +1 or -1")


@dataclass(frozen=True)
class OrbitInstance:
    """A prime orbit traversed ``repetition`` times."""

    prime: PrimeOrbit
    repetition: int

    def __post_init__(self):
        if self.repetition < 1:
            raise ParameterError("repetition must be >= 1")

    @property
    def length(self) -> float:
        return self.repetition * self.prime.length

    @property
    def multiplicity(self) -> int:
        return self.repetition


@dataclass
class OrbitCatalog:
    """Complete set of prime orbits below a certified length threshold.

    ``source`` is a plain dict descriptor: at least {"kind": ...} plus
    whatever generator parameters the builder wants to persist (these
    round-trip through the JSON file and let validation re-derive
    model-specific facts).  ``source["lattice_delta"]``, when present,
    asserts that every orbit length is an exact integer multiple of that
    spacing (constant-roof suspensions); the evaluation engine uses it
    for exact imaginary-period reduction.
    """

    orbits: tuple
    d: int
    d_s: int
    d_u: int
    t_complete: float
    source: dict
    _caches: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.d_s < 1 or self.d_u < 1 or self.d_s + self.d_u + 1 != self.d:
            raise ParameterError(
                f"need d_s>=1, d_u>=1, d_s+d_u+1=d; got d={self.d}, "
                f"d_s={self.d_s}, d_u={self.d_u}")
        self.orbits = tuple(sorted(self.orbits,
                                   key=lambda o: (o.length, o.word)))

    def __len__(self):
        return len(self.orbits)

    @property
    def lattice_delta(self) -> Optional[float]:
        return self.source.get("lattice_delta")

    def instances(self, t_max: float) -> Iterable[OrbitInstance]:
        """All (prime, repetition) pairs with total length <= t_max, in
        catalog order then by repetition."""
        for orbit in self.orbits:
            m = 1
            while m * orbit.length <= t_max:
                yield OrbitInstance(orbit, m)
                m += 1

    def rescaled(self, c: float) -> "OrbitCatalog":
        """Same combinatorial catalog with all lengths multiplied by c > 0."""
        if not c > 0:
            raise ParameterError("rescaling factor must be > 0")
        orbits = tuple(PrimeOrbit(o.length * c, o.word, o.linearization,
                                  o.orientation, o.base_period)
                       for o in self.orbits)
        source = {"kind": "rescaled", "scale": c,
                  "base": self.source.get("kind", "unknown")}
        if self.lattice_delta is not None:
            source["lattice_delta"] = self.lattice_delta * c
        return OrbitCatalog(orbits, self.d, self.d_s, self.d_u,
                            self.t_complete * c, source)


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    ok: bool
    failures: list
    n_orbits: int
    min_length: float
    max_length: float
    length_bins: dict

    def raise_on_failure(self):
        if not self.ok:
            raise ValidationFailure("; ".join(self.failures[:8]))


def _rederive_linearization(catalog: OrbitCatalog, orbit: PrimeOrbit):
    """Model-specific expected linearization, or None when the source
    descriptor does not pin one down."""
    kind = catalog.source.get("kind")
    if kind == "toral" and "matrix" in catalog.source:
        a, b = catalog.source["matrix"][0]
        c, dd = catalog.source["matrix"][1]
        det = a * dd - b * c
        inv = SmallMatrix([[dd * det, -b * det], [-c * det, a * det]])
        return inv.power(orbit.base_period)
    if kind in ("fuchsian", "punctured-torus", "bolza"):
        lam = orbit.length
        return SmallMatrix.diagonal([math.exp(lam), math.exp(-lam)])
    if kind == "sft" and "expansion" in catalog.source:
        lam = float(catalog.source["expansion"]) ** orbit.base_period
        return SmallMatrix.diagonal([lam, 1.0 / lam])
    return None


def _matrices_close(m1: SmallMatrix, m2: SmallMatrix, rtol=1e-12) -> bool:
    if m1.dim != m2.dim:
        return False
    if m1.exact and m2.exact:
        return m1.rows == m2.rows
    scale = max(1.0, max(abs(float(x)) for r in m1.rows for x in r))
    return all(abs(float(m1.rows[i][j]) - float(m2.rows[i][j])) <= rtol * scale
               for i in range(m1.dim) for j in range(m1.dim))


def catalog_validate(catalog: OrbitCatalog) -> ValidationReport:
    """Re-check all catalog invariants.

    Structural: sortedness, word uniqueness, positive lengths, matrix
    dimension d-1.  Dynamical: every linearization hyperbolic, stored
    orientation equal to the recomputed sign, and (when the source
    descriptor pins the model down) the linearization itself equal to
    the re-derived one.  Returns a report with per-bin orbit counts.
    """
    failures = []
    words = set()
    prev_key = None
    bins: dict = {}
    for orbit in catalog.orbits:
        tag = f"orbit {orbit.word!r}"
        key = (orbit.length, orbit.word)
        if prev_key is not None and key < prev_key:
            failures.append(f"{tag}: catalog not sorted by (length, word)")
        prev_key = key
        if orbit.word in words:
            failures.append(f"{tag}: duplicate canonical word")
        words.add(orbit.word)
        if not orbit.length > 0:
            failures.append(f"{tag}: non-positive length")
        if orbit.linearization.dim != catalog.d - 1:
            failures.append(f"{tag}: linearization dim {orbit.linearization.dim}"
                            f" != d-1 = {catalog.d - 1}")
            continue
        if not is_hyperbolic(orbit.linearization):
            failures.append(f"{tag}: linearization not hyperbolic")
            continue
        eps = orientation_sign(orbit.linearization, catalog.d_s)
        if eps != orbit.orientation:
            failures.append(f"{tag}: stored orientation {orbit.orientation} "
                            f"!= recomputed {eps}")
        expected = _rederive_linearization(catalog, orbit)
        if expected is not None and not _matrices_close(orbit.linearization,
                                                        expected):
            failures.append(f"{tag}: linearization inconsistent with "
                            f"{catalog.source.get('kind')} model")
        bins[int(orbit.length)] = bins.get(int(orbit.length), 0) + 1
    lengths = [o.length for o in catalog.orbits]
    return ValidationReport(
        ok=not failures,
        failures=failures,
        n_orbits=len(catalog.orbits),
        min_length=min(lengths) if lengths else float("nan"),
        max_length=max(lengths) if lengths else float("nan"),
        length_bins=dict(sorted(bins.items())),
    )


# ---------------------------------------------------------------------------
# JSON persistence


def _format_double(x: float) -> str:
    if not math.isfinite(x):
        raise ParameterError(f"non-finite double {x!r} cannot be serialized")
    return format(float(x), ".17g")


def _emit(obj, out):
    """Minimal JSON emitter with 17-significant-digit doubles.

    The stdlib encoder writes shortest-roundtrip floats; the catalog
    format pins 17 significant digits instead, so doubles are formatted
    here explicitly.  Dict insertion order is preserved (deterministic).
    """
    if isinstance(obj, dict):
        out.write("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.write(",")
            out.write(json.dumps(k))
            out.write(":")
            _emit(v, out)
        out.write("}")
    elif isinstance(obj, (list, tuple)):
        out.write("[")
        for i, v in enumerate(obj):
            if i:
                out.write(",")
            _emit(v, out)
        out.write("]")
    elif isinstance(obj, bool):
        out.write("true" if obj else "false")
    elif isinstance(obj, float):
        out.write(_format_double(obj))
    elif isinstance(obj, int):
        out.write(str(obj))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif obj is None:
        out.write("null")
    else:
        raise ParameterError(f"cannot serialize {type(obj).__name__}")


def _matrix_to_json(m: SmallMatrix):
    if m.exact:
        return [[f"{x.numerator}/{x.denominator}" for x in row]
                for row in m.rows]
    return [list(row) for row in m.rows]


def _matrix_from_json(rows):
    def parse(x):
        if isinstance(x, str):
            p, q = x.split("/")
            return Fraction(int(p), int(q))
        return float(x)

    return SmallMatrix([[parse(x) for x in row] for row in rows])


def dumps_json(obj) -> str:
    """Serialize a report object with the same 17-significant-digit
    doubles and deterministic ordering as catalog files."""
    out = io.StringIO()
    _emit(obj, out)
    out.write("\n")
    return out.getvalue()


def catalog_to_json(catalog: OrbitCatalog) -> str:
    source = dict(catalog.source)
    kind = source.pop("kind", "unknown")
    doc = {
        "meta": {
            "source": kind,
            "d": catalog.d,
            "ds": catalog.d_s,
            "du": catalog.d_u,
            "t_complete": float(catalog.t_complete),
            "generator_params": source,
        },
        "orbits": [
            {
                "lambda": float(o.length),
                "word": o.word,
                "lin": _matrix_to_json(o.linearization),
                "eps": o.orientation,
                "base_period": o.base_period,
            }
            for o in catalog.orbits
        ],
    }
    out = io.StringIO()
    _emit(doc, out)
    out.write("\n")
    return out.getvalue()


def catalog_from_json(text: str) -> OrbitCatalog:
    try:
        doc = json.loads(text)
        meta = doc["meta"]
        orbits = tuple(
            PrimeOrbit(
                length=float(rec["lambda"]),
                word=rec["word"],
                linearization=_matrix_from_json(rec["lin"]),
                orientation=int(rec["eps"]),
                base_period=int(rec["base_period"]),
            )
            for rec in doc["orbits"]
        )
        source = dict(meta.get("generator_params", {}))
        source["kind"] = meta["source"]
        return OrbitCatalog(
            orbits=orbits,
            d=int(meta["d"]),
            d_s=int(meta["ds"]),
            d_u=int(meta["du"]),
            t_complete=float(meta["t_complete"]),
            source=source,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ModelError(f"malformed catalog file: {exc}") from exc


def write_catalog(catalog: OrbitCatalog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(catalog_to_json(catalog))


def read_catalog(path) -> OrbitCatalog:
    with open(path, "r", encoding="utf-8") as fh:
        return catalog_from_json(fh.read())
