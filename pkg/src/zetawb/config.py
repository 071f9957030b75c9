"""Job configuration: flat key-value INI with sectioned tables.

A JobConfig is a typed (section, key) -> value mapping validated against
SCHEMA; unknown sections or keys are rejected so a config file cannot
silently misspell an option.  Files round-trip losslessly: floats are
written with repr (shortest exact form), bools as true/false.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from .errors import ParameterError

SCHEMA = {
    "job": {"command": str, "threads": int, "seed": int},
    "model": {
        "kind": str,          # cat | fib | toral | sft | ptorus | bolza
        "matrix": str,        # "2,1;1,1"
        "roof": str,          # "const:1" | "trig:c=1;cos(1,0)=0.3;sin(1,1)=0.1"
        "n_max": int,
        "alphabet": int,      # full shift size (sft)
        "adjacency": str,     # "1,1;1,0" (sft)
        "sft_roof": str,      # "0=0.693;1=1.098" or "0,1=0.5;..." (sft)
        "expansion": float,   # default cocycle factor (sft)
        "l_max": int,         # word-length cutoff (fuchsian)
        "angle_step": float,  # bolza axis step (radians)
    },
    "truncation": {"t_max": float, "n_series": int, "abs_tol": float,
                   "allow_partial": bool},
    "grid": {"re": str, "im": str, "quantities": str, "mock_xi": str,
             "selberg_kmax": int, "flat_ell": int},
    "resonances": {"ell": int, "probe": str, "n": int, "rect": str,
                   "newton_tol": float, "poly_depth": int, "xi": str},
    "count": {"h": str, "t_grid": str, "override_nonmixing": bool},
    "output": {"catalog": str, "csv": str, "json": str, "figdir": str},
}

DEFAULTS = {
    ("job", "threads"): 1,
    ("job", "seed"): 0,
    ("truncation", "n_series"): 30,
    ("truncation", "abs_tol"): 1e-12,
    ("truncation", "allow_partial"): False,
    ("grid", "selberg_kmax"): 40,
    ("resonances", "n"): 8,
    ("resonances", "newton_tol"): 1e-10,
    ("resonances", "poly_depth"): 8,
    ("count", "h"): "auto",
    ("count", "override_nonmixing"): False,
    ("model", "expansion"): 2.0,
}


@dataclass
class JobConfig:
    """Validated (section, key) -> value store."""

    values: dict = field(default_factory=dict)

    def set(self, section: str, key: str, value) -> None:
        typ = SCHEMA.get(section, {}).get(key)
        if typ is None:
            raise ParameterError(f"unknown config key [{section}] {key}")
        if value is None:
            self.values.pop((section, key), None)
            return
        if typ is bool and not isinstance(value, bool):
            raise ParameterError(f"[{section}] {key} expects a bool")
        if typ in (int, float) and isinstance(value, bool):
            raise ParameterError(f"[{section}] {key} expects {typ.__name__}")
        self.values[(section, key)] = typ(value)

    def get(self, section: str, key: str, default=None):
        if (section, key) in self.values:
            return self.values[(section, key)]
        if (section, key) in DEFAULTS and default is None:
            return DEFAULTS[(section, key)]
        return default

    def require(self, section: str, key: str):
        value = self.get(section, key)
        if value is None:
            raise ParameterError(f"missing required config key "
                                 f"[{section}] {key}")
        return value

    def __eq__(self, other):
        return isinstance(other, JobConfig) and self.values == other.values

    # -- INI round trip -------------------------------------------------

    def to_ini(self) -> str:
        out = io.StringIO()
        sections = sorted({s for s, _ in self.values})
        for section in sections:
            out.write(f"[{section}]\n")
            for key in sorted(k for s, k in self.values if s == section):
                value = self.values[(section, key)]
                if isinstance(value, bool):
                    text = "true" if value else "false"
                elif isinstance(value, float):
                    text = repr(value)
                else:
                    text = str(value)
                out.write(f"{key} = {text}\n")
            out.write("\n")
        return out.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "JobConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ParameterError(f"malformed config: {exc}") from exc
        cfg = cls()
        for section in parser.sections():
            if section not in SCHEMA:
                raise ParameterError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                typ = SCHEMA[section].get(key)
                if typ is None:
                    raise ParameterError(f"unknown config key "
                                         f"[{section}] {key}")
                if typ is bool:
                    low = raw.strip().lower()
                    if low not in ("true", "false"):
                        raise ParameterError(
                            f"[{section}] {key} expects true/false, "
                            f"got {raw!r}")
                    value = low == "true"
                elif typ in (int, float):
                    try:
                        value = typ(raw)
                    except ValueError as exc:
                        raise ParameterError(
                            f"[{section}] {key} expects {typ.__name__}, "
                            f"got {raw!r}") from exc
                else:
                    value = raw
                cfg.values[(section, key)] = value
        return cfg

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_ini())

    @classmethod
    def read(cls, path) -> "JobConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_ini(fh.read())


# ---------------------------------------------------------------------------
# Small value parsers shared by CLI and config consumers


def parse_matrix(text: str):
    """'2,1;1,1' -> [[2, 1], [1, 1]] (integers)."""
    try:
        return [[int(x) for x in row.split(",")] for row in text.split(";")]
    except ValueError as exc:
        raise ParameterError(f"bad matrix spec {text!r}") from exc


def parse_float_matrix(text: str):
    try:
        return [[float(x) for x in row.split(",")] for row in text.split(";")]
    except ValueError as exc:
        raise ParameterError(f"bad matrix spec {text!r}") from exc


def parse_roof(text: str):
    """Roof grammar: 'const:<c>' or
    'trig:c=<c>;cos(<k1>,<k2>)=<a>;sin(<k1>,<k2>)=<b>;...'."""
    from .catalog import RoofFunction

    if text.startswith("const:"):
        return RoofFunction.constant(float(text[6:]))
    if text.startswith("trig:"):
        c = None
        cos_terms, sin_terms = {}, {}
        for part in text[5:].split(";"):
            part = part.strip()
            if not part:
                continue
            key, _, val = part.partition("=")
            key = key.strip()
            if key == "c":
                c = float(val)
            elif key.startswith("cos(") and key.endswith(")"):
                k = tuple(int(v) for v in key[4:-1].split(","))
                cos_terms[k] = float(val)
            elif key.startswith("sin(") and key.endswith(")"):
                k = tuple(int(v) for v in key[4:-1].split(","))
                sin_terms[k] = float(val)
            else:
                raise ParameterError(f"bad roof term {part!r}")
        if c is None:
            raise ParameterError("trig roof needs a constant term c=...")
        return RoofFunction.trig(c, cos_terms, sin_terms)
    raise ParameterError(f"bad roof spec {text!r} (use const:<c> or trig:...)")


def parse_sft_roof(text: str):
    """'0=0.693;1=1.098' (per symbol) or '0,1=0.5;1,0=0.25' (per transition)."""
    table = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        key, _, val = part.partition("=")
        key = key.strip()
        if "," in key:
            a, b = key.split(",")
            table[(int(a), int(b))] = float(val)
        else:
            table[int(key)] = float(val)
    if not table:
        raise ParameterError(f"empty sft roof spec {text!r}")
    return table


def parse_range(text: str):
    """'lo:hi:steps' -> evenly spaced float list (steps >= 1)."""
    try:
        lo_s, hi_s, n_s = text.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError as exc:
        raise ParameterError(f"bad range spec {text!r} "
                             f"(expected lo:hi:steps)") from exc
    if n < 1:
        raise ParameterError("range needs at least one step")
    if n == 1:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def parse_complex(text: str) -> complex:
    """'re,im' -> complex."""
    try:
        re_s, im_s = text.split(",")
        return complex(float(re_s), float(im_s))
    except ValueError as exc:
        raise ParameterError(f"bad complex spec {text!r} "
                             f"(expected re,im)") from exc


def parse_rect(text: str):
    """'re_min:re_max:im_min:im_max' -> Rectangle."""
    from .resonances import Rectangle

    try:
        parts = [float(x) for x in text.split(":")]
        re_min, re_max, im_min, im_max = parts
    except ValueError as exc:
        raise ParameterError(f"bad rectangle spec {text!r}") from exc
    return Rectangle(re_min, re_max, im_min, im_max)
