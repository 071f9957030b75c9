"""Command-line front end.

Subcommands::

    zetawb orbits      build a catalog file from a model spec
    zetawb zeta-grid   evaluate zeta/determinant/trace quantities on a grid
    zetawb resonances  leading-resonance estimates, winding counts, Newton
    zetawb count       prime-orbit counting report
    zetawb verify      run the identity suite against a catalog

Options can come from flags or from an INI config (--config, same keys;
flags win).  --dump-config writes the resolved configuration back out.
The worker-pool size comes from --threads, overridden by the
ZETAWB_THREADS environment variable.  Passing --figdir renders
matplotlib figures next to the delimited output.

Exit codes: 0 success, 1 verification failure, 2 model error, 3 partial
evaluation failure, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import config as cfgmod
from .catalog import dumps_json, read_catalog, write_catalog
from .config import JobConfig
from .counting import counting_report, entropy_estimate
from .engine import (MockDeterminantPoly, TruncationPolicy,
                     dyn_determinant_log, flat_trace, mock_determinant_log,
                     ruelle_log, selberg_log)
from .errors import (EvaluationError, ModelError, NonConvergenceError,
                     ParameterError, TruncationError, ValidationFailure,
                     ZetawbError)
from .resonances import leading_resonance, newton_refine, winding_count
from .sources import (bolza_catalog, fuchsian_catalog, punctured_torus_catalog,
                      sft_catalog, toral_suspension_catalog)
from .verify import run_verification

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_MODEL_ERROR = 2
EXIT_PARTIAL = 3
EXIT_NO_CONVERGENCE = 4


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# Config assembly


def _config_from_args(args) -> JobConfig:
    cfg = JobConfig()
    if getattr(args, "config", None):
        cfg = JobConfig.read(args.config)
    for section, key, attr in _FLAG_MAP:
        value = getattr(args, attr, None)
        if value is not None:
            cfg.set(section, key, value)
    cfg.set("job", "command", args.command)
    if os.environ.get("ZETAWB_THREADS"):
        cfg.set("job", "threads", int(os.environ["ZETAWB_THREADS"]))
    if getattr(args, "dump_config", None):
        cfg.write(args.dump_config)
    return cfg


_FLAG_MAP = [
    ("job", "threads", "threads"),
    ("job", "seed", "seed"),
    ("model", "kind", "model"),
    ("model", "matrix", "matrix"),
    ("model", "roof", "roof"),
    ("model", "n_max", "nmax"),
    ("model", "alphabet", "alphabet"),
    ("model", "adjacency", "adjacency"),
    ("model", "sft_roof", "sft_roof"),
    ("model", "expansion", "expansion"),
    ("model", "l_max", "lmax"),
    ("model", "angle_step", "angle_step"),
    ("truncation", "t_max", "tmax"),
    ("truncation", "n_series", "nseries"),
    ("truncation", "abs_tol", "abs_tol"),
    ("truncation", "allow_partial", "allow_partial"),
    ("grid", "re", "re"),
    ("grid", "im", "im"),
    ("grid", "quantities", "quantities"),
    ("grid", "mock_xi", "mock_xi"),
    ("grid", "selberg_kmax", "selberg_kmax"),
    ("grid", "flat_ell", "flat_ell"),
    ("resonances", "ell", "ell"),
    ("resonances", "probe", "probe"),
    ("resonances", "n", "depth"),
    ("resonances", "rect", "rect"),
    ("resonances", "newton_tol", "newton_tol"),
    ("resonances", "poly_depth", "poly_depth"),
    ("resonances", "xi", "xi"),
    ("count", "h", "entropy"),
    ("count", "t_grid", "tgrid"),
    ("count", "override_nonmixing", "override_nonmixing"),
    ("output", "catalog", "catalog"),
    ("output", "csv", "out"),
    ("output", "json", "json_out"),
    ("output", "figdir", "figdir"),
]


def _build_catalog(cfg: JobConfig):
    kind = cfg.require("model", "kind")
    threads = cfg.get("job", "threads")
    if kind in ("cat", "fib", "toral"):
        if kind == "cat":
            matrix = [[2, 1], [1, 1]]
        elif kind == "fib":
            matrix = [[1, 1], [1, 0]]
        else:
            matrix = cfgmod.parse_matrix(cfg.require("model", "matrix"))
        roof = cfgmod.parse_roof(cfg.get("model", "roof", "const:1"))
        n_max = cfg.require("model", "n_max")
        return toral_suspension_catalog(matrix, roof, n_max, threads=threads)
    if kind == "sft":
        adjacency_text = cfg.get("model", "adjacency")
        if adjacency_text is not None:
            adjacency = cfgmod.parse_matrix(adjacency_text)
        else:
            k = cfg.require("model", "alphabet")
            adjacency = [[1] * k for _ in range(k)]
        roof_text = cfg.get("model", "sft_roof")
        roof = cfgmod.parse_sft_roof(roof_text) if roof_text else None
        return sft_catalog(adjacency, roof=roof,
                           n_max=cfg.require("model", "n_max"),
                           expansion=cfg.get("model", "expansion"))
    if kind == "ptorus":
        return punctured_torus_catalog(cfg.require("model", "l_max"))
    if kind == "bolza":
        step = cfg.get("model", "angle_step")
        if step is None:
            return bolza_catalog(cfg.require("model", "l_max"))
        return bolza_catalog(cfg.require("model", "l_max"), angle_step=step)
    raise ModelError(f"unknown model kind {kind!r}")


def _policy(cfg: JobConfig, catalog) -> TruncationPolicy:
    t_max = cfg.get("truncation", "t_max")
    if t_max is None:
        t_max = catalog.t_complete
    return TruncationPolicy(
        t_max=t_max,
        n_max=cfg.get("truncation", "n_series"),
        abs_tol=cfg.get("truncation", "abs_tol"),
        allow_partial=cfg.get("truncation", "allow_partial"),
    )


# ---------------------------------------------------------------------------
# Subcommands


def cmd_orbits(cfg: JobConfig) -> int:
    started = time.time()
    catalog = _build_catalog(cfg)
    out_path = cfg.get("output", "catalog") or "catalog.json"
    write_catalog(catalog, out_path)
    bins = {}
    for orbit in catalog.orbits:
        bins[int(orbit.length)] = bins.get(int(orbit.length), 0) + 1
    print(f"catalog: {len(catalog.orbits)} prime orbits -> {out_path}")
    for lo in sorted(bins):
        print(f"  length [{lo},{lo + 1}): {bins[lo]}")
    print(f"t_complete = {catalog.t_complete:.6g}")
    print(f"wall time  = {time.time() - started:.2f} s")
    return EXIT_OK


def _grid_evaluator(catalog, policy, cfg):
    """quantity name -> callable(z) for the zeta-grid command."""
    mock_xi = cfgmod.parse_complex(cfg.get("grid", "mock_xi", "2.0,0.0"))
    k_max = cfg.get("grid", "selberg_kmax")
    flat_ell = cfg.get("grid", "flat_ell")
    if flat_ell is None:
        flat_ell = catalog.d_s

    def make(quantity):
        if quantity == "ruelle_log":
            return lambda z: ruelle_log(catalog, z, policy)
        if quantity == "selberg_log":
            return lambda z: selberg_log(catalog, z, k_max, policy)
        if quantity.startswith("det_log_"):
            ell = int(quantity[len("det_log_"):])
            return lambda z: dyn_determinant_log(catalog, ell, z, policy)
        if quantity.startswith("mock_log_"):
            ell = int(quantity[len("mock_log_"):])
            return lambda z: mock_determinant_log(catalog, ell, mock_xi - z,
                                                  mock_xi, policy)
        if quantity.startswith("flat_trace_"):
            n = int(quantity[len("flat_trace_"):])
            return lambda z: flat_trace(catalog, flat_ell, z, n, 0.0, policy)
        raise ParameterError(f"unknown grid quantity {quantity!r}")

    return make


def cmd_zeta_grid(cfg: JobConfig) -> int:
    catalog = read_catalog(cfg.require("output", "catalog"))
    policy = _policy(cfg, catalog)
    re_values = cfgmod.parse_range(cfg.require("grid", "re"))
    im_values = cfgmod.parse_range(cfg.require("grid", "im"))
    quantities_text = cfg.get("grid", "quantities", "")
    quantities = [q for q in quantities_text.split(",") if q]
    make = _grid_evaluator(catalog, policy, cfg)
    evaluators = [(q, make(q)) for q in quantities]

    points = [complex(re, im) for re in re_values for im in im_values]

    def evaluate(point_index):
        z = points[point_index]
        row_block = []
        for quantity, func in evaluators:
            try:
                value = func(z)
                if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                    raise EvaluationError(f"non-finite value at z={z}")
                row_block.append((z.real, z.imag, quantity,
                                  value.real, value.imag))
            except (EvaluationError, OverflowError) as exc:
                print(f"zeta-grid: {quantity} failed at z={z}: {exc}",
                      file=sys.stderr)
                row_block.append((z.real, z.imag, quantity,
                                  math.nan, math.nan))
        return row_block

    threads = cfg.get("job", "threads")
    if threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(evaluate, range(len(points))))
    else:
        blocks = [evaluate(i) for i in range(len(points))]
    rows = [row for block in blocks for row in block]

    out_path = cfg.require("output", "csv")
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["z_re", "z_im", "quantity", "value_re", "value_im"])
        for z_re, z_im, quantity, v_re, v_im in rows:
            writer.writerow([_fmt(z_re), _fmt(z_im), quantity,
                             _fmt(v_re), _fmt(v_im)])
    print(f"zeta-grid: {len(rows)} rows -> {out_path}")
    figdir = cfg.get("output", "figdir")
    if figdir and rows:
        from .plotting import render_grid_figures
        for path in render_grid_figures(rows, figdir):
            print(f"figure -> {path}")
    failed = any(math.isnan(r[3]) for r in rows)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_resonances(cfg: JobConfig) -> int:
    catalog = read_catalog(cfg.require("output", "catalog"))
    policy = _policy(cfg, catalog)
    ell = cfg.get("resonances", "ell")
    if ell is None:
        ell = catalog.d_s
    probe = cfgmod.parse_complex(cfg.require("resonances", "probe"))
    depth = cfg.get("resonances", "n")
    report = {"probe": [probe.real, probe.imag], "ell": ell,
              "t_max": policy.t_max}
    exit_code = EXIT_OK
    estimate = None
    try:
        estimate = leading_resonance(catalog, ell, probe, depth, policy)
        report["estimates"] = [
            {"n": n, "raw": [raw.real, raw.imag],
             "corrected": [corr.real, corr.imag]}
            for n, raw, corr in estimate.history]
        report["estimate"] = [estimate.estimate.real, estimate.estimate.imag]
        if estimate.aitken is not None:
            report["aitken"] = [estimate.aitken.real, estimate.aitken.imag]
        report["diagnostic"] = estimate.diagnostic
        print(f"leading resonance ~ {estimate.estimate.real:.6f}"
              f"{estimate.estimate.imag:+.6f}i  "
              f"(raw {estimate.raw_estimate.real:.6f}, "
              f"step {estimate.diagnostic:.2e})")
        for n, raw, corr in estimate.history:
            print(f"  n={n:2d}  raw={raw.real:+.6f}  corrected={corr.real:+.6f}")
    except NonConvergenceError as exc:
        report["error"] = str(exc)
        print(f"resonances: no convergence: {exc}", file=sys.stderr)
        exit_code = EXIT_NO_CONVERGENCE

    rect_text = cfg.get("resonances", "rect")
    if rect_text:
        rect = cfgmod.parse_rect(rect_text)
        xi_text = cfg.get("resonances", "xi")
        xi = cfgmod.parse_complex(xi_text) if xi_text else probe
        poly_policy = TruncationPolicy(
            t_max=policy.t_max, n_max=cfg.get("resonances", "poly_depth"),
            allow_partial=policy.allow_partial)
        poly = MockDeterminantPoly(catalog, ell, xi, poly_policy)
        try:
            count = winding_count(poly.logderiv, rect)
            report["winding"] = {"rect": [rect.re_min, rect.re_max,
                                          rect.im_min, rect.im_max],
                                 "zeros": count}
            print(f"winding count over rectangle: {count}")
            if count > 0:
                center = complex(0.5 * (rect.re_min + rect.re_max),
                                 0.5 * (rect.im_min + rect.im_max))
                root = newton_refine(poly, center,
                                     cfg.get("resonances", "newton_tol"))
                report["refined_zero"] = [root.real, root.imag]
                print(f"refined zero: {root.real:.6f}{root.imag:+.6f}i")
        except NonConvergenceError as exc:
            report["winding_error"] = str(exc)
            print(f"resonances: winding/refine failed: {exc}", file=sys.stderr)
            exit_code = EXIT_NO_CONVERGENCE

    json_path = cfg.get("output", "json")
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(dumps_json(report))
        print(f"report -> {json_path}")
    figdir = cfg.get("output", "figdir")
    if figdir and estimate is not None:
        from .plotting import render_resonance_figure
        print(f"figure -> "
              f"{render_resonance_figure(estimate.history, estimate.aitken, figdir)}")
    return exit_code


def cmd_count(cfg: JobConfig) -> int:
    catalog = read_catalog(cfg.require("output", "catalog"))
    h_text = cfg.get("count", "h")
    if h_text == "auto":
        h = entropy_estimate(catalog).value
        print(f"entropy estimate h = {h:.6f}")
    else:
        h = float(h_text)
    t_grid = cfgmod.parse_range(cfg.require("count", "t_grid"))
    t_max = cfg.get("truncation", "t_max")
    report = counting_report(
        catalog, h, t_grid, t_max=t_max,
        override_nonmixing=cfg.get("count", "override_nonmixing"))
    if math.isnan(report.delta_hat):
        print("error-exponent fit unavailable (non-mixing catalog or "
              "underdetermined window); counts are still reported",
              file=sys.stderr)
    out_path = cfg.require("output", "csv")
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["T", "pi", "psi", "psi1", "pi0", "pi1", "li_ehT",
                         "complete"])
        for t_val, pi_v, psi_v, psi1_v, pi0_v, pi1_v, li_v, comp in \
                report.csv_rows():
            writer.writerow([_fmt(t_val), pi_v, _fmt(psi_v), _fmt(psi1_v),
                             pi0_v, pi1_v, _fmt(li_v),
                             "true" if comp else "false"])
    print(f"count: {len(t_grid)} grid rows -> {out_path}")
    json_path = cfg.get("output", "json")
    if json_path:
        def jsonable(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None  # JSON has no NaN; None marks an unavailable fit
            return x

        doc = {
            "h": report.h,
            "delta_hat": jsonable(report.delta_hat),
            "rows": [[jsonable(v) for v in r] for r in report.csv_rows()],
        }
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(dumps_json(doc))
        print(f"report -> {json_path}")
    figdir = cfg.get("output", "figdir")
    if figdir:
        from .plotting import render_count_figure
        print(f"figure -> {render_count_figure(report, figdir)}")
    return EXIT_OK


def cmd_verify(cfg: JobConfig) -> int:
    catalog = read_catalog(cfg.require("output", "catalog"))
    results = run_verification(catalog, seed=cfg.get("job", "seed"))
    failed = False
    for result in results:
        print(result.line())
        failed = failed or result.failed
    if failed:
        names = ", ".join(r.name for r in results if r.failed)
        print(f"verification FAILED: {names}", file=sys.stderr)
        return EXIT_VERIFY_FAIL
    print("all identity checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _add_common(sub):
    sub.add_argument("--config", help="INI config file (flags override it)")
    sub.add_argument("--dump-config", help="write the resolved config here")
    sub.add_argument("--threads", type=int,
                     help="worker pool size (ZETAWB_THREADS overrides)")
    sub.add_argument("--seed", type=int, help="seed for randomized checks")
    sub.add_argument("--figdir",
                     help="render matplotlib figures into this directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zetawb",
        description="Periodic-orbit catalogs and dynamical zeta numerics "
                    "for hyperbolic flows")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("orbits", help="build an orbit catalog file")
    _add_common(p)
    p.add_argument("--model",
                   help="cat | fib | toral | sft | ptorus | bolza")
    p.add_argument("--matrix", help="toral matrix, e.g. '2,1;1,1'")
    p.add_argument("--roof",
                   help="suspension roof: const:<c> or "
                        "trig:c=<c>;cos(<k1>,<k2>)=<a>;...")
    p.add_argument("--nmax", type=int, help="max return period / word length")
    p.add_argument("--alphabet", type=int, help="full-shift alphabet size")
    p.add_argument("--adjacency", help="sft adjacency, e.g. '1,1;1,0'")
    p.add_argument("--sft-roof", dest="sft_roof",
                   help="per-symbol '0=0.69;1=1.09' or per-transition "
                        "'0,1=0.5;...'")
    p.add_argument("--expansion", type=float,
                   help="default cocycle expansion factor (sft)")
    p.add_argument("--lmax", type=int, help="word-length cutoff (fuchsian)")
    p.add_argument("--angle-step", dest="angle_step", type=float,
                   help="bolza generator axis step in radians")
    p.add_argument("--out", dest="catalog", help="catalog output path")

    p = subs.add_parser("zeta-grid", help="evaluate quantities on a z grid")
    _add_common(p)
    p.add_argument("--catalog", help="catalog file")
    p.add_argument("--re", help="real grid lo:hi:steps")
    p.add_argument("--im", help="imaginary grid lo:hi:steps")
    p.add_argument("--quantities",
                   help="comma list: ruelle_log, det_log_<l>, mock_log_<l>, "
                        "flat_trace_<n>, selberg_log")
    p.add_argument("--tmax", type=float, help="length truncation")
    p.add_argument("--nseries", type=int, help="series depth")
    p.add_argument("--allow-partial", dest="allow_partial",
                   action="store_const", const=True,
                   help="permit t_max beyond the certified threshold")
    p.add_argument("--mock-xi", dest="mock_xi",
                   help="base point re,im for mock_log quantities")
    p.add_argument("--selberg-kmax", dest="selberg_kmax", type=int)
    p.add_argument("--flat-ell", dest="flat_ell", type=int,
                   help="degree for flat_trace quantities (default d_s)")
    p.add_argument("--out", help="CSV output path")

    p = subs.add_parser("resonances", help="estimate poles/zeros")
    _add_common(p)
    p.add_argument("--catalog", help="catalog file")
    p.add_argument("--ell", type=int, help="degree (default d_s)")
    p.add_argument("--probe", help="probe point re,im")
    p.add_argument("--n", dest="depth", type=int, help="ratio depth")
    p.add_argument("--rect", help="winding rectangle "
                                  "re_min:re_max:im_min:im_max")
    p.add_argument("--newton-tol", dest="newton_tol", type=float)
    p.add_argument("--poly-depth", dest="poly_depth", type=int,
                   help="determinant polynomial degree")
    p.add_argument("--xi", help="polynomial base point re,im "
                                "(default: the probe)")
    p.add_argument("--tmax", type=float)
    p.add_argument("--allow-partial", dest="allow_partial",
                   action="store_const", const=True)
    p.add_argument("--json", dest="json_out", help="JSON report path")

    p = subs.add_parser("count", help="prime-orbit counting report")
    _add_common(p)
    p.add_argument("--catalog", help="catalog file")
    p.add_argument("--h", dest="entropy",
                   help="'auto' or a numeric entropy value")
    p.add_argument("--tgrid", help="length grid lo:hi:steps")
    p.add_argument("--tmax", type=float)
    p.add_argument("--override-nonmixing", dest="override_nonmixing",
                   action="store_const", const=True,
                   help="fit the error exponent even on lattice catalogs")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--json", dest="json_out", help="JSON report path")

    p = subs.add_parser("verify", help="run the identity suite")
    _add_common(p)
    p.add_argument("--catalog", help="catalog file")

    return parser


_COMMANDS = {
    "orbits": cmd_orbits,
    "zeta-grid": cmd_zeta_grid,
    "resonances": cmd_resonances,
    "count": cmd_count,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[args.command](cfg)
    except (ModelError, TruncationError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL_ERROR
    except ValidationFailure as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAIL
    except NonConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except EvaluationError as exc:
        print(f"evaluation failure: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except ZetawbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL_ERROR


if __name__ == "__main__":
    sys.exit(main())
