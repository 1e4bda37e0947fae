"""Command-line entry point: ``noninf pvalue | ci | opchar | reproduce | verify``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    DomainError,
    ObservedTable,
    TrialDesign,
    check_margin,
    check_table,
    grid,
)
from .exact import DELTA_STEP, P_GRID, fisher_exact, p_cz, p_exact, p_l
from .intervals import DegenerateVarianceError, ci_cz, ci_ec, ci_mn, ci_wald
from .opchar import (
    METHODS,
    SIZE_DELTA_STEP,
    SIZE_PT_POINTS,
    all_regions,
    ec_expectation_grid,
    ec_expectation_study,
    maximal_sizes,
    power_curve,
    size_profile,
)
from .oracle import OracleReport
from .stats import p_asy, p_wald

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
PVALUE_METHODS = ("exact", "cz", "mn", "wald", "fisher")
POWER_DELTA_STEP = 0.01
FIG1_DELTA_STEP = 0.01


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    action: str | None = None
    x_t: int | None = None
    n_t: int | None = None
    x_c: int | None = None
    n_c: int | None = None
    delta0: float | None = None
    alpha: float | None = None
    methods: list[str] = field(default_factory=list)
    p_t: float | None = None
    p_c: float | None = None
    grid_pt: int | None = None
    grid_delta: float | None = None
    seed: int = 0
    n_sims: int = 10_000
    threads: int = 1
    format: str = "json"
    out: str | None = None
    version: str = __version__


# -- output ----------------------------------------------------------------------


def _clean(x):
    """JSON-ready copy: numpy scalars to Python, NaN to None; infinities stay floats."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if math.isnan(x) else x
    return x


def dumps_json(obj) -> str:
    # repr-based float formatting is the shortest string that parses back to the same double
    return json.dumps(_clean(obj), indent=2, sort_keys=False) + "\n"


def dumps_csv(rows: list[dict], config: dict, summary: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_clean(config), separators=(",", ":")) + "\n")
    if summary is not None:
        buf.write("# summary: " + json.dumps(_clean(summary), separators=(",", ":")) + "\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _csv_value(v) for k, v in r.items()})
    return buf.getvalue()


def _csv_value(v):
    v = _clean(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        # mkstemp creates 0600 files; give the result the permissions a plain open() would
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, payload: dict, rows: list[dict] | None = None, summary_line: str | None = None) -> None:
    """Write the report in the requested format to --out (or stdout)."""
    config = asdict(cfg)
    if cfg.format == "json":
        doc = {"config": config, **payload}
        if rows is not None:
            doc["rows"] = rows
        text = dumps_json(doc)
        if cfg.out:
            write_atomic(cfg.out, text)
        else:
            sys.stdout.write(text)
    else:
        summary = {k: v for k, v in payload.items() if k != "rows"}
        text = dumps_csv(rows if rows is not None else [payload.get("results", {})], config, summary)
        if cfg.out:
            write_atomic(cfg.out, text)
            if rows is not None:
                write_atomic(Path(cfg.out).with_suffix(".summary.json"), dumps_json({"config": config, **summary}))
        else:
            sys.stdout.write(text)
    if cfg.out and summary_line:
        print(summary_line)


def r3(x) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.3f}"


# -- validation ------------------------------------------------------------------


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        flags = ", ".join("--" + {"x_t": "xt", "x_c": "xc", "n_t": "nt", "n_c": "nc", "p_t": "pt", "p_c": "pc"}.get(n, n) for n in missing)
        raise UsageError(f"missing required option(s): {flags}")


def _design(cfg: RunConfig) -> TrialDesign:
    try:
        return TrialDesign(cfg.n_t, cfg.n_c)
    except (DomainError, TypeError) as e:
        raise UsageError(str(e)) from None


def _table(cfg: RunConfig, design: TrialDesign) -> ObservedTable:
    t = ObservedTable(cfg.x_t, cfg.x_c)
    try:
        check_table(t, design)
    except DomainError as e:
        raise UsageError(str(e)) from None
    return t


def _margin(cfg: RunConfig) -> float:
    try:
        return check_margin(cfg.delta0)
    except DomainError as e:
        raise UsageError(str(e)) from None


def _alpha(cfg: RunConfig, closed: bool = False) -> float:
    a = cfg.alpha
    if not (0.0 < a < 1.0 or (closed and a == 1.0)):
        raise UsageError(f"--alpha must lie in (0, 1), got {a}")
    return a


def _methods(cfg: RunConfig, allowed) -> list[str]:
    if not cfg.methods:
        return list(allowed)
    bad = [m for m in cfg.methods if m not in allowed]
    if bad:
        raise UsageError(f"unknown method(s) {bad}; choose from {list(allowed)}")
    return cfg.methods


def _prob(name: str, v: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise UsageError(f"--{name} must lie in [0, 1], got {v}")
    return v


# -- subcommands -------------------------------------------------------------------


def pvalue_report(table, design, delta0, methods, grid_points, delta_step) -> dict:
    out: dict = {}
    detail: dict = {}
    if "exact" in methods:
        r = p_exact(table, design, delta0, grid_points)
        out["exact"] = r.value
        detail["exact"] = {"argmax_p_t": r.argmax_p_t, "complement": r.complement}
    if "cz" in methods:
        r = p_cz(table, design, delta0, delta_step, grid_points)
        out["cz"] = r.value
        detail["cz"] = {"argmax_delta": r.argmax_delta}
    if "mn" in methods:
        out["mn"] = p_asy(table, design, delta0)
    if "wald" in methods:
        out["wald"] = p_wald(table, design, delta0)
    if "fisher" in methods:
        out["fisher"] = fisher_exact(table, design)
        out["fisher_one_sided"] = fisher_exact(table, design, "greater")
    return {"results": out, "detail": detail}


def cmd_pvalue(cfg: RunConfig) -> int:
    _require(cfg, "x_t", "n_t", "x_c", "n_c", "delta0")
    design = _design(cfg)
    table = _table(cfg, design)
    delta0 = _margin(cfg)
    methods = _methods(cfg, PVALUE_METHODS)
    if not cfg.methods and delta0 != 0.0:
        # the conditional test has no margin, so by default it is only reported at delta0 = 0
        methods = [m for m in methods if m != "fisher"]
    cfg.grid_pt = cfg.grid_pt or P_GRID
    cfg.grid_delta = cfg.grid_delta or DELTA_STEP
    rep = pvalue_report(table, design, delta0, methods, cfg.grid_pt, cfg.grid_delta)
    line = "  ".join(f"{k} {r3(v)}" for k, v in rep["results"].items())
    _emit(cfg, rep, summary_line=line)
    return EXIT_OK


def ci_report(table, design, alpha, delta0, methods, grid_points, delta_step) -> dict:
    out = {}
    for m in methods:
        if m == "wald":
            iv = ci_wald(table, design, alpha)
        elif m == "mn":
            iv = ci_mn(table, design, alpha)
        elif m == "cz":
            iv = ci_cz(table, design, alpha, delta0, delta_step, grid_points)
        else:
            iv = ci_ec(table, design, delta0, alpha, grid_points)
        out[m] = asdict(iv)
    return {"results": out}


def cmd_ci(cfg: RunConfig) -> int:
    _require(cfg, "x_t", "n_t", "x_c", "n_c", "alpha")
    design = _design(cfg)
    table = _table(cfg, design)
    alpha = _alpha(cfg)
    methods = _methods(cfg, METHODS)
    if cfg.delta0 is None:
        if "ec" in methods:
            raise UsageError("--delta0 is required for the ec interval")
        delta0 = None
    else:
        delta0 = _margin(cfg)
    cfg.grid_pt = cfg.grid_pt or P_GRID
    cfg.grid_delta = cfg.grid_delta or DELTA_STEP
    rep = ci_report(table, design, alpha, delta0, methods, cfg.grid_pt, cfg.grid_delta)
    rows = [{"method": m, **v} for m, v in rep["results"].items()]
    line = "  ".join(f"{m} [{r3(v['lower'])}, {r3(v['upper'])}]" for m, v in rep["results"].items())
    if cfg.format == "csv":
        _emit(cfg, {}, rows, line)
    else:
        _emit(cfg, rep, summary_line=line)
    return EXIT_OK


def maxsize_report(design, delta0, alpha, methods, delta_step, pt_points):
    regions = all_regions(design, delta0, alpha, methods)
    regs = [regions[m] for m in methods]
    prof = size_profile(regs, delta_step, pt_points)
    sizes = maximal_sizes(regs, delta_step, pt_points, profile=prof)
    deltas, best, arg = prof
    rows = []
    for i, d in enumerate(deltas):
        row = {"delta": float(d)}
        for k, m in enumerate(methods):
            row[f"size_{m}"] = float(best[k, i])
            row[f"argmax_p_t_{m}"] = float(arg[k, i])
        rows.append(row)
    summary = {
        "maximal_size": {m: s.value for m, s in zip(methods, sizes)},
        "argsup": {m: {"p_t": s.p_t, "delta": s.delta} for m, s in zip(methods, sizes)},
        "boundary_size": {m: s.boundary_value for m, s in zip(methods, sizes)},
        "region_size": {m: regions[m].count for m in methods},
    }
    return summary, rows


def power_report(design, delta0, alpha, p_t, deltas, methods):
    pc = power_curve(design, delta0, alpha, p_t, deltas, methods)
    rows = []
    for i, d in enumerate(pc.delta_grid):
        row = {"delta": float(d), "admissible": bool(pc.admissible[i]), "null": bool(d <= -delta0)}
        for m in methods:
            row[f"reject_{m}"] = float(pc.reject_prob[m][i])
        rows.append(row)
    null = pc.admissible & (pc.delta_grid <= -delta0 + 1e-12)
    summary = {
        "n_aa": pc.n_aa,
        "n_ar": pc.n_ar,
        "n_rr": pc.n_rr,
        "n_ra": pc.n_ra,
        "max_null_reject": {m: (float(np.nanmax(pc.reject_prob[m][null])) if null.any() else None) for m in methods},
    }
    return summary, rows


def cmd_opchar(cfg: RunConfig) -> int:
    if cfg.action == "maxsize":
        _require(cfg, "n_t", "n_c", "delta0", "alpha")
        design, delta0, alpha = _design(cfg), _margin(cfg), _alpha(cfg)
        methods = _methods(cfg, METHODS)
        cfg.grid_pt = cfg.grid_pt or SIZE_PT_POINTS
        cfg.grid_delta = cfg.grid_delta or SIZE_DELTA_STEP
        summary, rows = maxsize_report(design, delta0, alpha, methods, cfg.grid_delta, cfg.grid_pt)
        line = "  ".join(f"{m} {r3(v)}" for m, v in summary["maximal_size"].items())
    elif cfg.action == "power":
        _require(cfg, "n_t", "n_c", "delta0", "alpha", "p_t")
        design, delta0, alpha = _design(cfg), _margin(cfg), _alpha(cfg)
        p_t = _prob("pt", cfg.p_t)
        methods = _methods(cfg, METHODS)
        cfg.grid_delta = cfg.grid_delta or POWER_DELTA_STEP
        deltas = grid(-1.0, 1.0, cfg.grid_delta)
        try:
            summary, rows = power_report(design, delta0, alpha, p_t, deltas, methods)
        except DomainError as e:
            raise UsageError(str(e)) from None
        line = f"n_aa {summary['n_aa']}  n_ar {summary['n_ar']}  n_rr {summary['n_rr']}"
    elif cfg.action == "ec-expectation":
        _require(cfg, "n_t", "n_c", "delta0", "p_t", "p_c")
        design, delta0 = _design(cfg), _margin(cfg)
        p_t, p_c = _prob("pt", cfg.p_t), _prob("pc", cfg.p_c)
        if cfg.n_sims < 1:
            raise UsageError("--nsims must be >= 1")
        cfg.grid_pt = cfg.grid_pt or P_GRID
        res = ec_expectation_grid(design, [(p_t, p_c)], delta0, cfg.n_sims, cfg.seed, cfg.grid_pt)[0]
        rows = [asdict(res)]
        summary = {"mean": res.mean, "se": res.se, "n_degenerate": res.n_degenerate}
        line = f"mean {res.mean:.6g}  se {res.se:.3g}  degenerate {res.n_degenerate}"
    else:
        raise UsageError("opchar needs one of: maxsize, power, ec-expectation")
    _emit(cfg, summary, rows, line)
    return EXIT_OK


# -- reproduce ---------------------------------------------------------------------

TABLE_EXAMPLES = {
    "Example 1": (5, 8, 10, 19, 0.10, 0.5),
    "Example 2": (5, 6, 2, 6, 0.12, 0.05),
    "Example 3": (7, 18, 5, 25, 0.10, 0.05),
}
DATA_EXAMPLES = {
    "Rodary": (83, 88, 69, 76, 0.10, 0.05),
    "Fries": (8, 15, 3, 15, 0.0, 0.05),
    "Kim": (173, 181, 174, 181, 0.05, 0.05),
}
POWER_EXAMPLES = {
    "power1": (0.95, 5, 11, 0.03, 0.7),
    "power2": (0.1, 12, 5, 0.33, 0.1),
}
FIG1_DESIGNS = {"n_t=8": (5, 8, 10, 19), "n_t=9": (5, 9, 10, 19)}
FIG2_SIZES = (10, 20, 40, 80, 160, 320, 640)


def _table_rows(cfg):
    rows = []
    for name, (xt, nt, xc, nc, d0, a) in TABLE_EXAMPLES.items():
        design, table = TrialDesign(nt, nc), ObservedTable(xt, xc)
        p = pvalue_report(table, design, d0, ("exact", "cz", "mn", "wald"), cfg.grid_pt or P_GRID, DELTA_STEP)["results"]
        summary, _ = maxsize_report(design, d0, a, ["ec", "cz", "mn", "wald"], SIZE_DELTA_STEP, SIZE_PT_POINTS)
        ms = summary["maximal_size"]
        rows.append(
            {"example": name, "x_t": xt, "n_t": nt, "x_c": xc, "n_c": nc, "delta0": d0, "alpha_half": a / 2,
             "p_ec": p["exact"], "p_cz": p["cz"], "p_mn": p["mn"], "p_wald": p["wald"],
             "size_ec": ms["ec"], "size_cz": ms["cz"], "size_mn": ms["mn"], "size_wald": ms["wald"]}
        )
    return rows


def _interval_rows(cfg):
    rows = []
    examples = {**TABLE_EXAMPLES, **DATA_EXAMPLES}
    for name, (xt, nt, xc, nc, d0, a) in examples.items():
        design, table = TrialDesign(nt, nc), ObservedTable(xt, xc)
        rep = ci_report(table, design, a, d0, METHODS, cfg.grid_pt or P_GRID, DELTA_STEP)["results"]
        for m, iv in rep.items():
            rows.append({"example": name, "delta0": d0, "alpha": a, "method": m, "lower": iv["lower"],
                         "upper": iv["upper"], "monotone_ok": iv["monotone_ok"], "consistent": iv["consistent"]})
    return rows


def _fig1_rows(cfg):
    deltas = np.round(np.arange(-1.0, 1.0 + 1e-9, FIG1_DELTA_STEP), 10)
    rows = {float(d): {"delta": float(d)} for d in deltas}
    for label, (xt, nt, xc, nc) in FIG1_DESIGNS.items():
        design = TrialDesign(nt, nc)
        vals = np.array([p_l(ObservedTable(xt, xc), design, float(d)).value for d in deltas])
        run = np.maximum.accumulate(vals)
        for d, v, r in zip(deltas, vals, run):
            rows[float(d)][f"p_l_{label}"] = float(v)
            rows[float(d)][f"running_max_{label}"] = float(r)
    return list(rows.values())


def _fig2_rows(cfg):
    res = ec_expectation_study(FIG2_SIZES, n_sims=cfg.n_sims, seed=cfg.seed, threads=cfg.threads)
    return [asdict(r) for r in res]


def cmd_reproduce(cfg: RunConfig) -> int:
    if not cfg.out:
        raise UsageError("reproduce needs --out DIRECTORY")
    outdir = Path(cfg.out)
    jobs = {
        "table_examples.csv": _table_rows,
        "intervals.csv": _interval_rows,
        "power1.csv": None,
        "power2.csv": None,
        "fig1_pl_curve.csv": _fig1_rows,
        "fig2_ec_expectation.csv": _fig2_rows,
    }
    config = asdict(cfg)
    manifest = {"config": config, "files": {}, "failed": {}}
    for fname, fn in jobs.items():
        t0 = time.perf_counter()
        try:
            summary = None
            if fname.startswith("power"):
                pt, nt, nc, d0, a = POWER_EXAMPLES[fname[:-4]]
                summary, rows = power_report(TrialDesign(nt, nc), d0, a, pt, grid(-1.0, 1.0, POWER_DELTA_STEP), list(METHODS))
                summary = {"p_t": pt, "n_t": nt, "n_c": nc, "delta0": d0, "alpha": a, **summary}
            else:
                rows = fn(cfg)
            write_atomic(outdir / fname, dumps_csv(rows, config, summary))
            manifest["files"][fname] = {"rows": len(rows), "seconds": time.perf_counter() - t0}
            print(f"wrote {outdir / fname} ({len(rows)} rows, {time.perf_counter() - t0:.1f}s)")
        except Exception as e:  # keep going and report
            manifest["failed"][fname] = f"{type(e).__name__}: {e}"
            print(f"failed {fname}: {type(e).__name__}: {e}", file=sys.stderr)
    write_atomic(outdir / "manifest.json", dumps_json(manifest))
    if manifest["failed"]:
        print("failed items: " + ", ".join(manifest["failed"]), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# -- verify ----------------------------------------------------------------------


def verify_reports(n_cases: int = 200, seed: int = 0) -> list[tuple[OracleReport, float]]:
    """Oracle cross-checks: restricted MLE, maximal size and exact tail maxima."""
    from .opchar import critical_region
    from .oracle import oracle_rmle_point, oracle_sizes, oracle_tail_max
    from .rmle import restricted_mle_arrays
    from .stats import z_delta_all

    rng = np.random.default_rng(seed)
    dev = 0.0
    for _ in range(n_cases):
        nt, nc = (int(v) for v in rng.integers(1, 60, 2))
        xt, xc = int(rng.integers(0, nt + 1)), int(rng.integers(0, nc + 1))
        d = float(rng.uniform(-1, 1))
        p1, _ = restricted_mle_arrays(xt, xc, nt, nc, d)
        dev = max(dev, abs(float(p1) - oracle_rmle_point(xt, xc, nt, nc, d)))
    reports = [(OracleReport("restricted_mle", dev, n_cases), 1e-6)]

    design = TrialDesign(6, 6)
    regs = [critical_region(design, 0.12, 0.05, m) for m in METHODS]
    fast = maximal_sizes(regs)
    slow = oracle_sizes(regs)
    reports.append(
        (OracleReport("maximal_size", max(abs(a.value - b) for a, b in zip(fast, slow)), len(regs)), 1e-3)
    )

    dev, cases = 0.0, 0
    for name, (xt, nt, xc, nc, d0, _) in TABLE_EXAMPLES.items():
        design, table = TrialDesign(nt, nc), ObservedTable(xt, xc)
        z = z_delta_all(design, d0)
        brute = oracle_tail_max(z, z[design.index(table)], design, -d0)
        dev = max(dev, abs(p_exact(table, design, d0).value - brute))
        cases += 1
    reports.append((OracleReport("p_exact", dev, cases), 1e-6))
    return reports


def cmd_verify(cfg: RunConfig) -> int:
    n = cfg.n_sims if cfg.n_sims != 10_000 else 200
    reports = verify_reports(n, cfg.seed)
    ok = all(r.max_abs_deviation <= tol for r, tol in reports)
    payload = {
        "results": {r.target: {"max_abs_deviation": r.max_abs_deviation, "cases": r.cases, "tolerance": tol,
                                "pass": r.max_abs_deviation <= tol} for r, tol in reports},
        "pass": ok,
    }
    _emit(cfg, payload, summary_line="verify " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_FAIL


# -- argument parsing --------------------------------------------------------------


def _method_list(s: str) -> list[str]:
    return [m.strip() for m in s.split(",") if m.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--xt", type=int, dest="x_t")
    p.add_argument("--nt", type=int, dest="n_t")
    p.add_argument("--xc", type=int, dest="x_c")
    p.add_argument("--nc", type=int, dest="n_c")
    p.add_argument("--delta0", type=float, help="noninferiority margin in [0, 1)")
    p.add_argument("--alpha", type=float, help="two-sided level; tests reject at alpha/2")
    p.add_argument("--method", type=_method_list, dest="methods", default=[], help="comma-separated methods")
    p.add_argument("--pt", type=float, dest="p_t")
    p.add_argument("--pc", type=float, dest="p_c")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nsims", type=int, dest="n_sims", default=10_000)
    p.add_argument("--grid-pt", type=int, dest="grid_pt", help="number of P_T grid points")
    p.add_argument("--grid-delta", type=float, dest="grid_delta", help="delta grid step")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output file (directory for reproduce)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noninf", description="Exact and asymptotic inference for P_T - P_C in noninferiority trials.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, text in [
        ("pvalue", "exact, Chan & Zhang, asymptotic and Wald p-values (Fisher when delta0 = 0)"),
        ("ci", "Wald, MN, Chan & Zhang and exact-corrected confidence intervals"),
        ("reproduce", "regenerate all tabulated and plotted numbers into a directory"),
        ("verify", "cross-check fast routines against brute-force oracles"),
    ]:
        _common(sub.add_parser(name, help=text, description=text))
    op = sub.add_parser("opchar", help="operating characteristics")
    op.add_argument("action", choices=("maxsize", "power", "ec-expectation"))
    _common(op)
    return parser


COMMANDS = {"pvalue": cmd_pvalue, "ci": cmd_ci, "opchar": cmd_opchar, "reproduce": cmd_reproduce, "verify": cmd_verify}


def parse_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    return RunConfig(**{k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__})


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as e:  # argparse usage errors exit with 2
        return int(e.code) if e.code is not None else EXIT_OK
    if cfg.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateVarianceError, ArithmeticError, FloatingPointError, ValueError, np.linalg.LinAlgError) as e:
        print(f"error: computation failed: {type(e).__name__}: {e}".replace("\n", " "), file=sys.stderr)
        return EXIT_FAIL
