"""Command-line front end.

Exit status: 0 on success, 1 when a checked inequality is violated, 2 on
usage or input errors. Flags override values from ``--config`` (a JSON
object keyed by option name), which override built-in defaults. When
``--output`` is omitted and ``SCALED_SHEPARD_OUTPUT_DIR`` is set, reports
are written to ``$SCALED_SHEPARD_OUTPUT_DIR/<command>.<format>``; otherwise
to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import geometry as geo
from .constants import constant_C_alpha_d, constant_C_star, constant_K_d
from .pointset import (
    DomainSpec,
    PointSet,
    gen_grid,
    gen_hexagonal,
    gen_poisson_disk,
    hex_aligned_box,
    load_csv,
    save_csv,
    uniformity_report,
    verify_counting_bounds,
)
from .shepard import (
    ScaledShepardRegressor,
    catalog,
    convergence_study,
    grid_family,
    hexagonal_family,
    kernel_sum_checks,
    make_kernel,
    poisson_family,
    sup_error,
)
from .shepard.analysis import STUDY_COLUMNS

log = logging.getLogger("scaled_shepard")

OUTPUT_DIR_ENV = "SCALED_SHEPARD_OUTPUT_DIR"
EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- helpers -----------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _domain_from_args(args, d: int) -> DomainSpec:
    if getattr(args, "ball", None):
        vals = _floats(args.ball)
        if len(vals) != d + 1:
            raise UsageError(f"--ball needs {d} centre coordinates and a radius")
        return DomainSpec.ball(vals[:d], vals[d])
    lower = _floats(args.lower) if args.lower else [0.0] * d
    upper = _floats(args.upper) if args.upper else [1.0] * d
    if len(lower) == 1:
        lower = lower * d
    if len(upper) == 1:
        upper = upper * d
    if len(lower) != d or len(upper) != d:
        raise UsageError(f"--lower/--upper need {d} values")
    return DomainSpec.box(lower, upper)


def _meta_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".meta.json")


def _load_points(args) -> tuple[PointSet, DomainSpec]:
    path = Path(args.input)
    if not path.is_file():
        raise UsageError(f"cannot read input file {path}")
    meta = {}
    if _meta_path(path).is_file():
        meta = json.loads(_meta_path(path).read_text())
    n_index = args.n_index or meta.get("n_index")
    try:
        ps = load_csv(path, n_index=n_index)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.lower or args.upper or getattr(args, "ball", None):
        domain = _domain_from_args(args, ps.d)
    elif "domain" in meta:
        domain = DomainSpec.from_dict(meta["domain"])
    else:
        domain = DomainSpec.box(ps.points.min(axis=0), ps.points.max(axis=0))
    return ps, domain


def _rows_to_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _emit(args, payload, rows: list[dict] | None = None, columns=None) -> None:
    """Write ``rows`` as CSV or ``payload`` as JSON, to --output, the env dir, or stdout."""
    if args.format == "csv" and rows is not None:
        text = _rows_to_csv(rows, columns)
    else:
        text = json.dumps(payload, indent=2, default=_json_default) + "\n"
    out = args.output
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = Path(os.environ[OUTPUT_DIR_ENV]) / f"{args.command}.{args.format}"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
        log.info("wrote %s", out)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj)}")


# -- commands ----------------------------------------------------------------------


def cmd_gen(args) -> int:
    fam = args.family
    if fam == "hex":
        d = 2
        n = args.n or 4096
        domain = _domain_from_args(args, 2) if (args.lower or args.upper) else hex_aligned_box(n)
        ps = gen_hexagonal(n, domain)
    elif fam == "grid":
        d = args.d
        domain = _domain_from_args(args, d)
        if args.per_axis:
            m = args.per_axis
        else:
            m = round((args.n or 4**d) ** (1 / d))
            if m**d != (args.n or 4**d):
                raise UsageError(f"--n must be a perfect {d}-th power for the grid family")
        ps = gen_grid(d, m, domain)
    else:
        d = args.d
        domain = _domain_from_args(args, d)
        if args.min_dist:
            ps = gen_poisson_disk(d, args.min_dist, domain, seed=args.seed)
        else:
            # --n sets the mesh scale n^(-1/d) and is kept as the sequence index
            n = args.n or 1024
            ps = gen_poisson_disk(d, n ** (-1 / d), domain, seed=args.seed)
            ps = PointSet(ps.points, ps.label, n_index=n)

    meta = {"family": fam, "n_index": ps.n_index, "n_points": ps.n, "domain": domain.to_dict(), "seed": args.seed}
    out = args.output
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = Path(os.environ[OUTPUT_DIR_ENV]) / "points.csv"
    if out:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        save_csv(ps, out)
        _meta_path(out).write_text(json.dumps(meta, indent=2) + "\n")
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(ps.d)])
        for row in ps.points:
            w.writerow([repr(float(v)) for v in row])
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_metrics(args) -> int:
    ps, domain = _load_points(args)
    rep = uniformity_report(ps, domain, args.probe_resolution, args.interior_margin)
    data = rep.to_dict()
    _emit(args, data, [data])
    return EXIT_OK


def _random_centers(domain: DomainSpec, count: int, seed: int) -> np.ndarray:
    return domain.sample(np.random.default_rng(seed), count)


def cmd_annuli(args) -> int:
    ps, domain = _load_points(args)
    rep = uniformity_report(ps, domain, args.probe_resolution)
    centers = _random_centers(domain, args.centers, args.seed)
    ver = verify_counting_bounds(ps, domain, rep, centers)
    rows = [
        {"kind": r["kind"], "center": " ".join(map(repr, r["center"])), "thickness": r["thickness"],
         "j": j, "count": cnt, "bound": bnd,
         "ok": bnd is None or cnt <= bnd}
        for r in ver.records
        for j, (cnt, bnd) in enumerate(zip(r["counts"], r["bounds"]), start=1 if r["kind"] == "prop22" else 0)
    ]
    _emit(args, {"report": rep.to_dict(), "records": ver.records, "violations": ver.violations}, rows)
    for v in ver.violations:
        log.error("violation: %s", v)
    return EXIT_OK if ver.ok else EXIT_VIOLATION


def lens_check_rows(d: int, grid: int, mc: int, seed: int, R: float = 1.0) -> list[dict]:
    rows = []
    for i, ratio in enumerate(np.linspace(1.0 / grid, 1.0, grid)):
        cfg = geo.LensConfig(d, float(ratio) * R, R)
        I_q, II_q = geo.lens_quadrature(cfg)
        II_c = geo.lens_II(cfg)
        rel = abs(II_c - II_q) / II_q
        exact = I_q + II_q
        row = {
            "d": d, "r_over_R": float(ratio), "II_closed": II_c, "II_quad": II_q, "II_rel_err": rel,
            "I_quad": I_q, "I_upper": geo.lens_I_upper(cfg), "volume": exact,
            "lower_bound_ok": II_c <= exact and (II_c < exact or cfg.r == 2 * R),
            "I_upper_ok": I_q <= geo.lens_I_upper(cfg) * (1 + 1e-12),
        }
        ok = rel <= 1e-8 and row["lower_bound_ok"] and row["I_upper_ok"]
        if mc:
            est, se = geo.lens_monte_carlo(cfg, mc, seed=seed + i)
            row.update(mc_estimate=est, mc_std_error=se, mc_z=(est - exact) / se if se > 0 else 0.0)
            ok = ok and abs(est - exact) <= 4 * se
        row["pass"] = bool(ok)
        rows.append(row)
    return rows


def cmd_lens_check(args) -> int:
    rows = lens_check_rows(args.d, args.grid, args.mc, args.seed)
    _emit(args, rows, rows)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_VIOLATION


def _function_by_name(domain: DomainSpec, name: str):
    fns = {f.name.split("(")[0]: f for f in catalog(domain)}
    if name not in fns:
        raise UsageError(f"unknown function {name!r}; choose from {sorted(fns)}")
    return fns[name]


def cmd_approximate(args) -> int:
    ps, domain = _load_points(args)
    f = _function_by_name(domain, args.function)
    model = ScaledShepardRegressor(
        kernel=args.kernel, alpha=args.alpha, C=args.C, domain=domain,
        probe_resolution=args.probe_resolution, n_index=ps.n_index,
    )
    try:
        model.fit(ps.points, f(ps.points))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    sums = kernel_sum_checks(model, args.probes)
    err = sup_error(model, f, args.probes)
    data = {
        "n": ps.n, "n_index": ps.n_index, "function": f.name, "kernel": model.kernel_.name,
        "alpha": model.kernel_.alpha, "beta_n": model.beta_n_, "C_used": model.C_used_,
        **{k: v for k, v in model.report_.to_dict().items() if k not in ("n", "n_index")},
        "sup_error": err, "min_S": sums.min_sum, "m1": sums.m1, "max_S": sums.max_sum,
        "operator_bound": sums.upper,
    }
    violations = []
    if not sums.lower_ok:
        violations.append({"check": "S >= m1", "x": sums.argmin.tolist(), "value": sums.min_sum, "bound": sums.m1})
    if not sums.upper_ok:
        violations.append({"check": "S <= kappa K_d C_alpha_d", "x": sums.argmax.tolist(),
                           "value": sums.max_sum, "bound": sums.upper})
    if model.kernel_.alpha > (ps.d + 2) / 2:
        budget = model.error_budget()
        bound = budget.bound_coefficient * f.omega(budget.modulus_arg)
        data.update(budget.to_dict(), jackson_bound=bound)
        if err > bound:
            violations.append({"check": "jackson", "value": err, "bound": bound})
    data["violations"] = violations
    if args.model_out:
        model.to_json(args.model_out)
    _emit(args, data, [{k: v for k, v in data.items() if k != "violations"}])
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_converge(args) -> int:
    n_list = _ints(args.n_list)
    if args.family == "grid":
        family = grid_family(args.d)
    elif args.family == "hex":
        family = hexagonal_family()
    else:
        family = poisson_family(args.d, args.seed)
    kernel = make_kernel(args.kernel, args.alpha)
    study = convergence_study(family, lambda dom: _function_by_name(dom, args.function), kernel, n_list, args.probes)
    log.info("slope=%s", study.slope)
    payload = {"rows": study.rows, "slope": study.slope, "slope_defined": study.slope_defined}
    _emit(args, payload, study.rows, STUDY_COLUMNS)
    return EXIT_OK if study.all_within_bound else EXIT_VIOLATION


def cmd_constants(args) -> int:
    data = {"d": args.d, "alpha": args.alpha, "c": args.c, "C": args.C,
            "K_d": constant_K_d(args.d, args.c, args.C)}
    try:
        ca = constant_C_alpha_d(args.alpha, args.d)
        data.update(C_alpha_d_paper=ca.paper_value, C_alpha_d_tight=ca.tight_value)
    except ValueError as exc:
        data["C_alpha_d"] = str(exc)
    try:
        cs = constant_C_star(args.alpha, args.d)
        data.update(C_star_paper=cs.paper_value, C_star_tight=cs.tight_value)
    except ValueError as exc:
        data["C_star"] = str(exc)
    _emit(args, data, [data])
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults (flags take precedence)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--output", "-o", help="report path (default: stdout or $%s)" % OUTPUT_DIR_ENV)
    common.add_argument("--format", choices=["csv", "json"], default="json", help="report format")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    dom = argparse.ArgumentParser(add_help=False)
    dom.add_argument("--lower", help="box lower corner, comma separated (one value broadcasts)")
    dom.add_argument("--upper", help="box upper corner, comma separated (one value broadcasts)")
    dom.add_argument("--ball", help="ball domain as c1,...,cd,radius")

    inp = argparse.ArgumentParser(add_help=False)
    inp.add_argument("--input", "-i", help="point CSV with header x1,...,xd (required)")
    inp.add_argument("--n-index", type=int, help="sequence index n for n^(-1/d) scalings "
                     "(default: from <input>.meta.json, else the point count)")
    inp.add_argument("--probe-resolution", type=float, help="fill-distance probe spacing (default q/4)")

    p = argparse.ArgumentParser(prog="scaled-shepard", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", parents=[common, dom], help="generate a point set as CSV (+ .meta.json)")
    s.add_argument("--family", choices=["grid", "hex", "poisson"], help="point family (required)")
    s.add_argument("--d", type=int, default=2, help="dimension (grid, poisson)")
    s.add_argument("--n", type=int, help="hex: lattice density n; grid: total points; poisson: sets min-dist n^(-1/d)")
    s.add_argument("--per-axis", type=int, help="grid points per axis")
    s.add_argument("--min-dist", type=float, help="poisson minimum pairwise distance")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("metrics", parents=[common, dom, inp], help="separation radius, fill distance, c and C")
    s.add_argument("--interior-margin", type=float, default=0.0, help="only probe this far inside the domain")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("annuli", parents=[common, dom, inp], help="check shell counts against both occupancy bounds")
    s.add_argument("--centers", type=int, default=20, help="number of random centres")
    s.set_defaults(func=cmd_annuli)

    s = sub.add_parser("lens-check", parents=[common], help="closed-form lens volumes against quadrature and Monte Carlo")
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--grid", type=int, default=20, help="number of r/R ratios in (0, 1]")
    s.add_argument("--mc", type=int, default=0, help="Monte Carlo samples per row (0 disables)")
    s.set_defaults(func=cmd_lens_check)

    s = sub.add_parser("approximate", parents=[common, dom, inp], help="fit a model to a catalog function and check the bounds")
    s.add_argument("--function", default="distance", help="affine, distance, sine_sum, dist_to_set or const")
    s.add_argument("--kernel", default="imq", choices=["imq", "gaussian"])
    s.add_argument("--alpha", type=float, default=3.0)
    s.add_argument("--C", type=float, help="fill constant for the dilation (default h n^(1/d))")
    s.add_argument("--probes", type=int, default=10_000)
    s.add_argument("--model-out", help="export the fitted model as JSON (+ points CSV)")
    s.set_defaults(func=cmd_approximate)

    s = sub.add_parser("converge", parents=[common], help="empirical convergence study")
    s.add_argument("--family", choices=["grid", "hex", "poisson"], default="grid")
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--n-list", default="64,256,1024,4096,16384")
    s.add_argument("--function", default="distance")
    s.add_argument("--kernel", default="imq", choices=["imq", "gaussian"])
    s.add_argument("--alpha", type=float, default=3.0)
    s.add_argument("--probes", type=int, default=10_000)
    s.set_defaults(func=cmd_converge)

    s = sub.add_parser("constants", parents=[common], help="explicit constants K_d, C_alpha_d, C*")
    s.add_argument("--d", type=int, help="dimension (required)")
    s.add_argument("--alpha", type=float, help="kernel decay exponent (required)")
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--C", type=float, default=1.0)
    s.set_defaults(func=cmd_constants)
    return p


# options that may come from flags or the config file, but must come from one
_REQUIRED = {
    "gen": ["family"],
    "metrics": ["input"],
    "annuli": ["input"],
    "approximate": ["input"],
    "constants": ["d", "alpha"],
}


def _check_required(args: argparse.Namespace) -> argparse.Namespace:
    missing = [k for k in _REQUIRED.get(args.command, []) if getattr(args, k) is None]
    if missing:
        flags = ", ".join("--" + m.replace("_", "-") for m in missing)
        raise UsageError(f"{args.command}: missing required option(s) {flags}")
    return args


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return _check_required(args)
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in subparser._actions}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys for {args.command}: {sorted(unknown)}")
    subparser.set_defaults(**cfg)
    return _check_required(parser.parse_args(argv))


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
