"""
Command-line front end.

Exit status: 0 on success (whatever the verdict), 2 for unreadable input,
3 for degenerate curves, 4 for numerical failures, 5 for synthesis domain
violations.
"""

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .curves import EPS_REG, EPS_UNIT, AnalyticCurve, UnitSpeedCurve, load_curve, write_curve_csv
from .errors import AmbiguousNullspace, HelixLabError, InputError
from .frenet import EPS_KAPPA, apparatus_csv, compute_apparatus, frenet_ode_residual
from .slant import (
    C_MARGIN,
    C_MAX,
    DEFECT_TOL,
    ORACLE_THRESHOLD,
    ORTHOGONAL_TOL,
    compute_G_basis,
    detect_slant_helix,
    oracle_axis_svd,
    recursion_residual,
    sigma_from_apparatus,
    solve_integration_constant,
    telescoping_identity_residual,
    verify_differential_characterization,
    verify_integral_characterization,
)
from .synthesis import synthesize

SCHEMA = 1
SAMPLED_TRIM = 0.02
SKIP_SUFFIXES = (".truth.json", ".report.json")


# serialization


def _num(x):
    x = float(x)
    if not math.isfinite(x):
        return "null"
    if x == 0.0:
        return "0.0"
    return format(x, ".17g")


def dumps(obj, indent=2, _level=0):
    """JSON text with floats at 17 significant digits and NaN as null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write(path, text):
    """Write `text` to `path` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(text, output):
    if output is None or str(output) == "-":
        sys.stdout.write(text)
    else:
        atomic_write(output, text)


# pipeline


def load_apparatus(path, args):
    curve = load_curve(path, args.dimension)
    unit = UnitSpeedCurve(
        curve if isinstance(curve, AnalyticCurve) else curve.fit(),
        resolution=args.resolution,
        eps_reg=args.eps_reg,
        eps_unit=args.eps_unit,
    )
    trim = args.trim
    if trim is None:
        trim = 0.0 if isinstance(curve, AnalyticCurve) else SAMPLED_TRIM
    return compute_apparatus(unit, grid_size=args.grid_size, eps_kappa=args.eps_kappa, trim=trim)


def _detect(app, args):
    return detect_slant_helix(
        app,
        tol=args.tol,
        margin=args.margin,
        eps_kappa=args.eps_kappa,
        oracle_threshold=args.oracle_threshold,
        orthogonal_tol=args.orthogonal_tol,
        c_max=args.c_max,
    )


def report_payload(report, app, source=None):
    out = report.to_json()
    out["n"] = app.n
    out["grid_size"] = app.m
    if source is not None:
        out["source"] = Path(source).name
    return out


def diagnostics_csv(report, app):
    """Rows ``s, sumG2, angle_to_axis, sigma, Gn_residual`` for plotting."""
    g = report.g
    G, dG = g.G(), g.dG()
    n = app.n
    cols = ["s", "sumG2", "angle_to_axis"] + (["sigma"] if n == 3 else []) + ["Gn_residual"]
    data = [app.s, g.sum_sq()]
    if report.axis is not None:
        data.append(np.arccos(np.clip(app.components(report.axis)[:, 1], -1.0, 1.0)))
    else:
        data.append(np.full(app.m, np.nan))
    if n == 3:
        data.append(sigma_from_apparatus(app))
    data.append(dG[:, -1] + g.kappa[:, -1] * G[:, -2])
    lines = [",".join(cols)]
    for row in np.column_stack(data):
        lines.append(",".join("nan" if not math.isfinite(v) else format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


def analyze_file(path, args, output=None, plot=None):
    app = load_apparatus(path, args)
    report = _detect(app, args)
    _emit(dumps(report_payload(report, app, path)) + "\n", output)
    if plot is not None:
        atomic_write(plot, diagnostics_csv(report, app))
    return report


def _threads():
    env = os.environ.get("HELIXLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"HELIXLAB_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _batch_inputs(directory):
    files = []
    for p in sorted(Path(directory).iterdir()):
        if not p.is_file() or p.name.endswith(SKIP_SUFFIXES) or p.name.startswith("."):
            continue
        if p.suffix.lower() in (".csv", ".json"):
            files.append(p)
    return files


def cmd_analyze(args):
    src = Path(args.input)
    if not src.is_dir():
        analyze_file(src, args, args.output, args.plot)
        return 0
    files = _batch_inputs(src)
    outdir = Path(args.output) if args.output else src
    if args.plot:
        Path(args.plot).mkdir(parents=True, exist_ok=True)

    def one(p):
        plot = None if not args.plot else Path(args.plot) / f"{p.stem}.diagnostics.csv"
        try:
            analyze_file(p, args, outdir / f"{p.stem}.report.json", plot)
            return 0
        except HelixLabError as exc:
            print(f"{p.name}: {exc}", file=sys.stderr)
            return exc.exit_code

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        codes = list(pool.map(one, files))
    return max(codes, default=0)


def cmd_synthesize(args):
    params = {}
    for key in ("C", "c0", "omega", "mu", "L", "smoothness", "deltas", "profiles"):
        v = getattr(args, key, None)
        if v is not None:
            params[key] = v
    if args.interval is not None:
        params["interval"] = tuple(args.interval)
    if not args.output or args.output == "-":
        raise InputError("synthesize needs --output <curve.csv>")
    rec = synthesize(args.family, n=args.n, seed=args.seed, grid_size=args.grid_size, **params)
    out = Path(args.output)
    truth = Path(args.truth) if args.truth else out.with_name(out.stem + ".truth.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out.parent, prefix=f".{out.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write_curve_csv(tmp, rec.curve.points, rec.curve.params)
        os.replace(tmp, out)
    finally:
        Path(tmp).unlink(missing_ok=True)
    atomic_write(truth, dumps(rec.ground_truth()) + "\n")
    return 0


def cmd_frenet(args):
    app = load_apparatus(args.input, args)
    res = frenet_ode_residual(app)
    _emit(apparatus_csv(app), args.output)
    per = " ".join(f"V{i + 1}={r:.3e}" for i, r in enumerate(res.rms))
    print(
        f"frenet ode residual: max {res.overall_max:.6e} rms {res.overall_rms:.6e} (grid {app.m}; {per})",
        file=sys.stderr,
    )
    return 0


def cmd_oracle(args):
    app = load_apparatus(args.input, args)
    try:
        res = oracle_axis_svd(app, args.oracle_threshold)
    except AmbiguousNullspace as exc:
        payload = {"schema": SCHEMA, "found": False, "ambiguous": True, "message": str(exc)}
    else:
        payload = {
            "schema": SCHEMA,
            "found": res.found,
            "ambiguous": False,
            "axis": [] if res.axis is None else [float(v) for v in res.axis],
            "angle_min": float(res.angles.min()) if res.found else None,
            "angle_max": float(res.angles.max()) if res.found else None,
            "ratio": res.ratio,
            "singular_values": [float(v) for v in res.singular_values],
        }
    _emit(dumps(payload) + "\n", args.output)
    return 0


def cmd_verify(args):
    app = load_apparatus(args.input, args)
    g = compute_G_basis(app, args.eps_kappa)
    g = g.with_c0(solve_integration_constant(g, c_max=args.c_max))
    ic = verify_integral_characterization(g)
    payload = {
        "schema": SCHEMA,
        "n": app.n,
        "c0": g.c0,
        "C": g.C,
        "defect": g.defect(),
        "differential": verify_differential_characterization(g),
        "integral": {
            "residual": ic.residual,
            "A": ic.A,
            "B": ic.B,
            "std_m_over_A": ic.std_m / abs(ic.A) if ic.A else float("nan"),
            "std_n_over_B": ic.std_n / abs(ic.B) if ic.B else float("nan"),
        },
        "telescoping": telescoping_identity_residual(g),
        "recursion": recursion_residual(g),
    }
    _emit(dumps(payload) + "\n", args.output)
    return 0


# argument handling


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return conv


def _grid(text):
    v = int(text)
    if v < 32:
        raise argparse.ArgumentTypeError(f"grid size must be at least 32, got {text}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the long options")
    common.add_argument("--grid-size", type=_grid, default=512)
    common.add_argument("-o", "--output", help="output path (default stdout)")

    curve = argparse.ArgumentParser(add_help=False)
    curve.add_argument("input", help="curve CSV, analytic JSON, or (analyze) a directory")
    curve.add_argument("--dimension", type=int, help="override the dimension inferred from the input")
    curve.add_argument("--resolution", type=int, default=256, help="Gauss panels for the arc-length table")
    curve.add_argument("--trim", type=float, help=f"arc fraction dropped at each end (sampled default {SAMPLED_TRIM})")
    curve.add_argument("--eps-kappa", type=_positive(float), default=EPS_KAPPA)
    curve.add_argument("--eps-reg", type=_positive(float), default=EPS_REG)
    curve.add_argument("--eps-unit", type=_positive(float), default=EPS_UNIT)
    curve.add_argument("--tol", type=_positive(float), default=DEFECT_TOL, help="constancy-defect threshold")
    curve.add_argument("--margin", type=_positive(float), default=C_MARGIN, help="required C - 1")
    curve.add_argument("--oracle-threshold", type=_positive(float), default=ORACLE_THRESHOLD)
    curve.add_argument("--orthogonal-tol", type=_positive(float), default=ORTHOGONAL_TOL)
    curve.add_argument("--c-max", type=_positive(float), default=C_MAX, help="largest C searched for")

    p = argparse.ArgumentParser(prog="helixlab", description="Frenet apparatus and slant-helix detection in E^n")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common, curve], help="classify a curve or a directory of curves")
    a.add_argument("--plot", help="diagnostics CSV path (directory in batch mode)")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synthesize", parents=[common], help="generate a test curve with ground truth")
    s.add_argument("--family", required=True, choices=["w_curve", "constant_precession", "slant", "random"])
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--C", type=float)
    s.add_argument("--c0", type=float)
    s.add_argument("--omega", type=float)
    s.add_argument("--mu", type=float)
    s.add_argument("--L", type=_positive(float))
    s.add_argument("--smoothness", type=_positive(float))
    s.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"))
    s.add_argument("--deltas", type=float, nargs="+", help="W-curve constants")
    s.add_argument("--profiles", nargs="+", help="expressions in s for kappa_1 .. kappa_{n-2}")
    s.add_argument("--truth", help="ground-truth JSON path (default <output stem>.truth.json)")
    s.set_defaults(func=cmd_synthesize)

    f = sub.add_parser("frenet", parents=[common, curve], help="export frames and curvatures")
    f.set_defaults(func=cmd_frenet)
    o = sub.add_parser("oracle-axis", parents=[common, curve], help="run only the SVD axis oracle")
    o.set_defaults(func=cmd_oracle)
    v = sub.add_parser("verify", parents=[common, curve], help="differential and integral characterization checks")
    v.set_defaults(func=cmd_verify)
    return p


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    args = parser.parse_args(argv)
    defaults = vars(parser.parse_args(argv))
    cmd_line = set()
    # options given explicitly on the command line win over the config file
    for tok in argv:
        if tok.startswith("--"):
            cmd_line.add(tok[2:].split("=", 1)[0].replace("-", "_"))
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in defaults or dest in ("func", "command", "config"):
            raise InputError(f"config: unknown option {key!r}")
        if dest not in cmd_line:
            setattr(args, dest, value)
    return args


def _validate(args):
    if getattr(args, "grid_size", 512) < 32:
        raise InputError("grid size must be at least 32")
    for key in ("tol", "margin", "eps_kappa", "eps_reg", "eps_unit", "oracle_threshold", "orthogonal_tol", "c_max"):
        v = getattr(args, key, None)
        if v is not None and not float(v) > 0:
            raise InputError(f"{key} must be positive")
    paths = [getattr(args, k, None) for k in ("input", "output", "plot", "truth")]
    paths = [str(Path(p).resolve()) for p in paths if p not in (None, "-")]
    if len(paths) != len(set(paths)):
        raise InputError("input and output paths must be distinct")


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        _validate(args)
        return args.func(args)
    except HelixLabError as exc:
        print(f"helixlab: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"helixlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
