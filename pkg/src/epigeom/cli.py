"""Command-line front end: ``epigeom {alpha, entropy, body, transform-check, check}``.

Tabular output is CSV with 17 significant digits; reports are JSON. When
``--out`` is given the artifact is written atomically and a run manifest is
written next to it as ``<out>.manifest.json``. Checks fan out over
``EPIGEOM_WORKERS`` processes and are aggregated in name-sorted order, so
the artifact does not depend on the worker count.

Exit codes: 0 when every asserting check holds, 2 when one is violated, 1 on
usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, bodies, exponent, fixtures, renyi, transforms, verify
from . import densities as dens
from .specio import SpecError, digest, load_density

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATED = 2

BODY_KINDS = ("cross-section", "intersection", "radial-mean", "ball", "polar-centroid", "z")
CHECKS = (
    "epi",
    "linearized",
    "reverse-epi",
    "entropy-convexity",
    "identity-c1",
    "identity-rp",
    "identity-cminus1",
    "dct-lower",
    "convexity",
)
TRANSFORM_CHECKS = ("tr-limit", "zr", "zi", "cn1")


class UsageError(Exception):
    """Bad command line or unreadable input; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# parsing helpers


def _float_list(raw: str) -> list[float]:
    try:
        return [float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {raw!r}") from None


def _density(ref: str) -> dens.DensitySpec:
    if ref.startswith("fixture:"):
        try:
            return fixtures.density(ref.split(":", 1)[1])
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    return load_density(ref)


def _star_body(ref: str) -> bodies.StarBody:
    if ref.startswith("fixture:"):
        try:
            return fixtures.body(ref.split(":", 1)[1])
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    path = Path(ref)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise UsageError(f"{path}: cannot read: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    try:
        return bodies.StarBody.from_json(data)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _require(args, name: str):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"{args.command}: --{name.replace('_', '-')} is required here")
    return value


# ---------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def _csv_text(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in header])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(verify._jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class RunManifest:
    """Everything needed to repeat a run: argv, seed, resolutions, radii, timings."""

    def __init__(self, argv: list[str], args: argparse.Namespace):
        self.argv = list(argv)
        config = {k: v for k, v in sorted(vars(args).items()) if k != "out"}
        self.config_digest = digest(config)
        self.seed = getattr(args, "seed", 0)
        self.truncation_radii: dict[str, float] = {}
        self.wall_time: dict[str, float] = {}
        self.outputs: dict[str, str] = {}

    def note_density(self, label: str, spec: dens.DensitySpec) -> None:
        if spec.is_grid:
            return
        self.truncation_radii[label] = dens.choose_truncation_radius(spec)

    def to_json(self) -> dict:
        return {
            "command_line": ["epigeom", *self.argv],
            "config_digest": self.config_digest,
            "seed": self.seed,
            "resolutions": {str(k): v for k, v in dens.DEFAULT_RESOLUTION.items()},
            "truncation_radii": self.truncation_radii,
            "tool_version": __version__,
            "workers": worker_count(),
            "wall_time": self.wall_time,
            "outputs": self.outputs,
        }


def _emit(args, text: str, manifest: RunManifest) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    write_atomic(args.out, text)
    manifest.outputs[str(args.out)] = hashlib.sha256(text.encode()).hexdigest()
    write_atomic(f"{args.out}.manifest.json", _json_text(manifest.to_json()))


# ---------------------------------------------------------------------------
# parallel execution


def worker_count() -> int:
    raw = os.environ.get("EPIGEOM_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"EPIGEOM_WORKERS must be an integer, got {raw!r}") from None
    return max(1, n)


def _timed(task):
    fn, kwargs = task
    t0 = time.perf_counter()
    out = fn(**kwargs)
    return out, time.perf_counter() - t0


def run_tasks(tasks: list) -> list:
    """Run ``(function, kwargs)`` pairs, in-process or over a process pool; results keep task order."""
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        return [_timed(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_timed, tasks))


# ---------------------------------------------------------------------------
# alpha


def cmd_alpha(args, manifest: RunManifest) -> int:
    if args.steps < 1:
        raise UsageError("alpha: --steps must be at least 1")
    ps = np.linspace(args.p_min, args.p_max, args.steps) if args.steps > 1 else np.array([args.p_min])
    header = ["p", "alpha", "alpha_opt", "bm16", "lower_bound", "argmax_lambda"]
    rows = []
    t0 = time.perf_counter()
    for p in ps:
        if args.exploratory and not p > 1.0:
            nan = math.nan
            rows.append({"p": p, "alpha": exponent.alpha(p, exploratory=True), "alpha_opt": nan, "bm16": nan, "lower_bound": nan, "argmax_lambda": nan})
        else:
            rows.append(exponent.comparison_bounds(float(p)).as_row())
    manifest.wall_time["alpha"] = time.perf_counter() - t0
    if args.format == "csv":
        text = _csv_text(header, rows)
    else:
        text = _json_text({"rows": rows})
    _emit(args, text, manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entropy


def cmd_entropy(args, manifest: RunManifest) -> int:
    spec = _density(args.density)
    manifest.note_density("density", spec)
    rows = []
    t0 = time.perf_counter()
    for p in args.p:
        r = renyi.renyi_entropy(spec, p, args.method, seed=args.seed)
        rows.append({"p": r.p, "h_p": r.h_p, "N_p": r.N_p, "method": r.method, "error_estimate": r.error_estimate})
    manifest.wall_time["entropy"] = time.perf_counter() - t0
    _emit(args, _csv_text(["p", "h_p", "N_p", "method", "error_estimate"], rows), manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bodies


def build_body(kind: str, spec: dens.DensitySpec, p: float | None, directions: int) -> bodies.StarBody:
    if kind == "intersection":
        return bodies.intersection_body_of_density(spec, directions)
    if p is None:
        raise UsageError(f"body kind {kind!r} needs --p")
    if kind == "cross-section":
        return bodies.cross_section_body(spec, p, directions)
    if kind == "radial-mean":
        return bodies.radial_mean_body(spec, p, directions)
    if kind == "ball":
        return bodies.ball_mean_body(spec, p, directions)
    if kind == "polar-centroid":
        return bodies.polar_centroid_body(spec, p, directions)
    if kind == "z":
        return bodies.z_body(spec, p, directions)
    raise UsageError(f"unknown body kind {kind!r}")


def cmd_body(args, manifest: RunManifest) -> int:
    spec = _density(args.density)
    manifest.note_density("density", spec)
    t0 = time.perf_counter()
    K = build_body(args.kind, spec, args.p, args.directions)
    manifest.wall_time["body"] = time.perf_counter() - t0
    rows = K.rows()
    _emit(args, _csv_text(list(rows[0]), rows), manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# transform checks


def _tr_limit_task(spec, eps, directions):
    if spec is None:
        g = transforms.SphericalFunction.constant(1.0)
    else:
        g = transforms.SphericalFunction.from_starbody(bodies.intersection_body_of_density(spec, 360))
    dirs = bodies.direction_set(2, directions)
    pairs = [transforms.tr_limit_check(g, v, eps)[:2] for v in dirs]
    lhs, rhs = (np.array(x) for x in zip(*pairs))
    return transforms.GapReport("tr-limit", eps, dirs, lhs, rhs).to_json()


def _zr_task(spec, p, directions):
    return transforms.zr_identity_check(spec, p, directions).to_json()


def _zi_task(spec, eps, directions):
    return transforms.zi_limit_check(spec, eps, directions).to_json()


def _cn1_task(spec, eps, directions):
    return transforms.cn1_radon_check(spec, eps, directions).to_json()


def cmd_transform_check(args, manifest: RunManifest) -> int:
    spec = _density(args.density) if args.density is not None else None
    if spec is not None:
        manifest.note_density("density", spec)
    elif args.which != "tr-limit":
        raise UsageError(f"transform-check {args.which} needs --density")
    eps_list = args.eps or list(transforms.EPS_SCHEDULE)
    if args.which == "zr":
        tasks = [(_zr_task, {"spec": spec, "p": p, "directions": args.directions}) for p in (args.p or [1.0, 2.0])]
    else:
        fn = {"tr-limit": _tr_limit_task, "zi": _zi_task, "cn1": _cn1_task}[args.which]
        tasks = [(fn, {"spec": spec, "eps": e, "directions": args.directions}) for e in eps_list]
    results = run_tasks(tasks)
    reports = []
    for (rep, wall) in results:
        key = f"{rep['check']}[{rep['parameter']!r}]"
        manifest.wall_time[key] = wall
        reports.append(rep)
    reports.sort(key=lambda r: (r["check"], r["parameter"]))
    failed = args.tolerance is not None and any(r["max_gap"] > args.tolerance for r in reports)
    _emit(args, _json_text({"reports": reports}), manifest)
    for r in reports:
        print(f"{r['check']} parameter={r['parameter']!r} max_gap={r['max_gap']:.3e}", file=sys.stderr)
    return EXIT_VIOLATED if failed else EXIT_OK


# ---------------------------------------------------------------------------
# checks


def _convexity_of_density(spec, kind, p, directions, tolerance):
    if kind == "intersection-of-difference":
        K = bodies.intersection_body_of_density(dens.self_convolve(spec), directions)
    else:
        K = build_body(kind, spec, p, directions)
    return verify.convexity_certificate(K, **tolerance)


def _check_tasks(args, manifest: RunManifest) -> list:
    name = args.check
    tol = {} if args.tolerance is None else {"tolerance": args.tolerance}
    dirs = args.directions

    if name == "convexity":
        if args.body is not None:
            return [(verify.convexity_certificate, {"B": _star_body(args.body), **tol})]
        spec = _density(_require(args, "density"))
        manifest.note_density("density", spec)
        kinds = [args.kind] if args.kind else ["cross-section", "intersection-of-difference", "ball"]
        tasks = []
        for kind in kinds:
            ps = [None] if kind == "intersection-of-difference" else (args.p or [1.0])
            for p in ps:
                tasks.append((_convexity_of_density, {"spec": spec, "kind": kind, "p": p, "directions": dirs or 360, "tolerance": tol}))
        return tasks

    spec = _density(_require(args, "density"))
    manifest.note_density("density", spec)
    if name in ("epi", "linearized", "dct-lower"):
        spec2 = _density(args.density2) if args.density2 is not None else spec
        manifest.note_density("density2", spec2)
        if name == "dct-lower":
            lams = args.lam or [0.5]
            return [(verify.dct_lower_check, {"fX": spec, "fY": spec2, "lam": lam, **tol}) for lam in lams]
        ps = _require(args, "p")
        if name == "epi":
            return [(verify.check_epi, {"fX": spec, "fY": spec2, "p": p, "alpha": args.alpha, **tol}) for p in ps]
        lams = args.lam or list(np.linspace(0.0, 1.0, verify.LAMBDA_GRID))
        tasks = [
            (verify.check_linearized, {"fX": spec, "fY": spec2, "p": p, "alpha": args.alpha, "lam": float(lam), **tol})
            for p in ps
            for lam in lams
        ]
        tasks += [(verify.check_balance, {"fX": spec, "fY": spec2, "p": p, "alpha": args.alpha, **tol}) for p in ps]
        return tasks
    if name == "reverse-epi":
        return [(verify.check_reverse_epi, {"joint": spec, "p": p, **tol}) for p in (args.p or [0.0, 2.0])]
    if name == "entropy-convexity":
        return [(verify.check_entropy_convexity, {"joint": spec, "p": p, **tol}) for p in _require(args, "p")]
    if name == "identity-c1":
        return [(verify.check_identity_c1, {"f": spec, "dirs": dirs or 64, **tol})]
    if name == "identity-rp":
        return [(verify.check_identity_rp, {"f": spec, "p": p, "dirs": dirs or 64, **tol}) for p in (args.p or [1.0, 2.0, 3.0])]
    if name == "identity-cminus1":
        return [(verify.check_cminus1, {"f": spec, "dirs": dirs or 64, **tol})]
    raise UsageError(f"unknown check {name!r}")  # pragma: no cover - argparse restricts choices


def _report_key(report: dict) -> tuple:
    return (report["name"], report["inputs_digest"])


def cmd_check(args, manifest: RunManifest) -> int:
    tasks = _check_tasks(args, manifest)
    results = run_tasks(tasks)
    reports = []
    for rep, wall in results:
        js = rep.to_json()
        manifest.wall_time[f"{js['name']}:{js['inputs_digest']}"] = wall
        reports.append(js)
    reports.sort(key=_report_key)
    counts = {v: sum(r["verdict"] == v for r in reports) for v in (verify.HOLDS, verify.INCONCLUSIVE, verify.VIOLATED)}
    failed = any(r["asserting"] and r["verdict"] == verify.VIOLATED for r in reports)
    _emit(args, _json_text({"check": args.check, "summary": counts, "reports": reports}), manifest)
    for r in reports:
        tag = "" if r["asserting"] else " (informational)"
        print(f"{r['name']} {r['inputs_digest']}: {r['verdict']}{tag} margin={r['margin']}", file=sys.stderr)
    return EXIT_VIOLATED if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="epigeom", description="Rényi entropy powers, the sharpened EPI exponent, and bodies of densities.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, metavar="PATH", help="write the artifact here (and a manifest next to it)")
        p.add_argument("--seed", type=int, default=0, help="seed for sampled estimates")

    a = sub.add_parser("alpha", help="tabulate the exponent and its comparison bounds")
    a.add_argument("--p-min", type=float, required=True)
    a.add_argument("--p-max", type=float, required=True)
    a.add_argument("--steps", type=int, required=True)
    a.add_argument("--format", choices=("csv", "json"), default="csv")
    a.add_argument("--exploratory", action="store_true", help="also evaluate the formula for 0 < p < 1")
    common(a)

    e = sub.add_parser("entropy", help="Rényi entropies and entropy powers of one density")
    e.add_argument("--density", required=True, metavar="SPEC", help="density JSON file or fixture:<name>")
    e.add_argument("--p", type=_float_list, required=True, help="comma-separated orders; 'inf' allowed")
    e.add_argument("--method", choices=(renyi.CLOSED_FORM, renyi.QUADRATURE, renyi.MONTE_CARLO), default=None)
    common(e)

    b = sub.add_parser("body", help="radial function of a body built from a density")
    b.add_argument("--kind", choices=BODY_KINDS, required=True)
    b.add_argument("--p", type=float, default=None)
    b.add_argument("--density", required=True, metavar="SPEC")
    b.add_argument("--directions", type=int, default=360)
    common(b)

    t = sub.add_parser("transform-check", help="limit and identity checks for spherical transforms")
    t.add_argument("--which", choices=TRANSFORM_CHECKS, required=True)
    t.add_argument("--density", default=None, metavar="SPEC")
    t.add_argument("--eps", type=_float_list, default=None, help="defaults to 0.1,0.01,0.001")
    t.add_argument("--p", type=_float_list, default=None, help="orders for zr (default 1,2)")
    t.add_argument("--directions", type=int, default=32)
    t.add_argument("--tolerance", type=float, default=None, help="exit 2 when any gap exceeds this")
    common(t)

    c = sub.add_parser("check", help="inequality, identity and convexity checks")
    c.add_argument("check", choices=CHECKS)
    c.add_argument("--density", default=None, metavar="SPEC")
    c.add_argument("--density2", default=None, metavar="SPEC")
    c.add_argument("--body", default=None, metavar="JSON", help="star body for the convexity check")
    c.add_argument("--kind", choices=BODY_KINDS, default=None, help="body built from --density for the convexity check")
    c.add_argument("--p", type=_float_list, default=None)
    c.add_argument("--lambda", dest="lam", type=_float_list, default=None)
    c.add_argument("--alpha", type=float, default=None, help="override the exponent (default alpha(p))")
    c.add_argument("--directions", type=int, default=None)
    c.add_argument("--tolerance", type=float, default=None, help="override the module default tolerance")
    common(c)
    return parser


COMMANDS = {
    "alpha": cmd_alpha,
    "entropy": cmd_entropy,
    "body": cmd_body,
    "transform-check": cmd_transform_check,
    "check": cmd_check,
}


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        manifest = RunManifest(argv, args)
        return COMMANDS[args.command](args, manifest)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
