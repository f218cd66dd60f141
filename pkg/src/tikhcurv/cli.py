"""Command-line runner for the curvature experiments.

Subcommands ``laplace``, ``droplet``, ``wetting``, ``isolines`` and
``sweep``. Every run writes ``errors.csv`` into ``--out`` and, unless
``--no-plots`` is given, an SVG plot next to it. Exit codes: 0 success,
1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .analysis import (
    METHOD_ALIASES,
    SOURCE_ALIASES,
    ExperimentSpec,
    SweepError,
    convergence_sweep,
    input_levelset,
    test_case,
    write_csv,
    write_plot,
)
from .fem.solve import SingularSystemError
from .levelset import EmptyInterfaceError, UnreachableVertexError, _contour_segments, export_isolines
from .mesh import Pattern, build_rect_mesh

log = logging.getLogger("tikhcurv")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

DEFAULT_ALPHAS = (10.0, 0.01, 0.0001)
WETTING = {"orthogonal": "wetting_orthogonal", "sharp": "wetting_sharp"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting so ``run`` controls the exit code."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _bounds(text):
    vals = _floats(text)
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("bounds need four numbers: xmin,xmax,ymin,ymax")
    if not (vals[1] > vals[0] and vals[3] > vals[2]):
        raise argparse.ArgumentTypeError(f"bounds must satisfy xmin < xmax and ymin < ymax, got {text!r}")
    return vals


def _common(p, with_method=True):
    p.add_argument("--nx", type=int, help="cells per direction on the coarsest mesh")
    p.add_argument("--ny", type=int, help="cells in y (defaults to --nx)")
    p.add_argument("--bounds", type=_bounds, help="xmin,xmax,ymin,ymax")
    p.add_argument("--pattern", choices=[p.value for p in Pattern if p is not Pattern.UNSTRUCTURED])
    p.add_argument("--source", choices=["exact", "signed", "brute_force", "fmm"])
    p.add_argument("--refinements", type=int, help="number of meshes, each twice as fine")
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-plots", action="store_true", default=None)
    if with_method:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--alpha", type=float)
        g.add_argument("--alpha-sweep", type=_floats, dest="alpha_sweep")
        p.add_argument("--method", choices=["h3", "h2", "weak1", "weak2", "weak_p1", "weak_p2"])
        p.add_argument("--no-rescale", action="store_true", default=None)
        p.add_argument("--dump-field", action="store_true", help="also write the Laplacian coefficients")
        p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tikhcurv", description="Tikhonov curvature reconstruction experiments")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    _common(sub.add_parser("laplace", help="sine field Laplacian test on (-11,11)^2"))
    _common(sub.add_parser("droplet", help="circle of radius 0.5 at the origin"))
    w = sub.add_parser("wetting", help="circle touching the bottom boundary")
    _common(w)
    w.add_argument("--angle", choices=sorted(WETTING), default="orthogonal")
    iso = sub.add_parser("isolines", help="SVG isolines of a level set input")
    _common(iso, with_method=False)
    iso.add_argument("--case", choices=["droplet", "wetting_orthogonal", "wetting_sharp"], default="droplet")
    iso.add_argument("--levels", type=_floats, default=(-0.5, -0.25, 0.0, 0.25, 0.5))
    s = sub.add_parser("sweep", help="run an experiment described by a key=value file")
    _common(s)
    s.add_argument("--config", required=True)
    s.add_argument("--case", choices=["laplace_sine", "droplet", "wetting_orthogonal", "wetting_sharp"])
    return parser


# ---------------------------------------------------------------------------
# config files

_CONFIG_KEYS = {
    "case", "test_case", "method", "source", "pattern", "bounds", "nx", "ny",
    "refinements", "alpha", "alpha_sweep", "alphas", "out", "no_plots", "plots", "no_rescale", "rescale",
}


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys mirror the flags."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    out = {}
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        try:
            if key in ("nx", "ny", "refinements"):
                out[key] = int(value)
            elif key == "bounds":
                out[key] = _bounds(value)
            elif key in ("alpha", "alpha_sweep", "alphas"):
                out["alpha_sweep"] = _floats(value)
            elif key in ("plots", "rescale"):
                out["no_" + key] = not _bool(value)
            elif key in ("no_plots", "no_rescale"):
                out[key] = _bool(value)
            elif key == "test_case":
                out["case"] = value
            else:
                out[key] = value
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{no}: {exc}")
    return out


# ---------------------------------------------------------------------------
# running


def _settings(args, defaults: dict) -> dict:
    """Merge defaults, config file values and explicit flags (flags win)."""
    s = dict(defaults)
    if getattr(args, "config", None):
        s.update(read_config(args.config))
    for key in ("nx", "ny", "bounds", "pattern", "source", "refinements", "out", "method", "case"):
        val = getattr(args, key, None)
        if val is not None:
            s[key] = val
    for key in ("no_plots", "no_rescale"):
        if getattr(args, key, None):
            s[key] = True
    if getattr(args, "alpha", None) is not None:
        s["alpha_sweep"] = (args.alpha,)
    elif getattr(args, "alpha_sweep", None) is not None:
        s["alpha_sweep"] = args.alpha_sweep
    return s


def _sizes(s):
    if s["nx"] < 1 or s.get("refinements", 1) < 1:
        raise UsageError("--nx and --refinements must be positive")
    nx = [s["nx"] * 2**i for i in range(s.get("refinements", 1))]
    ny = None if s.get("ny") is None else tuple(s["ny"] * 2**i for i in range(len(nx)))
    return tuple(nx), ny


def _spec(s) -> ExperimentSpec:
    sizes, ny = _sizes(s)
    try:
        return ExperimentSpec(
            test_case=s["case"],
            method=METHOD_ALIASES.get(s.get("method", "h3"), s.get("method", "h3")),
            source=SOURCE_ALIASES.get(s.get("source", "exact"), s.get("source", "exact")),
            pattern=s.get("pattern", "crossed"),
            bounds=s.get("bounds"),
            sizes=sizes,
            ny=ny,
            alphas=tuple(s.get("alpha_sweep", DEFAULT_ALPHAS)),
            out_dir=s.get("out", "."),
            rescale=not s.get("no_rescale", False),
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _out_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {path}: {exc}")
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")
    return path


def _run_experiment(s, dump_field=False) -> int:
    spec = _spec(s)
    out = _out_dir(spec.out_dir)

    def on_cell(cell):
        log.info("h=%.4g alpha=%g err_domain=%s err_interface=%s",
                 cell.h, cell.alpha, cell.err_domain, cell.err_interface)
        if dump_field:
            name = f"laplacian_h{cell.h:.6g}_alpha{cell.alpha:g}.txt"
            np.savetxt(os.path.join(out, name), cell.laplacian.coeffs, fmt="%.17g")

    report = convergence_sweep(spec, on_cell)
    write_csv(report, os.path.join(out, "errors.csv"))
    if not s.get("no_plots"):
        write_plot(report, os.path.join(out, "errors.svg"),
                   title=f"{spec.test_case}, {spec.method}, {spec.source}")
    for row in report.rows:
        print(f"h={row.h:.6g} alpha={row.alpha:g} err_domain={row.err_domain} "
              f"err_interface={row.err_interface}")
    return EXIT_OK


def _run_isolines(s, levels) -> int:
    case = test_case(s["case"])
    out = _out_dir(s.get("out", "."))
    bounds = s.get("bounds") or case.bounds
    nx = s["nx"]
    ny = s.get("ny") or nx
    source = SOURCE_ALIASES.get(s.get("source", "exact"), s.get("source", "exact"))
    mesh = build_rect_mesh(*bounds, nx, ny, Pattern(s.get("pattern", "crossed")))
    phi, _ = input_levelset(case, mesh, source)
    with open(os.path.join(out, "isolines.csv"), "w", newline="") as fh:
        fh.write("level,length\n")
        for level in levels:
            a, b, _ = _contour_segments(mesh, phi.coeffs, float(level))
            fh.write(f"{float(level)!r},{float(np.linalg.norm(b - a, axis=1).sum())!r}\n")
    if not s.get("no_plots"):
        export_isolines(phi, levels, os.path.join(out, "isolines.svg"))
    return EXIT_OK


def run(argv=None) -> int:
    """Entry point; returns the process exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                            format="%(message)s")
        cmd = args.command
        base = {"nx": 16, "refinements": 1, "out": "."}
        if cmd == "laplace":
            return _run_experiment(_settings(args, {**base, "case": "laplace_sine"}), args.dump_field)
        if cmd == "droplet":
            return _run_experiment(_settings(args, {**base, "case": "droplet"}), args.dump_field)
        if cmd == "wetting":
            return _run_experiment(_settings(args, {**base, "case": WETTING[args.angle]}), args.dump_field)
        if cmd == "isolines":
            s = _settings(args, {**base, "case": args.case})
            return _run_isolines(s, args.levels)
        if cmd == "sweep":
            s = _settings(args, base)
            if "case" not in s:
                raise UsageError("sweep config must set case")
            return _run_experiment(s, args.dump_field)
        raise UsageError(f"unknown command {cmd!r}")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (SweepError, SingularSystemError, EmptyInterfaceError, UnreachableVertexError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
