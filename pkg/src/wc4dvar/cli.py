"""Command-line entry point: ``wc4dvar run|spectrum|plot|sweep``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure,
4 dense-cap exceeded.
"""
import argparse
import csv
import io
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import experiments
from .config import load_config
from .errors import ConfigError, DenseCapError, NumericalError
from .plotting import render_svg

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_DENSE_CAP = 0, 2, 3, 4


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([_cell(v) for v in row] for row in rows)
    write_atomic(path, buf.getvalue())


def _load(args):
    overrides = list(args.set or [])
    if getattr(args, "precond", None):
        overrides.append(f"precond.methods={args.precond}")
    return load_config(args.config, overrides)


def cmd_run(args):
    config = _load(args)
    out = Path(args.out)
    result = experiments.run_experiment(config)
    n_A = result.hessian_size
    print(f"Hessian dimension: {n_A} x {n_A} (q = {result.q} observations)")
    hist_rows, ritz_rows = [], []
    for job in result.jobs:
        for i, (c, r) in enumerate(zip(job.costs, job.relative_residuals)):
            hist_rows.append((job.label, job.seed, i, float(c), float(r)))
        ritz_rows.extend((job.label, job.seed, i + 1, float(t))
                         for i, t in enumerate(job.ritz_values))
    write_csv(out / "cost_history.csv",
              ("spec", "seed", "iteration", "quadratic_cost", "relative_residual"), hist_rows)
    write_csv(out / "ritz_values.csv", ("spec", "seed", "index", "theta"), ritz_rows)
    write_csv(out / "summary.csv", ("spec", "iteration", "mean_cost", "std_cost", "n_seeds"),
              experiments.summarize(result))
    write_atomic(out / "config_effective.cfg", config.to_ini())
    for label, jobs in result.by_label().items():
        final = np.mean([j.costs[-1] for j in jobs])
        print(f"  {label:<22} seeds={len(jobs):<3} final mean cost={final:.6g}")
    return EXIT_OK


def cmd_spectrum(args):
    config = _load(args)
    out = Path(args.out)
    spectra = experiments.compute_spectra(config)
    rows = [(label, i + 1, float(v)) for label, ev in spectra.items() for i, v in enumerate(ev)]
    write_csv(out / "spectrum.csv", ("spec", "index", "eigenvalue"), rows)
    for label, ev in spectra.items():
        print(f"  {label:<22} min={ev[0]:.6g} max={ev[-1]:.6g}")
    return EXIT_OK


def cmd_sweep(args):
    config = _load(args)
    values = experiments.parse_sweep_values(args.axis, args.values)
    rows = experiments.run_sweep(config, args.axis, values)
    write_csv(Path(args.out) / "sweep_summary.csv",
              ("axis", "value", "q", "spec", "iteration", "mean_cost", "std_cost", "n_seeds"), rows)
    for value in dict.fromkeys(r[1] for r in rows):
        print(f"  {args.axis}={value}: q = {next(r[2] for r in rows if r[1] == value)}")
    return EXIT_OK


def _read_series(path):
    """Plot series from one of this tool's CSV files."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = tuple(reader.fieldnames or ())
            records = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    layouts = {
        ("spec", "seed", "iteration", "quadratic_cost", "relative_residual"):
            (("spec",), "iteration", "quadratic_cost", "PCG iteration", "quadratic cost", False),
        ("spec", "iteration", "mean_cost", "std_cost", "n_seeds"):
            (("spec",), "iteration", "mean_cost", "PCG iteration", "mean quadratic cost", False),
        ("spec", "index", "eigenvalue"):
            (("spec",), "index", "eigenvalue", "index", "eigenvalue", True),
        ("spec", "seed", "index", "theta"):
            (("spec",), "index", "theta", "index", "Ritz value", True),
        ("axis", "value", "q", "spec", "iteration", "mean_cost", "std_cost", "n_seeds"):
            (("value", "spec"), "iteration", "std_cost", "PCG iteration",
             "std of quadratic cost", False),
    }
    if header not in layouts:
        raise ConfigError(f"{path}: unrecognised CSV header {','.join(header)}")
    keys, xcol, ycol, xlabel, ylabel, scatter = layouts[header]
    groups = {}
    try:
        for rec in records:
            name = " ".join(rec[k] for k in keys)
            groups.setdefault(name, {}).setdefault(float(rec[xcol]), []).append(float(rec[ycol]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed row ({exc})") from exc
    series = []
    for name, points in groups.items():
        x = sorted(points)
        series.append((name, x, [float(np.mean(points[v])) for v in x]))
    return series, xlabel, ylabel, scatter


def cmd_plot(args):
    series, xlabel, ylabel, scatter = [], "", "", False
    for path in args.csv:
        s, xlabel, ylabel, scatter = _read_series(path)
        if len(args.csv) > 1:
            s = [(f"{Path(path).stem}: {name}", x, y) for name, x, y in s]
        series.extend(s)
    if not series:
        raise ConfigError("no data to plot")
    try:
        svg = render_svg(series, title=args.title or "", xlabel=xlabel, ylabel=ylabel,
                         logy=args.logy, scatter=scatter)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    if out.is_dir() or not out.suffix:
        out = out / "plot.svg"
    write_atomic(out, svg)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wc4dvar", description="Weak-constraint 4D-Var twin experiments with randomized LMPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True,
                       help="config file (or the name of a bundled config, e.g. advection.cfg)")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config entry (repeatable)")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("run", help="run the twin experiment and write cost histories")
    common(p)
    p.add_argument("--precond", help="comma separated preconditioner methods (overrides config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("spectrum", help="eigenvalues of A and of the preconditioned Hessians")
    common(p)
    p.add_argument("--precond", help="comma separated preconditioner methods (overrides config)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="repeat the run over k, l or the observation network")
    common(p)
    p.add_argument("--axis", required=True, choices=experiments.SWEEP_AXES)
    p.add_argument("--values", required=True,
                   help="comma separated values; obs-network values are SPACE/TIME strides")
    p.add_argument("--precond", help="comma separated preconditioner methods (overrides config)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="SVG plot of CSV files written by this tool")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", required=True, help="output .svg file or directory")
    p.add_argument("--logy", action="store_true", help="logarithmic y axis")
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DenseCapError as exc:
        print(f"dense cap exceeded: {exc}", file=sys.stderr)
        return EXIT_DENSE_CAP


if __name__ == "__main__":
    sys.exit(main())
