"""
Command-line driver: `ddlab fig2`, `ddlab sweep SUBJECT` and `ddlab verify SUITE`.

Each run writes CSV files named <prefix>_<part>.csv and a plain-text
<prefix>_manifest.txt of key=value lines.  `--manifest FILE` replays a run:
the recorded parameters become the defaults and any flag given on the
command line overrides them.

Exit codes: 0 success, 1 verification failure, 2 invalid arguments,
3 numerical failure (some sweep point could not be computed).
"""

import argparse
import csv
import os
import shlex
import sys
import time

import numpy as np

from . import __version__
from .model_core import figure2_model, geometric_model
from .sweep import (
    detect_descents, figure2_curves, inverse_lambda_grid, sweep_epoch, sweep_lambda_analytic,
    sweep_lambda_empirical,
)
from .two_layer import TrainConfig, default_checkpoints, nn_epoch_curve, nn_lambda_sweep
from .verify import SUITES

SEED_ENV = "DDLAB_SEED"
SUBJECTS = ("linear-analytic", "linear-empirical", "epoch", "nn", "nn-epoch")

# manifest keys that are bookkeeping rather than parameters
_META_KEYS = {"argv", "version", "duration_seconds", "manifest"}


class UsageError(Exception):
    pass


def fmt(x):
    """Shortest round-trip text for a float (at most 17 significant digits)."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_manifest(path, args, argv, duration):
    lines = [f"argv={shlex.join(argv)}", f"version={__version__}"]
    for key in sorted(vars(args)):
        if key in _META_KEYS or key == "func":
            continue
        val = getattr(args, key)
        if val is None:
            continue
        lines.append(f"{key}={fmt(val)}")
    lines.append(f"duration_seconds={duration:.3f}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_manifest(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            out[key] = val
    return out


# -- argument helpers --------------------------------------------------------

def positive(name, value):
    if not value > 0:
        raise UsageError(f"--{name.replace('_', '-')} must be positive, got {value}")


def int_list(text, name):
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name} expects comma-separated integers, got {text!r}") from None
    if not vals:
        raise UsageError(f"--{name} must not be empty")
    return vals


def float_list(text, name):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name} expects comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"--{name} must not be empty")
    return vals


def default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def resolve(args, key, default):
    if getattr(args, key, None) is None:
        setattr(args, key, default)
    return getattr(args, key)


def build_model(args):
    kind = resolve(args, "model", "fig2")
    if kind == "fig2":
        sigma = resolve(args, "sigma", 15.0)
        if sigma < 0:
            raise UsageError("--sigma must be non-negative")
        return figure2_model(sigma)
    if kind == "geometric":
        d = resolve(args, "d", 16)
        decay = resolve(args, "decay", 0.5)
        sigma = resolve(args, "sigma", 0.5)
        theta = resolve(args, "theta", "unit")
        positive("d", d)
        positive("decay", decay)
        if sigma < 0:
            raise UsageError("--sigma must be non-negative")
        return geometric_model(d, decay, sigma, theta)
    raise UsageError(f"--model must be fig2 or geometric, got {kind!r}")


def build_grid(args, lo, hi, ppd):
    lo = resolve(args, "grid_lo", lo)
    hi = resolve(args, "grid_hi", hi)
    ppd = resolve(args, "ppd", ppd)
    positive("grid_lo", lo)
    positive("ppd", ppd)
    if not hi > lo:
        raise UsageError("--grid-hi must exceed --grid-lo")
    return inverse_lambda_grid(lo, hi, ppd)


# -- output ------------------------------------------------------------------

def descent_rows(label, curve, report):
    rows = [(label, "descent_count", "", "", report.descent_count)]
    for kind, items in (("minimum", report.interior_minima), ("maximum", report.interior_maxima)):
        for i, v in items:
            rows.append((label, kind, i, curve.axis[i], v))
    gi, gv = curve.grid_min()
    rows.append((label, "grid_min", gi, curve.axis[gi], gv))
    return rows


DESCENT_HEADER = ["curve", "event", "index", "axis", "value"]


def write_curve(prefix, curve, label):
    write_csv(f"{prefix}_curve.csv", [curve.axis_name, "total", "valid"],
              zip(curve.axis, curve.total, curve.valid))
    write_csv(f"{prefix}_components.csv", [curve.axis_name, *curve.component_names],
              ([a, *col] for a, col in zip(curve.axis, curve.components.T)))
    rep = detect_descents(curve, resolve_tol(curve))
    write_csv(f"{prefix}_descents.csv", DESCENT_HEADER, descent_rows(label, curve, rep))
    return rep


def resolve_tol(curve):
    return curve.metadata.get("tolerance", 0.005)


# -- commands ----------------------------------------------------------------

def cmd_fig2(args):
    model = build_model(args)
    if not model.noise_std > 0:
        raise UsageError("--sigma must be positive: the aligned penalties need noise_std > 0")
    n = resolve(args, "n", 100)
    positive("n", n)
    grid = build_grid(args, 1e-2, 1e4, 100)
    anchor = resolve(args, "anchor", 0)
    if not 0 <= anchor < model.d:
        raise UsageError(f"--anchor must lie in [0, {model.d})")
    tol = resolve(args, "tolerance", 0.005)
    out = figure2_curves(model, n, grid, anchor)
    uni, ali = out["uniform"], out["aligned"]
    p = args.out
    write_csv(f"{p}_curve.csv", ["inv_lambda", "uniform", "aligned"], zip(grid, uni.total, ali.total))
    rows = []
    for label, c in (("uniform", uni), ("aligned", ali)):
        rows += [[label, a, *col] for a, col in zip(c.axis, c.components.T)]
    write_csv(f"{p}_components.csv", ["policy", "inv_lambda", *uni.component_names], rows)
    ru = detect_descents(uni, tol)
    ra = detect_descents(ali, tol)
    write_csv(f"{p}_descents.csv", DESCENT_HEADER,
              descent_rows("uniform", uni, ru) + descent_rows("aligned", ali, ra))
    print(f"uniform: {ru.descent_count} descents, {len(ru.interior_minima)} interior minima, "
          f"grid-min {uni.grid_min()[1]:.6g}")
    print(f"aligned: {ra.descent_count} descents, {len(ra.interior_minima)} interior minima, "
          f"grid-min {ali.grid_min()[1]:.6g}")
    return 0


def cmd_sweep(args):
    subject = args.subject
    workers = resolve(args, "parallelism", os.cpu_count() or 1)
    positive("parallelism", workers)
    seed = resolve(args, "seed", default_seed())
    if subject in ("nn", "nn-epoch"):
        resolve(args, "model", "geometric")
    model = build_model(args)
    tol = resolve(args, "tolerance", 0.005)
    if subject == "linear-analytic":
        n = resolve(args, "n", 100)
        positive("n", n)
        grid = build_grid(args, 1e-2, 1e4, 100)
        policy = resolve(args, "policy", "uniform")
        try:
            curve = sweep_lambda_analytic(model, n, grid, policy, resolve(args, "anchor", 0))
        except (ValueError, IndexError) as exc:
            raise UsageError(str(exc)) from None
    elif subject == "linear-empirical":
        n = resolve(args, "n", 100)
        positive("n", n)
        grid = build_grid(args, 1e-2, 1e4, 10)
        reps = resolve(args, "replicates", 100)
        positive("replicates", reps)
        curve = sweep_lambda_empirical(model, n, grid, reps, seed, workers)
    elif subject == "epoch":
        n = resolve(args, "n", 100)
        positive("n", n)
        eta = float_list(resolve(args, "stepsizes", "0.1"), "stepsizes")
        if len(eta) not in (1, model.d):
            raise UsageError(f"--stepsizes needs 1 or {model.d} values")
        t_max = resolve(args, "t_max", 10 ** 6)
        positive("t_max", t_max)
        t = default_checkpoints(t_max, resolve(args, "t_per_decade", 50))
        try:
            curve = sweep_epoch(model, n, np.array(eta) if len(eta) > 1 else eta[0], t)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        n = resolve(args, "n", 128)
        k = resolve(args, "k", 64)
        positive("n", n)
        positive("k", k)
        seeds = [seed + s for s in int_list(resolve(args, "seeds", "0,1,2,3,4"), "seeds")]
        cfg = TrainConfig(stepsize=resolve(args, "stepsize", 5e-3),
                          max_iterations=resolve(args, "max_iterations", 200_000))
        samples = resolve(args, "test_samples", 200_000)
        if subject == "nn":
            grid = build_grid(args, 1.0, 1e4, 3)
            scale = resolve(args, "layer_scale", 1.0)
            positive("layer_scale", scale)
            curve = nn_lambda_sweep(model, n, k, grid, scale, seeds, cfg, samples, workers=workers)
        else:
            cps = default_checkpoints(cfg.max_iterations, resolve(args, "t_per_decade", 10))
            curve = nn_epoch_curve(model, n, k, seeds, cfg, cps, samples, workers=workers)
    curve.metadata["tolerance"] = tol
    rep = write_curve(args.out, curve, subject)
    bad = np.flatnonzero(~curve.valid)
    print(f"{subject}: {len(curve)} points, {rep.descent_count} descents, "
          f"{len(rep.interior_minima)} interior minima, grid-min {curve.grid_min()[1]:.6g}")
    if bad.size:
        print(f"{bad.size} invalid point(s) at {curve.axis_name} = "
              + ", ".join(fmt(curve.axis[i]) for i in bad[:10]), file=sys.stderr)
        return 3
    return 0


def cmd_verify(args):
    seed = resolve(args, "seed", default_seed())
    suite = SUITES[args.suite](seed=seed)
    keys = ["case", "measured", "threshold", "passed"]
    extra = sorted({k for r in suite.rows for k in r} - set(keys))
    write_csv(f"{args.out}_verify.csv", keys + extra,
              ([r[k] for k in keys] + [r.get(k, "") for k in extra] for r in suite.rows))
    n_pass = sum(r["passed"] for r in suite.rows)
    print(f"{suite.name}: {n_pass}/{len(suite.rows)} cases pass")
    if not suite.passed:
        r = suite.first_failure()
        print(f"first failure: {r['case']} measured={fmt(r['measured'])} "
              f"threshold={fmt(r['threshold'])}", file=sys.stderr)
        return 1
    return 0


# -- parser ------------------------------------------------------------------

def _model_flags(p):
    g = p.add_argument_group("scenario")
    g.add_argument("--model", choices=["fig2", "geometric"], default=None)
    g.add_argument("--sigma", type=float, default=None, help="label noise standard deviation")
    g.add_argument("--n", type=int, default=None, help="training set size")
    g.add_argument("--d", type=int, default=None, help="dimension (geometric model)")
    g.add_argument("--decay", type=float, default=None, help="feature std decay (geometric model)")
    g.add_argument("--theta", choices=["unit", "equal-signal"], default=None)


def _grid_flags(p):
    g = p.add_argument_group("grid")
    g.add_argument("--grid-lo", type=float, default=None, help="smallest 1/lambda")
    g.add_argument("--grid-hi", type=float, default=None, help="largest 1/lambda")
    g.add_argument("--ppd", type=int, default=None, help="grid points per decade")
    g.add_argument("--tolerance", type=float, default=None, help="descent filter tolerance")


def build_parser():
    parser = argparse.ArgumentParser(prog="ddlab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--manifest", default=None, help="replay the run recorded in this manifest")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("fig2", help="uniform vs aligned analytic risk curves of the two-feature model")
    _model_flags(p)
    _grid_flags(p)
    p.add_argument("--anchor", type=int, default=None, help="anchor feature for aligned penalties")
    p.add_argument("--out", default=None, help="output prefix")
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("sweep", help="risk curve of one estimator family")
    p.add_argument("subject", choices=SUBJECTS)
    _model_flags(p)
    _grid_flags(p)
    p.add_argument("--policy", choices=["uniform", "aligned", "optimal"], default=None)
    p.add_argument("--anchor", type=int, default=None)
    p.add_argument("--replicates", type=int, default=None, help="datasets per grid point")
    p.add_argument("--stepsizes", default=None, help="comma-separated per-feature stepsizes")
    p.add_argument("--t-max", type=int, default=None, help="last iteration (epoch)")
    p.add_argument("--t-per-decade", type=int, default=None, help="checkpoints per decade")
    p.add_argument("--k", type=int, default=None, help="hidden units")
    p.add_argument("--layer-scale", type=float, default=None, help="lambda2 / lambda1")
    p.add_argument("--seeds", default=None, help="comma-separated replicate offsets")
    p.add_argument("--stepsize", type=float, default=None, help="network learning rate")
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--test-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help=f"base seed (default ${SEED_ENV} or 0)")
    p.add_argument("--parallelism", type=int, default=None, help="worker processes")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run an identity or bound suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def _manifest_argv(path):
    """Reconstruct a command line from a manifest."""
    rec = read_manifest(path)
    argv = [rec.pop("command")]
    for pos in ("subject", "suite"):
        if pos in rec:
            argv.append(rec.pop(pos))
    for key, val in rec.items():
        if key in _META_KEYS:
            continue
        argv += [f"--{key.replace('_', '-')}", val]
    return argv


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--manifest", default=None)
    known, rest = pre.parse_known_args(argv)
    if known.manifest is not None:
        try:
            base = _manifest_argv(known.manifest)
        except (OSError, KeyError) as exc:
            print(f"ddlab: cannot read manifest: {exc}", file=sys.stderr)
            return 2
        # flags given on the command line come last and therefore win
        full = base + rest
    else:
        full = argv
    try:
        args = parser.parse_args(full)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help()
        return 2
    if args.out is None:
        args.out = args.command if args.command == "fig2" else f"{args.command}_{getattr(args, 'subject', None) or args.suite}"
    start = time.perf_counter()
    try:
        code = args.func(args)
    except UsageError as exc:
        print(f"ddlab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"ddlab {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    write_manifest(f"{args.out}_manifest.txt", args, ["ddlab", *argv], time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
