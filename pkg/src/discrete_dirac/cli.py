"""Command-line interface.

    discrete-dirac <command> [options]
    discrete-dirac --config run.cfg [<command>] [options]

Commands: spectrum, scattering, resonances, evolve, decay, free-kernel.
Exit codes: 0 success, 1 input or validation error, 2 numerical failure.
Errors go to stderr as ``ERROR <code>: <detail>``.
"""
import argparse
import csv
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .lattice import DomainError, LatticeWindow, ModelParams, PotentialError

COMMANDS = ("spectrum", "scattering", "resonances", "evolve", "decay", "free-kernel")
NORMS = ("l1_linf", "l2w", "l1w_linfw")


class ValidationError(ValueError):
    pass


# -- parsing helpers ---------------------------------------------------------


def parse_t_grid(text):
    """``a:b:points[:log|lin]`` -> increasing array of times."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ValidationError(f"--t-grid expects a:b:points[:log|lin], got {text!r}")
    try:
        a, b, pts = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValidationError(f"--t-grid has non-numeric fields: {text!r}")
    kind = parts[3] if len(parts) == 4 else "log"
    if kind not in ("log", "lin"):
        raise ValidationError(f"--t-grid spacing must be 'log' or 'lin', got {kind!r}")
    if pts < 1 or not (0 <= a <= b) or (kind == "log" and a <= 0):
        raise ValidationError(f"--t-grid needs 0 <= a <= b (a > 0 for log) and points >= 1: {text!r}")
    if pts == 1:
        return np.array([a])
    return np.geomspace(a, b, pts) if kind == "log" else np.linspace(a, b, pts)


def parse_theta_grid(text):
    """``a:b:points`` -> cell midpoints of a uniform split of ``[a, b]``.

    Midpoints keep the band edges ``0, +-pi`` off the grid when ``[a, b]``
    is symmetric and ``points`` even.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"--theta-grid expects a:b:points, got {text!r}")
    try:
        a, b, pts = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValidationError(f"--theta-grid has non-numeric fields: {text!r}")
    if pts < 1 or not (-math.pi <= a < b <= math.pi):
        raise ValidationError(f"--theta-grid needs -pi <= a < b <= pi and points >= 1: {text!r}")
    edges = np.linspace(a, b, pts + 1)
    return 0.5 * (edges[:-1] + edges[1:])


def read_config(path):
    """Plain ``key = value`` lines; ``#`` comments; keys match the long flags."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}: line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="discrete-dirac", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--config", help="key = value file with the same keys as the long flags")
    p.add_argument("--mass", type=float)
    p.add_argument("--potential", help="potential file or builtin spec, e.g. single_site(0, 0.3, 0.1, 0.1, -0.2)")
    p.add_argument("--window", type=int, help="finite-section half-width N")
    p.add_argument("--sigma", type=float)
    p.add_argument("--norm", choices=NORMS)
    p.add_argument("--t-grid", dest="t_grid", help="a:b:points[:log|lin]")
    p.add_argument("--theta-grid", dest="theta_grid", help="a:b:points")
    p.add_argument("--method", choices=("spectral", "oracle"))
    p.add_argument("--threshold", type=float, help="relative edge-Wronskian threshold or bound-state margin")
    p.add_argument("--out", help="output directory for CSV files")
    p.add_argument("--threads", type=int, help="cap on worker threads")
    p.add_argument("--t", dest="time", type=float, help="single time (evolve, free-kernel)")
    p.add_argument("--n", type=int, help="row site (free-kernel)")
    p.add_argument("--k", type=int, help="column site (free-kernel)")
    p.add_argument("--range", dest="block_range", type=int, help="half-width of the reported block range")
    return p


DEFAULTS = {
    "mass": 1.0,
    "potential": "zero",
    "window": 600,
    "sigma": None,
    "norm": "l1_linf",
    "t_grid": "20:400:12:log",
    "theta_grid": f"{-math.pi}:{math.pi}:100",
    "method": None,
    "threshold": None,
    "out": ".",
    "threads": None,
    "time": 10.0,
    "n": 0,
    "k": 0,
    "block_range": 10,
}

_CONFIG_ALIASES = {"t": "time", "range": "block_range"}
_CASTS = {"mass": float, "window": int, "sigma": float, "threshold": float, "threads": int,
          "time": float, "n": int, "k": int, "block_range": int}


def resolve_options(argv):
    args = build_parser().parse_args(argv)
    opts = dict(DEFAULTS)
    if args.config:
        for key, value in read_config(args.config).items():
            key = _CONFIG_ALIASES.get(key, key)
            if key not in opts and key != "command":
                raise ValidationError(f"unknown config key {key!r}")
            if key == "command":
                if value not in COMMANDS:
                    raise ValidationError(f"unknown command {value!r} in config")
                opts["command"] = value
                continue
            try:
                opts[key] = _CASTS.get(key, str)(value)
            except ValueError:
                raise ValidationError(f"config key {key!r}: cannot parse {value!r}")
    for key, value in vars(args).items():
        if key == "config" or value is None:
            continue
        opts[key] = value
    if not opts.get("command"):
        raise ValidationError(f"no command given; choose one of {', '.join(COMMANDS)}")
    validate(opts)
    return opts


def validate(opts):
    m = opts["mass"]
    if not (isinstance(m, float) and math.isfinite(m) and m > 0):
        raise ValidationError(f"--mass must be a positive finite number, got {m!r}")
    if opts["window"] < 1:
        raise ValidationError("--window must be a positive integer")
    if opts["sigma"] is not None and not math.isfinite(opts["sigma"]):
        raise ValidationError("--sigma must be finite")
    if opts["threshold"] is not None and not (opts["threshold"] > 0):
        raise ValidationError("--threshold must be positive")
    if opts["threads"] is not None and opts["threads"] < 1:
        raise ValidationError("--threads must be at least 1")
    if opts["time"] < 0:
        raise ValidationError("--t must be nonnegative")
    if opts["block_range"] < 0:
        raise ValidationError("--range must be nonnegative")
    if opts["norm"] not in NORMS:
        raise ValidationError(f"--norm must be one of {', '.join(NORMS)}")
    if opts["method"] not in (None, "spectral", "oracle"):
        raise ValidationError("--method must be 'spectral' or 'oracle'")
    opts["times"] = parse_t_grid(opts["t_grid"])
    opts["thetas"] = parse_theta_grid(opts["theta_grid"])


def apply_threads(n):
    if n is None:
        return
    from threadpoolctl import threadpool_limits

    threadpool_limits(limits=n)
    try:
        import numba
    except ImportError:  # pragma: no cover
        return
    with warnings.catch_warnings():
        # threading-layer probing warns about old TBB builds it then skips
        warnings.simplefilter("ignore", numba.NumbaWarning)
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# -- commands -----------------------------------------------------------------


def _outdir(opts):
    d = Path(opts["out"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _potential(opts):
    from .potentials import resolve_potential

    return resolve_potential(opts["potential"])


def cmd_spectrum(opts, out):
    from .resolvent import truncated_operator

    m, Q = opts["mass"], _potential(opts)
    op = truncated_operator(m, Q, opts["window"], opts["threshold"])
    vals, tags = op.eigenvalues, op.classification
    path = _outdir(opts) / "spectrum.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "eigenvalue", "tag"])
        for i, (x, tag) in enumerate(zip(vals, tags)):
            w.writerow([i, f"{x:.17g}", tag])
    edges = ModelParams(m).gap_edges
    print("gap edges: " + " ".join(f"{e:.12g}" for e in edges), file=out)
    bound = vals[op.bound_mask]
    print(f"bound states: {bound.size} (edge margin {op.edge_margin:.3g})", file=out)
    for x in bound:
        print(f"  lambda={x:+.12g}", file=out)
    print(f"wrote {path}", file=out)
    return 0


def cmd_scattering(opts, out):
    from .dispersion import PLAIN, TILDE
    from .scattering import detect_resonances, scattering_grid

    m, Q = opts["mass"], _potential(opts)
    th = opts["thetas"]
    if np.any(np.abs(np.sin(th)) < 1e-12):
        raise ValidationError("--theta-grid hits a band edge (theta = 0 or +-pi)")
    cols = ["W", "a", "b_plus", "b_minus", "T", "R_plus", "R_minus"]
    # compute everything first so a numerical failure leaves no partial file
    grids = [(branch, scattering_grid(th, m, Q, branch)) for branch in (PLAIN, TILDE)]
    worst = max(float(np.max(s.unitarity_residual)) for _, s in grids)
    path = _outdir(opts) / "scattering.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["branch", "theta", "lambda"] + [f"{c}_{p}" for c in cols for p in ("re", "im")]
                   + ["unitarity_residual"])
        for branch, s in grids:
            res = s.unitarity_residual
            for i in range(th.size):
                row = [branch, f"{th[i]:.17g}", f"{s.lam[i]:.17g}"]
                for c in cols:
                    v = getattr(s, c)[i]
                    row += [f"{v.real:.17g}", f"{v.imag:.17g}"]
                row.append(f"{res[i]:.17g}")
                w.writerow(row)
    print(f"max unitarity residual {worst:.3e}", file=out)
    rep = detect_resonances(Q, m, opts["threshold"] or 1e-8)
    for line in rep.lines():
        print(line, file=out)
    print(f"wrote {path}", file=out)
    return 0


def cmd_resonances(opts, out):
    from .scattering import detect_resonances

    rep = detect_resonances(_potential(opts), opts["mass"], opts["threshold"] or 1e-8)
    for line in rep.lines():
        print(line, file=out)
    print(f"resonant edges: {rep.count}", file=out)
    return 0


def _kernel_rows(writer, kernel, t, method):
    for i, n in enumerate(kernel.n_range.sites):
        for j, k in enumerate(kernel.k_range.sites):
            b = kernel.blocks[i, j]
            writer.writerow([f"{t:.17g}", method, n, k]
                            + [f"{x:.17g}" for e in b.ravel() for x in (e.real, e.imag)])


def cmd_evolve(opts, out):
    from .propagator import propagator_pc_oracle, propagator_pc_spectral
    from .resolvent import truncated_operator

    m, Q = opts["mass"], _potential(opts)
    rng = LatticeWindow.symmetric(opts["block_range"])
    method = opts["method"] or "oracle"
    op = truncated_operator(m, Q, opts["window"], opts["threshold"])
    t = opts["time"]
    snap = (propagator_pc_spectral(t, Q, m, rng, rng) if method == "spectral"
            else propagator_pc_oracle(t, op, rng))
    other = (propagator_pc_oracle(t, op, rng) if method == "spectral"
             else propagator_pc_spectral(t, Q, m, rng, rng))
    path = _outdir(opts) / f"kernel_t{t:g}_{method}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "method", "n", "k"] + [f"k{a}{b}_{p}" for a in (1, 2) for b in (1, 2)
                                                 for p in ("re", "im")])
        _kernel_rows(w, snap.kernel, t, method)
    diff = snap.kernel.max_abs_diff(other.kernel)
    print(f"t={t:g} method={method} blocks={rng.size}x{rng.size}", file=out)
    print(f"two-method max difference {diff:.3e}", file=out)
    if snap.quad_error is not None:
        print(f"quadrature error estimate {snap.quad_error:.3e}", file=out)
    print(f"wrote {path}", file=out)
    return 0


def cmd_decay(opts, out):
    from .decay import DecayConfig, run_decay_experiment

    Q = _potential(opts)
    method = opts["method"] or ("spectral" if Q.is_zero else "oracle")
    sigma = opts["sigma"]
    if opts["norm"] == "l2w" and sigma is not None and sigma <= 0.5:
        raise ValidationError("--sigma must exceed 1/2 for l2w")
    path = _outdir(opts) / f"decay_{opts['norm']}.csv"
    cfg = DecayConfig(m=opts["mass"], Q=Q, norm_kind=opts["norm"], sigma=sigma,
                      times=tuple(opts["times"]), window=opts["window"], method=method,
                      out=str(path))
    series = run_decay_experiment(cfg)
    print(series.summary_line(), file=out)
    print(f"wrote {path}", file=out)
    return 0


def cmd_free_kernel(opts, out):
    from .free import free_propagator_block

    t, n, k = opts["time"], opts["n"], opts["k"]
    block, err = free_propagator_block(t, n, k, opts["mass"])
    print(f"t={t:g} n={n} k={k}", file=out)
    for row in block:
        print("  " + "  ".join(f"{x.real:+.15e}{x.imag:+.15e}j" for x in row), file=out)
    print(f"quadrature error estimate {err:.3e}", file=out)
    return 0


HANDLERS = {
    "spectrum": cmd_spectrum,
    "scattering": cmd_scattering,
    "resonances": cmd_resonances,
    "evolve": cmd_evolve,
    "decay": cmd_decay,
    "free-kernel": cmd_free_kernel,
}


def _fail(code, detail):
    print(f"ERROR {code}: {detail}", file=sys.stderr)
    return code


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        opts = resolve_options(argv)
    except SystemExit as exc:  # argparse usage errors
        return 1 if exc.code not in (0, None) else 0
    except (ValidationError, PotentialError, DomainError, ValueError) as exc:
        return _fail(1, exc)
    apply_threads(opts["threads"])
    try:
        return HANDLERS[opts["command"]](opts, out)
    except (ValidationError, PotentialError, DomainError, MemoryError) as exc:
        return _fail(1, exc)
    except ArithmeticError as exc:
        return _fail(2, exc)
    except ValueError as exc:
        return _fail(1, exc)


if __name__ == "__main__":
    sys.exit(main())
