"""Operator norms of propagator kernels, stationary-phase domain splitting and
log-log slope fits for decay experiments."""
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import svds

from .dispersion import g_derivatives, stationary_data
from .free import QuadratureSpec, free_kernel_table
from .lattice import LatticeWindow, MatrixPotential
from .propagator import oracle_kernels, propagator_pc_spectral
from .resolvent import KernelBlockMatrix, truncated_operator

L1_LINF = "l1_linf"
L2W = "l2w"
L1W_LINFW = "l1w_linfw"
NORM_KINDS = (L1_LINF, L2W, L1W_LINFW)


def _site_weights(rng, sigma):
    return (1.0 + np.abs(rng.sites)) ** (-float(sigma))


def norm_l1_to_linf(kernel):
    """``sup_{n,k}`` of the largest entry magnitude of the 2x2 block."""
    return float(np.max(np.abs(kernel.blocks)))


def weighted_matrix(kernel, sigma):
    """``(1+|n|)^{-sigma} K (1+|k|)^{-sigma}`` as a site-major dense matrix."""
    wn = np.repeat(_site_weights(kernel.n_range, sigma), 2)
    wk = np.repeat(_site_weights(kernel.k_range, sigma), 2)
    return wn[:, None] * kernel.as_matrix() * wk[None, :]


def largest_singular_value(mat):
    """Top singular value; ARPACK for big matrices, LAPACK otherwise."""
    if min(mat.shape) <= 400:
        return float(np.linalg.norm(mat, 2))
    s = svds(mat, k=1, return_singular_vectors=False, tol=1e-12, random_state=0)
    return float(s[0])


def norm_weighted_l2(kernel, sigma, hs=False):
    """Norm ``l^2_sigma -> l^2_{-sigma}``; ``hs=True`` gives the Hilbert--Schmidt bound."""
    if sigma <= 0.5:
        raise ValueError("sigma must exceed 1/2")
    mat = weighted_matrix(kernel, sigma)
    if hs:
        return float(np.linalg.norm(mat))
    return largest_singular_value(mat)


def norm_weighted_l1_linf(kernel, sigma=1.5):
    """``sup |K_{n,k}| / ((1+|n|)(1+|k|))^sigma``, the ``l^1_sigma -> l^inf_{-sigma}`` norm."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    wn = _site_weights(kernel.n_range, sigma)
    wk = _site_weights(kernel.k_range, sigma)
    mags = np.max(np.abs(kernel.blocks), axis=(2, 3))
    return float(np.max(mags * wn[:, None] * wk[None, :]))


def kernel_norm(kernel, kind, sigma=None):
    if kind == L1_LINF:
        return norm_l1_to_linf(kernel)
    if kind == L2W:
        return norm_weighted_l2(kernel, 1.0 if sigma is None else sigma)
    if kind == L1W_LINFW:
        return norm_weighted_l1_linf(kernel, 1.5 if sigma is None else sigma)
    raise ValueError(f"unknown norm kind {kind!r}")


@dataclass(frozen=True)
class Domains:
    """Partition of ``[-pi, pi]`` around the degenerate stationary points."""

    J_plus: list
    J_minus: list
    J: list
    nu: float
    theta0: float

    def all_intervals(self):
        return sorted(self.J_plus + self.J_minus + self.J)


def split_domains(v, m):
    """``J_+ = {|theta - theta0| <= nu |theta0|}``, its mirror ``J_-`` and the rest.

    ``v`` is accepted for the caller's bookkeeping; the intervals themselves
    depend only on ``m`` through ``theta0`` and ``nu``. The reflected phase
    uses ``v = |n + k| / t``; the same split applies, though the signed
    ``(n + k) / t`` also appears in the literature.
    """
    data = stationary_data(m)
    th0, nu = data.theta0, data.nu
    r = nu * abs(th0)
    jp = [(th0 - r, th0 + r)]
    jm = [(-th0 - r, -th0 + r)]
    # th0 < 0 so jp sits left of jm; both stay inside (-pi, pi) since nu <= 1/2
    rest = [(-np.pi, jp[0][0]), (jp[0][1], jm[0][0]), (jm[0][1], np.pi)]
    rest = [iv for iv in rest if iv[1] > iv[0]]
    return Domains(jp, jm, rest, float(nu), float(th0))


def min_phase_curvature(intervals, m, points=2000):
    """``min |Phi''| = min |g''|`` over a union of intervals (grid scan)."""
    vals = []
    for a, b in intervals:
        th = np.linspace(a, b, points)
        vals.append(np.min(np.abs(g_derivatives(th, m)[2])))
    return float(min(vals))


def fit_slope(times, norms, window=None):
    """Least-squares slope of ``log norm`` against ``log t``.

    ``window`` is a ``(start, stop)`` index pair (stop exclusive); the
    default is the upper half of the grid. Returns ``(slope, rms_residual, window)``.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if window is None:
        window = (times.size // 2, times.size)
    a, b = window
    x, y = np.log(times[a:b]), np.log(norms[a:b])
    if x.size < 2:
        raise ValueError("fit window needs at least two points")
    coef = np.polyfit(x, y, 1)
    res = y - np.polyval(coef, x)
    return float(coef[0]), float(np.sqrt(np.mean(res**2))), (int(a), int(b))


@dataclass(frozen=True)
class DecaySeries:
    norm_kind: str
    sigma: float | None
    times: np.ndarray
    norms: np.ndarray
    fitted_slope: float
    fit_window: tuple
    residual: float
    extras: dict = field(default_factory=dict, compare=False)

    def summary_line(self):
        a, b = self.fit_window
        return f"# slope={self.fitted_slope:.17g} residual={self.residual:.17g} fit_window={a}:{b}"

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "norm"])
            for t, v in zip(self.times, self.norms):
                w.writerow([f"{t:.17g}", f"{v:.17g}"])
            fh.write(self.summary_line() + "\n")
        return path


def log_grid(a, b, points):
    return np.geomspace(float(a), float(b), int(points))


@dataclass(frozen=True)
class DecayConfig:
    """Inputs of one decay run.

    ``window`` is the half-width ``N`` of the finite section (raised by
    ``required_window`` when smaller); ``interior`` the half-width of the block
    range whose norm is measured, by default ``interior_for`` the norm kind.
    ``method`` is ``'spectral'`` or ``'oracle'``.
    """

    m: float = 1.0
    Q: MatrixPotential = field(default_factory=MatrixPotential.zero)
    norm_kind: str = L1_LINF
    sigma: float | None = None
    times: tuple = tuple(log_grid(20, 400, 12))
    window: int = 600
    interior: int | None = None
    method: str = "oracle"
    fit_window: tuple | None = None
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    out: str | None = None


def interior_for(kind, m, t_max):
    """Block range for a norm: the unweighted sup lives on the ray
    ``|n - k| = v0 t``, which must fit on one side of the potential."""
    if kind == L1_LINF:
        return int(np.ceil(stationary_data(m).v0 * t_max + 50))
    return 150


def required_window(m, t_max, interior=0):
    """``N >= v0 t_max + 100``, and wide enough that waves leaving the probed
    block cannot come back from the section boundary before ``t_max``."""
    v0 = stationary_data(m).v0
    return int(np.ceil(max(v0 * t_max + 100, interior + 0.5 * v0 * t_max + 50)))


class DecayFailure(ArithmeticError):
    def __init__(self, t, cause):
        super().__init__(f"decay run failed at t={t}: {cause}")
        self.t = t
        self.cause = cause


def _free_norms(cfg, N):
    """Free kernel is Toeplitz in ``n - k``: one table per time covers everything."""
    rng = LatticeWindow.symmetric(N)
    norms, argmax = [], []
    for t in cfg.times:
        try:
            if cfg.norm_kind == L1_LINF:
                tab = free_kernel_table(t, cfg.m, 2 * N, cfg.quad)
                mags = np.max(np.abs(tab.blocks), axis=(1, 2))
                i = int(np.argmax(mags))
                norms.append(float(mags[i]))
                argmax.append(int(tab.offsets[i]))
                continue
            tab = free_kernel_table(t, cfg.m, 2 * N, cfg.quad)
        except ArithmeticError as exc:
            raise DecayFailure(t, exc) from exc
        d = rng.sites[:, None] - rng.sites[None, :]
        ker = KernelBlockMatrix(t, rng, rng, tab.blocks[d + 2 * N])
        norms.append(kernel_norm(ker, cfg.norm_kind, cfg.sigma))
    return np.array(norms), {"argmax_offset": np.array(argmax)} if argmax else {}


def run_decay_experiment(cfg):
    """Compute norms at every time, fit the slope and optionally write the CSV."""
    if cfg.norm_kind not in NORM_KINDS:
        raise ValueError(f"norm kind must be one of {NORM_KINDS}")
    times = np.asarray(cfg.times, dtype=float)
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and increasing")
    interior = cfg.interior or interior_for(cfg.norm_kind, cfg.m, times[-1])
    N = max(int(cfg.window), required_window(cfg.m, times[-1], interior))
    extras = {"window": N, "interior": interior}
    if cfg.Q.is_zero and cfg.method == "spectral":
        norms, more = _free_norms(cfg, N)
        extras.update(more)
    elif cfg.method == "oracle":
        rng = LatticeWindow.symmetric(interior)
        try:
            op = truncated_operator(cfg.m, cfg.Q, N)
            mats = oracle_kernels(times, op, rng)
        except ArithmeticError as exc:
            raise DecayFailure(times[0], exc) from exc
        norms = np.array([
            kernel_norm(KernelBlockMatrix.from_matrix(t, rng, rng, mat), cfg.norm_kind, cfg.sigma)
            for t, mat in zip(times, mats)
        ])
        extras["bound_states"] = int(op.bound_mask.sum())
    elif cfg.method == "spectral":
        rng = LatticeWindow.symmetric(interior)
        norms = []
        for t in times:
            try:
                snap = propagator_pc_spectral(t, cfg.Q, cfg.m, rng, rng, cfg.quad)
            except ArithmeticError as exc:
                raise DecayFailure(t, exc) from exc
            norms.append(kernel_norm(snap.kernel, cfg.norm_kind, cfg.sigma))
        norms = np.array(norms)
    else:
        raise ValueError(f"unknown method {cfg.method!r}")
    slope, res, win = fit_slope(times, norms, cfg.fit_window)
    series = DecaySeries(cfg.norm_kind, cfg.sigma, times, norms, slope, win, res, extras)
    if cfg.out:
        series.write_csv(cfg.out)
    return series
