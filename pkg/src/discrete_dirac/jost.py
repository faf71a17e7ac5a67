"""Jost solutions of ``D w = lam w`` via the one-pass Volterra recursion.

``w^+`` matches ``(1, alpha_+) e^{-i theta n}`` as ``n -> +inf`` and ``w^-``
matches ``(1, alpha_-) e^{+i theta n}`` as ``n -> -inf`` (plain branch); the
tilde branch uses ``(alpha~_+-, 1)`` instead. What is stored is the
phase-stripped ``h_n = e^{+-i n theta} w_n``.

For a potential supported on a finite window the Volterra sum only involves
sites already visited, so a single sweep is exact. Away from the support on
the matching side ``h_n`` equals the boundary vector bit for bit.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dispersion import PLAIN, TILDE, SpectralPoint, g
from .lattice import LatticeWindow, MatrixPotential, SpinorSequence, apply_dirac, ModelParams

TAIL_TOL = 1e-10


class SingularHoppingError(ArithmeticError):
    """``1 + q12`` (equivalently ``1 + q21``) vanishes at some site."""


class TruncationError(ArithmeticError):
    """The dropped tail of a windowed potential is above tolerance."""


@dataclass(frozen=True)
class JostSolution:
    side: str
    branch: str
    point: SpectralPoint
    h: SpinorSequence
    tail_error: float = 0.0

    @property
    def window(self):
        return self.h.window

    @property
    def sign(self):
        return 1 if self.side == "+" else -1

    def w(self):
        """Undo the phase: ``w_n = e^{-+ i n theta} h_n``."""
        sites = self.window.sites
        phase = np.exp(-self.sign * 1j * self.point.theta * sites)
        return SpinorSequence(self.window, self.h.values * phase[:, None])


def _potential_arrays(Q):
    """Potential entries restricted to its support, or a single zero site."""
    sup = Q.support
    if sup is None:
        return np.zeros((1, 2, 2)), 0
    return Q.dense_on(sup), sup.n_min


def _check_hopping(q, s_lo):
    bad = np.flatnonzero(np.abs(1.0 + q[:, 0, 1]) < 1e-14)
    if bad.size:
        raise SingularHoppingError(f"1 + q12 vanishes at site {s_lo + int(bad[0])}")
    bad = np.flatnonzero(np.abs(1.0 + q[:, 1, 0]) < 1e-14)
    if bad.size:
        raise SingularHoppingError(f"1 + q21 vanishes at site {s_lo + int(bad[0])}")


def _check_tail(Q, tol):
    if Q.tail_bound > tol:
        raise TruncationError(
            f"potential tail bound {Q.tail_bound:.3e} exceeds tolerance {tol:.1e}"
        )


def boundary_vectors(theta, lam, m, sign, branch):
    """Boundary vectors ``(1, alpha_sign)`` or ``(alpha~_sign, 1)`` for arrays."""
    theta = np.asarray(theta, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    b = np.empty(theta.shape + (2,), dtype=complex)
    if branch == PLAIN:
        b[..., 0] = 1.0
        b[..., 1] = (1.0 - np.exp(sign * 1j * theta)) / (m + lam)
    else:
        b[..., 0] = (1.0 - np.exp(-sign * 1j * theta)) / (lam - m)
        b[..., 1] = 1.0
    return b


def jost_batch(theta, m, Q, window, side, branch=PLAIN, lam=None, tail_tol=TAIL_TOL):
    """Phase-stripped Jost data for many spectral points at once.

    Parameters
    ----------
    theta : array_like
        Points in the closed lower strip (real for the band itself).
    lam : array_like, optional
        Energies; defaults to ``+g(theta)`` (plain) or ``-g(theta)`` (tilde).

    Returns
    -------
    ndarray, shape ``(len(theta), window.size, 2)``
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=complex))
    if lam is None:
        gv = np.asarray(g(theta, m), dtype=complex)
        lam = gv if branch == PLAIN else -gv
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    _check_tail(Q, tail_tol)
    q, s_lo = _potential_arrays(Q)
    _check_hopping(q, s_lo)
    s_hi = s_lo + q.shape[0] - 1
    lo = min(window.n_min, s_lo)
    hi = max(window.n_max, s_hi)
    z = np.exp(-1j * theta)
    sign = 1 if side == "+" else -1
    b = boundary_vectors(theta, lam, m, sign, branch)
    sweep = _kernels.jost_plus_sweep if side == "+" else _kernels.jost_minus_sweep
    h = sweep(z, lam, b, m, q, s_lo, lo, hi)
    return h[:, window.n_min - lo : window.n_max - lo + 1]


def _solve(point, Q, window, side, branch, tail_tol):
    if branch is None:
        branch = point.branch
    h = jost_batch([point.theta], point.m, Q, window, side, branch, [point.lam], tail_tol)[0]
    return JostSolution(side, branch, point, SpinorSequence(window, h), Q.tail_bound)


def jost_plus(point, Q, window, tail_tol=TAIL_TOL):
    """``h^+`` on ``window`` (backward sweep from above the support)."""
    return _solve(point, Q, window, "+", None, tail_tol)


def jost_minus(point, Q, window, tail_tol=TAIL_TOL):
    """``h^-`` on ``window`` (forward sweep from below the support)."""
    return _solve(point, Q, window, "-", None, tail_tol)


def jost_tilde(side, point, Q, window, tail_tol=TAIL_TOL):
    """Tilde-normalized Jost data ``(alpha~, 1)`` for ``Re lam <= 0``."""
    if point.lam.real > 0:
        raise ValueError("tilde Jost solutions are defined for Re lam <= 0")
    return _solve(point, Q, window, side, TILDE, tail_tol)


def jost(side, point, Q, window, tail_tol=TAIL_TOL):
    """Dispatch on ``point.branch``."""
    return _solve(point, Q, window, side, None, tail_tol)


def jost_w(theta, m, Q, window, side, branch=PLAIN):
    """Jost solutions ``w`` (phases restored) for a batch of ``theta``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=complex))
    h = jost_batch(theta, m, Q, window, side, branch)
    sign = 1 if side == "+" else -1
    phase = np.exp(-sign * 1j * np.outer(theta, window.sites))
    return h * phase[..., None]


def dirac_residual(sol, Q):
    """Max interior residual ``|D w - lam w|`` of a Jost solution."""
    w = sol.w()
    dw = apply_dirac(ModelParams(sol.point.m), Q, w)
    inner = w.values[1:-1]
    return float(np.max(np.abs(dw.values - sol.point.lam * inner)))


def transfer_solve(point, Q, window, side):
    """Independent oracle: march ``D w = lam w`` site by site from plane-wave
    data beyond the support. Returns ``w`` (not ``h``) on ``window``."""
    m, lam, theta = point.m, point.lam, point.theta
    sign = 1 if side == "+" else -1
    b = point.boundary_vector(sign)
    sup = Q.support or LatticeWindow(0, 0)
    full = window.union(sup)
    lo, hi = full.n_min, full.n_max
    out = np.empty((hi - lo + 1, 2), dtype=complex)
    qa = Q.at
    if side == "+":
        un = b[0] * np.exp(-1j * theta * (hi + 1))
        vn = b[1] * np.exp(-1j * theta * (hi + 1))
        for n in range(hi, lo - 1, -1):
            q1, q0 = qa(n + 1), qa(n)
            u = (1.0 + q1[1, 0]) * un + (q1[1, 1] - m - lam) * vn
            v = (vn - (m + q0[0, 0] - lam) * u) / (1.0 + q0[0, 1])
            out[n - lo] = u, v
            un, vn = u, v
    else:
        up = b[0] * np.exp(1j * theta * (lo - 1))
        vp = b[1] * np.exp(1j * theta * (lo - 1))
        for n in range(lo, hi + 1):
            q1, q0 = qa(n - 1), qa(n)
            v = (m + q1[0, 0] - lam) * up + (1.0 + q1[0, 1]) * vp
            u = (up + (m + lam - q0[1, 1]) * v) / (1.0 + q0[1, 0])
            out[n - lo] = u, v
            up, vp = u, v
    i0 = window.n_min - lo
    return SpinorSequence(window, out[i0 : i0 + window.size])


@dataclass(frozen=True)
class GrowthReport:
    order: int
    region: str
    max_ratio: float
    ratios: np.ndarray  # (len(theta_grid),) max ratio over n per grid point


def _fd_derivative(theta_grid, m, Q, window, side, branch, order, step):
    th = np.asarray(theta_grid, dtype=complex)
    if order == 0:
        return jost_batch(th, m, Q, window, side, branch)
    stencil = {1: ([-1, 1], [-0.5, 0.5]), 2: ([-1, 0, 1], [1.0, -2.0, 1.0])}[order]
    acc = 0
    for off, coef in zip(*stencil):
        acc = acc + coef * jost_batch(th + off * step, m, Q, window, side, branch)
    return acc / step**order


def check_derivative_growth(side, Q, theta_grid, n_range, m, order=1, region="delta",
                            branch=PLAIN, step=1e-4):
    """Ratio of ``|d^p h_n / d theta^p|`` to its growth envelope.

    ``region='delta'`` uses ``max((-+n) |n|^{p-1}, 1)`` (grid kept away from
    the band edges), ``region='full'`` uses ``max((-+n) |n|^p, 1)``.
    """
    if region not in ("delta", "full"):
        raise ValueError("region must be 'delta' or 'full'")
    window = LatticeWindow(int(n_range[0]), int(n_range[1]))
    deriv = _fd_derivative(theta_grid, m, Q, window, side, branch, order, step)
    n = window.sites.astype(float)
    sgn = -1.0 if side == "+" else 1.0
    power = order - 1 if region == "delta" else order
    with np.errstate(divide="ignore", invalid="ignore"):
        grow = np.where(n == 0, 0.0, sgn * n * np.abs(n) ** power)
    envelope = np.maximum(grow, 1.0)
    mag = np.linalg.norm(deriv, axis=-1)
    ratios = np.max(mag / envelope[None, :], axis=1)
    return GrowthReport(order, region, float(np.max(ratios)), ratios)
