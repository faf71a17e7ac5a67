"""Perturbed resolvent kernels, the finite-section oracle and the limiting
absorption probe.

Interleaving the components as ``x_{2n} = v_n``, ``x_{2n+1} = u_n`` turns
``D`` into a real symmetric tridiagonal (Jacobi) matrix: the link
``v_n -- u_n`` carries ``1 + q12_n`` and the link ``u_n -- v_{n+1}`` carries
``-1``. For such a matrix the Green function is

    [(D - lam)^{-1}](x, y) = psi^-(min(x, y)) psi^+(max(x, y)) / W

with ``psi^+-`` the Jost solutions read in interleaved order and
``W = u^+_n v^-_{n+1} - u^-_n v^+_{n+1}`` their (site independent) Wronskian.
"""
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import solve_banded

from .dispersion import PLAIN, TILDE, SpectralPoint
from .jost import jost_batch
from .lattice import DomainError, LatticeWindow, MatrixPotential, ModelParams, dirac_matrix

MAX_DENSE = 12000
POLE_RADIUS = 1e-8
# squared eigenvector mass allowed outside |n| <= N/2 for a localized state
LOCALIZED_TAIL = 1e-8


class PoleError(ArithmeticError):
    """``lam`` sits on (or within the pole radius of) a bound state."""


class EdgeError(ArithmeticError):
    """``lam`` is a band edge, where the Jost representation degenerates."""


class MemoryGuardError(MemoryError):
    """The dense finite section would be too large."""


class LapFailure(ArithmeticError):
    """The limiting absorption table is not decreasing beyond the noise floor."""


@dataclass(frozen=True)
class KernelBlockMatrix:
    """Dense 2x2 blocks ``blocks[i, j] = K[n_min + i, k_min + j]``.

    ``parameter`` is the spectral parameter ``lam`` (resolvent) or the time ``t``
    (propagator).
    """

    parameter: complex
    n_range: LatticeWindow
    k_range: LatticeWindow
    blocks: np.ndarray

    def __post_init__(self):
        shape = (self.n_range.size, self.k_range.size, 2, 2)
        if self.blocks.shape != shape:
            raise ValueError(f"blocks shape {self.blocks.shape} != {shape}")

    def block(self, n, k):
        return self.blocks[self.n_range.index(n), self.k_range.index(k)]

    def as_matrix(self):
        """Site-major dense matrix (row ``2 i + c``, column ``2 j + c'``)."""
        nn, nk = self.n_range.size, self.k_range.size
        return self.blocks.transpose(0, 2, 1, 3).reshape(2 * nn, 2 * nk)

    @classmethod
    def from_matrix(cls, parameter, n_range, k_range, mat):
        nn, nk = n_range.size, k_range.size
        blocks = np.asarray(mat).reshape(nn, 2, nk, 2).transpose(0, 2, 1, 3)
        return cls(parameter, n_range, k_range, np.ascontiguousarray(blocks))

    def restrict(self, n_range, k_range):
        i0, j0 = self.n_range.index(n_range.n_min), self.k_range.index(k_range.n_min)
        return KernelBlockMatrix(self.parameter, n_range, k_range,
                                 self.blocks[i0:i0 + n_range.size, j0:j0 + k_range.size])

    def max_abs_diff(self, other):
        return float(np.max(np.abs(self.blocks - other.blocks)))


def tensor_block(w1, w2, k, n):
    """Shifted outer product ``w1_k (x) w2_n``.

    ``[[u1_k u2_n, v1_{k+1} u2_n], [u1_k v2_n, v1_{k+1} v2_n]]`` for two
    ``SpinorSequence`` objects.
    """
    for seq, sites in ((w1, (k, k + 1)), (w2, (n,))):
        for s in sites:
            if s not in seq.window:
                raise DomainError(f"site {s} outside window {seq.window}")
    a, a1, b = w1.at(k), w1.at(k + 1), w2.at(n)
    return np.array([[a[0] * b[0], a1[1] * b[0]],
                     [a[0] * b[1], a1[1] * b[1]]], dtype=complex)


def positions(window):
    """Interleaved positions of the site-major unknowns on ``window``."""
    pos = np.empty(2 * window.size, dtype=np.int64)
    pos[0::2] = 2 * window.sites + 1  # u_n
    pos[1::2] = 2 * window.sites  # v_n
    return pos


def green_from_jost(wp, wm, W, n_range, k_range, weights=None):
    """Assemble ``sum_p c_p psi^-(min) psi^+(max) / W_p`` as 2x2 blocks.

    Parameters
    ----------
    wp, wm : ndarray, shape ``(P, sites, 2)``
        ``w^+`` and ``w^-`` on ``n_range U k_range`` (phases restored).
    W : ndarray, shape ``(P,)``
    weights : ndarray, shape ``(P,)``, optional
        Quadrature weights; a single point when omitted.
    """
    full = n_range.union(k_range)
    c = 1.0 / W if weights is None else weights / W
    rows = slice(n_range.n_min - full.n_min, n_range.n_max - full.n_min + 1)
    cols = slice(k_range.n_min - full.n_min, k_range.n_max - full.n_min + 1)
    P = wp.shape[0]
    psp_r = wp[:, rows].reshape(P, -1)
    psm_r = wm[:, rows].reshape(P, -1)
    psp_c = wp[:, cols].reshape(P, -1)
    psm_c = wm[:, cols].reshape(P, -1)
    upper = (psp_r * c[:, None]).T @ psm_c  # row position above column
    lower = (psm_r * c[:, None]).T @ psp_c
    pr, pc = positions(n_range), positions(k_range)
    mat = np.where(pr[:, None] >= pc[None, :], upper, lower)
    return mat


def _jost_pair(theta, m, Q, window, branch, lam=None):
    th = np.atleast_1d(np.asarray(theta, dtype=complex))
    lam = None if lam is None else np.atleast_1d(np.asarray(lam, dtype=complex))
    hp = jost_batch(th, m, Q, window, "+", branch, lam)
    hm = jost_batch(th, m, Q, window, "-", branch, lam)
    s = window.sites
    wp = hp * np.exp(-1j * np.outer(th, s))[..., None]
    wm = hm * np.exp(1j * np.outer(th, s))[..., None]
    return wp, wm


def _link_wronskian(theta, m, Q, branch, lam=None):
    sup = Q.support or LatticeWindow(0, 0)
    n0 = (sup.n_min + sup.n_max) // 2
    win = LatticeWindow(n0, n0 + 1)
    wp, wm = _jost_pair(theta, m, Q, win, branch, lam)
    W = wp[:, 0, 0] * wm[:, 1, 1] - wm[:, 0, 0] * wp[:, 1, 1]
    scale = np.linalg.norm(wp[:, 0], axis=-1) * np.linalg.norm(wm[:, 1], axis=-1)
    return W, scale


def resolvent_kernel(point, Q, n_range, k_range, pole_radius=POLE_RADIUS):
    """``(D - lam)^{-1}`` blocks on ``n_range x k_range`` from Jost data.

    ``point`` fixes ``theta`` and the branch: plain data for ``Re lam >= 0``
    and tilde data for ``Re lam < 0``. For ``lam`` on the bands build the point
    with ``SpectralPoint.from_lambda(lam, m, side)`` to select ``lam +- i0``.
    """
    th = point.theta
    if abs(th.imag) < 1e-15 and abs(np.sin(th.real)) < 1e-12:
        raise EdgeError(f"lam={point.lam} is a band edge")
    W, scale = _link_wronskian([th], point.m, Q, point.branch, [point.lam])
    if abs(W[0]) <= pole_radius * max(scale[0], 1.0):
        raise PoleError(f"lam={point.lam} is a bound state (|W|={abs(W[0]):.2e})")
    full = n_range.union(k_range)
    wp, wm = _jost_pair([th], point.m, Q, full, point.branch, [point.lam])
    mat = green_from_jost(wp, wm, W, n_range, k_range)
    return KernelBlockMatrix.from_matrix(point.lam, n_range, k_range, mat)


def resolvent_block(point, Q, n, k, pole_radius=POLE_RADIUS):
    """Single 2x2 block ``[(D - lam)^{-1}]_{n,k}``."""
    ker = resolvent_kernel(point, Q, LatticeWindow(n, n), LatticeWindow(k, k), pole_radius)
    return ker.blocks[0, 0]


@dataclass(frozen=True)
class TruncatedOperator:
    """Finite section of ``D`` on ``[-N, N]`` with zero exterior values."""

    m: float
    Q: MatrixPotential
    window: LatticeWindow
    edge_margin: float
    matrix: np.ndarray = field(repr=False)

    @cached_property
    def eigenpairs(self):
        vals, vecs = np.linalg.eigh(self.matrix)
        return vals, vecs

    @property
    def eigenvalues(self):
        return self.eigenpairs[0]

    @cached_property
    def bound_mask(self):
        """``True`` for eigenvalues outside the bands by more than ``edge_margin``
        and for the bound states that hide inside the margin.

        Inside the margin an eigenvalue is tagged when its eigenvector is
        localized within ``|n| <= N/2``, or when the Jost Wronskian (real on
        the gaps) has a zero in that edge zone that no localized eigenvector
        accounts for. The second test catches bound states whose decay length
        is comparable to the window; the nearest-to-center candidates are
        tagged, one per zero.
        """
        params = ModelParams(self.m)
        vals = self.eigenvalues
        dist = np.array([params.distance_to_bands(x) for x in vals])
        mask = dist > self.edge_margin
        near = np.flatnonzero((dist > 0) & ~mask)
        vecs = self.eigenpairs[1][:, near].reshape(self.window.size, 2, -1)
        far = np.abs(self.window.sites) > self.window.n_max / 2
        tail = np.sum(np.abs(vecs[far]) ** 2, axis=(0, 1))
        mask[near] = tail < LOCALIZED_TAIL
        for edge, side in _outer_sides(params):
            off = side * (vals[near] - edge)
            zone = near[(off > 0) & (off <= self.edge_margin)]
            roots = _gap_zero_count(self.m, self.Q, edge, side, self.edge_margin)
            missing = roots - int(mask[zone].sum())
            if missing <= 0:
                continue
            free = zone[~mask[zone]]
            if free.size < missing:
                warnings.warn(f"window N={self.window.n_max} too small to hold a bound state within "
                              f"{self.edge_margin:.2g} of the edge {edge:+.6g}; widen the window",
                              RuntimeWarning, stacklevel=2)
            order = np.argsort(tail[np.searchsorted(near, free)])
            mask[free[order[:missing]]] = True
        return mask

    @property
    def classification(self):
        return np.where(self.bound_mask, "bound", "continuum")

    @property
    def bound_states(self):
        vals, vecs = self.eigenpairs
        return vals[self.bound_mask], vecs[:, self.bound_mask]

    def continuum(self):
        vals, vecs = self.eigenpairs
        keep = ~self.bound_mask
        return vals[keep], vecs[:, keep]

    def localization(self, index, radius):
        """Largest ``|psi_n|`` over sites with ``|n| > radius`` for eigenvector ``index``."""
        vec = self.eigenpairs[1][:, index].reshape(-1, 2)
        far = np.abs(self.window.sites) > radius
        if not np.any(far):
            return 0.0
        return float(np.max(np.linalg.norm(vec[far], axis=1)))

    def solve(self, lam, n_range, k_range):
        """Dense solve of ``(matrix - lam) X = I`` restricted to ``n_range x k_range``."""
        idx_k = 2 * (k_range.sites - self.window.n_min)
        cols = np.sort(np.concatenate([idx_k, idx_k + 1]))
        rhs = np.zeros((self.matrix.shape[0], cols.size), dtype=complex)
        rhs[cols, np.arange(cols.size)] = 1.0
        x = np.linalg.solve(self.matrix - lam * np.eye(self.matrix.shape[0]), rhs)
        i0 = 2 * (n_range.n_min - self.window.n_min)
        mat = x[i0:i0 + 2 * n_range.size]
        return KernelBlockMatrix.from_matrix(lam, n_range, k_range, mat)


def _outer_sides(params):
    """Each band edge with the direction pointing away from its band."""
    lo, inner, _, hi = params.gap_edges
    return ((params.m, -1), (hi, 1), (inner, 1), (lo, -1))


def _gap_zero_count(m, Q, edge, side, width, points=96):
    """Sign changes of the Jost Wronskian on ``edge + side * [1e-12, width]``."""
    lam = edge + side * np.geomspace(1e-12, width, points)
    pts = [SpectralPoint.from_lambda(x, m) for x in lam]
    W = np.empty(points)
    for branch in (PLAIN, TILDE):
        sel = [i for i, p in enumerate(pts) if p.branch == branch]
        if sel:
            th = [pts[i].theta for i in sel]
            W[sel] = _link_wronskian(th, m, Q, branch, lam[sel])[0].real
    return int(np.sum(np.signbit(W[1:]) != np.signbit(W[:-1])))


def truncated_operator(m, Q, N, edge_margin=None):
    """Dense symmetric finite section on ``[-N, N]``."""
    N = int(N)
    dim = 2 * (2 * N + 1)
    if dim > MAX_DENSE:
        raise MemoryGuardError(
            f"finite section of size {dim} exceeds {MAX_DENSE}; use N <= {(MAX_DENSE // 2 - 1) // 2}"
        )
    window = LatticeWindow.symmetric(N)
    sup = Q.support
    if sup is not None and (sup.n_min < -N / 2 or sup.n_max > N / 2):
        raise DomainError(f"support {sup} not inside [-N/2, N/2] for N={N}")
    margin = 10.0 / N if edge_margin is None else float(edge_margin)
    mat = dirac_matrix(ModelParams(m), Q, window)
    return TruncatedOperator(float(m), Q, window, margin, mat)


def pc_projector(op):
    """``I - sum_bound psi psi^T`` as a dense site-major matrix."""
    _, vecs = op.bound_states
    return np.eye(op.matrix.shape[0]) - vecs @ vecs.T


def jacobi_bands(m, Q, window):
    """Tridiagonal ``(sub, diag, super)`` of ``D`` in interleaved order on ``window``."""
    q = Q.dense_on(window)
    size = window.size
    diag = np.empty(2 * size)
    diag[0::2] = -m + q[:, 1, 1]  # v_n at 2n
    diag[1::2] = m + q[:, 0, 0]  # u_n at 2n+1
    off = np.empty(2 * size - 1)
    off[0::2] = 1.0 + q[:, 0, 1]  # v_n -- u_n
    off[1::2] = -1.0  # u_n -- v_{n+1}
    return off, diag


def banded_resolvent(m, Q, lam, n_range, k_range, N):
    """Oracle ``(D - lam)^{-1}`` on a window of half-width ``N`` by a
    tridiagonal solve (interleaved order)."""
    window = LatticeWindow.symmetric(N).union(n_range).union(k_range)
    off, diag = jacobi_bands(m, Q, window)
    ab = np.zeros((3, diag.size), dtype=complex)
    ab[0, 1:] = off
    ab[1] = diag - lam
    ab[2, :-1] = off
    pos0 = 2 * window.n_min
    pk = positions(k_range) - pos0
    rhs = np.zeros((diag.size, pk.size), dtype=complex)
    rhs[pk, np.arange(pk.size)] = 1.0
    x = solve_banded((1, 1), ab, rhs, check_finite=False)
    pn = positions(n_range) - pos0
    return KernelBlockMatrix.from_matrix(lam, n_range, k_range, x[pn])


@dataclass(frozen=True)
class LapRow:
    eps: float
    distance: float
    window: int


@dataclass(frozen=True)
class LapTable:
    lam: float
    side: str
    sigma: float
    rows: tuple

    @property
    def distances(self):
        return np.array([r.distance for r in self.rows])

    @property
    def monotone(self):
        d = self.distances
        return bool(np.all(np.diff(d) < 0))

    def lines(self):
        return [f"eps={r.eps:.1e} distance={r.distance:.6e} N={r.window}" for r in self.rows]


def weighted_hs(kernel, sigma):
    """Hilbert--Schmidt norm with weights ``(1+|n|)^{-sigma} (1+|k|)^{-sigma}``."""
    wn = (1.0 + np.abs(kernel.n_range.sites)) ** (-sigma)
    wk = (1.0 + np.abs(kernel.k_range.sites)) ** (-sigma)
    fro = np.sum(np.abs(kernel.blocks) ** 2, axis=(2, 3))
    return float(np.sqrt(np.sum(fro * (wn[:, None] * wk[None, :]) ** 2)))


def lap_probe(lam, side, eps_list, sigma, Q, m, interior=20, decay_lengths=40.0,
              max_window=2_000_000, strict=True):
    """Distance between ``R(lam +- i0)`` and ``R(lam +- i eps)`` for shrinking ``eps``.

    The boundary kernel comes from Jost data; each ``R(lam +- i eps)`` from a
    tridiagonal solve on a window wide enough (``decay_lengths / |Im theta|``
    sites) that truncation is invisible on the interior block ``|n|, |k| <= interior``.
    """
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    if sigma <= 0.5:
        raise ValueError("sigma must exceed 1/2")
    params = ModelParams(m)
    lam = float(lam)
    lo, inner, _, hi = params.gap_edges
    a = abs(lam)
    if not (m + 0.05 <= a <= hi - 0.05):
        raise DomainError(f"lam={lam} is not inside a band away from its edges by 0.05")
    rng = LatticeWindow.symmetric(interior)
    sgn = 1.0 if side == "+" else -1.0
    bdry = resolvent_kernel(SpectralPoint.from_lambda(lam, m, side), Q, rng, rng)
    rows = []
    for eps in eps_list:
        z = lam + 1j * sgn * eps
        th = SpectralPoint.from_lambda(z, m).theta
        N = int(min(max_window, np.ceil(decay_lengths / abs(th.imag)) + interior))
        approx = banded_resolvent(m, Q, z, rng, rng, N)
        diff = KernelBlockMatrix(z, rng, rng, bdry.blocks - approx.blocks)
        rows.append(LapRow(float(eps), weighted_hs(diff, sigma), N))
    table = LapTable(lam, side, float(sigma), tuple(rows))
    if strict and not table.monotone:
        raise LapFailure("limiting absorption table is not decreasing: " + "; ".join(table.lines()))
    return table
