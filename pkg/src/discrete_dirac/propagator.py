"""The continuous-spectrum propagator ``e^{-itD} P_c``.

Spectral route: Stone's formula with the Jost representation of the boundary
resolvent. With ``F(theta)`` the Green kernel built from Jost data at real
``theta`` (plain data, ``lam = g``; tilde data, ``lam = -g``)

    e^{-itD} P_c = (1/2 pi i) int_{-pi}^{pi} [ -e^{-itg} F_plain(theta)
                                              + e^{+itg} F_tilde(theta) ] sin(theta)/g dtheta.

The ``theta < 0`` half of each band integral is ``R(lam + i0)`` and the
``theta > 0`` half is ``R(lam - i0)``. Nodes never touch ``0`` or ``+-pi``,
where ``sin(theta)/W`` only has a limit.

Oracle route: the finite-section eigendecomposition restricted to the
continuum-tagged eigenpairs.
"""
from dataclasses import dataclass

import numpy as np

from .dispersion import PLAIN, TILDE, g
from .free import QuadratureError, QuadratureSpec, graded_gauss_legendre
from .lattice import LatticeWindow
from .resolvent import KernelBlockMatrix, _jost_pair, _link_wronskian, green_from_jost

SPECTRAL = "spectral"
ORACLE = "oracle"


@dataclass(frozen=True)
class PropagatorSnapshot:
    t: float
    method: str
    kernel: KernelBlockMatrix
    quad_error: float | None = None

    def block(self, n, k):
        return self.kernel.block(n, k)


def _band_integral(t, m, Q, n_range, k_range, nodes, weights, branch, chunk):
    full = n_range.union(k_range)
    acc = np.zeros((2 * n_range.size, 2 * k_range.size), dtype=complex)
    sgn = -1.0 if branch == PLAIN else 1.0
    for start in range(0, nodes.size, chunk):
        th = nodes[start:start + chunk]
        wq = weights[start:start + chunk]
        gv = g(th, m)
        c = sgn * wq * np.exp(1j * sgn * t * gv) * np.sin(th) / gv / (2j * np.pi)
        W, _ = _link_wronskian(th, m, Q, branch)
        wp, wm = _jost_pair(th, m, Q, full, branch)
        acc += green_from_jost(wp, wm, W, n_range, k_range, c)
    return acc


def _spectral_matrix(t, m, Q, n_range, k_range, panels, quad, chunk):
    nodes, weights = graded_gauss_legendre(panels, quad.order, quad.edge_levels)
    return sum(_band_integral(t, m, Q, n_range, k_range, nodes, weights, br, chunk)
               for br in (PLAIN, TILDE))


def propagator_pc_spectral(t, Q, m, n_range, k_range, quad=None, check=True, chunk=512):
    """``[e^{-itD} P_c]_{n,k}`` by quadrature over both bands.

    Jost data are computed once per node and shared by every block; the
    assembly is a pair of matrix products per node chunk. Panels are graded
    toward the band edges, where a near-resonance puts a pole of ``1/W``
    close to the real axis. The error estimate compares ``P`` and ``P/2`` panels.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    quad = quad or QuadratureSpec()
    extent = max(abs(n_range.n_min), abs(n_range.n_max), abs(k_range.n_min), abs(k_range.n_max))
    extent = max(extent, n_range.union(k_range).size)
    p = quad.panel_count(t, extent)
    p += p % 2  # keep theta = 0 on a panel break
    fine = _spectral_matrix(t, m, Q, n_range, k_range, p, quad, chunk)
    half = p // 2 + (p // 2) % 2
    coarse = _spectral_matrix(t, m, Q, n_range, k_range, half, quad, chunk)
    err = float(np.max(np.abs(fine - coarse)))
    if check and err > quad.tol:
        raise QuadratureError(f"propagator quadrature error {err:.2e} above tol {quad.tol:.1e} "
                              f"(t={t}, panels={p})", err)
    ker = KernelBlockMatrix.from_matrix(float(t), n_range, k_range, fine)
    return PropagatorSnapshot(float(t), SPECTRAL, ker, err)


def _rows(op, rng):
    i0 = 2 * (rng.n_min - op.window.n_min)
    if rng.n_min < op.window.n_min or rng.n_max > op.window.n_max:
        raise ValueError(f"range {rng} outside the finite section {op.window}")
    return slice(i0, i0 + 2 * rng.size)


def oracle_kernels(times, op, n_range, k_range=None):
    """Continuum propagator blocks for many times from one decomposition.

    Returns an array ``(len(times), 2 |n_range|, 2 |k_range|)`` in site-major
    order.
    """
    k_range = n_range if k_range is None else k_range
    vals, vecs = op.continuum()
    vn = vecs[_rows(op, n_range)]
    vk = vecs[_rows(op, k_range)]
    out = np.empty((len(times), vn.shape[0], vk.shape[0]), dtype=complex)
    for i, t in enumerate(times):
        out[i] = (vn * np.exp(-1j * t * vals)[None, :]) @ vk.T
    return out


def propagator_pc_oracle(t, op, n_range=None, k_range=None):
    """``sum_continuum e^{-it lam_j} psi_j psi_j^T`` as a snapshot."""
    n_range = n_range or op.window
    k_range = k_range or n_range
    mat = oracle_kernels([t], op, n_range, k_range)[0]
    ker = KernelBlockMatrix.from_matrix(float(t), n_range, k_range, mat)
    return PropagatorSnapshot(float(t), ORACLE, ker, None)
