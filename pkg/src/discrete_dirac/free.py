"""Free resolvent kernels and the free propagator ``e^{-itD0}``.

The free operator has the Fourier symbol

    D0(theta) = [[m, 1 - e^{-i theta}], [1 - e^{i theta}, -m]]
              = M_{-1} e^{i theta} + [[m, 1], [1, -m]] + M_{+1} e^{-i theta}

acting on plane waves ``e^{-i theta n}`` (the ``e^{-i theta j}`` coefficient
``M_j`` couples site ``n`` to site ``n + j``), with
eigenvalues ``+-g(theta)``. Since ``D0^2 = -Delta + m^2`` the resolvent
factors through the scalar Laplacian kernel.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .dispersion import SpectralPoint, g


class BandEdgeError(ArithmeticError):
    """The free kernel is singular at a band edge (``sin theta = 0``)."""


class QuadratureError(ArithmeticError):
    """Estimated quadrature error above tolerance."""

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


M_PLUS = np.array([[0.0, -1.0], [0.0, 0.0]])
M_MINUS = np.array([[0.0, 0.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class OmegaWeights:
    """Band-projector weights of the free symbol.

    ``Omega_0(theta) = g I + [[m, 1], [1, -m]]`` and ``Omega_{+-1} = M_{+-1}``
    so that the positive band projector is
    ``P_+(theta) = sum_j Omega_j e^{-i theta j} / (2 g)``. The negative band
    uses ``g I - D0(theta)`` instead (``Omega^-_0 = g I - [[m,1],[1,-m]]``,
    ``Omega^-_{+-1} = -M_{+-1}``).
    """

    m: float

    def omega(self, j, theta, band=1):
        theta = np.asarray(theta, dtype=float)
        gv = np.asarray(g(theta, self.m))
        if j == 0:
            sym = np.array([[self.m, 1.0], [1.0, -self.m]])
            return gv[..., None, None] * np.eye(2) + band * sym
        if j == 1:
            return band * np.broadcast_to(M_PLUS, theta.shape + (2, 2))
        if j == -1:
            return band * np.broadcast_to(M_MINUS, theta.shape + (2, 2))
        raise ValueError("j must be -1, 0 or 1")

    def projector(self, theta, band=1):
        """``P_band(theta)`` as a ``(..., 2, 2)`` array."""
        theta = np.asarray(theta, dtype=float)
        gv = np.asarray(g(theta, self.m))
        acc = sum(self.omega(j, theta, band) * np.exp(-1j * theta * j)[..., None, None]
                  for j in (-1, 0, 1))
        return acc / (2.0 * gv[..., None, None])


def symbol(theta, m):
    """Fourier symbol ``D0(theta)``."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = m
    out[..., 1, 1] = -m
    out[..., 0, 1] = 1.0 - np.exp(-1j * theta)
    out[..., 1, 0] = 1.0 - np.exp(1j * theta)
    return out


def _check_edge(theta):
    s = np.sin(theta)
    if abs(s) < 1e-14:
        raise BandEdgeError(f"band-edge singularity: sin(theta) = 0 at theta={theta}")
    return s


def free_laplacian_resolvent_entry(omega_point, n, k):
    """``[(-Delta - omega)^{-1}]_{n,k} = e^{-i theta |n-k|} / (2i sin theta)``.

    ``omega_point`` is a ``SpectralPoint`` (its ``theta`` fixes the branch) or a
    bare ``theta``.
    """
    theta = omega_point.theta if isinstance(omega_point, SpectralPoint) else complex(omega_point)
    s = _check_edge(theta)
    return complex(np.exp(-1j * theta * abs(n - k)) / (2j * s))


def free_dirac_resolvent_block(point, n, k):
    """``[(D0 - lam)^{-1}]_{n,k} = [(D0 + lam)(-Delta - omega)^{-1}]_{n,k}``."""
    lam, m = point.lam, point.m
    r = lambda j: free_laplacian_resolvent_entry(point, j, k)
    r0 = r(n)
    return np.array([[(m + lam) * r0, r0 - r(n + 1)],
                     [r0 - r(n - 1), (lam - m) * r0]], dtype=complex)


@lru_cache(maxsize=64)
def _gl_rule(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def composite_gauss_legendre(a, b, panels, order=8):
    """Nodes and weights of a composite Gauss--Legendre rule on ``[a, b]``.

    Interior nodes only, so the end points (and panel breaks) are never sampled.
    """
    x, w = _gl_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_gauss_legendre(panels, order=8, levels=0):
    """Composite rule on ``[-pi, pi]`` whose panels touching the band edges
    ``theta in {-pi, 0, pi}`` are split geometrically (ratio 1/2, ``levels``
    times) toward the edge.

    Near-resonant potentials put a pole of ``1/W`` within a tiny distance of
    an edge; uniform panels then converge only algebraically.
    """
    if panels % 2:
        raise ValueError("panel count must be even so that theta = 0 is a break")
    edges = np.linspace(-np.pi, np.pi, panels + 1)
    h = edges[1] - edges[0]
    if levels <= 0:
        return composite_gauss_legendre(-np.pi, np.pi, panels, order)
    frac = 0.5 ** np.arange(levels + 1)
    near = np.concatenate([[0.0], frac[::-1]]) * h  # 0, h 2^-levels, ..., h
    breaks = [edges[1:panels // 2], edges[panels // 2 + 1:-1]]
    pts = np.concatenate([-np.pi + near, breaks[0], -near[::-1], near[1:], breaks[1], np.pi - near[::-1]])
    pts = np.unique(pts)
    # the same break reached two ways can differ by an ulp; drop the twin
    pts = pts[np.concatenate([[True], np.diff(pts) > 1e-12 * h])]
    x, w = _gl_rule(order)
    half = 0.5 * np.diff(pts)
    mid = 0.5 * (pts[:-1] + pts[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss--Legendre on ``[-pi, pi]``.

    The panel count is ``max(min_panels, per_time * t, per_site * extent)``
    where ``extent`` is the largest site offset requested; the oscillation
    ``e^{-i theta d}`` needs resolving as much as ``e^{-itg}``. The error
    estimate compares ``P`` and ``P/2`` panels and the finer value is kept.
    ``edge_levels`` is the geometric refinement toward the band edges used by
    the perturbed propagator (see ``graded_gauss_legendre``).
    """

    order: int = 8
    min_panels: int = 64
    per_time: float = 8.0
    per_site: float = 2.0
    tol: float = 1e-9
    panels: int | None = None
    edge_levels: int = 16

    def panel_count(self, t, extent=0):
        if self.panels is not None:
            return int(self.panels)
        p = max(self.min_panels, self.per_time * abs(t), self.per_site * extent)
        p = int(np.ceil(p))
        return p + (p % 2)

    def rule(self, t, extent=0, coarse=False):
        p = self.panel_count(t, extent)
        if coarse:
            p //= 2
        return composite_gauss_legendre(-np.pi, np.pi, p, self.order)


def free_sums(t, m, emax, quad=None, coarse=False):
    """``C[e]``, ``S[e]`` for ``e = 0 .. emax`` (see ``free_kernel_table``)."""
    quad = quad or QuadratureSpec()
    nodes, weights = quad.rule(t, emax, coarse)
    return _kernels.free_sums(nodes, weights, float(t), float(m), int(emax))


def _blocks_from_sums(c, s, d, m):
    d = np.asarray(d)
    ad = np.abs(d)
    out = np.empty(d.shape + (2, 2), dtype=complex)
    sd = s[ad]
    out[..., 0, 0] = c[ad] - 1j * m * sd
    out[..., 1, 1] = c[ad] + 1j * m * sd
    out[..., 0, 1] = -1j * (sd - s[np.abs(d + 1)])
    out[..., 1, 0] = -1j * (sd - s[np.abs(d - 1)])
    return out / (2.0 * np.pi)


@dataclass(frozen=True)
class FreeKernelTable:
    """Blocks ``[e^{-itD0}]_{n,k}`` for ``d = n - k`` in ``[-dmax, dmax]``."""

    t: float
    m: float
    dmax: int
    blocks: np.ndarray  # (2 dmax + 1, 2, 2), row i is d = i - dmax
    error: float

    def block(self, d):
        if abs(d) > self.dmax:
            raise IndexError(f"offset {d} outside table range {self.dmax}")
        return self.blocks[d + self.dmax]

    @property
    def offsets(self):
        return np.arange(-self.dmax, self.dmax + 1)


def free_kernel_table(t, m, dmax, quad=None, check=True):
    """Free propagator blocks for every offset ``|n - k| <= dmax``.

    With ``C(e) = int cos(t g) e^{-i theta e}``, ``S(e) = int sin(t g)/g e^{-i theta e}``
    over ``[-pi, pi]`` the block at offset ``d`` is

        (1/2pi) [ C(|d|) I - i [[m S(|d|), S(|d|) - S(|d+1|)],
                                [S(|d|) - S(|d-1|), -m S(|d|)]] ]

    which is ``(1/2pi) int (e^{-itg} P_+ + e^{itg} P_-) e^{-i theta d}`` written out.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    quad = quad or QuadratureSpec()
    emax = int(dmax) + 1
    c, s = free_sums(t, m, emax, quad)
    c2, s2 = free_sums(t, m, emax, quad, coarse=True)
    d = np.arange(-dmax, dmax + 1)
    fine = _blocks_from_sums(c, s, d, m)
    coarse = _blocks_from_sums(c2, s2, d, m)
    err = float(np.max(np.abs(fine - coarse)))
    if check and err > quad.tol:
        raise QuadratureError(f"free kernel quadrature error {err:.2e} above tol {quad.tol:.1e} "
                              f"(t={t}, panels={quad.panel_count(t, emax)})", err)
    return FreeKernelTable(float(t), float(m), int(dmax), fine, err)


def free_propagator_block(t, n, k, m, quad=None, check=True):
    """``[e^{-itD0}]_{n,k}`` and the quadrature error estimate."""
    d = int(n) - int(k)
    tab = free_kernel_table(t, m, abs(d), quad, check)
    return tab.block(d), tab.error
