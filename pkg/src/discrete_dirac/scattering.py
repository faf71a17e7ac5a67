"""Wronskians, scattering data and band-edge resonances."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dispersion import PLAIN, TILDE, SpectralPoint, g
from .jost import jost_w
from .lattice import DomainError, LatticeWindow


class ConsistencyError(ArithmeticError):
    """A proven identity failed numerically (bug or invalid potential)."""


def wronskian(w1, w2, n):
    """``u1_n v2_{n+1} - u2_n v1_{n+1}`` for two spinor sequences."""
    for w in (w1, w2):
        if n not in w.window or n + 1 not in w.window:
            raise DomainError(f"sites {n}, {n + 1} not both in window {w.window}")
    a, b = w1.at(n), w2.at(n)
    a1, b1 = w1.at(n + 1), w2.at(n + 1)
    return complex(a[0] * b1[1] - b[0] * a1[1])


def wronskian_arrays(w1, w2):
    """Wronskian at every link of two ``(..., nsites, 2)`` arrays (length ``nsites-1``)."""
    return w1[..., :-1, 0] * w2[..., 1:, 1] - w2[..., :-1, 0] * w1[..., 1:, 1]


def wronskian_constancy_check(w1, w2, window=None):
    """Max relative drift of ``W(w1, w2)(n)`` over ``window``."""
    if window is None:
        window = LatticeWindow(max(w1.window.n_min, w2.window.n_min),
                               min(w1.window.n_max, w2.window.n_max))
    vals = np.array([wronskian(w1, w2, n) for n in range(window.n_min, window.n_max)])
    ref = vals[len(vals) // 2]
    dev = np.max(np.abs(vals - ref))
    scale = abs(ref)
    if scale < 1e-300:
        return float(dev)
    return float(dev / scale)


def evaluation_site(Q):
    """Midpoint of the support, where ``W`` is evaluated."""
    sup = Q.support
    if sup is None:
        return 0
    return (sup.n_min + sup.n_max) // 2


def free_wronskian(theta, lam, m, branch):
    """``W(w^+(theta), w^+(-theta))`` for the free problem."""
    den = (m + lam) if branch == PLAIN else (lam - m)
    return 2j * np.sin(theta) / den


@dataclass(frozen=True)
class ScatteringCoefficients:
    point: SpectralPoint
    W: complex
    W_plus: complex
    W_minus: complex
    a: complex
    b_plus: complex
    b_minus: complex
    T: complex
    R_plus: complex
    R_minus: complex
    a_plus_direct: complex
    a_minus_direct: complex

    @property
    def unitarity_residual(self):
        return abs(abs(self.a) ** 2 - abs(self.b_minus) ** 2 - 1.0)


@dataclass(frozen=True)
class ScatteringGrid:
    """Vectorized scattering data on a grid of real ``theta``."""

    theta: np.ndarray
    lam: np.ndarray
    W: np.ndarray
    W_plus: np.ndarray
    W_minus: np.ndarray
    a: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray
    T: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray
    a_plus_direct: np.ndarray
    a_minus_direct: np.ndarray

    @property
    def unitarity_residual(self):
        return np.abs(np.abs(self.a) ** 2 - np.abs(self.b_minus) ** 2 - 1.0)

    @property
    def flux_residual(self):
        """``max(| |T|^2 + |R_+|^2 - 1 |, | |T|^2 + |R_-|^2 - 1 |)`` pointwise."""
        t2 = np.abs(self.T) ** 2
        return np.maximum(np.abs(t2 + np.abs(self.R_plus) ** 2 - 1.0),
                          np.abs(t2 + np.abs(self.R_minus) ** 2 - 1.0))


def _link_window(Q):
    n0 = evaluation_site(Q)
    return n0, LatticeWindow(n0, n0 + 1)


def scattering_grid(theta, m, Q, branch=PLAIN, check=True):
    """Scattering data for real ``theta`` in ``(-pi, 0) U (0, pi)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    _, win = _link_window(Q)
    lam = np.asarray(g(theta, m), dtype=float)
    if branch == TILDE:
        lam = -lam
    wp = jost_w(theta, m, Q, win, "+", branch)
    wm = jost_w(theta, m, Q, win, "-", branch)
    wpr = jost_w(-theta, m, Q, win, "+", branch)
    wmr = jost_w(-theta, m, Q, win, "-", branch)
    wr = lambda a, b: wronskian_arrays(a, b)[:, 0]
    W = wr(wp, wm)
    W_plus = wr(wm, wpr)
    W_minus = wr(wp, wmr)
    norm = free_wronskian(theta, lam, m, branch)
    a = W / norm
    b_plus = W_plus / norm
    b_minus = -W_minus / norm
    # a_+ from w^- = a_+ w^+(-theta) + b_+ w^+(theta); a_- from the mirror relation
    a_plus_direct = wr(wm, wp) / wr(wpr, wp)
    a_minus_direct = wr(wp, wm) / wr(wmr, wm)
    if check:
        scale = np.max(np.abs(wp[:, 0]), axis=-1) * np.max(np.abs(wm[:, 1]), axis=-1)
        bad = np.abs(W) < 1e-13 * np.maximum(scale, 1.0)
        if np.any(bad):
            raise ConsistencyError(
                f"Wronskian vanishes inside the band at theta={theta[bad][0]!r}"
            )
    return ScatteringGrid(theta, lam, W, W_plus, W_minus, a, b_plus, b_minus,
                          1.0 / a, W_plus / W, -W_minus / W, a_plus_direct, a_minus_direct)


def scattering_coefficients(point, Q, check=True):
    """Scattering data at one real spectral point."""
    th = point.theta
    if abs(th.imag) > 0:
        raise ValueError("scattering coefficients need real theta")
    grid = scattering_grid([th.real], point.m, Q, point.branch, check)
    f = lambda arr: complex(arr[0])
    return ScatteringCoefficients(point, f(grid.W), f(grid.W_plus), f(grid.W_minus), f(grid.a),
                                  f(grid.b_plus), f(grid.b_minus), f(grid.T), f(grid.R_plus),
                                  f(grid.R_minus), f(grid.a_plus_direct), f(grid.a_minus_direct))


def wronskian_theta(theta, m, Q, branch=PLAIN):
    """``W(w^+(theta), w^-(theta))`` for an array of ``theta`` (complex allowed)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=complex))
    _, win = _link_window(Q)
    wp = jost_w(theta, m, Q, win, "+", branch)
    wm = jost_w(theta, m, Q, win, "-", branch)
    return wronskian_arrays(wp, wm)[:, 0]


def scattering_relation_residual(theta, m, Q, window=None, branch=PLAIN):
    """Max deviation in ``T w^+- = R^-+ w^-+(theta) + w^-+(-theta)``."""
    sup = Q.support or LatticeWindow(0, 0)
    if window is None:
        window = sup.expand(5)
    data = scattering_grid([theta], m, Q, branch, check=False)
    T, Rp, Rm = data.T[0], data.R_plus[0], data.R_minus[0]
    wp = jost_w([theta], m, Q, window, "+", branch)[0]
    wm = jost_w([theta], m, Q, window, "-", branch)[0]
    wpr = jost_w([-theta], m, Q, window, "+", branch)[0]
    wmr = jost_w([-theta], m, Q, window, "-", branch)[0]
    r1 = np.max(np.abs(T * wp - Rm * wm - wmr))
    r2 = np.max(np.abs(T * wm - Rp * wp - wpr))
    return float(max(r1, r2))


EDGES = (("m", PLAIN, 0.0), ("sqrt(m^2+4)", PLAIN, np.pi),
         ("-m", TILDE, 0.0), ("-sqrt(m^2+4)", TILDE, np.pi))


@dataclass(frozen=True)
class EdgeResult:
    label: str
    lam: float
    branch: str
    theta: float
    W: complex
    scale: float
    resonant: bool


@dataclass(frozen=True)
class ResonanceReport:
    m: float
    threshold_rel: float
    edges: tuple

    @property
    def flags(self):
        return tuple(e.resonant for e in self.edges)

    @property
    def count(self):
        return sum(self.flags)

    def lines(self):
        out = []
        for e in self.edges:
            out.append(
                f"edge lambda={e.lam:+.12g} ({e.label}, {e.branch}) W={e.W.real:+.6e}{e.W.imag:+.6e}j "
                f"scale={e.scale:.3e} resonant={'yes' if e.resonant else 'no'}"
            )
        return out


def edge_wronskian(Q, m, branch, theta_edge):
    """Edge Wronskian and its scale ``max_n |w^+_n| |w^-_{n+1}|`` over the support."""
    sup = (Q.support or LatticeWindow(0, 0)).expand(1)
    wp = jost_w([theta_edge], m, Q, sup, "+", branch)[0]
    wm = jost_w([theta_edge], m, Q, sup, "-", branch)[0]
    Wvals = wronskian_arrays(wp, wm)
    scale = np.max(np.linalg.norm(wp[:-1], axis=1) * np.linalg.norm(wm[1:], axis=1))
    n0 = evaluation_site(Q) - sup.n_min
    return complex(Wvals[n0]), float(scale)


def detect_resonances(Q, m, threshold_rel=1e-8):
    """Flag the band edges where the edge Wronskian vanishes."""
    edges = []
    for label, branch, th in EDGES:
        W, scale = edge_wronskian(Q, m, branch, th)
        lam = float(g(th, m)) * (1 if branch == PLAIN else -1)
        edges.append(EdgeResult(label, lam, branch, th, W, scale,
                                abs(W) <= threshold_rel * scale))
    return ResonanceReport(float(m), float(threshold_rel), tuple(edges))


def tune_resonance(family, bracket, m, branch=PLAIN, theta_edge=0.0, xtol=1e-12):
    """Locate ``s`` with ``W_edge(Q(s)) = 0`` by bisection on a sign change.

    ``family(s)`` returns a ``MatrixPotential``; at an edge ``theta`` is real
    and the Jost data are real, so the edge Wronskian is real.
    Returns ``(s_root, final_bracket_width, iterations)``.
    """
    f = lambda s: edge_wronskian(family(s), m, branch, theta_edge)[0].real
    lo, hi = map(float, bracket)
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo, 0.0, 0
    if np.sign(flo) == np.sign(fhi):
        raise ValueError("edge Wronskian does not change sign on the bracket")
    its = 0
    while hi - lo > xtol and its < 200:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        its += 1
        if fm == 0.0:
            lo = hi = mid
            break
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi), hi - lo, its


def resonant_root_brentq(family, bracket, m, branch=PLAIN, theta_edge=0.0):
    """Same root as ``tune_resonance`` via Brent's method (cross-check)."""
    f = lambda s: edge_wronskian(family(s), m, branch, theta_edge)[0].real
    return brentq(f, *bracket, xtol=1e-14)
