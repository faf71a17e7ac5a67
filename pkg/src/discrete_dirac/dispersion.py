"""Spectral coordinates and the dispersion relation of the free Dirac lattice.

Three coordinates describe one spectral point:

* ``lam`` -- the energy, an eigenvalue parameter of ``D w = lam w``;
* ``omega = lam**2 - m**2`` -- the matching energy of ``-Delta``;
* ``theta`` -- quasi-momentum with ``2 - 2 cos(theta) = omega`` taken in the
  closed lower strip ``-pi <= Re theta <= pi, Im theta <= 0``.

``z = exp(-1j * theta)`` is the corresponding point in the closed unit disk.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


class BranchError(ValueError):
    """Raised for ambiguous or inconsistent spectral coordinates."""


PLAIN = "plain"
TILDE = "tilde"


def g(theta, m):
    """Dispersion ``sqrt(2 - 2 cos(theta) + m^2)`` (principal root)."""
    theta = np.asarray(theta)
    val = 2.0 - 2.0 * np.cos(theta) + m * m
    if np.iscomplexobj(val):
        out = np.sqrt(val)
    else:
        out = np.sqrt(val.astype(float))
    return out[()] if out.ndim == 0 else out


def _arccos(c):
    # arccos via the complex log so real and complex arguments share one path
    c = complex(c)
    return -1j * np.log(c + 1j * np.sqrt(1.0 - c * c))


def theta_from_omega(omega, side=None):
    """Solve ``2 - 2 cos(theta) = omega`` on the closed lower strip.

    Parameters
    ----------
    omega : complex
    side : {None, '+', '-'}
        Needed when ``omega`` lies on the cut ``[0, 4]``. ``'+'`` is the
        boundary value from above (``theta`` in ``[-pi, 0]``) and ``'-'`` from
        below (``theta`` in ``[0, pi]``).
    """
    omega = complex(omega)
    on_cut = omega.imag == 0.0 and 0.0 <= omega.real <= 4.0
    if on_cut:
        if side not in ("+", "-"):
            raise BranchError(f"omega={omega.real} lies on [0, 4]; pass side='+' or side='-'")
        base = float(np.arccos(np.clip(1.0 - omega.real / 2.0, -1.0, 1.0)))
        return complex(-base if side == "+" else base)
    th = _arccos(1.0 - omega / 2.0)
    if th.imag > 0 or (th.imag == 0 and th.real > 0):
        th = -th
    # keep Re theta in [-pi, pi]
    if th.real < -np.pi:
        th += 2 * np.pi
    elif th.real > np.pi:
        th -= 2 * np.pi
    return complex(th)


@dataclass(frozen=True)
class SpectralPoint:
    """Consistent bundle ``(theta, omega, lam, z)`` plus the half-plane tag.

    ``branch`` is ``'plain'`` when ``lam = g(theta)`` (``Re lam >= 0``) and
    ``'tilde'`` when ``lam = -g(theta)`` (``Re lam <= 0``).
    """

    theta: complex
    omega: complex
    lam: complex
    z: complex
    m: float
    branch: str

    @classmethod
    def from_theta(cls, theta, m, branch=PLAIN):
        theta = complex(theta)
        if theta.imag > 1e-15:
            raise BranchError(f"theta={theta} is outside the closed lower strip")
        if branch not in (PLAIN, TILDE):
            raise BranchError(f"unknown branch {branch!r}")
        omega = 2.0 - 2.0 * np.cos(theta)
        gv = complex(g(theta, m))
        lam = gv if branch == PLAIN else -gv
        return cls(theta, complex(omega), lam, complex(np.exp(-1j * theta)), float(m), branch)

    @classmethod
    def from_lambda(cls, lam, m, side=None):
        """Spectral point for energy ``lam``.

        On the open bands pass ``side='+'`` for ``lam + i0`` or ``'-'`` for
        ``lam - i0``. On the imaginary axis the plain branch is used whenever
        ``lam = g(theta)`` holds (``Im lam >= 0``).
        """
        lam = complex(lam)
        omega = lam * lam - m * m
        if lam.real > 0 or (lam.real == 0 and lam.imag >= 0):
            branch = PLAIN
        else:
            branch = TILDE
        if omega.imag == 0.0 and 0.0 <= omega.real <= 4.0 and lam.imag == 0.0:
            if side not in ("+", "-"):
                raise BranchError(f"lam={lam.real} is on the closed bands; pass side")
            # lam + i0 moves omega to omega + i0 on the right band, omega - i0 on the left
            wside = side if branch == PLAIN else ("-" if side == "+" else "+")
            theta = theta_from_omega(omega, wside)
        else:
            theta = theta_from_omega(omega)
        return cls(theta, omega, lam, complex(np.exp(-1j * theta)), float(m), branch)

    @property
    def plain(self):
        return self.branch == PLAIN

    def alpha(self, sign):
        """Lower component of the plain boundary vector ``(1, alpha_sign)``."""
        return (1.0 - np.exp(sign * 1j * self.theta)) / (self.m + self.lam)

    def alpha_tilde(self, sign):
        """Upper component of the tilde boundary vector ``(alpha~_sign, 1)``."""
        return (1.0 - np.exp(-sign * 1j * self.theta)) / (self.lam - self.m)

    def boundary_vector(self, sign):
        if self.plain:
            return np.array([1.0, self.alpha(sign)], dtype=complex)
        return np.array([self.alpha_tilde(sign), 1.0], dtype=complex)

    def reflected(self):
        """The point at ``-theta`` with the same ``lam`` (real ``theta`` only)."""
        return SpectralPoint.from_theta(-self.theta, self.m, self.branch)

    def check(self, rtol=1e-12):
        """Return the largest violation of the defining relations."""
        th = self.theta
        sc = max(1.0, abs(self.omega))
        errs = [
            abs(2 - 2 * np.cos(th) - self.omega) / sc,
            abs(self.lam * self.lam - self.m**2 - self.omega) / sc,
            abs(self.z - np.exp(-1j * th)),
        ]
        return max(errs)


def g_derivatives(theta, m):
    """``(g, g', g'', g''')`` for real ``theta`` (arrays allowed)."""
    theta = np.asarray(theta, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    gv = np.sqrt(2.0 - 2.0 * c + m * m)
    g1 = s / gv
    g2 = c / gv - s * s / gv**3
    g3 = -s / gv - 3.0 * s * c / gv**3 + 3.0 * s**3 / gv**5
    return gv, g1, g2, g3


def phase(theta, v, m, order=0):
    """Phase ``Phi_v(theta) = g(theta) + v theta`` or one of its derivatives.

    ``order`` selects the derivative (0..3).
    """
    gv, g1, g2, g3 = g_derivatives(theta, m)
    theta = np.asarray(theta, dtype=float)
    if order == 0:
        return gv + v * theta
    if order == 1:
        return g1 + v
    if order == 2:
        return g2
    if order == 3:
        return g3
    raise ValueError("order must be 0, 1, 2 or 3")


@dataclass(frozen=True)
class StationaryData:
    kappa: float
    v0: float
    theta0: float
    nu: float
    g3_bound: float


def kappa(m):
    return (2.0 + m * m - np.sqrt(4.0 * m * m + m**4)) / 2.0


def stationary_data(m, grid_points=10_000):
    kap = kappa(m)
    v0 = float(np.sqrt(kap))
    theta0 = -float(np.arccos(kap))
    grid = np.linspace(-np.pi, np.pi, grid_points)
    big_g = float(np.max(np.abs(g_derivatives(grid, m)[3])))
    nu = min(0.5, float(np.sqrt(2.0 * v0 / (3.0 * big_g * theta0**2))))
    return StationaryData(float(kap), v0, theta0, nu, big_g)


def stationary_points(v, m, tol=1e-12):
    """Real roots of ``Phi_v'`` on ``[-pi, pi]`` with their degeneracy order.

    ``Phi_v' = g' + v`` and ``g'`` attains its minimum ``-v0`` at ``theta0``,
    so for ``v > 0`` the roots lie in ``(-pi, 0)``: two simple ones for
    ``v < v0``, one double root at ``v = v0`` and none beyond.
    """
    data = stationary_data(m)
    v = float(v)
    if v < 0:
        raise ValueError("v must be nonnegative")
    if v == 0.0:
        return [(-np.pi, 1), (0.0, 1), (np.pi, 1)], data
    if abs(v - data.v0) <= tol:
        return [(data.theta0, 2)], data
    if v > data.v0:
        return [], data

    def fprime(th):
        return float(phase(th, v, m, 1))

    left = brentq(fprime, -np.pi, data.theta0, xtol=1e-15, rtol=1e-15)
    right = brentq(fprime, data.theta0, 0.0, xtol=1e-15, rtol=1e-15)
    return [(left, 1), (right, 1)], data
