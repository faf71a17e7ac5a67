"""Lattice windows, spinor sequences, matrix potentials and weighted norms.

Sites are integers ``n``; a spinor at a site is the pair ``(u_n, v_n)``.
Dense storage is used throughout: a window ``[n_min, n_max]`` maps to array
rows ``0 .. n_max - n_min``.
"""
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Raised when an operation is asked for sites outside its window."""


class PotentialError(ValueError):
    """Raised when a matrix potential violates the structural constraints."""


@dataclass(frozen=True)
class ModelParams:
    m: float

    def __post_init__(self):
        if not (np.isfinite(self.m) and self.m > 0):
            raise ValueError(f"mass must be a positive finite number, got {self.m!r}")

    @property
    def gap_edges(self):
        """The four band edges ``-sqrt(m^2+4), -m, m, sqrt(m^2+4)``."""
        top = float(np.sqrt(self.m * self.m + 4.0))
        return (-top, -self.m, self.m, top)

    def distance_to_bands(self, lam):
        """Distance of real ``lam`` from the closed bands (0 inside)."""
        lo, inner, _, hi = self.gap_edges
        a = abs(float(lam))
        if self.m <= a <= hi:
            return 0.0
        return min(abs(a - self.m), abs(a - hi))


@dataclass(frozen=True)
class LatticeWindow:
    n_min: int
    n_max: int

    def __post_init__(self):
        if self.n_min > self.n_max:
            raise ValueError(f"empty window [{self.n_min}, {self.n_max}]")

    @classmethod
    def symmetric(cls, half_width):
        return cls(-int(half_width), int(half_width))

    @property
    def size(self):
        return self.n_max - self.n_min + 1

    @property
    def sites(self):
        return np.arange(self.n_min, self.n_max + 1)

    def __contains__(self, n):
        return self.n_min <= n <= self.n_max

    def index(self, n):
        if n not in self:
            raise DomainError(f"site {n} outside window [{self.n_min}, {self.n_max}]")
        return n - self.n_min

    def union(self, other):
        return LatticeWindow(min(self.n_min, other.n_min), max(self.n_max, other.n_max))

    def expand(self, left, right=None):
        right = left if right is None else right
        return LatticeWindow(self.n_min - left, self.n_max + right)


@dataclass(frozen=True)
class SpinorSequence:
    """Per-site complex 2-vectors ``values[i] = (u_n, v_n)``, ``n = n_min + i``."""

    window: LatticeWindow
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.window.size, 2):
            raise ValueError(
                f"values shape {vals.shape} does not match window size {self.window.size}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def u(self):
        return self.values[:, 0]

    @property
    def v(self):
        return self.values[:, 1]

    def at(self, n):
        return self.values[self.window.index(n)]

    def restrict(self, window):
        i0 = self.window.index(window.n_min)
        i1 = self.window.index(window.n_max)
        return SpinorSequence(window, self.values[i0 : i1 + 1])

    @classmethod
    def from_function(cls, window, func):
        vals = np.array([func(n) for n in window.sites], dtype=complex).reshape(-1, 2)
        return cls(window, vals)


@dataclass(frozen=True)
class MatrixPotential:
    """Real 2x2 potential ``Q_n`` stored densely on ``window``.

    ``entries[i]`` is ``[[q11, q12], [q21, q22]]`` at site ``window.n_min + i``.
    Sites outside the window carry ``Q_n = 0``. ``tail_bound`` records the
    weighted tail ``sum_{k outside} (1+|k|) |Q_k|`` dropped when a generator
    truncated an infinitely supported potential (zero for compact ones).
    """

    window: LatticeWindow
    entries: np.ndarray
    tail_bound: float = 0.0
    _validated: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        q = np.asarray(self.entries, dtype=float)
        if q.shape != (self.window.size, 2, 2):
            raise PotentialError(
                f"entries shape {q.shape} does not match window size {self.window.size}"
            )
        if self._validated:
            check_potential_entries(q, self.window.sites)
        q = q.copy()
        q.setflags(write=False)
        object.__setattr__(self, "entries", q)

    @classmethod
    def zero(cls):
        return cls(LatticeWindow(0, 0), np.zeros((1, 2, 2)))

    @classmethod
    def from_sites(cls, mapping, tail_bound=0.0):
        """Build from ``{n: 2x2 array-like}``; unlisted sites are zero."""
        if not mapping:
            return cls.zero()
        sites = sorted(mapping)
        window = LatticeWindow(sites[0], sites[-1])
        q = np.zeros((window.size, 2, 2))
        for n, mat in mapping.items():
            q[n - window.n_min] = np.asarray(mat, dtype=float).reshape(2, 2)
        return cls(window, q, tail_bound=tail_bound)

    @classmethod
    def unchecked(cls, window, entries):
        """Skip the structural checks. Test hook for negative controls only."""
        return cls(window, entries, _validated=False)

    @property
    def is_zero(self):
        return not np.any(self.entries)

    @property
    def support(self):
        """Smallest window holding every nonzero site, or ``None`` for Q = 0."""
        nz = np.flatnonzero(np.any(self.entries != 0.0, axis=(1, 2)))
        if nz.size == 0:
            return None
        return LatticeWindow(self.window.n_min + int(nz[0]), self.window.n_min + int(nz[-1]))

    def at(self, n):
        if n in self.window:
            return self.entries[n - self.window.n_min]
        return np.zeros((2, 2))

    def dense_on(self, window):
        """Entries resampled onto ``window`` (zero-filled)."""
        out = np.zeros((window.size, 2, 2))
        lo = max(window.n_min, self.window.n_min)
        hi = min(window.n_max, self.window.n_max)
        if lo <= hi:
            out[lo - window.n_min : hi - window.n_min + 1] = self.entries[
                lo - self.window.n_min : hi - self.window.n_min + 1
            ]
        return out

    def component_norm(self, i, j, p=1, sigma=0.0):
        """``|| q^{ij} ||_{l^p_sigma}`` for 1-based component indices."""
        return weighted_norm(self.entries[:, i - 1, j - 1], p, sigma, self.window)

    def weighted_l1(self, sigma):
        """Largest component norm in ``l^1_sigma``."""
        return max(self.component_norm(i, j, 1, sigma) for i in (1, 2) for j in (1, 2))

    def reflected(self):
        """The potential ``n -> Q_{-n}``."""
        w = LatticeWindow(-self.window.n_max, -self.window.n_min)
        return MatrixPotential(w, self.entries[::-1], tail_bound=self.tail_bound)


def check_potential_entries(q, sites):
    """Reject potentials with ``q12 != q21`` or ``q21 = -1`` at some site."""
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        bad = int(sites[np.flatnonzero(~np.all(np.isfinite(q), axis=(1, 2)))[0]])
        raise PotentialError(f"non-finite entry at site {bad}")
    asym = np.flatnonzero(q[:, 0, 1] != q[:, 1, 0])
    if asym.size:
        n = int(sites[asym[0]])
        raise PotentialError(
            f"q12 != q21 at site {n} ({float(q[asym[0], 0, 1])!r} vs {float(q[asym[0], 1, 0])!r})"
        )
    sing = np.flatnonzero(np.abs(1.0 + q[:, 1, 0]) <= 1e-12)
    if sing.size:
        raise PotentialError(f"q21 = -1 at site {int(sites[sing[0]])} (singular hopping)")


def weighted_norm(seq, p, sigma, window=None):
    """Weighted sequence norm ``(sum (1+|n|)^{p sigma} |u_n|^p)^{1/p}``.

    Parameters
    ----------
    seq : array_like or SpinorSequence
        Scalar values on ``window``. A ``SpinorSequence`` is reduced to the
        per-site Euclidean norm of the spinor first.
    p : {1, 2, inf}
    sigma : float
        Weight exponent; ``sigma = 0`` is the plain norm.
    window : LatticeWindow, optional
        Sites of ``seq``; defaults to ``0 .. len(seq)-1``.
    """
    if isinstance(seq, SpinorSequence):
        window = seq.window
        vals = np.linalg.norm(seq.values, axis=1)
    else:
        vals = np.abs(np.asarray(seq, dtype=complex).ravel())
    if vals.size == 0:
        return 0.0
    if window is None:
        window = LatticeWindow(0, vals.size - 1)
    if window.size != vals.size:
        raise DomainError("sequence length does not match its window")
    weights = (1.0 + np.abs(window.sites)) ** float(sigma)
    if p == np.inf or p == "inf":
        return float(np.max(weights * vals))
    if p not in (1, 2):
        raise ValueError(f"p must be 1, 2 or inf, got {p!r}")
    return float(np.sum((weights * vals) ** p) ** (1.0 / p))


def apply_dirac(params, Q, w):
    """Apply ``D = D0 + Q`` to ``w``; the result lives on the interior sites.

    ``(D w)_n = (m u_n + v_n - v_{n+1} + (Q w)^1_n,
                 u_n - u_{n-1} - m v_n + (Q w)^2_n)``
    """
    if w.window.size < 3:
        raise DomainError("apply_dirac needs at least one site on each side of the output")
    m = params.m
    u, v = w.u, w.v
    inner = LatticeWindow(w.window.n_min + 1, w.window.n_max - 1)
    q = Q.dense_on(inner)
    uc, vc = u[1:-1], v[1:-1]
    row1 = m * uc + vc - v[2:] + q[:, 0, 0] * uc + q[:, 0, 1] * vc
    row2 = uc - u[:-2] - m * vc + q[:, 1, 0] * uc + q[:, 1, 1] * vc
    return SpinorSequence(inner, np.column_stack([row1, row2]))


def dirac_matrix(params, Q, window):
    """Dense real matrix of ``D`` on ``window`` with zero exterior values.

    Site-major ordering: index ``2 i`` is ``u`` and ``2 i + 1`` is ``v`` at
    site ``window.n_min + i``.
    """
    size = window.size
    q = Q.dense_on(window)
    mat = np.zeros((2 * size, 2 * size))
    iu = 2 * np.arange(size)
    iv = iu + 1
    mat[iu, iu] = params.m + q[:, 0, 0]
    mat[iv, iv] = -params.m + q[:, 1, 1]
    mat[iu, iv] = 1.0 + q[:, 0, 1]
    mat[iv, iu] = 1.0 + q[:, 1, 0]
    # -v_{n+1} in row u_n and -u_{n-1} in row v_n
    mat[iu[:-1], iv[1:]] = -1.0
    mat[iv[1:], iu[:-1]] = -1.0
    return mat
