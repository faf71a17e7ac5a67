"""Hot loops: Jost recursions over a batch of spectral points and the free
kernel quadrature sums.

Each kernel exists twice: a numba ``njit`` loop and a numpy version that
vectorizes over the batch axis. ``_accel.USE_NUMBA`` picks the default; both
are importable for the benchmark and for cross-checking.

Volterra kernels in the polynomial form used below (``S_l = sum_{j<l} z^{2j}``):

    G+(l) = [[(m+lam) z S_l,       1 - (1-z) S_l ],
             [z (1-z) S_l - 1,     (lam-m) z S_l ]]        l >= 1
    G-(l) = [[(m+lam) z S_L,       z (1-z) S_L - 1],
             [1 - (1-z) S_L,       (lam-m) z S_L  ]]       L = -l >= 1

They have no removable singularities, so band edges need no special casing.
"""
import numpy as np

from ._accel import USE_NUMBA, numba


def _geometric_sums(z, length):
    """``S[..., l] = sum_{j<l} z^{2j}`` for ``l = 0 .. length-1``."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape + (length,), dtype=complex)
    z2 = z * z
    for l in range(1, length):
        out[..., l] = 1.0 + z2 * out[..., l - 1]
    return out


# -- numpy implementations -------------------------------------------------


def jost_plus_numpy(z, lam, b, m, q, s_lo, lo, hi):
    """Backward Volterra sweep for the ``+`` side on sites ``lo .. hi``.

    ``z``, ``lam``: shape ``(P,)``; ``b``: ``(P, 2)`` boundary vectors;
    ``q``: ``(S, 2, 2)`` on sites ``s_lo .. s_lo + S - 1`` with
    ``lo <= s_lo`` and ``s_lo + S - 1 <= hi``. Returns ``h`` of shape
    ``(P, hi - lo + 1, 2)``.
    """
    z = np.asarray(z, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    b = np.asarray(b, dtype=complex)
    npts = z.shape[0]
    nsites = hi - lo + 1
    s_hi = s_lo + q.shape[0] - 1
    sums = _geometric_sums(z, s_hi - lo + 2)
    h = np.empty((npts, nsites, 2), dtype=complex)
    mp = (m + lam)[:, None]
    lm = (lam - m)[:, None]
    zc = z[:, None]
    for idx in range(nsites - 1, -1, -1):
        n = lo + idx
        if n > s_hi:
            h[:, idx] = b
            continue
        k0 = max(n + 1, s_lo)
        rhs = b.copy()
        if k0 <= s_hi:
            ks = np.arange(k0, s_hi + 1)
            sl = sums[:, ks - n]
            g11 = mp * zc * sl
            g12 = 1.0 - (1.0 - zc) * sl
            g21 = zc * (1.0 - zc) * sl - 1.0
            g22 = lm * zc * sl
            qk = q[ks - s_lo]
            hk = h[:, ks - lo]
            y0 = qk[None, :, 0, 0] * hk[..., 0] + qk[None, :, 0, 1] * hk[..., 1]
            y1 = qk[None, :, 1, 0] * hk[..., 0] + qk[None, :, 1, 1] * hk[..., 1]
            rhs[:, 0] += np.sum(g11 * y0 + g12 * y1, axis=1)
            rhs[:, 1] += np.sum(g21 * y0 + g22 * y1, axis=1)
        if n >= s_lo:
            qn = q[n - s_lo]
            h0 = rhs[:, 0]
            h[:, idx, 0] = h0
            h[:, idx, 1] = (rhs[:, 1] - qn[0, 0] * h0) / (1.0 + qn[0, 1])
        else:
            h[:, idx] = rhs
    return h


def jost_minus_numpy(z, lam, b, m, q, s_lo, lo, hi):
    """Forward Volterra sweep for the ``-`` side; arguments as the ``+`` sweep."""
    z = np.asarray(z, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    b = np.asarray(b, dtype=complex)
    npts = z.shape[0]
    nsites = hi - lo + 1
    s_hi = s_lo + q.shape[0] - 1
    sums = _geometric_sums(z, hi - s_lo + 2)
    h = np.empty((npts, nsites, 2), dtype=complex)
    mp = (m + lam)[:, None]
    lm = (lam - m)[:, None]
    zc = z[:, None]
    for idx in range(nsites):
        n = lo + idx
        if n < s_lo:
            h[:, idx] = b
            continue
        k1 = min(n - 1, s_hi)
        rhs = b.copy()
        if k1 >= s_lo:
            ks = np.arange(s_lo, k1 + 1)
            sl = sums[:, n - ks]
            g11 = mp * zc * sl
            g12 = zc * (1.0 - zc) * sl - 1.0
            g21 = 1.0 - (1.0 - zc) * sl
            g22 = lm * zc * sl
            qk = q[ks - s_lo]
            hk = h[:, ks - lo]
            y0 = qk[None, :, 0, 0] * hk[..., 0] + qk[None, :, 0, 1] * hk[..., 1]
            y1 = qk[None, :, 1, 0] * hk[..., 0] + qk[None, :, 1, 1] * hk[..., 1]
            rhs[:, 0] += np.sum(g11 * y0 + g12 * y1, axis=1)
            rhs[:, 1] += np.sum(g21 * y0 + g22 * y1, axis=1)
        if n <= s_hi:
            qn = q[n - s_lo]
            h1 = rhs[:, 1]
            h[:, idx, 1] = h1
            h[:, idx, 0] = (rhs[:, 0] - qn[1, 1] * h1) / (1.0 + qn[1, 0])
        else:
            h[:, idx] = rhs
    return h


def free_sums_numpy(theta, weights, t, m, emax, chunk=2048):
    """``C[e] = sum w cos(t g) e^{-i theta e}``, ``S[e] = sum w sin(t g)/g e^{-i theta e}``."""
    theta = np.asarray(theta, dtype=float)
    weights = np.asarray(weights, dtype=float)
    gv = np.sqrt(2.0 - 2.0 * np.cos(theta) + m * m)
    wc = weights * np.cos(t * gv)
    ws = weights * np.sin(t * gv) / gv
    es = np.arange(emax + 1)
    c_out = np.zeros(emax + 1, dtype=complex)
    s_out = np.zeros(emax + 1, dtype=complex)
    for start in range(0, theta.size, chunk):
        sl = slice(start, start + chunk)
        ph = np.exp(-1j * np.outer(theta[sl], es))
        c_out += wc[sl] @ ph
        s_out += ws[sl] @ ph
    return c_out, s_out


# -- numba implementations -------------------------------------------------

if numba is not None:

    @numba.njit(cache=True, parallel=False)
    def _jost_plus_nb(z, lam, b, m, q, s_lo, lo, hi):
        npts = z.shape[0]
        nsites = hi - lo + 1
        s_hi = s_lo + q.shape[0] - 1
        nsum = s_hi - lo + 2
        h = np.empty((npts, nsites, 2), dtype=np.complex128)
        sums = np.empty(nsum, dtype=np.complex128)
        for p in range(npts):
            zp = z[p]
            z2 = zp * zp
            mp = m + lam[p]
            lm = lam[p] - m
            sums[0] = 0.0
            for l in range(1, nsum):
                sums[l] = 1.0 + z2 * sums[l - 1]
            b0 = b[p, 0]
            b1 = b[p, 1]
            for idx in range(nsites - 1, -1, -1):
                n = lo + idx
                if n > s_hi:
                    h[p, idx, 0] = b0
                    h[p, idx, 1] = b1
                    continue
                r0 = b0
                r1 = b1
                k0 = n + 1 if n + 1 > s_lo else s_lo
                for k in range(k0, s_hi + 1):
                    sl = sums[k - n]
                    j = k - s_lo
                    hk0 = h[p, k - lo, 0]
                    hk1 = h[p, k - lo, 1]
                    y0 = q[j, 0, 0] * hk0 + q[j, 0, 1] * hk1
                    y1 = q[j, 1, 0] * hk0 + q[j, 1, 1] * hk1
                    zs = zp * sl
                    r0 += mp * zs * y0 + (1.0 - (1.0 - zp) * sl) * y1
                    r1 += (zs * (1.0 - zp) - 1.0) * y0 + lm * zs * y1
                if n >= s_lo:
                    j = n - s_lo
                    h[p, idx, 0] = r0
                    h[p, idx, 1] = (r1 - q[j, 0, 0] * r0) / (1.0 + q[j, 0, 1])
                else:
                    h[p, idx, 0] = r0
                    h[p, idx, 1] = r1
        return h

    @numba.njit(cache=True, parallel=False)
    def _jost_minus_nb(z, lam, b, m, q, s_lo, lo, hi):
        npts = z.shape[0]
        nsites = hi - lo + 1
        s_hi = s_lo + q.shape[0] - 1
        nsum = hi - s_lo + 2
        h = np.empty((npts, nsites, 2), dtype=np.complex128)
        sums = np.empty(nsum, dtype=np.complex128)
        for p in range(npts):
            zp = z[p]
            z2 = zp * zp
            mp = m + lam[p]
            lm = lam[p] - m
            sums[0] = 0.0
            for l in range(1, nsum):
                sums[l] = 1.0 + z2 * sums[l - 1]
            b0 = b[p, 0]
            b1 = b[p, 1]
            for idx in range(nsites):
                n = lo + idx
                if n < s_lo:
                    h[p, idx, 0] = b0
                    h[p, idx, 1] = b1
                    continue
                r0 = b0
                r1 = b1
                k1 = n - 1 if n - 1 < s_hi else s_hi
                for k in range(s_lo, k1 + 1):
                    sl = sums[n - k]
                    j = k - s_lo
                    hk0 = h[p, k - lo, 0]
                    hk1 = h[p, k - lo, 1]
                    y0 = q[j, 0, 0] * hk0 + q[j, 0, 1] * hk1
                    y1 = q[j, 1, 0] * hk0 + q[j, 1, 1] * hk1
                    zs = zp * sl
                    r0 += mp * zs * y0 + (zs * (1.0 - zp) - 1.0) * y1
                    r1 += (1.0 - (1.0 - zp) * sl) * y0 + lm * zs * y1
                if n <= s_hi:
                    j = n - s_lo
                    h[p, idx, 1] = r1
                    h[p, idx, 0] = (r0 - q[j, 1, 1] * r1) / (1.0 + q[j, 1, 0])
                else:
                    h[p, idx, 0] = r0
                    h[p, idx, 1] = r1
        return h

    @numba.njit(cache=True)
    def _free_sums_nb(theta, weights, t, m, emax):
        c_out = np.zeros(emax + 1, dtype=np.complex128)
        s_out = np.zeros(emax + 1, dtype=np.complex128)
        for p in range(theta.shape[0]):
            th = theta[p]
            gv = np.sqrt(2.0 - 2.0 * np.cos(th) + m * m)
            wc = weights[p] * np.cos(t * gv)
            ws = weights[p] * np.sin(t * gv) / gv
            rot = np.cos(th) - 1j * np.sin(th)
            ph = 1.0 + 0.0j
            for e in range(emax + 1):
                c_out[e] += wc * ph
                s_out[e] += ws * ph
                ph *= rot
        return c_out, s_out

    def jost_plus_numba(z, lam, b, m, q, s_lo, lo, hi):
        return _jost_plus_nb(
            np.ascontiguousarray(z, dtype=np.complex128),
            np.ascontiguousarray(lam, dtype=np.complex128),
            np.ascontiguousarray(b, dtype=np.complex128),
            float(m),
            np.ascontiguousarray(q, dtype=np.float64),
            int(s_lo),
            int(lo),
            int(hi),
        )

    def jost_minus_numba(z, lam, b, m, q, s_lo, lo, hi):
        return _jost_minus_nb(
            np.ascontiguousarray(z, dtype=np.complex128),
            np.ascontiguousarray(lam, dtype=np.complex128),
            np.ascontiguousarray(b, dtype=np.complex128),
            float(m),
            np.ascontiguousarray(q, dtype=np.float64),
            int(s_lo),
            int(lo),
            int(hi),
        )

    def free_sums_numba(theta, weights, t, m, emax):
        return _free_sums_nb(
            np.ascontiguousarray(theta, dtype=np.float64),
            np.ascontiguousarray(weights, dtype=np.float64),
            float(t),
            float(m),
            int(emax),
        )

else:  # pragma: no cover
    jost_plus_numba = jost_minus_numba = free_sums_numba = None


if USE_NUMBA:
    jost_plus_sweep = jost_plus_numba
    jost_minus_sweep = jost_minus_numba
    free_sums = free_sums_numba
else:
    jost_plus_sweep = jost_plus_numpy
    jost_minus_sweep = jost_minus_numpy
    free_sums = free_sums_numpy
