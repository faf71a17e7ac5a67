"""Property tests (hypothesis) for the structural invariants."""
import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st

from discrete_dirac.decay import norm_l1_to_linf, norm_weighted_l1_linf, norm_weighted_l2
from discrete_dirac.dispersion import PLAIN, TILDE, SpectralPoint, g, theta_from_omega
from discrete_dirac.free import free_kernel_table
from discrete_dirac.jost import dirac_residual, jost, jost_batch
from discrete_dirac.lattice import (
    LatticeWindow,
    MatrixPotential,
    ModelParams,
    SpinorSequence,
    apply_dirac,
    dirac_matrix,
    weighted_norm,
)
from discrete_dirac.potentials import parse_potential_text
from discrete_dirac.resolvent import KernelBlockMatrix, banded_resolvent, resolvent_kernel
from discrete_dirac.scattering import scattering_grid, wronskian_constancy_check

masses = st.floats(0.3, 3.0)
small = st.floats(-0.3, 0.3, allow_nan=False)


@st.composite
def potentials(draw, amp=small, max_sites=4):
    sites = draw(st.lists(st.integers(-3, 3), min_size=1, max_size=max_sites, unique=True))
    mapping = {}
    for n in sites:
        # q21 = -1 is a singular hopping and outside the model
        a, d = draw(amp), draw(amp)
        b = draw(amp.filter(lambda x: abs(1.0 + x) > 0.05))
        mapping[n] = [[a, b], [b, d]]
    return MatrixPotential.from_sites(mapping)


@st.composite
def spinors(draw, size):
    vals = draw(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                         min_size=2 * size, max_size=2 * size))
    return np.array(vals).reshape(size, 2)


band_theta = st.floats(0.02, np.pi - 0.02).flatmap(lambda x: st.sampled_from([x, -x]))


@given(potentials(), masses, spinors(9), spinors(9), st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5))
def test_apply_dirac_linear(Q, m, a, b, s, t):
    win = LatticeWindow(-4, 4)
    p = ModelParams(m)
    lhs = apply_dirac(p, Q, SpinorSequence(win, s * a + t * b)).values
    rhs = s * apply_dirac(p, Q, SpinorSequence(win, a)).values + t * apply_dirac(p, Q, SpinorSequence(win, b)).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-13 * (1 + np.max(np.abs(lhs)))


@given(potentials(), masses, spinors(9))
def test_apply_matches_matrix(Q, m, a):
    win = LatticeWindow(-4, 4)
    mat = dirac_matrix(ModelParams(m), Q, win)
    assert np.array_equal(mat, mat.T)
    dense = (mat @ a.ravel()).reshape(-1, 2)[1:-1]
    direct = apply_dirac(ModelParams(m), Q, SpinorSequence(win, a)).values
    assert np.max(np.abs(dense - direct)) <= 1e-13 * (1 + np.max(np.abs(direct)))


@given(spinors(7))
def test_weighted_norm_sigma0(a):
    seq = SpinorSequence(LatticeWindow(-3, 3), a)
    assert abs(weighted_norm(seq, 2, 0.0) - np.linalg.norm(a)) <= 1e-12 * (1 + np.linalg.norm(a))


@given(st.floats(-np.pi + 1e-3, np.pi - 1e-3), st.floats(-3.0, -1e-3))
def test_theta_roundtrip(re, im):
    th = complex(re, im)
    assert abs(theta_from_omega(2 - 2 * np.cos(th)) - th) < 1e-10


@given(st.floats(-np.pi, np.pi), masses)
def test_g_identity(th, m):
    assert abs(g(th, m) ** 2 - (2 - 2 * np.cos(th)) - m * m) < 1e-12 * (1 + m * m)


@given(potentials(amp=st.floats(-1.5, 1.5)), masses, band_theta, st.sampled_from([PLAIN, TILDE]),
       st.sampled_from(["+", "-"]), st.floats(-0.5, 0.0))
def test_jost_residual_and_boundary(Q, m, th, branch, side, im):
    assume(all(abs(1 + q[1, 0]) > 0.1 for q in Q.entries))
    p = SpectralPoint.from_theta(complex(th, im), m, branch)
    win = LatticeWindow(-6, 6)
    sol = jost(side, p, Q, win)
    size = np.max(np.abs(sol.w().values))
    assert dirac_residual(sol, Q) <= 1e-10 * (1 + abs(p.lam)) * max(size, 1.0)
    sup = Q.support or LatticeWindow(0, 0)
    b = p.boundary_vector(1 if side == "+" else -1)
    beyond = range(sup.n_max + 1, 7) if side == "+" else range(-6, sup.n_min)
    for n in beyond:
        assert np.array_equal(sol.h.at(n), b)


@given(potentials(), masses, band_theta)
def test_jost_conjugation(Q, m, th):
    win = LatticeWindow(-5, 5)
    a = jost_batch([th], m, Q, win, "+")
    b = jost_batch([-th], m, Q, win, "+")
    assert np.max(np.abs(b - np.conj(a))) < 1e-12 * max(1.0, np.max(np.abs(a)))


@given(potentials(), masses, st.lists(band_theta, min_size=1, max_size=8), st.sampled_from([PLAIN, TILDE]))
def test_scattering_identities(Q, m, thetas, branch):
    d = scattering_grid(thetas, m, Q, branch)
    assert np.max(d.unitarity_residual) < 1e-10
    assert np.max(d.flux_residual) < 1e-10
    assert np.max(np.abs(d.a_plus_direct - d.a_minus_direct)) < 1e-12 * np.max(np.abs(d.a))
    assert np.min(np.abs(d.W)) > 1e-8


@given(potentials(amp=st.floats(-1.0, 1.0)), masses, band_theta)
def test_wronskian_constant(Q, m, th):
    assume(all(abs(1 + q[1, 0]) > 0.1 for q in Q.entries))
    p = SpectralPoint.from_theta(th, m)
    win = LatticeWindow(-6, 6)
    dev = wronskian_constancy_check(jost("+", p, Q, win).w(), jost("-", p, Q, win).w())
    assert dev < 1e-11


@given(potentials(), masses, st.floats(-3.0, 3.0), st.floats(0.5, 3.0), st.integers(-4, 4), st.integers(-4, 4))
def test_resolvent_vs_banded(Q, m, re, im, n, k):
    lam = complex(re, im)
    rng = LatticeWindow(min(n, k), max(n, k))
    ker = resolvent_kernel(SpectralPoint.from_lambda(lam, m), Q, rng, rng)
    ref = banded_resolvent(m, Q, lam, rng, rng, 120)
    assert ker.max_abs_diff(ref) < 1e-10
    blk = ker.block(n, n)
    assert abs(blk[0, 1] - blk[1, 0]) < 1e-12


@given(st.integers(0, 2**31 - 1), st.floats(0.1, 10.0))
def test_norm_properties(seed, c):
    rng = np.random.default_rng(seed)
    r = LatticeWindow.symmetric(4)
    mat = rng.normal(size=(18, 18)) + 1j * rng.normal(size=(18, 18))
    K = KernelBlockMatrix.from_matrix(0.0, r, r, mat)
    cK = KernelBlockMatrix(0.0, r, r, c * K.blocks)
    for f in (norm_l1_to_linf, lambda k: norm_weighted_l2(k, 1.0), lambda k: norm_weighted_l1_linf(k, 1.5)):
        assert abs(f(cK) - c * f(K)) <= 1e-12 * c * f(K)
    assert norm_weighted_l2(K, 1.0, hs=True) >= norm_weighted_l2(K, 1.0) * (1 - 1e-14)
    assert norm_weighted_l1_linf(K, 1.5) <= norm_l1_to_linf(K)


@given(st.floats(0.0, 60.0), masses)
def test_free_kernel_symmetry(t, m):
    tab = free_kernel_table(t, m, 8)
    for d in range(9):
        assert np.max(np.abs(tab.block(d) - tab.block(-d).T)) < 1e-10


@given(potentials(amp=st.floats(-5, 5)))
def test_potential_text_roundtrip(Q):
    lines = [f"{n} " + " ".join(repr(float(x)) for x in q.ravel()) for n, q in zip(Q.window.sites, Q.entries)]
    assume(all(abs(1 + q[1, 0]) > 1e-12 for q in Q.entries))
    R = parse_potential_text("\n".join(lines))
    assert np.array_equal(R.dense_on(Q.window), Q.entries)
