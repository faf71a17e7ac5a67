import numpy as np
import pytest

from discrete_dirac.dispersion import SpectralPoint
from discrete_dirac.free import free_dirac_resolvent_block
from discrete_dirac.lattice import DomainError, LatticeWindow, MatrixPotential, ModelParams, SpinorSequence
from discrete_dirac.lattice import apply_dirac
from discrete_dirac.potentials import single_site
from discrete_dirac.resolvent import (
    EdgeError,
    KernelBlockMatrix,
    LapFailure,
    MemoryGuardError,
    PoleError,
    banded_resolvent,
    lap_probe,
    pc_projector,
    resolvent_block,
    resolvent_kernel,
    tensor_block,
    truncated_operator,
)

Z = MatrixPotential.zero()
R10 = LatticeWindow.symmetric(10)


def test_tensor_block_examples():
    win = LatticeWindow(-3, 3)
    w1 = SpinorSequence(win, np.tile([1.0, 0.0], (7, 1)))
    assert np.array_equal(tensor_block(w1, w1, 0, 1), [[1, 0], [0, 0]])
    th, m = -0.9, 1.0
    p = SpectralPoint.from_theta(th, m)
    b = p.boundary_vector(1)
    wp = SpinorSequence(win, b[None, :] * np.exp(-1j * th * win.sites)[:, None])
    k, n = -1, 2
    expect = np.array([[b[0] * b[0] * np.exp(-1j * th * (k + n)), b[1] * b[0] * np.exp(-1j * th * (k + 1 + n))],
                       [b[0] * b[1] * np.exp(-1j * th * (k + n)), b[1] * b[1] * np.exp(-1j * th * (k + 1 + n))]])
    assert np.max(np.abs(tensor_block(wp, wp, k, n) - expect)) < 1e-15
    with pytest.raises(DomainError):
        tensor_block(wp, wp, 3, 0)


def test_tensor_block_is_green_function(generic_q):
    # for n > k: R(n, k) = [[R(u_n,u_k), R(u_n,v_{k+1})], [R(v_n,u_k), R(v_n,v_{k+1})]]
    from discrete_dirac.jost import jost_minus, jost_plus
    from discrete_dirac.scattering import wronskian

    p = SpectralPoint.from_lambda(0.4 + 0.3j, 1.0)
    win = LatticeWindow(-6, 6)
    wp, wm = jost_plus(p, generic_q, win).w(), jost_minus(p, generic_q, win).w()
    W = wronskian(wp, wm, 0)
    k, n = -2, 3
    ker = resolvent_kernel(p, generic_q, win, win)
    R = ker.as_matrix()
    i = lambda s, c: 2 * (s - win.n_min) + c
    expect = np.array([[R[i(n, 0), i(k, 0)], R[i(n, 0), i(k + 1, 1)]],
                       [R[i(n, 1), i(k, 0)], R[i(n, 1), i(k + 1, 1)]]])
    assert np.max(np.abs(tensor_block(wm, wp, k, n) / W - expect)) < 1e-14


@pytest.mark.parametrize("lam", [3j, 0.5, -0.5, 1.7 + 0.2j, -1.5 - 0.3j])
def test_free_reduction(lam):
    p = SpectralPoint.from_lambda(lam, 1.0)
    for n, k in ((0, 0), (3, -2), (-4, 1)):
        assert np.max(np.abs(resolvent_block(p, Z, n, k) - free_dirac_resolvent_block(p, n, k))) < 1e-12


@pytest.mark.parametrize("lam", [3j, 0.5, -0.5])
def test_dense_agreement(generic_q, lam):
    op = truncated_operator(1.0, generic_q, 200)
    p = SpectralPoint.from_lambda(lam, 1.0)
    ker = resolvent_kernel(p, generic_q, R10, R10)
    assert ker.max_abs_diff(op.solve(lam, R10, R10)) < 1e-8
    assert ker.max_abs_diff(banded_resolvent(1.0, generic_q, lam, R10, R10, 200)) < 1e-8


def test_defect_identity(multi_q):
    lam = 0.3 + 1.1j
    p = SpectralPoint.from_lambda(lam, 1.0)
    win = LatticeWindow.symmetric(40)
    ker = resolvent_kernel(p, multi_q, win, LatticeWindow(1, 1))
    mat = ker.as_matrix()
    for col in range(2):
        w = SpinorSequence(win, mat[:, col].reshape(-1, 2))
        out = apply_dirac(ModelParams(1.0), multi_q, w)
        target = np.zeros_like(out.values)
        target[out.window.index(1), col] = 1.0
        assert np.max(np.abs(out.values - lam * w.values[1:-1] - target)) < 1e-9


def test_symmetry_and_resolvent_identity(multi_q):
    a, b = 0.2 + 1.5j, -0.7 + 2.0j
    big = LatticeWindow.symmetric(70)
    Ra = resolvent_kernel(SpectralPoint.from_lambda(a, 1.0), multi_q, big, big)
    Rb = resolvent_kernel(SpectralPoint.from_lambda(b, 1.0), multi_q, big, big)
    A, B = Ra.as_matrix(), Rb.as_matrix()
    assert np.max(np.abs(A - A.T)) < 1e-13
    inner = slice(2 * 60, 2 * 81)  # |n|, |k| <= 10
    lhs = (A - B)[inner, inner]
    rhs = ((a - b) * A @ B)[inner, inner]
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_pole_and_edge_errors(generic_q):
    op = truncated_operator(1.0, generic_q, 100)
    vals, _ = op.bound_states
    assert vals.size == 2
    for e in vals:
        with pytest.raises(PoleError):
            resolvent_block(SpectralPoint.from_lambda(e, 1.0), generic_q, 0, 0)
    with pytest.raises(EdgeError):
        resolvent_block(SpectralPoint.from_lambda(1.0, 1.0, "+"), generic_q, 0, 0)


def test_truncated_free_spectrum():
    op = truncated_operator(1.0, Z, 400)
    ev = op.eigenvalues
    top = np.sqrt(5.0)
    inside = ((np.abs(ev) >= 1.0 - 1e-3) & (np.abs(ev) <= top + 1e-3))
    assert inside.all()
    assert not op.bound_mask.any()
    assert np.min(np.abs(ev)) >= 1 - 1e-3
    assert np.max(np.abs(op.matrix - op.matrix.T)) == 0


def test_strong_site_bound_state():
    op = truncated_operator(1.0, single_site(0, [5.0, 0, 0, 0]), 200)
    vals, _ = op.bound_states
    assert vals.size >= 1
    idx = np.flatnonzero(op.bound_mask)
    for i in idx:
        assert op.localization(i, 50) < 1e-8
    assert set(op.classification) == {"bound", "continuum"}


def test_spectral_symmetry_observation():
    # recorded behaviour: diagonal-free potentials keep the spectrum symmetric,
    # a diagonal entry breaks it
    off = MatrixPotential.from_sites({0: [[0, 0.7], [0.7, 0]], 1: [[0, -0.4], [-0.4, 0]]})
    ev = np.sort(truncated_operator(1.0, off, 60).eigenvalues)
    assert np.max(np.abs(ev + ev[::-1])) < 1e-12
    diag = MatrixPotential.from_sites({0: [[0.3, 0.7], [0.7, 0.2]]})
    ev = np.sort(truncated_operator(1.0, diag, 60).eigenvalues)
    assert np.max(np.abs(ev + ev[::-1])) > 1e-3


def test_guards():
    with pytest.raises(MemoryGuardError):
        truncated_operator(1.0, Z, 3000)
    with pytest.raises(DomainError):
        truncated_operator(1.0, single_site(30, [1, 0, 0, 0]), 40)


def test_pc_projector(generic_q):
    op = truncated_operator(1.0, generic_q, 80)
    P = pc_projector(op)
    assert np.max(np.abs(P @ P - P)) < 1e-12
    assert np.max(np.abs(P @ op.matrix - op.matrix @ P)) < 1e-12
    assert abs(np.trace(P) - (P.shape[0] - 2)) < 1e-10


def test_kernel_block_matrix_roundtrip():
    rng = np.random.default_rng(0)
    n, k = LatticeWindow(-2, 1), LatticeWindow(3, 5)
    mat = rng.normal(size=(8, 6))
    ker = KernelBlockMatrix.from_matrix(0.0, n, k, mat)
    assert np.array_equal(ker.as_matrix(), mat)
    assert np.array_equal(ker.block(-1, 4), mat[2:4, 2:4])
    sub = ker.restrict(LatticeWindow(0, 1), LatticeWindow(4, 4))
    assert np.array_equal(sub.block(0, 4), ker.block(0, 4))
    with pytest.raises(ValueError):
        KernelBlockMatrix(0.0, n, k, np.zeros((2, 2, 2, 2)))


@pytest.mark.parametrize("lam", [1.5, -1.5, 2.0])
def test_lap_free_sigma2(lam):
    tab = lap_probe(lam, "+", [1e-1, 1e-2, 1e-3, 1e-4], 2.0, Z, 1.0)
    assert tab.monotone and tab.distances[-1] < 1e-3


def test_lap_free_sigma1_monotone():
    # the unweighted-enough sigma = 1 distance decays but only like sqrt(eps)
    tab = lap_probe(1.5, "+", [1e-1, 1e-2, 1e-3, 1e-4], 1.0, Z, 1.0)
    assert tab.monotone
    d = tab.distances
    assert 0.1 < d[-1] / d[-2] < 0.6


def test_lap_compact_q(generic_q):
    tab = lap_probe(1.5, "-", [1e-1, 1e-2, 1e-3, 1e-4], 2.0, generic_q, 1.0)
    assert tab.monotone and tab.distances[-1] < 1e-3
    assert len(tab.lines()) == 4


def test_lap_errors():
    with pytest.raises(LapFailure):
        lap_probe(1.5, "+", [1e-3, 1e-1], 2.0, Z, 1.0)
    assert not lap_probe(1.5, "+", [1e-3, 1e-1], 2.0, Z, 1.0, strict=False).monotone
    with pytest.raises(DomainError):
        lap_probe(1.01, "+", [1e-1], 2.0, Z, 1.0)
    with pytest.raises(ValueError):
        lap_probe(1.5, "+", [1e-1], 0.5, Z, 1.0)


def test_near_edge_bound_state_is_tagged():
    # a bound state 5e-3 below -sqrt(5) sits inside the 10/N margin; its
    # eigenvector is localized, so it still counts as bound
    Q = MatrixPotential.from_sites({-1: [[0.3, 0.2], [0.2, -0.1]], 0: [[-0.4, 0.1], [0.1, 0.5]],
                                    2: [[0.2, -0.3], [-0.3, 0.1]]})
    op = truncated_operator(1.0, Q, 200)
    vals, _ = op.bound_states
    edge = [v for v in vals if abs(v + np.sqrt(5)) < op.edge_margin]
    assert len(edge) == 1 and edge[0] < -np.sqrt(5)
    # the Jost side agrees: it is a pole of the resolvent
    with pytest.raises(PoleError):
        resolvent_block(SpectralPoint.from_lambda(edge[0], 1.0), Q, 0, 0)


WEAK = MatrixPotential.from_sites({0: [[0.3, 0.1], [0.1, -0.2]], 2: [[0.1, 0.0], [0.0, 0.1]]})


def _weak_root():
    # zero of the (real) gap Wronskian just above -m, found independently by brentq
    from scipy.optimize import brentq
    from discrete_dirac.resolvent import _link_wronskian

    def W(lam):
        p = SpectralPoint.from_lambda(lam, 1.0)
        return _link_wronskian([p.theta], 1.0, WEAK, p.branch, [lam])[0][0].real

    return brentq(W, -1 + 1e-9, -1 + 1e-3, xtol=1e-15)


def test_weakly_bound_state_certified_by_wronskian():
    # decay rate ~0.005 per site: the eigenvector fills the window, so only the
    # Wronskian zero identifies it
    root = _weak_root()
    assert 1e-6 < root + 1 < 1e-4
    from discrete_dirac.propagator import propagator_pc_oracle, propagator_pc_spectral
    rng = LatticeWindow.symmetric(2)
    exact = propagator_pc_spectral(20.0, WEAK, 1.0, rng, rng).kernel
    diffs = []
    for N in (200, 400, 800):
        op = truncated_operator(1.0, WEAK, N)
        gap = [v for v in op.bound_states[0] if abs(v) < 1]
        assert len(gap) == 1
        diffs.append(propagator_pc_oracle(20.0, op, rng).kernel.max_abs_diff(exact))
    assert abs(gap[0] - root) < 1e-6
    assert diffs[0] > diffs[1] > diffs[2] and diffs[2] < 1e-4


def test_window_too_small_for_bound_state_warns():
    op = truncated_operator(1.0, WEAK, 100)
    with pytest.warns(RuntimeWarning, match="too small"):
        op.bound_mask
