import numpy as np
import pytest

from discrete_dirac.dispersion import g
from discrete_dirac.lattice import (
    DomainError,
    LatticeWindow,
    MatrixPotential,
    ModelParams,
    PotentialError,
    SpinorSequence,
    apply_dirac,
    dirac_matrix,
    weighted_norm,
)


def test_model_params_edges():
    p = ModelParams(1.5)
    lo, inner, m, hi = p.gap_edges
    assert (inner, m) == (-1.5, 1.5)
    for e in p.gap_edges:
        assert e * e - 1.5**2 == pytest.approx(0.0, abs=1e-15) or e * e - 1.5**2 == pytest.approx(4.0, rel=1e-15)
    with pytest.raises(ValueError):
        ModelParams(0.0)
    with pytest.raises(ValueError):
        ModelParams(float("nan"))
    assert p.distance_to_bands(2.0) == 0.0
    assert p.distance_to_bands(0.5) == pytest.approx(1.0)
    assert p.distance_to_bands(-3.0) == pytest.approx(3.0 - hi)


def test_window_basics():
    w = LatticeWindow(-2, 3)
    assert w.size == 6 and 0 in w and 4 not in w
    assert list(w.sites) == [-2, -1, 0, 1, 2, 3]
    assert w.index(0) == 2
    with pytest.raises(DomainError):
        w.index(7)
    with pytest.raises(ValueError):
        LatticeWindow(1, 0)
    assert w.union(LatticeWindow(5, 6)) == LatticeWindow(-2, 6)
    assert w.expand(1, 2) == LatticeWindow(-3, 5)


def test_spinor_sequence_immutable_and_shape():
    w = LatticeWindow(0, 2)
    s = SpinorSequence(w, np.ones((3, 2)))
    with pytest.raises(ValueError):
        s.values[0, 0] = 2.0
    with pytest.raises(ValueError):
        SpinorSequence(w, np.ones((4, 2)))
    assert s.restrict(LatticeWindow(1, 2)).window.size == 2


def test_weighted_norm_examples():
    assert weighted_norm([1.0], np.inf, 0.0, LatticeWindow(0, 0)) == 1.0
    assert weighted_norm([1.0, 1.0], 1, 1.0, LatticeWindow(0, 1)) == pytest.approx(3.0)
    # brute force over the five sites
    brute = np.sqrt(sum((1 + abs(n)) ** 2 for n in range(-2, 3)))
    assert brute == pytest.approx(np.sqrt(27))
    assert weighted_norm(np.ones(5), 2, 1.0, LatticeWindow(-2, 2)) == pytest.approx(np.sqrt(27))
    assert weighted_norm([], 2, 1.0) == 0.0
    x = np.random.default_rng(1).normal(size=17)
    assert weighted_norm(x, 2, 0.0) == pytest.approx(np.linalg.norm(x))
    with pytest.raises(ValueError):
        weighted_norm(x, 3, 0.0)


def test_potential_validation():
    with pytest.raises(PotentialError, match="site 4"):
        MatrixPotential(LatticeWindow(3, 4), np.array([[[0, 0], [0, 0]], [[0, 0.1], [0.2, 0]]]))
    with pytest.raises(PotentialError, match="singular"):
        MatrixPotential.from_sites({2: [[0, -1], [-1, 0]]})
    with pytest.raises(PotentialError, match="non-finite"):
        MatrixPotential.from_sites({0: [[np.inf, 0], [0, 0]]})
    q = MatrixPotential.unchecked(LatticeWindow(0, 0), np.array([[[0, 0.1], [0.3, 0]]]))
    assert q.entries[0, 0, 1] != q.entries[0, 1, 0]


def test_potential_accessors():
    Q = MatrixPotential.from_sites({-1: [[1, 0], [0, 0]], 2: [[0, 0.5], [0.5, 0]]})
    assert Q.support == LatticeWindow(-1, 2)
    assert np.all(Q.at(10) == 0)
    assert Q.component_norm(1, 1, 1, 1.0) == pytest.approx(2.0)
    assert Q.weighted_l1(1.0) == pytest.approx(2.0)
    assert Q.component_norm(1, 2, 1, 1.0) == pytest.approx(1.5)
    r = Q.reflected()
    assert np.all(r.at(1) == Q.at(-1)) and np.all(r.at(-2) == Q.at(2))
    assert MatrixPotential.zero().support is None and MatrixPotential.zero().is_zero
    d = Q.dense_on(LatticeWindow(-3, 0))
    assert d.shape == (4, 2, 2) and d[2, 0, 0] == 1.0


def test_apply_dirac_constant_edge_solution():
    m = 1.3
    w = SpinorSequence(LatticeWindow(-5, 5), np.tile([1.0, 0.0], (11, 1)))
    dw = apply_dirac(ModelParams(m), MatrixPotential.zero(), w)
    assert np.allclose(dw.values, m * w.values[1:-1], atol=1e-15)


def test_apply_dirac_pi_edge_solution():
    m = 0.7
    mt = m + np.sqrt(m * m + 4)
    n = np.arange(-6, 7)
    vals = np.column_stack([(-1.0) ** n, (-1.0) ** n * 2 / mt])
    w = SpinorSequence(LatticeWindow(-6, 6), vals)
    dw = apply_dirac(ModelParams(m), MatrixPotential.zero(), w)
    assert np.allclose(dw.values, np.sqrt(m * m + 4) * vals[1:-1], atol=1e-14)


def test_apply_dirac_plane_wave():
    m, th = 1.0, -np.pi / 2
    lam = g(th, m)
    assert lam == pytest.approx(np.sqrt(3))
    alpha = (1 - np.exp(1j * th)) / (m + lam)
    n = np.arange(-4, 5)
    vals = np.column_stack([np.ones(9), alpha * np.ones(9)]) * np.exp(-1j * th * n)[:, None]
    w = SpinorSequence(LatticeWindow(-4, 4), vals)
    dw = apply_dirac(ModelParams(m), MatrixPotential.zero(), w)
    assert np.allclose(dw.values, lam * vals[1:-1], atol=1e-14)


def test_apply_dirac_needs_room():
    with pytest.raises(DomainError):
        apply_dirac(ModelParams(1.0), MatrixPotential.zero(), SpinorSequence(LatticeWindow(0, 1), np.ones((2, 2))))


def test_dirac_matrix_symmetric_and_matches_apply(multi_q):
    win = LatticeWindow(-6, 6)
    mat = dirac_matrix(ModelParams(1.0), multi_q, win)
    assert np.array_equal(mat, mat.T)
    x = np.random.default_rng(3).normal(size=(win.size, 2)) + 0j
    dense = (mat @ x.ravel()).reshape(-1, 2)
    direct = apply_dirac(ModelParams(1.0), multi_q, SpinorSequence(win, x))
    assert np.allclose(dense[1:-1], direct.values, atol=1e-14)
