import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sjquant.errors import DimensionMismatch, SingularE, SingularOmega
from sjquant.kahler import PauliJordanOperator, polar_decompose
from sjquant.sj import (
    Covector,
    QuasiFreeState,
    complex_coordinates,
    domination_gap,
    purity_check,
    sj_operator,
    solve_sj_axioms,
    state_on_weyl,
    state_positivity_gram,
    weyl_gram_matrix,
)

from conftest import random_pauli_jordan

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])


@pytest.fixture
def decomposition(rng):
    return polar_decompose(random_pauli_jordan(rng, 6))


def test_rotation_sj_operator():
    k = polar_decompose(PauliJordanOperator.from_matrix(ROTATION))
    a = sj_operator(k)
    np.testing.assert_allclose(a.matrix, 0.5 * np.array([[1, 1j], [-1j, 1]]), atol=1e-15)
    np.testing.assert_allclose(sorted(a.eigenvalues), [0.0, 1.0], atol=1e-15)


def test_axioms_hold(decomposition):
    a = sj_operator(decomposition)
    r = a.axiom_residuals(decomposition.operator)
    assert r["positivity"] >= -1e-10
    assert r["commutator"] <= 1e-12 * np.linalg.norm(decomposition.operator.matrix, 2)
    assert r["purity"] <= 1e-10 * np.linalg.norm(a.matrix, 2) ** 2
    assert a.hermiticity_residual() < 1e-12


def test_solver_matches_closed_form(decomposition):
    a = sj_operator(decomposition).matrix
    b = solve_sj_axioms(decomposition.operator).matrix
    assert np.linalg.norm(a - b, 2) < 1e-10


def test_solver_rejects_singular_e():
    e = np.zeros((4, 4))
    e[0, 1], e[1, 0] = 1.0, -1.0
    with pytest.raises(SingularE):
        solve_sj_axioms(PauliJordanOperator.from_matrix(e))


def test_covector_bracket_matches_ambient_bracket(decomposition, rng):
    s = QuasiFreeState.sorkin_johnston(decomposition, 1.0)
    for _ in range(5):
        p = Covector.from_real(rng.standard_normal(6), decomposition)
        q = Covector.from_real(rng.standard_normal(6), decomposition)
        assert p.bracket(q) == pytest.approx(s.bracket(p.real, q.real), rel=1e-10, abs=1e-12)
        assert s.covariance(p.real) == pytest.approx(2 * p.norm2, rel=1e-12)


def test_covector_round_trip(decomposition, rng):
    phi = rng.standard_normal(6)
    p = Covector.from_real(phi, decomposition)
    q = Covector.from_components(p.components, decomposition)
    np.testing.assert_allclose(q.real, phi, atol=1e-12)


def test_covector_evaluates_like_the_ambient_pairing(decomposition, rng):
    phi, v = rng.standard_normal(6), rng.standard_normal(6)
    z = complex_coordinates(decomposition, v)
    assert Covector.from_real(phi, decomposition)(z) == pytest.approx(phi @ v, rel=1e-12)


def test_complex_coordinates_are_canonical(decomposition):
    # {z^i, conj z^j} = i delta_ij with the Poisson bivector E G^{-1}
    n = decomposition.modes
    dim = decomposition.operator.dim
    # z^i is the linear functional v -> sqrt(theta/2) (e_i + i f_i)^T G v
    g = decomposition.operator.space.gram
    zf = (np.sqrt(0.5 * decomposition.thetas) * (g @ (decomposition.mode_re + 1j * decomposition.mode_im))).T
    p = decomposition.operator.poisson
    br = zf @ p @ zf.conj().T
    np.testing.assert_allclose(br, 1j * np.eye(n), atol=1e-12)
    assert zf.shape == (n, dim)


def test_state_on_weyl_formula(decomposition, rng):
    s = QuasiFreeState.sorkin_johnston(decomposition, 0.5)
    p = Covector.from_real(rng.standard_normal(6), decomposition)
    assert state_on_weyl(p.real, s) == pytest.approx(np.exp(-0.25 * p.norm2), rel=1e-12)


def test_purity_and_domination(decomposition):
    s = QuasiFreeState.sorkin_johnston(decomposition, 1.0)
    rep = purity_check(s)
    assert rep.is_pure and rep.dominated and rep.positive
    assert rep.norm_theta == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(s.theta_op, decomposition.j, atol=1e-10)
    half = purity_check(s.scaled(2.0))
    assert half.norm_theta == pytest.approx(0.5, abs=1e-10)
    assert not half.is_pure and half.dominated and not half.positive
    over = purity_check(s.scaled(0.5))
    assert not over.dominated and over.positive


def test_domination_gap_sign(decomposition, rng):
    s = QuasiFreeState.sorkin_johnston(decomposition, 1.0)
    v1, v2 = rng.standard_normal(6), rng.standard_normal(6)
    assert domination_gap(s, v1, v2) >= -1e-10
    assert domination_gap(s.scaled(0.5), v1, decomposition.j @ v1) < 0


def test_purity_errors(decomposition):
    s = QuasiFreeState.sorkin_johnston(decomposition, 1.0)
    with pytest.raises(SingularOmega):
        purity_check(s, omega=np.zeros((6, 6)))
    with pytest.raises(DimensionMismatch):
        purity_check(s, omega=np.zeros((4, 4)))


def test_gram_matrix_hermitian_and_unit_diagonal(decomposition, rng):
    s = QuasiFreeState.sorkin_johnston(decomposition, 1.0)
    phis = [rng.standard_normal(6) for _ in range(5)]
    m = weyl_gram_matrix(phis, s)
    np.testing.assert_allclose(m, m.conj().T, atol=1e-14)
    np.testing.assert_allclose(np.diag(m), 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 16), st.floats(0.01, 2.0), st.integers(0, 2**32 - 1))
def test_state_positivity_property(count, hbar, seed):
    r = np.random.default_rng(seed)
    k = polar_decompose(random_pauli_jordan(r, 4))
    s = QuasiFreeState.sorkin_johnston(k, hbar)
    assert state_positivity_gram([r.standard_normal(4) for _ in range(count)], s) >= -1e-10


PROBES = [np.array([t, 0.0]) for t in np.linspace(0, 1.5, 4)] + [np.array([0.0, t]) for t in np.linspace(0.2, 1.5, 4)]


@pytest.mark.parametrize("factor, positive", [(0.25, True), (0.5, True), (1.0, True), (2.0, False), (4.0, False)])
def test_positive_flag_agrees_with_gram_test(factor, positive):
    # scaling eta_G up shrinks the covariance below the bracket, which breaks positivity
    k = polar_decompose(PauliJordanOperator.from_matrix(ROTATION))
    s = QuasiFreeState.sorkin_johnston(k, 1.0).scaled(factor)
    assert purity_check(s).positive is positive
    gram_min = state_positivity_gram(PROBES, s)
    assert (gram_min >= -1e-8) is positive


def test_domination_gap_on_crafted_pair():
    # eta_G = diag(1, 1/4) against omega = rotation: |omega(e1, e2)|^2 = 1 > 1/4
    k = polar_decompose(PauliJordanOperator.from_matrix(ROTATION))
    omega = QuasiFreeState.sorkin_johnston(k, 1.0).omega
    s = QuasiFreeState(1.0, np.diag([1.0, 4.0]), omega)
    assert domination_gap(s, [1.0, 0.0], [0.0, 1.0]) < 0
    assert not purity_check(s).dominated
