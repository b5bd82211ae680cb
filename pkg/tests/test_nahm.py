import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import unitary_group

from tnbow import nahm, quat, smallbow
from tnbow.errors import GridMismatch, PoleEncountered, RankMismatch
from tnbow.nahm import BowDataGrid, BowRep, BowTangent, Segment

PAULI = quat.PAULI


def _herm(rng, n, scale=0.5):
    X = rng.normal(size=(3, n, n)) + 1j * rng.normal(size=(3, n, n))
    X = X + np.conj(np.swapaxes(X, -1, -2))
    return scale * X / np.linalg.norm(X)


def test_rhs_commuting_is_zero():
    T = [np.diag([1.0, 2.0, 3.0]).astype(complex) * c for c in (1, -2, 0.5)]
    assert np.abs(np.array(nahm.nahm_rhs(np.zeros((3, 3)), *T))).max() == 0


def test_pole_solution_satisfies_equation():
    # d/ds (-sigma_j / 2u) = sigma_j / 2u^2 at u = 1, against the rhs
    T = nahm.pole_solution(1.0)
    d = np.array(nahm.nahm_rhs(np.zeros((2, 2)), *T))
    assert np.abs(d - PAULI / 2).max() < 1e-12


def test_rhs_gauge_covariant(rng):
    T = _herm(rng, 3)
    U = unitary_group.rvs(3, random_state=1)
    a = np.array(nahm.nahm_rhs(np.zeros((3, 3)), *T))
    b = np.array(nahm.nahm_rhs(np.zeros((3, 3)), *(U @ T @ U.conj().T)))
    assert np.abs(U @ a @ U.conj().T - b).max() < 1e-12


def test_zero_data_stays_zero():
    seg = nahm.integrate_nahm(np.linspace(0, 1, 5), np.zeros((3, 2, 2)))
    assert np.abs(seg.T).max() == 0


@pytest.mark.parametrize("n", [2, 3])
def test_pole_reproduced(n):
    rho = nahm.su2_irrep(n)
    u = np.linspace(1.0, 0.05, 20)
    seg = nahm.integrate_nahm(u, nahm.pole_solution(1.0, rho))
    for i, x in enumerate(u):
        ref = nahm.pole_solution(x, rho)
        assert np.abs(seg.T[i, 1:] - ref).max() / np.abs(ref).max() < 1e-6
        assert np.abs(nahm.spectral_invariants(*seg.T[i, 1:])).max() < 1e-10


def test_pole_detected():
    with pytest.raises(PoleEncountered) as info:
        nahm.integrate_nahm(np.linspace(1.0, -0.5, 4), nahm.pole_solution(1.0))
    assert abs(info.value.s_pole) < 0.1


def test_euler_top_invariants():
    rho = nahm.su2_irrep(3)
    X = np.array([f * r for f, r in zip((0.3, -0.2, 0.25), rho)])
    seg = nahm.integrate_nahm(np.linspace(0, 1, 11), X, max_step=0.01)
    inv = np.array([nahm.spectral_invariants(*seg.T[i, 1:]) for i in range(11)])
    assert np.abs(inv - inv[0]).max() < 1e-8


def test_integration_order_four(rng):
    X = _herm(rng, 3, 1.0)
    s = np.array([0.0, 1.0])
    ref = nahm.integrate_nahm(s, X, max_step=1e-3).T[-1]
    e1 = np.abs(nahm.integrate_nahm(s, X, max_step=0.04).T[-1] - ref).max()
    e2 = np.abs(nahm.integrate_nahm(s, X, max_step=0.02).T[-1] - ref).max()
    assert e1 / e2 >= 8


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4))
def test_hermiticity_and_invariants(seed, n):
    rng = np.random.default_rng(seed)
    seg = nahm.integrate_nahm(np.linspace(0, 1, 6), _herm(rng, n), max_step=0.01)
    T = seg.T[:, 1:]
    assert np.abs(T - np.conj(np.swapaxes(T, -1, -2))).max() < 1e-12
    inv = np.array([nahm.spectral_invariants(*seg.T[i, 1:]) for i in range(6)])
    assert np.abs(inv - inv[0]).max() < 1e-8


@given(seed=st.integers(0, 2**32 - 1))
def test_gauge_equivariance(seed):
    rng = np.random.default_rng(seed)
    X = _herm(rng, 3)
    U = unitary_group.rvs(3, random_state=seed % 2**31)
    a = nahm.integrate_nahm(np.linspace(0, 1, 4), X).T
    b = nahm.integrate_nahm(np.linspace(0, 1, 4), U @ X @ U.conj().T).T
    assert np.abs(U @ a @ U.conj().T - b).max() < 1e-10


def _two_sided(Ta, Tb):
    z = np.zeros((1,) + Ta.shape[1:])
    segA = Segment(np.array([0.0, 0.5]), np.stack([np.zeros((4,) + Ta.shape[1:]), np.concatenate([z, Ta])]))
    segB = Segment(np.array([0.5, 1.0]), np.stack([np.concatenate([z, Tb]), np.zeros((4,) + Ta.shape[1:])]))
    return segA, segB


def test_jump_zero_when_continuous(rng):
    Ta = _herm(rng, 2)
    segA, segB = _two_sided(Ta, Ta)
    rep = BowRep(np.array([1.0]), lam0=[0.5])
    out = nahm.moment_residuals(rep, BowDataGrid([segA, segB], Q={0.5: np.zeros(4)}), [[0, 0, 0]])
    assert out["jump"][0.5] == 0


@given(seed=st.integers(0, 2**32 - 1))
def test_synthetic_jump(seed):
    rng = np.random.default_rng(seed)
    Q = rng.normal(size=4) + 1j * rng.normal(size=4)
    Ta = _herm(rng, 2)
    segA, segB = _two_sided(Ta, Ta + nahm.jump_from_Q(Q))
    rep = BowRep(np.array([1.0]), lam0=[0.5])
    out = nahm.moment_residuals(rep, BowDataGrid([segA, segB], Q={0.5: Q}), [[0, 0, 0]])
    assert out["jump"][0.5] < 1e-12 * max(1.0, np.abs(Q).max() ** 2)


def test_rank_mismatch():
    segA = Segment(np.array([0.0, 0.5]), np.zeros((2, 4, 1, 1)))
    segB = Segment(np.array([0.5, 1.0]), np.zeros((2, 4, 2, 2)))
    with pytest.raises(RankMismatch):
        nahm.moment_residuals(BowRep(np.array([1.0]), lam0=[0.5]), BowDataGrid([segA, segB]), [[0, 0, 0]])


@given(seed=st.integers(0, 2**32 - 1))
def test_synthetic_endpoint(seed):
    rng = np.random.default_rng(seed)
    t, nu = rng.normal(size=3), rng.normal(size=3)
    b = smallbow.solve_b(t, nu)
    T = np.zeros((4, 1, 1), complex)
    T[1:, 0, 0] = t
    seg = Segment(np.array([0.0, 1.0]), np.stack([T, T]))
    r = nahm.moment_residuals(BowRep(np.array([1.0])), BowDataGrid([seg], B={0: b.reshape(2, 1)}), [nu])
    assert max(r["p_minus"][0], r["p_plus"][0]) < 1e-10


def test_affine_norm_examples():
    s = np.linspace(0, 2.0, 7)
    zero = BowTangent([Segment(s, np.zeros((7, 4, 2, 2)))])
    assert nahm.affine_norm(zero) == 0
    B = np.zeros((2, 1), complex)
    B[0, 0] = 1.0
    assert nahm.affine_norm(BowTangent([Segment(s, np.zeros((7, 4, 1, 1)))], dB={0: B})) == 1.0
    T = np.zeros((7, 4, 2, 2), complex)
    T[:, 1] = 0.3 * np.eye(2)
    # c^2 L tr(1) for constant dT^1 = c 1 on an interval of length L
    assert abs(nahm.affine_norm(BowTangent([Segment(s, T)])) - 0.09 * 2.0 * 2) < 1e-10
    with pytest.raises(GridMismatch):
        nahm.affine_norm(BowTangent([Segment(s, T)]), BowDataGrid([Segment(s[:-1], T[:-1])]))
