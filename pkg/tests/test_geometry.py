import numpy as np
import pytest
from hypothesis import given, strategies as st

from tnbow import geometry as geo
from tnbow.errors import CenterCollision, OnDiracString

one = geo.TNConfig(ell=1.0, centers=[[0.0, 0.0, 0.0]])
two = geo.TNConfig(ell=1.0, centers=[[0.0, 0.0, 0.5], [0.3, -0.4, -0.6]])
three = geo.TNConfig(ell=0.7, centers=[[0.0, 0.0, 0.0], [1.2, 0.1, 0.3], [-0.4, 0.9, -0.8]])


def test_potential_examples():
    assert geo.potential(one, np.array([1.0, 0, 0])) == 1.5
    cfg = geo.TNConfig(ell=1.0, centers=[[0, 0, 0], [2, 0, 0]])
    assert geo.potential(cfg, np.array([1.0, 0, 0])) == 2.0
    far = geo.TNConfig(ell=0.5, centers=[[0, 0, 0]])
    assert abs(geo.potential(far, np.array([0, 0, 1e9])) - 0.5) < 1e-9


def test_omega_vanishes_on_north_axis():
    p = geo.make_point(one, [0, 0, 2.0])
    assert np.abs(geo.omega(one, p)).max() == 0


def test_domega_equals_star_dV():
    rng = np.random.default_rng(1)
    for p in geo.random_points(two, rng, 5):
        assert geo.domega_residual(two, p, 1e-4) < 1e-6


def test_chart_transition_is_exact():
    # the chart formulas (cos th -+ 1)/2 dphi differ by -dphi = (y dx - x dy)/rho^2
    x = np.array([0.3, -0.7, 0.4])
    diff = geo.eta(x, geo.NORTH) - geo.eta(x, geo.SOUTH)
    rho2 = x[0] ** 2 + x[1] ** 2
    assert np.abs(diff - np.array([x[1], -x[0], 0]) / rho2).max() < 1e-15


def test_coframe_determinant_and_flat_limit():
    p = geo.make_point(two, [0.4, 0.9, 1.3])
    fp = geo.frame_at(two, p)
    assert np.isclose(np.linalg.det(fp.coframe), fp.V, rtol=1e-13)
    flat = geo.TNConfig(ell=2.0)
    c = geo.frame_at(flat, geo.make_point(flat, [1.0, 2.0, 3.0])).coframe
    assert np.allclose(c, np.diag([np.sqrt(2)] * 3 + [1 / np.sqrt(2)]), atol=1e-15)


def test_hodge_star_examples():
    idx = {pair: n for n, pair in enumerate(geo.PAIRS)}
    f = np.zeros(6)
    f[idx[(0, 3)]] = 1.0
    g = np.zeros(6)
    g[idx[(1, 2)]] = 1.0
    assert np.array_equal(geo.hodge_star2(f), g)
    w = geo.sd_forms()
    assert np.abs(geo.hodge_star2(w[1]) - w[1]).max() == 0
    asd = np.zeros(6)
    asd[idx[(0, 1)]] = 1.0
    asd[idx[(2, 3)]] = -1.0
    assert np.array_equal(geo.hodge_star2(asd), -asd)


def test_selfdual_eigenspace_is_spanned_by_w():
    S = np.array([geo.hodge_star2(e) for e in np.eye(6)]).T
    vals, vecs = np.linalg.eigh(S)
    plus = vecs[:, vals > 0]
    w = geo.sd_forms().T
    assert plus.shape[1] == 3
    # the projector onto span{w} equals the +1 projector
    Pw = w @ np.linalg.pinv(w)
    assert np.abs(Pw - plus @ plus.T).max() < 1e-12


def test_clifford_conventions():
    C, G = geo.CLIFFORD, geo.GAMMA
    for a in range(4):
        for b in range(4):
            assert np.allclose(C[a] @ C[b] + C[b] @ C[a], -2 * (a == b) * np.eye(4))
    assert np.allclose(G @ G, np.eye(4))
    for e in np.eye(6):
        assert np.abs(geo.clifford_of_2form(geo.hodge_star2(e)) - G @ geo.clifford_of_2form(e)).max() < 1e-12
    Pm = (np.eye(4) - G) / 2
    Pp = (np.eye(4) + G) / 2
    w = geo.sd_forms()
    for i in range(3):
        assert np.abs(Pm @ geo.clifford_of_2form(w[i]) @ Pm).max() < 1e-12
    I = [geo.clifford_of_2form(w[i]) @ Pp for i in range(3)]
    assert np.abs(I[0] @ I[1] - I[2]).max() < 1e-12


def test_curvature_flat_and_k1():
    flat = geo.TNConfig(ell=1.0)
    r = geo.curvature_checks(flat, geo.make_point(flat, [0.3, 0.2, 0.1]), 1e-3)
    assert r["riemann_asd_residual"] < 1e-8
    p = geo.make_point(one, 2.0 * np.array([0.6, 0.0, 0.8]))
    a = geo.curvature_checks(one, p, 2e-3)
    b = geo.curvature_checks(one, p, 1e-3)
    assert b["riemann_asd_residual"] < 1e-4 and b["sympl_const_residual"] < 1e-4
    # halving h quarters the residual
    assert geo.fd_order(a["riemann_asd_residual"], b["riemann_asd_residual"]) > 1.8


def test_point_validation():
    with pytest.raises(CenterCollision):
        geo.make_point(one, [0, 0, 0])
    with pytest.raises(OnDiracString):
        geo.make_point(one, [0, 0, -1.0], flags=(geo.NORTH,))
    with pytest.raises(CenterCollision):
        geo.TNConfig(centers=[[0, 0, 0], [0, 0, 0]])


def test_fd_order_floor():
    assert geo.fd_order(1e-12, 1e-13, floor=1e-9) == np.inf
    assert np.isclose(geo.fd_order(4e-6, 1e-6), 2.0)


@pytest.mark.parametrize("cfg", [one, two, three], ids=["k1", "k2", "k3"])
@given(seed=st.integers(0, 2**32 - 1))
def test_frame_orthonormal(cfg, seed):
    p = geo.random_points(cfg, np.random.default_rng(seed), 1)[0]
    th = geo.frame_at(cfg, p).coframe
    E = np.linalg.inv(th)
    assert np.abs(E.T @ geo.metric(cfg, p) @ E - np.eye(4)).max() < 1e-12


@given(seed=st.integers(0, 2**32 - 1), south=st.booleans())
def test_domega_both_charts(seed, south):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    d[2] = abs(d[2]) * (-1 if south else 1)
    if abs(d[2]) > 0.95:
        d[2] *= 0.9
    t = 1.5 * d / np.linalg.norm(d)
    flag = geo.SOUTH if south else geo.NORTH
    p = geo.make_point(one, t, flags=(flag,))
    assert geo.domega_residual(one, p, 1e-3) < 1e-5
