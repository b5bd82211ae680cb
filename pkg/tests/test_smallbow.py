import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from tnbow import geometry as geo, quat, smallbow as sb
from tnbow.errors import CenterCollision

one = geo.TNConfig(ell=1.0, centers=[[0.0, 0.0, 0.0]])
two = geo.TNConfig(ell=1.0, centers=[[0.0, 0.0, 0.5], [0.3, -0.4, -0.6]])
vec3 = arrays(np.float64, (3,), elements=st.floats(-5, 5, allow_nan=False))


def test_solve_b_on_axis():
    # oracle: eigenvectors of r + sigma_3 z, scaled to the eigenvalue
    for z in (1.0, -1.0):
        M = 1.0 * np.eye(2) + z * quat.PAULI[2]
        w, v = np.linalg.eigh(M)
        expect = np.sqrt(w[-1]) * np.abs(v[:, -1])
        b = sb.solve_b([0, 0, z], [0, 0, 0])
        assert np.allclose(np.abs(b), expect, atol=1e-15)
    assert np.allclose(sb.solve_b([0, 0, 1], [0, 0, 0]), [np.sqrt(2), 0])
    assert np.allclose(sb.solve_b([0, 0, -1], [0, 0, 0]), [0, np.sqrt(2)])


def test_solve_b_at_center():
    with pytest.raises(CenterCollision):
        sb.solve_b([1, 2, 3], [1, 2, 3])


@given(vec3, vec3)
def test_moment_map_closure(t, nu):
    r = np.linalg.norm(t - nu)
    if r < 1e-3:
        return
    b = sb.solve_b(t, nu)
    scale = max(1.0, r)
    assert abs(np.vdot(b, b).real - 2 * r) < 1e-12 * scale
    assert sb.moment_residual(b, t, nu) < 1e-12 * scale
    assert sb.conj_moment_residual(b, t, nu) < 1e-12 * scale


def test_eta_hat_examples():
    assert np.abs(sb.eta_hat([0, 0, 2.0], [0, 0, 0])).max() < 1e-15
    rng = np.random.default_rng(4)
    for _ in range(5):
        t = rng.normal(size=3) * 2
        t[2] = abs(t[2]) + 0.3
        assert sb.eta_hat_identity_residual(t, np.zeros(3)) < 1e-6
        assert sb.eta_hat_identity_residual(t, np.zeros(3), conjugate=True) < 1e-6
        # same one-form as the north-chart monopole potential
        assert np.abs(sb.eta_hat(t, np.zeros(3)) - geo.eta(t, geo.NORTH)).max() < 1e-8


def test_b_identities_k1():
    p = geo.make_point(one, 3.0 * np.array([0.48, 0.6, 0.64]))
    res = sb.b_identity_suite(one, p, 1e-3)
    assert max(res.values()) < 1e-4
    assert {"bcov_conj", "harmonic_conj", "dirac_conj", "ssa_conj"} <= set(res)


def test_b_identities_uniform_in_ell():
    big = geo.TNConfig(ell=50.0, centers=[[0.0, 0.0, 0.0]])
    p = geo.make_point(big, 3.0 * np.array([0.48, 0.6, 0.64]))
    assert max(sb.b_identity_suite(big, p, 1e-3).values()) < 1e-4


def test_quotient_metric_on_axis():
    p = geo.make_point(one, [0, 0, 2.0])
    G = sb.quotient_metric(one, p, 64)
    assert G[3, 3] == pytest.approx(0.8, abs=1e-10)
    assert G[0, 0] == pytest.approx(1.25, abs=1e-10)


def test_quotient_metric_k2():
    rng = np.random.default_rng(9)
    p = geo.random_points(two, rng, 1)[0]
    gt = geo.metric(two, p)
    err = np.abs(sb.quotient_metric(two, p, 256) - gt).max() / np.abs(gt).max()
    assert err < 1e-3


def test_quotient_metric_gauge_invariance():
    rng = np.random.default_rng(2)
    p = geo.random_points(two, rng, 1)[0]
    nodes = sb.s_grid(two, 64)
    a = rng.normal(size=2)
    th = [a[i] * np.sin(3 * x) + x for i, x in enumerate(nodes)]
    dth = [3 * a[i] * np.cos(3 * x) + 1 for i, x in enumerate(nodes)]
    G0 = sb.quotient_metric(two, p, 64)
    G1 = sb.quotient_metric(two, p, 64, gauge=(th, dth))
    assert np.abs(G1 - G0).max() < 1e-10


@given(vec3)
def test_bc_moment(t):
    nu = np.array([0.1, -0.2, 0.3])
    x = t - nu
    r = np.linalg.norm(x)
    if r < 1e-3:
        return
    bc = quat.charge_conjugate(sb.solve_b(t, nu))
    expect = r * np.eye(2) - quat.slash(x)
    assert np.abs(np.outer(bc, bc.conj()) - expect).max() < 1e-12 * max(1.0, r)
