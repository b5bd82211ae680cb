import numpy as np
import pytest
from hypothesis import given, strategies as st

from tnbow import abelian as ab, geometry as geo

one = geo.TNConfig(ell=1.0, centers=[[0.0, 0.0, 0.0]])
two = geo.TNConfig(ell=1.0, centers=[[0.0, 0.0, 0.5], [0.3, -0.4, -0.6]])
flat = geo.TNConfig(ell=1.0)


def test_connection_at_zero_s():
    p = geo.make_point(one, [0.4, -0.2, 1.0])
    assert np.abs(ab.connection_a(0.0, one, p)).max() == 0


def test_connection_before_first_point_and_asymptotics():
    s = 0.3
    p = geo.make_point(one, [0.4, -0.2, 1.0])
    V = geo.potential(one, p.t)
    w = geo.omega(one, p)
    assert np.allclose(ab.connection_a(s, one, p), s * np.append(w, 1.0) / V, atol=1e-15)
    far = geo.make_point(one, [3e7, 1e7, 2e7])
    assert abs(ab.connection_a(s, one, far)[3] - s / one.ell) < 1e-8


def test_jump_across_edge():
    eps = 1e-6
    p = geo.make_point(two, [0.9, 0.4, 1.3])
    ps = ab.bow_points(two)[0]
    a0, asig = ab.basis_forms(two, p.t, np.asarray(p.chart_flags))
    jump = ab.connection_a(ps + eps, two, p) - ab.connection_a(ps - eps, two, p)
    # the s a^(0) part moves by 2 eps between the two sample points
    assert np.abs(jump - asig[0] - 2 * eps * a0).max() < 1e-12


def test_flat_curvature_vanishes():
    p = geo.make_point(flat, [0.2, 0.3, 0.4])
    assert np.abs(ab.curvature_asd(0.7, flat, p, 1e-3).F).max() < 1e-12


def test_asd_k1_and_component_pairing():
    rng = np.random.default_rng(5)
    for p in geo.random_points(one, rng, 5):
        c = ab.curvature_asd(0.3, one, p, 1e-3)
        assert c.asd_residual < 1e-4
        F = geo.twoform_to_matrix(c.F)
        assert abs(F[2, 3] + F[0, 1]) < 1e-4


def test_l2_flat_zero():
    R, P = ab.l2_norm_estimate((0.0, np.zeros(0)), flat, 10)
    assert np.all(P == 0)


def test_l2_quadratic_shell_decay():
    R, P = ab.l2_norm_estimate((0.0, np.array([1.0])), one, 40, ab.L2Grid(bump_radius=0.5))
    R = list(R)
    inc20 = P[R.index(20)] - P[R.index(19)]
    inc40 = P[R.index(40)] - P[R.index(39)]
    assert inc40 / inc20 == pytest.approx(0.25, abs=0.02)
    assert ab.shell_decay_rate(np.array(R), P, 20, 40) >= 1.8


def test_l2_total_stable_under_refinement():
    coarse = ab.L2Grid(bump_radius=0.5)
    fine = ab.L2Grid(bump_radius=0.5, n_r=8, n_theta=48, n_phi=48, n_r_bump=48)
    _, P1 = ab.l2_norm_estimate((0.0, np.array([1.0])), one, 20, coarse)
    _, P2 = ab.l2_norm_estimate((0.0, np.array([1.0])), one, 20, fine)
    assert abs(P1[-1] / P2[-1] - 1) < 0.01


@given(seed=st.integers(0, 2**32 - 1))
def test_asd_order_two(seed):
    rng = np.random.default_rng(seed)
    p = geo.random_points(two, rng, 1)[0]
    s = rng.uniform(0.05, 0.45)
    a = ab.curvature_asd(s, two, p, 2e-3).asd_residual
    b = ab.curvature_asd(s, two, p, 1e-3).asd_residual
    assert geo.fd_order(a, b, floor=1e-9) >= 1.8


@given(seed=st.integers(0, 2**32 - 1))
def test_chart_change_leaves_curvature(seed):
    # changing a chart adds an exact form; the fourth-order stencil resolves this to roundoff
    rng = np.random.default_rng(seed)
    p = geo.random_points(one, rng, 1)[0]
    q = geo.ChartPoint(t=p.t, tau=p.tau, chart_flags=(-p.chart_flags[0],))
    a = ab.curvature_asd(0.3, one, p, 1e-3, stencil=4).F
    b = ab.curvature_asd(0.3, one, q, 1e-3, stencil=4).F
    assert np.abs(a - b).max() < 1e-10


@given(seed=st.integers(0, 2**32 - 1), s=st.floats(0.0, 2.0))
def test_curvature_additivity(seed, s):
    rng = np.random.default_rng(seed)
    p = geo.random_points(two, rng, 1)[0]
    h = 1e-3
    total = ab.curvature_asd(s, two, p, h).F
    c0, cs = ab.connection_coeffs(s, two)
    flags = np.asarray(p.chart_flags)
    F0 = geo.matrix_to_twoform(ab.frame_curvature(two, ab.coord_curvature(
        lambda x: ab.basis_forms(two, x, flags)[0], p.t, h), p.t, flags))
    parts = c0 * F0
    for k, c in enumerate(cs):
        Fk = geo.matrix_to_twoform(ab.frame_curvature(two, ab.coord_curvature(
            lambda x, k=k: ab.basis_forms(two, x, flags)[1][k], p.t, h), p.t, flags))
        parts = parts + c * Fk
    assert np.abs(total - parts).max() < 1e-10
