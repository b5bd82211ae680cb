import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tnbow import geometry as geo
from tnbow.dirac import (Bundle, GridDomain, KernelScan, build_dirac, commutator_checks, down_extract,
                         geomprelim_check, identity_sweep, kernel_scan, markings, scan_windows,
                         selfdual_perturbation, small_singular_values, weitzenbock_check)
from tnbow.dirac.identities import large_gauge_check
from tnbow.dirac.kernel import _expectation
from tnbow.errors import RankNotOne
from tnbow.suites import dirac_identity_configs

flat = geo.TNConfig(ell=1.0)
one = geo.TNConfig(ell=1.0, centers=[[0.0, 0.0, 0.3]])


def test_adjoint_exact():
    D = build_dirac(one, 0.35, Bundle(lam=0.4, m=(1.0,)), GridDomain(R_max=1.2, h=0.3, center=(0.2, 0.1, 1.5)))
    assert abs(D.Dminus - D.Dplus.conj().T).max() == 0


def test_flat_ball_gap():
    g = GridDomain(R_max=1.0, h=0.25)
    D = build_dirac(flat, 0.0, Bundle(), g)
    sv = np.linalg.svd(D.Dplus[:, D.interior_cols].toarray(), compute_uv=False)
    assert sv.min() > 0.1 / g.R_max
    # shift-invert agrees with the dense solve
    small, _ = small_singular_values(D.Dplus[:, D.interior_cols], 3)
    assert np.allclose(small, np.sort(sv)[:3], rtol=1e-8)
    assert np.all(small >= 0)


@pytest.mark.parametrize("cfg, grid, bundle", [
    (flat, GridDomain(R_max=1.0, h=0.25), Bundle(lam=0.2)),
    (one, GridDomain(R_max=1.2, h=0.3, center=(0.2, 0.1, 1.5)), Bundle(lam=0.4, m=(1.0,))),
    (one, GridDomain(R_max=3.0, h=0.5, layout="parabolic", n=1), Bundle(lam=0.4, m=(1.0,))),
], ids=["flat", "k1-cartesian", "k1-parabolic"])
def test_large_gauge_periodicity(cfg, grid, bundle):
    assert large_gauge_check(cfg, 0.35, grid, bundle) < 1e-8


def test_constant_twist_weitzenbock_exact():
    g = GridDomain(R_max=1.5, h=0.1, wilson=0.0)
    assert weitzenbock_check(flat, 0.3, g, Bundle(lam=0.4)) < 1e-3


@pytest.mark.parametrize("tag", ["flat", "k1"])
def test_identity_orders(tag):
    cfgs = {c[0]: c[1:] for c in dirac_identity_configs()}
    tn, s, grid, bundle = cfgs[tag]
    sw = identity_sweep(tn, s, grid, (0.2, 0.1, 0.05), bundle)
    for key, orders in sw["orders"].items():
        assert min(orders) >= 0.9, (key, orders)
    at01 = sw["residuals"][1]
    assert at01["res_t"] < 0.05
    assert at01["res_s"] < 1e-3
    # the residual shrinks with h
    assert sw["residuals"][2]["weitzenbock"] < sw["residuals"][0]["weitzenbock"]


def test_res_s_small_delta():
    tn, s, grid, bundle = dirac_identity_configs()[1][1:]
    assert commutator_checks(tn, s, grid, bundle, delta=1e-4)["res_s"] < 1e-3


def test_geomprelim_k1():
    tn, s, grid, bundle = dirac_identity_configs()[1][1:]
    assert geomprelim_check(tn, s, grid, bundle) < 1e-8


def test_selfdual_control_fails_weitzenbock():
    b = Bundle(lam=0.4, extra=selfdual_perturbation(flat, 0.5, sign=1))
    for h in (0.1, 0.05):
        assert weitzenbock_check(flat, 0.3, GridDomain(R_max=1.5, h=h, wilson=0.0), b) > 0.1


def test_markings_and_windows():
    tn = geo.TNConfig(ell=30.0, centers=[[0, 0, 0.7]])
    b = Bundle(lam=15.0, m=(1.0,))
    assert np.allclose(markings(tn, b), [0.0, 15.0])
    s = scan_windows(tn, b, 3)
    assert np.allclose(s, [0.6, 7.5, 14.4, 15.6, 22.5, 29.4])


def test_scan_rejects_points_on_markings():
    with pytest.raises(ValueError):
        kernel_scan(flat, Bundle(lam=0.5), [0.5], GridDomain(R_max=1.0, h=0.25), n_max=0)


def test_flat_kernel_centroid_by_symmetry():
    D = build_dirac(flat, 0.2, Bundle(lam=0.5), GridDomain(R_max=2.0, h=0.2))
    _, v = small_singular_values(D.Dminus[:, D.interior_cols], 1)
    assert np.abs(_expectation(D.lattice, v[:, 0])).max() < 1e-10


@settings(max_examples=10)
@given(theta=st.floats(0, 2 * np.pi))
def test_centroid_phase_invariant(theta):
    D = build_dirac(one, 0.35, Bundle(lam=0.4, m=(1.0,)), GridDomain(R_max=1.2, h=0.3, center=(0.2, 0.1, 1.5)))
    _, v = small_singular_values(D.Dminus[:, D.interior_cols], 1)
    a = _expectation(D.lattice, v[:, 0])
    b = _expectation(D.lattice, np.exp(1j * theta) * v[:, 0])
    assert np.abs(a - b).max() < 1e-14


def test_down_extract_rejects_varying_rank():
    tn = geo.TNConfig(ell=30.0, centers=[[0, 0, 0.7]])
    b = Bundle(lam=15.0, m=(1.0,))
    s = np.array([5.0, 10.0, 20.0, 25.0])
    scan = KernelScan(s=s, sv_plus=np.ones((4, 4)), sv_minus=np.ones((4, 4)), gap=np.ones(4),
                      R=np.array([0, 1, 1, 1]), T=np.zeros((4, 3)), cfg=tn, bundle=b)
    with pytest.raises(RankNotOne):
        down_extract(scan)


TN30 = geo.TNConfig(ell=30.0, centers=[[0.0, 0.0, 0.7]])
GRID30 = GridDomain(R_max=8.0, h=0.1, layout="parabolic", center=(0.0, 0.0, 0.7))


@pytest.mark.slow
def test_kernel_rank_jumps_across_lambda():
    # frozen from the converged scan: no kernel below lambda, one mode above it,
    # centred on the nut
    sc = kernel_scan(TN30, Bundle(lam=15.0, m=(1.0,)), [7.5, 22.5], GRID30)
    assert sc.R.tolist() == [0, 1]
    assert sc.triv_ker.all()
    assert np.isnan(sc.T[0]).all()
    assert np.allclose(sc.T[1], [0.0, 0.0, 0.7], atol=1e-4)


@pytest.mark.slow
def test_kernel_uncharged_bundle_is_empty():
    # with m = 0 the measured rank on the far side of lambda is zero (see the notes)
    sc = kernel_scan(TN30, Bundle(lam=15.0, m=(0.0,)), [22.5], GRID30)
    assert sc.R.tolist() == [0]
    assert sc.triv_ker.all()
