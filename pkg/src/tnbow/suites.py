"""Per-module verification suites.

A suite takes a RunConfig and a seeded generator and returns a list of Check records.
Residual tolerances are multiplied by ``tol_scale``; order thresholds are not.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import abelian, geometry as geo, nahm, quat, smallbow
from .config import RunConfig
from .errors import TNBowError

ORDER_FLOOR = 1e-9


@dataclass
class Check:
    id: str
    ref: str
    inputs_digest: str
    residual: float
    tolerance: float
    passed: bool
    kind: str = "max"   # "max": residual <= tolerance, "min": residual >= tolerance, "info": reported only

    def as_dict(self) -> dict:
        return {"id": self.id, "ref": self.ref, "inputs_digest": self.inputs_digest,
                "residual": _num(self.residual), "tolerance": _num(self.tolerance),
                "kind": self.kind, "pass": self.passed}


def _num(x: float):
    x = float(x)
    if np.isfinite(x):
        return x
    return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")


def digest(obj) -> str:
    def enc(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(type(o))

    blob = json.dumps(obj, sort_keys=True, default=enc)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def upper(id_, ref, inputs, residual, tol) -> Check:
    r = float(residual)
    return Check(id_, ref, digest(inputs), r, float(tol), bool(np.isfinite(r) and r <= tol))


def lower(id_, ref, inputs, value, bound) -> Check:
    v = float(value)
    return Check(id_, ref, digest(inputs), v, float(bound), bool(v >= bound), kind="min")


def _safe(fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except TNBowError:
        return None


# ---- quat ----

QUAT_REFS = {
    "algebra": "quaternion-units",
    "cc_involution": "charge-conjugation",
    "cc_commutes": "charge-conjugation",
    "cc0": "charge-conjugation-contraction",
    "cc1": "charge-conjugation-contraction",
    "fierz": "fierz-contraction",
    "tens": "tensor-identity",
    "im_idempotent": "imaginary-part",
}


def suite_quat(cfg: RunConfig, rng: np.random.Generator, tol_scale: float = 1.0) -> list[Check]:
    n = 1000
    res = quat.identity_residuals(rng, n)
    tol = cfg.tol("exact", tol_scale)
    out = [upper(f"quat.{k}", QUAT_REFS[k], {"samples": n, "seed": cfg.seed}, v, tol)
           for k, v in sorted(res.items())]
    z = quat.charge_conjugate(np.array([1.0, 0.0]))
    out.append(upper("quat.cc_example", "charge-conjugation", {"z": [1, 0]},
                     np.abs(z - np.array([0, 1])).max(), tol))
    return out


# ---- geometry ----

def geometry_checks(tn: geo.TNConfig, points, h: float, tol: float, order_min: float,
                    tag: str = "") -> list[Check]:
    worst = {"frame_orthonormality": 0.0, "riemann_asd_residual": 0.0,
             "sympl_const_residual": 0.0, "domega_residual": 0.0}
    orders = {k: np.inf for k in worst if k != "frame_orthonormality"}
    for p in points:
        th = geo.frame_at(tn, p).coframe
        E = np.linalg.inv(th)
        worst["frame_orthonormality"] = max(worst["frame_orthonormality"],
                                            float(np.abs(E.T @ geo.metric(tn, p) @ E - np.eye(4)).max()))
        fine = _safe(geo.curvature_checks, tn, p, h)
        coarse = _safe(geo.curvature_checks, tn, p, 2 * h)
        for k in orders:
            if fine is None or coarse is None:
                worst[k] = np.inf
                orders[k] = -np.inf
                continue
            worst[k] = max(worst[k], fine[k])
            orders[k] = min(orders[k], geo.fd_order(coarse[k], fine[k], ORDER_FLOOR))
    inputs = {"k": tn.k, "ell": tn.ell, "centers": tn.centers, "h": h,
              "points": [p.t for p in points]}
    out = [upper(f"geometry{tag}.frame_orthonormality", "gibbons-hawking-frame", inputs,
                 worst["frame_orthonormality"], 1e-12)]
    refs = {"riemann_asd_residual": "riemann-anti-self-dual", "sympl_const_residual": "parallel-kahler-forms",
            "domega_residual": "monopole-equation"}
    for k, ref in refs.items():
        out.append(upper(f"geometry{tag}.{k}", ref, inputs, worst[k], tol))
        out.append(lower(f"geometry{tag}.{k}.order", ref, inputs, orders[k], order_min))
    return out


def suite_geometry(cfg: RunConfig, rng, tol_scale: float = 1.0) -> list[Check]:
    tn = cfg.tn
    pts = geo.random_points(tn, rng, cfg.samples)
    return geometry_checks(tn, pts, cfg.h, cfg.tol("fd", tol_scale), cfg.tolerances["order"])


# ---- abelian ----

def _s_samples(tn: geo.TNConfig, rng, n: int, lengths=None) -> np.ndarray:
    p = abelian.bow_points(tn, lengths)
    out = []
    while len(out) < n:
        s = rng.uniform(0, tn.ell)
        if len(p) == 0 or np.min(np.abs((s - p + 0.5 * tn.ell) % tn.ell - 0.5 * tn.ell)) > 0.02 * tn.ell:
            out.append(s)
    return np.array(out)


def abelian_asd_checks(tn, rng, n, h, tol, order_min, lengths=None, tag="") -> list[Check]:
    ss = _s_samples(tn, rng, n, lengths)
    pts = geo.random_points(tn, rng, n)
    worst, order = 0.0, np.inf
    for s, p in zip(ss, pts):
        a = _safe(abelian.curvature_asd, s, tn, p, h, lengths)
        b = _safe(abelian.curvature_asd, s, tn, p, 2 * h, lengths)
        if a is None or b is None:
            worst, order = np.inf, -np.inf
            continue
        worst = max(worst, a.asd_residual)
        order = min(order, geo.fd_order(b.asd_residual, a.asd_residual, ORDER_FLOOR))
    inputs = {"k": tn.k, "ell": tn.ell, "centers": tn.centers, "h": h, "s": ss,
              "points": [p.t for p in pts]}
    return [upper(f"abelian{tag}.asd_residual", "tautological-connection-asd", inputs, worst, tol),
            lower(f"abelian{tag}.asd_residual.order", "tautological-connection-asd", inputs, order, order_min)]


def l2_decay_check(tn: geo.TNConfig, rate_min: float, R1: float = 20.0, R2: float = 40.0) -> Check:
    """Shell increments of the a^(1) curvature density between R1 and R2."""
    inputs = {"k": tn.k, "ell": tn.ell, "centers": tn.centers, "R": [R1, R2]}
    if tn.k == 0:
        R, P = abelian.l2_norm_estimate((0.0, np.zeros(0)), tn, R2)
        return upper("abelian.l2_flat_zero", "l2-curvature", inputs, np.abs(P).max(), 1e-12)
    reach = float(np.max(np.linalg.norm(tn.centers, axis=1)))
    grid = abelian.L2Grid(bump_radius=0.5, shell_width=float(max(1.0, np.ceil(reach + 0.6))))
    cs = np.zeros(tn.k)
    cs[0] = 1.0
    R, P = abelian.l2_norm_estimate((0.0, cs), tn, R2, grid)
    return lower("abelian.l2_shell_rate", "l2-curvature", inputs,
                 abelian.shell_decay_rate(R, P, R1, R2), rate_min)


def suite_abelian(cfg: RunConfig, rng, tol_scale: float = 1.0) -> list[Check]:
    tn = cfg.tn
    out = abelian_asd_checks(tn, rng, cfg.samples, cfg.h, cfg.tol("fd", tol_scale),
                             cfg.tolerances["order"], cfg.lengths)
    out.append(l2_decay_check(tn, cfg.tolerances["l2_rate"]))
    return out


# ---- smallbow ----

B_KEYS = [f"{k}{c}" for k in ("bcov", "harmonic", "dirac", "ssa") for c in ("", "_conj")]


def smallbow_identity_checks(tn, points, h, tol_exact, tol_fd, tag="") -> list[Check]:
    bb, bc = 0.0, 0.0
    worst: dict[str, float] = {}
    for p in points:
        for sigma, nu in enumerate(tn.centers):
            b = smallbow.solve_b(p.t, nu, p.chart_flags[sigma])
            bb = max(bb, smallbow.moment_residual(b, p.t, nu))
            bc = max(bc, smallbow.conj_moment_residual(b, p.t, nu))
            res = _safe(smallbow.b_identity_suite, tn, p, h, sigma)
            for k in B_KEYS:
                worst[k] = max(worst.get(k, 0.0), res[k] if res else np.inf)
    inputs = {"k": tn.k, "ell": tn.ell, "centers": tn.centers, "h": h,
              "points": [p.t for p in points]}
    out = [upper(f"smallbow{tag}.bb_moment", "small-bow-moment-map", inputs, bb, tol_exact),
           upper(f"smallbow{tag}.bb_conj_moment", "small-bow-moment-map", inputs, bc, tol_exact)]
    refs = {"bcov": "bifundamental-covariant-derivative", "harmonic": "bifundamental-harmonic",
            "dirac": "bifundamental-dirac", "ssa": "bifundamental-horizontal-derivative"}
    for k in sorted(worst):
        out.append(upper(f"smallbow{tag}.{k}", refs[k.replace("_conj", "")], inputs, worst[k], tol_fd))
    return out


def quotient_checks(tn, points, N, tol, order_min, tag="") -> list[Check]:
    err, order = 0.0, np.inf
    for p in points:
        gt = geo.metric(tn, p)
        e_fine = np.abs(smallbow.quotient_metric(tn, p, N) - gt).max() / np.abs(gt).max()
        e_coarse = np.abs(smallbow.quotient_metric(tn, p, N // 2) - gt).max() / np.abs(gt).max()
        err = max(err, e_fine)
        order = min(order, geo.fd_order(e_coarse, e_fine, ORDER_FLOOR))
    inputs = {"k": tn.k, "ell": tn.ell, "centers": tn.centers, "N": N,
              "points": [(p.t, p.tau) for p in points]}
    return [upper(f"quotient{tag}.relative_error", "quotient-metric", inputs, err, tol),
            lower(f"quotient{tag}.order", "quotient-metric", inputs, order, order_min)]


def suite_smallbow(cfg: RunConfig, rng, tol_scale: float = 1.0) -> list[Check]:
    tn = cfg.tn
    if tn.k == 0:
        return []
    pts = geo.random_points(tn, rng, cfg.samples)
    out = smallbow_identity_checks(tn, pts, cfg.h, cfg.tol("exact", tol_scale), cfg.tol("fd", tol_scale))
    out += quotient_checks(tn, pts[:min(10, len(pts))], cfg.N, cfg.tol("quotient", tol_scale),
                           cfg.tolerances["order"])
    return out


# ---- nahm ----

def nahm_checks(rng, tol_pole, tol_drift, tol_syn) -> list[Check]:
    out = []
    u = np.linspace(1.0, 0.05, 20)
    worst = 0.0
    for n in (2, 3):
        rho = nahm.su2_irrep(n)
        seg = nahm.integrate_nahm(u, nahm.pole_solution(1.0, rho))
        for i, x in enumerate(u):
            ref = nahm.pole_solution(x, rho)
            worst = max(worst, np.abs(seg.T[i, 1:] - ref).max() / np.abs(ref).max())
    out.append(upper("nahm.pole", "nahm-pole", {"u": u, "ranks": [2, 3]}, worst, tol_pole))
    drift = 0.0
    datas = []
    for n in (2, 3, 4):
        X = rng.normal(size=(3, n, n)) + 1j * rng.normal(size=(3, n, n))
        X = X + np.conj(np.swapaxes(X, -1, -2))
        X = 0.5 * X / np.linalg.norm(X)   # keeps the first pole well beyond s = 1
        datas.append(X)
        seg = nahm.integrate_nahm(np.linspace(0, 1, 11), X, max_step=0.01)
        inv = np.array([nahm.spectral_invariants(*seg.T[i, 1:]) for i in range(11)])
        drift = max(drift, np.abs(inv - inv[0]).max())
    out.append(upper("nahm.invariant_drift", "nahm-spectral-curve",
                     {"data": [np.stack([d.real, d.imag]) for d in datas]}, drift, tol_drift))
    Q = rng.normal(size=4) + 1j * rng.normal(size=4)
    Ta = rng.normal(size=(3, 2, 2)) + 1j * rng.normal(size=(3, 2, 2))
    Ta = Ta + np.conj(np.swapaxes(Ta, -1, -2))
    Tb = Ta + nahm.jump_from_Q(Q)
    z = np.zeros((1, 2, 2))
    segA = nahm.Segment(np.array([0.0, 0.5]), np.stack([np.zeros((4, 2, 2)), np.concatenate([z, Ta])]))
    segB = nahm.Segment(np.array([0.5, 1.0]), np.stack([np.concatenate([z, Tb]), np.zeros((4, 2, 2))]))
    rep = nahm.BowRep(np.array([1.0]), lam=[0.5], lam0=[0.5])
    jr = nahm.moment_residuals(rep, nahm.BowDataGrid([segA, segB], Q={0.5: Q}), [[0, 0, 0]])["jump"][0.5]
    out.append(upper("nahm.jump", "nahm-jump", {"Q": np.stack([Q.real, Q.imag])}, jr, tol_syn))
    t = rng.normal(size=3)
    nu = rng.normal(size=3)
    b = smallbow.solve_b(t, nu)
    T = np.zeros((4, 1, 1), complex)
    T[1:, 0, 0] = t
    seg = nahm.Segment(np.array([0.0, 1.0]), np.stack([T, T]))
    r = nahm.moment_residuals(nahm.BowRep(np.array([1.0])),
                              nahm.BowDataGrid([seg], B={0: b.reshape(2, 1)}), [nu])
    out.append(upper("nahm.endpoint", "nahm-endpoint", {"t": t, "nu": nu},
                     max(r["p_minus"][0], r["p_plus"][0]), tol_syn))
    return out


def suite_nahm(cfg: RunConfig, rng, tol_scale: float = 1.0) -> list[Check]:
    return nahm_checks(rng, cfg.tol("nahm_pole", tol_scale), cfg.tol("nahm_drift", tol_scale),
                       cfg.tol("nahm_synthetic", tol_scale))


# ---- dirac ----

DIRAC_HS = (0.2, 0.1, 0.05)
IDENTITY_REFS = {"res_t": "dirac-commutator-t", "res_s": "dirac-commutator-s",
                 "weitzenbock": "weitzenbock", "geomprelim": "dirac-c4-identity"}


def dirac_identity_configs(ell: float = 1.0):
    """(tag, TNConfig, s, GridDomain, Bundle) for the flat and single-center checks."""
    from .dirac import Bundle, GridDomain, selfdual_perturbation
    flat = geo.TNConfig(ell=ell)
    one = geo.TNConfig(ell=ell, centers=[[0.0, 0.0, 0.0]])
    asd = selfdual_perturbation(flat, 0.5, sign=-1)
    return [
        ("flat", flat, 0.3 * ell, GridDomain(R_max=1.5, h=0.1, wilson=0.0), Bundle(lam=0.4 * ell, extra=asd)),
        ("k1", one, 0.3 * ell, GridDomain(R_max=1.5, h=0.1, center=(0.0, 0.0, 2.0), wilson=0.0),
         Bundle(lam=0.4 * ell, m=(1.0,))),
    ]


def dirac_identity_checks(order_min: float, ell: float = 1.0, hs=DIRAC_HS) -> list[Check]:
    from .dirac import identity_sweep
    out = []
    for tag, tn, s, grid, bundle in dirac_identity_configs(ell):
        sw = identity_sweep(tn, s, grid, hs, bundle)
        inputs = {"config": tag, "ell": ell, "s": s, "h": list(hs)}
        for key, ref in IDENTITY_REFS.items():
            orders = sw["orders"][key]
            out.append(lower(f"dirac.{tag}.{key}.order", ref, inputs, min(orders), order_min))
            out.append(Check(f"dirac.{tag}.{key}.finest", ref, digest(inputs),
                             sw["residuals"][-1][key], np.inf, True, kind="info"))
    return out


def dirac_control_check(ell: float = 1.0) -> Check:
    """A self-dual constant field must leave a finite Weitzenbock residual."""
    from .dirac import Bundle, GridDomain, selfdual_perturbation, weitzenbock_check
    flat = geo.TNConfig(ell=ell)
    b = Bundle(lam=0.4 * ell, extra=selfdual_perturbation(flat, 0.5, sign=1))
    r = [weitzenbock_check(flat, 0.3 * ell, GridDomain(R_max=1.5, h=h, wilson=0.0), b) for h in (0.1, 0.05)]
    return lower("dirac.selfdual_control", "weitzenbock", {"ell": ell, "eps": 0.5}, min(r), 0.1)


def dirac_misc_checks(cfg: RunConfig, tol_gauge: float) -> list[Check]:
    from .dirac import Bundle, GridDomain, build_dirac
    from .dirac.identities import large_gauge_check
    out = []
    flat = geo.TNConfig(ell=cfg.ell)
    g = GridDomain(R_max=1.0, h=0.25)
    D = build_dirac(flat, 0.0, Bundle(), g)
    adj = abs(D.Dminus - D.Dplus.conj().T).max()
    out.append(upper("dirac.adjoint", "dirac-adjoint", {"R_max": 1.0, "h": 0.25}, adj, 0.0))
    smin = np.linalg.svd(D.Dplus[:, D.interior_cols].toarray(), compute_uv=False).min()
    out.append(lower("dirac.flat_ball_gap", "dirac-flat-ball", {"R_max": 1.0, "h": 0.25}, smin, 0.1 / g.R_max))
    one = geo.TNConfig(ell=cfg.ell, centers=[[0.0, 0.0, 0.3]])
    cases = [(flat, GridDomain(R_max=1.0, h=0.25), Bundle(lam=0.2 * cfg.ell)),
             (one, GridDomain(R_max=1.2, h=0.3, center=(0.2, 0.1, 1.5)), Bundle(lam=0.4 * cfg.ell, m=(1.0,))),
             (one, GridDomain(R_max=3.0, h=0.5, layout="parabolic", n=1), Bundle(lam=0.4 * cfg.ell, m=(1.0,)))]
    worst = max(large_gauge_check(tn, 0.35 * cfg.ell, gr, b) for tn, gr, b in cases)
    out.append(upper("dirac.large_gauge", "large-gauge-periodicity", {"ell": cfg.ell}, worst, tol_gauge))
    return out


def suite_dirac(cfg: RunConfig, rng, tol_scale: float = 1.0) -> list[Check]:
    out = dirac_misc_checks(cfg, cfg.tol("gauge", tol_scale))
    out += dirac_identity_checks(cfg.tolerances["dirac_order"], cfg.ell)
    out.append(dirac_control_check(cfg.ell))
    return out


SUITES = {
    "quat": suite_quat,
    "geometry": suite_geometry,
    "abelian": suite_abelian,
    "smallbow": suite_smallbow,
    "nahm": suite_nahm,
    "dirac": suite_dirac,
}
