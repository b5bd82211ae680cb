"""The small bow representation of TN_k.

Rank one on every interval: t^j constant and common to all intervals,
b_sigma in C^2 with b b^dag = |x| + sigma.x, x = t - nu_sigma.  In the
north chart
    b = (sqrt(r + z), (x + i y)/sqrt(r + z)),
and b_south = e^{-i phi} b_north.  As a section over TN_k, b_sigma lives in
K_sigma^{-1} with connection d - i a^(sigma); b^c lives in K_sigma.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import abelian, geometry as geo
from .errors import CenterCollision, ChartBoundary, DegenerateGauge, OnDiracString
from .quat import E_UNITS, PAULI, charge_conjugate, slash


def solve_b(t, nu, chart: int | None = None) -> np.ndarray:
    """Spinor b with b b^dag = r + sigma.(t - nu).

    ``chart=None`` picks the representative whose first nonvanishing component is real
    positive; ``chart=geo.SOUTH`` returns the south-chart representative.
    """
    x = np.asarray(t, dtype=float) - np.asarray(nu, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise CenterCollision("t coincides with the center")
    xy = x[..., 0] + 1j * x[..., 1]
    if chart == geo.SOUTH:
        rm = r - x[..., 2]
        if np.any(rm == 0):
            raise OnDiracString("south chart undefined on the +z axis")
        sq = np.sqrt(rm)
        return np.stack([np.conj(xy) / sq, sq + 0j], axis=-1)
    rp = r + x[..., 2]
    onaxis = rp <= 1e-300
    if chart == geo.NORTH and np.any(onaxis):
        raise OnDiracString("north chart undefined on the -z axis")
    sq = np.sqrt(np.where(onaxis, 1.0, rp))
    b = np.stack([sq + 0j, xy / sq], axis=-1)
    if np.any(onaxis):
        b = np.where(onaxis[..., None], np.stack([np.zeros_like(r) + 0j, np.sqrt(2 * r) + 0j], -1), b)
    return b


def moment_residual(b, t, nu) -> float:
    x = np.asarray(t, dtype=float) - np.asarray(nu, dtype=float)
    r = np.linalg.norm(x)
    return float(np.abs(np.outer(b, b.conj()) - (r * np.eye(2) + slash(x))).max())


def conj_moment_residual(b, t, nu) -> float:
    x = np.asarray(t, dtype=float) - np.asarray(nu, dtype=float)
    r = np.linalg.norm(x)
    bc = charge_conjugate(b)
    return float(np.abs(np.outer(bc, bc.conj()) - (r * np.eye(2) - slash(x))).max())


def _check(t, nu, chart, reach, tol=1e-3):
    x = np.asarray(t, dtype=float) - nu
    for m in range(3):
        for sgn in (1, -1):
            y = x.copy()
            y[m] += sgn * reach
            r = np.linalg.norm(y)
            if r == 0 or -chart * y[2] / r > np.cos(tol):
                raise ChartBoundary("stencil touches the Dirac string")


def eta_hat(t, nu, chart: int = geo.NORTH, h: float = 1e-4) -> np.ndarray:
    """i (b^dag db - db^dag b)/(4 r) as coordinate components, db by central differences."""
    t = np.asarray(t, dtype=float)
    nu = np.asarray(nu, dtype=float)
    _check(t, nu, chart, h)
    b = solve_b(t, nu, chart)
    r = np.linalg.norm(t - nu)
    out = np.zeros(3)
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        db = (solve_b(t + e, nu, chart) - solve_b(t - e, nu, chart)) / (2 * h)
        out[m] = np.real(1j * (b.conj() @ db - db.conj() @ b)) / (4 * r)
    return out


def eta_hat_identity_residual(t, nu, chart: int = geo.NORTH, h: float = 1e-4,
                              conjugate: bool = False) -> float:
    """(d + i eta) b - 1/2 (sigma.dx / r) b, or (d - i eta) b^c + 1/2 (sigma.dx / r) b^c."""
    t = np.asarray(t, dtype=float)
    nu = np.asarray(nu, dtype=float)
    _check(t, nu, chart, h)
    x = t - nu
    r = np.linalg.norm(x)
    et = eta_hat(t, nu, chart, h)

    def f(y):
        bb = solve_b(y, nu, chart)
        return charge_conjugate(bb) if conjugate else bb

    b = f(t)
    sgn = -1.0 if conjugate else 1.0
    res = 0.0
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        db = (f(t + e) - f(t - e)) / (2 * h)
        lhs = db + sgn * 1j * et[m] * b
        rhs = sgn * 0.5 * (PAULI[m] @ b) / r
        res = max(res, float(np.abs(lhs - rhs).max()))
    return res


# ---- identities on TN_k ----

def _section(cfg, sigma, flags, conjugate):
    nu = cfg.centers[sigma]
    chart = flags[sigma]

    def f(y):
        bb = solve_b(y, nu, chart)
        return charge_conjugate(bb) if conjugate else bb

    return f


def _conn(cfg, sigma, flags, charge):
    """Coordinate components of charge * a^(sigma)."""

    def A(y):
        _, asig = abelian.basis_forms(cfg, y, np.asarray(flags))
        return charge * asig[sigma]

    return A


def covariant_frame_derivative(cfg, t, flags, section, conn, h):
    """nabla_{Theta_a} psi, a = 1..4, for a tau-independent section, nabla = d + i A."""
    V = geo.potential(cfg, t)
    w = geo.omega_at(cfg, t, flags)
    A = conn(t)
    psi = section(t)
    D = np.zeros((4,) + psi.shape, dtype=complex)
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        D[m] = (section(t + e) - section(t - e)) / (2 * h) + 1j * A[m] * psi
    D[3] = 1j * A[3] * psi
    out = np.zeros_like(D)
    for j in range(3):
        out[j] = (D[j] - w[j] * D[3]) / np.sqrt(V)
    out[3] = np.sqrt(V) * D[3]
    return out


def rough_laplacian(cfg, t, flags, section, conn, h):
    """-(1/V) D_mu (V g^{mu nu} D_nu psi) by nested central differences."""

    def flux(y):
        V = geo.potential(cfg, y)
        g = geo.metric_at(V, geo.omega_at(cfg, y, flags))
        gi = np.linalg.inv(g)
        A = conn(y)
        psi = section(y)
        D = np.zeros((4,) + psi.shape, dtype=complex)
        for m in range(3):
            e = np.zeros(3)
            e[m] = h
            D[m] = (section(y + e) - section(y - e)) / (2 * h) + 1j * A[m] * psi
        D[3] = 1j * A[3] * psi
        return V * np.einsum("mn,n...->m...", gi, D)

    A = conn(t)
    Y = flux(t)
    div = 1j * A[3] * Y[3]
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        div = div + (flux(t + e)[m] - flux(t - e)[m]) / (2 * h) + 1j * A[m] * Y[m]
    return -div / geo.potential(cfg, t)


def b_identity_suite(cfg: geo.TNConfig, p: geo.ChartPoint, h: float, sigma: int = 0,
                     n_grid: int = 64) -> dict[str, float]:
    """Residuals of the covariant identities for b_sigma and b_sigma^c at p."""
    geo.check_point(cfg, p)
    t = p.t
    flags = p.chart_flags
    nu = cfg.centers[sigma]
    _check(t, nu, flags[sigma], 2 * h)
    r = np.linalg.norm(t - nu)
    V = geo.potential(cfg, t)
    out: dict[str, float] = {}
    for conj, tag, sgn in ((False, "", -1.0), (True, "_conj", 1.0)):
        sec = _section(cfg, sigma, flags, conj)
        conn = _conn(cfg, sigma, flags, -1.0 if not conj else 1.0)
        b = sec(t)
        nab = covariant_frame_derivative(cfg, t, flags, sec, conn, h)
        # expected: -+ (i/sqrt V) e_a^dag b / (2 r); frame index 3 is Theta_4 <-> e_0
        ead = [E_UNITS[1].conj().T, E_UNITS[2].conj().T, E_UNITS[3].conj().T, E_UNITS[0]]
        exp = np.array([sgn * 1j / np.sqrt(V) * (ead[a] @ b) / (2 * r) for a in range(4)])
        out["bcov" + tag] = float(np.abs(nab - exp).max())
        lap = rough_laplacian(cfg, t, flags, sec, conn, h)
        out["harmonic" + tag] = float(np.abs(lap).max())

        def sec_r(y, sec=sec):
            return sec(y) / np.linalg.norm(y - nu)

        nr = covariant_frame_derivative(cfg, t, flags, sec_r, conn, h)
        dir_ = sum(ead[a] @ nr[a] for a in range(4))
        out["dirac" + tag] = float(np.abs(dir_).max())
        hz = horizontal_b_derivative(cfg, p, sigma, h, n_grid, conjugate=conj)
        out["ssa" + tag] = float(np.abs(hz - exp).max())
    return out


# ---- quotient metric ----

@dataclass
class SmallBowPoint:
    t: np.ndarray
    t0: list
    b: np.ndarray
    level: np.ndarray
    s_nodes: list


@dataclass
class GaugeDirection:
    theta: list
    dt0: list
    db: np.ndarray


def s_grid(cfg: geo.TNConfig, N: int, lengths=None) -> list[np.ndarray]:
    p = abelian.bow_points(cfg, lengths)
    starts = np.concatenate([[0.0], p[:-1]])
    nodes = []
    for a, b in zip(starts, p):
        n = max(2, int(round(N * (b - a) / cfg.ell)))
        nodes.append(np.linspace(a, b, n + 1))
    return nodes


def _trap_weights(x):
    w = np.zeros_like(x)
    d = np.diff(x)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


def level_point(cfg: geo.TNConfig, p: geo.ChartPoint, N: int, lengths=None) -> SmallBowPoint:
    """Representative with t0 = 0 and the tau phase carried by b_1."""
    geo.check_point(cfg, p)
    nodes = s_grid(cfg, N, lengths)
    b = np.array([solve_b(p.t, nu, p.chart_flags[s]) for s, nu in enumerate(cfg.centers)])
    b[0] = b[0] * np.exp(-1j * p.tau)
    return SmallBowPoint(t=p.t.copy(), t0=[np.zeros_like(x) for x in nodes], b=b,
                         level=cfg.centers.copy(), s_nodes=nodes)


def tau_of(pt: SmallBowPoint, cfg: geo.TNConfig, flags) -> float:
    """Gauge invariant tau = -(int t0 ds + sum_sigma arg(b_sigma / bhat_sigma))."""
    tot = sum(float(np.sum(_trap_weights(x) * t0)) for x, t0 in zip(pt.s_nodes, pt.t0))
    for s, nu in enumerate(cfg.centers):
        bh = solve_b(pt.t, nu, flags[s])
        tot += float(np.angle(np.vdot(bh, pt.b[s])))
    return -tot


def gauge_tangent(pt: SmallBowPoint, theta: list, dtheta: list) -> GaugeDirection:
    """Infinitesimal gauge action: dt0 = -theta', db_s = i(theta_s(end) - theta_{s+1}(start)) b_s."""
    k = len(pt.b)
    db = np.zeros_like(pt.b)
    for s in range(k):
        db[s] = 1j * (theta[s][-1] - theta[(s + 1) % k][0]) * pt.b[s]
    return GaugeDirection(theta=theta, dt0=[-d for d in dtheta], db=db)


def apply_gauge(pt: SmallBowPoint, theta: list, dtheta: list) -> SmallBowPoint:
    k = len(pt.b)
    b = np.array([np.exp(1j * (theta[s][-1] - theta[(s + 1) % k][0])) * pt.b[s] for s in range(k)])
    return SmallBowPoint(t=pt.t.copy(), t0=[t0 - d for t0, d in zip(pt.t0, dtheta)], b=b,
                         level=pt.level, s_nodes=pt.s_nodes)


def linearized_moment_residual(pt: SmallBowPoint, db: np.ndarray, dt: np.ndarray) -> float:
    res = 0.0
    for s, nu in enumerate(pt.level):
        x = pt.t - nu
        r = np.linalg.norm(x)
        lhs = np.outer(db[s], pt.b[s].conj()) + np.outer(pt.b[s], db[s].conj())
        rhs = (x @ dt) / r * np.eye(2) + slash(dt)
        res = max(res, float(np.abs(lhs - rhs).max()))
    return res


def _gauge_basis(nodes: list[np.ndarray]) -> list[tuple[list, list]]:
    """Per-interval basis {1 (except interval 1), affine, sin(m pi x / l), m <= N/4}."""
    basis = []
    for s, x in enumerate(nodes):
        a, l = x[0], x[-1] - x[0]
        u = (x - a) / l
        n_modes = max(1, (len(x) - 1) // 4)
        funcs = []
        if s > 0:
            funcs.append((np.ones_like(x), np.zeros_like(x)))
        funcs.append((u, np.full_like(x, 1.0 / l)))
        for m in range(1, n_modes + 1):
            funcs.append((np.sin(m * np.pi * u), m * np.pi / l * np.cos(m * np.pi * u)))
        for f, df in funcs:
            th = [np.zeros_like(y) for y in nodes]
            dth = [np.zeros_like(y) for y in nodes]
            th[s] = f
            dth[s] = df
            basis.append((th, dth))
    return basis


class _Packer:
    """Flattens (dt0 per node, dt^j per node, db) with the discretized affine norm weights."""

    def __init__(self, nodes):
        self.nodes = nodes
        self.w = np.concatenate([_trap_weights(x) for x in nodes])

    def pack(self, dt0: list, dtj: np.ndarray, db: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = len(self.w)
        t0 = np.concatenate(dt0).astype(complex)
        tj = np.concatenate([np.full(n, c) for c in dtj]).astype(complex)
        vec = np.concatenate([t0, tj, db.reshape(-1)])
        wts = np.concatenate([self.w, np.tile(self.w, 3), np.ones(db.size)])
        return vec, wts


def _real_inner(u, v, w):
    return float(np.real(np.sum(w * np.conj(u) * v)))


def horizontal_tangents(cfg: geo.TNConfig, p: geo.ChartPoint, N: int, lengths=None,
                        fd_step: float = 1e-5, gauge: tuple[list, list] | None = None):
    """Horizontal projections of d/dt^1, d/dt^2, d/dt^3, d/dtau at the level point.

    Returns (list of packed vectors, weights, point).
    """
    pt = level_point(cfg, p, N, lengths)
    phases = np.ones(cfg.k, dtype=complex)
    if gauge is not None:
        th, dth = gauge
        g = apply_gauge(pt, th, dth)
        phases = np.array([g.b[s] @ pt.b[s].conj() / np.vdot(pt.b[s], pt.b[s]) for s in range(cfg.k)])
        pt = g
    packer = _Packer(pt.s_nodes)
    zero_t0 = [np.zeros_like(x) for x in pt.s_nodes]
    tangents = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = fd_step
        db = np.array([
            (solve_b(p.t + e, nu, p.chart_flags[s]) - solve_b(p.t - e, nu, p.chart_flags[s])) / (2 * fd_step)
            for s, nu in enumerate(cfg.centers)])
        db[0] *= np.exp(-1j * p.tau)
        db = db * phases[:, None]
        tangents.append(packer.pack(zero_t0, np.eye(3)[j], db)[0])
    dt0 = [np.full_like(x, -1.0 / cfg.ell) for x in pt.s_nodes]
    vec, wts = packer.pack(dt0, np.zeros(3), np.zeros_like(pt.b))
    tangents.append(vec)
    G = []
    for th, dth in _gauge_basis(pt.s_nodes):
        gd = gauge_tangent(pt, th, dth)
        G.append(packer.pack(gd.dt0, np.zeros(3), gd.db)[0])
    G = np.array(G)
    M = np.array([[_real_inner(a, b, wts) for b in G] for a in G])
    if np.linalg.cond(M) > 1e12:
        raise DegenerateGauge("gauge directions are linearly dependent")
    out = []
    for v in tangents:
        rhs = np.array([_real_inner(a, v, wts) for a in G])
        c = np.linalg.solve(M, rhs)
        out.append(v - c @ G)
    return out, wts, pt


def quotient_metric(cfg: geo.TNConfig, p: geo.ChartPoint, N: int, lengths=None,
                    gauge=None) -> np.ndarray:
    if N < 8:
        raise ValueError("grid too small")
    hs, wts, _ = horizontal_tangents(cfg, p, N, lengths, gauge=gauge)
    return np.array([[_real_inner(a, b, wts) for b in hs] for a in hs])


def horizontal_b_derivative(cfg: geo.TNConfig, p: geo.ChartPoint, sigma: int, h: float,
                            N: int = 64, conjugate: bool = False) -> np.ndarray:
    """Theta_a^H applied to b_sigma (or b_sigma^c), read off the horizontal tangents."""
    q = geo.ChartPoint(t=p.t, tau=0.0, chart_flags=p.chart_flags)
    hs, _, pt = horizontal_tangents(cfg, q, N, fd_step=h)
    n = sum(len(x) for x in pt.s_nodes)
    off = 4 * n + 2 * sigma
    dcoord = np.array([v[off:off + 2] for v in hs])  # d/dt^j, d/dtau of b_sigma
    V = geo.potential(cfg, p.t)
    w = geo.omega_at(cfg, p.t, p.chart_flags)
    E = np.zeros((4, 2), dtype=complex)
    for j in range(3):
        E[j] = (dcoord[j] - w[j] * dcoord[3]) / np.sqrt(V)
    E[3] = np.sqrt(V) * dcoord[3]
    if conjugate:
        E = np.array([charge_conjugate(x) for x in E])
    return E
