"""Tautological connections a_s on TN_k and their curvature.

Bow layout: interval J_s has length l_s (default ell/k); marked points
p_s = l_1 + ... + l_s, so p_k = ell ~ 0 and J_1 = [0, p_1].
    a_s = s a0 + sum_{p_sigma < s} a^(sigma),
    a0 = (dtau + omega)/V,   a^(sigma) = (1/(2 r_sigma)) (dtau + omega)/V - eta_sigma.
For s outside [0, ell) the sum runs over all lifts p_sigma + m ell, so that
a_{s+ell} = a_s + dtau.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import ChartBoundary, CenterCollision, GridTooCoarse, OnDiracString


def bow_points(cfg: geo.TNConfig, lengths=None) -> np.ndarray:
    if cfg.k == 0:
        return np.zeros(0)
    if lengths is None:
        lengths = np.full(cfg.k, cfg.ell / cfg.k)
    lengths = np.asarray(lengths, dtype=float)
    if len(lengths) != cfg.k or np.any(lengths <= 0) or not np.isclose(lengths.sum(), cfg.ell):
        raise ValueError("interval lengths must be positive, one per center, summing to ell")
    p = np.cumsum(lengths)
    p[-1] = cfg.ell
    return p


def passed_counts(s: float, p: np.ndarray, ell: float) -> np.ndarray:
    """Number of lifts p_sigma + m ell (m >= 0 counted positively) lying below s."""
    return np.floor((s - p) / ell).astype(int) + 1


def _fields(cfg: geo.TNConfig, t, flags):
    t = np.asarray(t, dtype=float)
    flags = np.asarray(flags)
    V = np.full(t.shape[:-1], cfg.ell)
    w = np.zeros_like(t)
    inv2r = []
    etas = []
    for s, nu in enumerate(cfg.centers):
        x = t - nu
        r = np.linalg.norm(x, axis=-1)
        if np.any(r == 0):
            raise CenterCollision(f"point at center {s}")
        inv2r.append(0.5 / r)
        e = geo.eta(x, flags[..., s])
        etas.append(e)
        V = V + 0.5 / r
        w = w + e
    return V, w, inv2r, etas


def basis_forms(cfg: geo.TNConfig, t, flags) -> tuple[np.ndarray, np.ndarray]:
    """a0 and the a^(sigma) as coordinate components (..., 4) / (k, ..., 4)."""
    V, w, inv2r, etas = _fields(cfg, t, flags)
    a0 = np.concatenate([w, np.ones(V.shape + (1,))], axis=-1) / V[..., None]
    asig = np.zeros((cfg.k,) + a0.shape)
    for s in range(cfg.k):
        asig[s] = inv2r[s][..., None] * a0
        asig[s][..., :3] -= etas[s]
    return a0, asig


def connection_coeffs(s: float, cfg: geo.TNConfig, lengths=None,
                      bundle: tuple[float, np.ndarray] | None = None) -> tuple[float, np.ndarray]:
    """Coefficients (c0, c_sigma) with A = c0 a0 + sum c_sigma a^(sigma).

    ``bundle`` = (lam, m) adds the twist -lam a0 - sum_sigma m_sigma a^(sigma).
    """
    p = bow_points(cfg, lengths)
    c0 = float(s)
    cs = passed_counts(s, p, cfg.ell).astype(float) if cfg.k else np.zeros(0)
    if bundle is not None:
        lam, m = bundle
        c0 -= lam
        cs = cs - np.broadcast_to(np.asarray(m, dtype=float), cs.shape)
    return c0, cs


def connection_at(s: float, cfg: geo.TNConfig, t, flags, lengths=None, bundle=None) -> np.ndarray:
    c0, cs = connection_coeffs(s, cfg, lengths, bundle)
    a0, asig = basis_forms(cfg, t, flags)
    out = c0 * a0
    for k, c in enumerate(cs):
        if c:
            out = out + c * asig[k]
    return out


def connection_a(s: float, cfg: geo.TNConfig, p: geo.ChartPoint, lengths=None) -> np.ndarray:
    geo.check_point(cfg, p)
    return connection_at(s, cfg, p.t, np.asarray(p.chart_flags), lengths)


@dataclass
class CurvatureSample:
    point: np.ndarray
    F: np.ndarray
    asd_residual: float
    density: float


_STENCILS = {
    2: ((1.0, 1.0),),
    4: ((1.0, 4.0 / 3.0), (2.0, -1.0 / 3.0)),
}


def coord_curvature(form, t, h: float, stencil: int = 2) -> np.ndarray:
    """F_mn = d_m A_n - d_n A_m for a tau-independent form given as a callable of t (..., 3)."""
    t = np.asarray(t, dtype=float)
    dA = np.zeros(t.shape[:-1] + (4, 4))
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        acc = 0.0
        for mult, wgt in _STENCILS[stencil]:
            acc = acc + wgt * (form(t + mult * e) - form(t - mult * e)) / (2 * mult * h)
        dA[..., m, :] = acc
    return dA - np.swapaxes(dA, -1, -2)


def frame_curvature(cfg: geo.TNConfig, Fc: np.ndarray, t, flags) -> np.ndarray:
    V, w, _, _ = _fields(cfg, t, flags)
    th = geo.coframe_at(V, w)
    E = np.linalg.inv(th)
    return np.einsum("...mn,...ma,...nb->...ab", Fc, E, E)


def _check_stencil(cfg, t, flags, h, stencil):
    reach = h * (2 if stencil == 4 else 1)
    for m in range(3):
        for sgn in (1, -1):
            e = np.zeros(3)
            e[m] = sgn * reach
            try:
                geo.check_point(cfg, geo.ChartPoint(t=t + e, chart_flags=tuple(flags)))
            except (OnDiracString, CenterCollision) as exc:
                raise ChartBoundary(str(exc)) from exc


def curvature_asd(s: float, cfg: geo.TNConfig, p: geo.ChartPoint, h: float, lengths=None,
                  stencil: int = 2, bundle=None) -> CurvatureSample:
    geo.check_point(cfg, p)
    flags = np.asarray(p.chart_flags)
    _check_stencil(cfg, p.t, flags, h, stencil)
    Fc = coord_curvature(lambda x: connection_at(s, cfg, x, flags, lengths, bundle), p.t, h, stencil)
    Ff = frame_curvature(cfg, Fc, p.t, flags)
    f = geo.matrix_to_twoform(Ff)
    res = float(np.abs(f + geo.hodge_star2(f)).max())
    return CurvatureSample(point=p.t.copy(), F=f, asd_residual=res, density=float(np.sum(f**2)))


# ---- L2 partial integrals ----

@dataclass(frozen=True)
class L2Grid:
    shell_width: float = 1.0
    n_r: int = 4
    n_theta: int = 24
    n_phi: int = 24
    bump_radius: float = 1.0
    n_r_bump: int = 24
    fd_h: float = 1e-4


def _bump(r, rho):
    """Smooth cutoff: 1 for r <= rho/2, 0 for r >= rho."""
    x = np.clip(2.0 * r / rho - 1.0, 0.0, 1.0)

    def f(u):
        return np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)

    return f(1 - x) / (f(1 - x) + f(x))


def _density(coeffs, cfg: geo.TNConfig, pts: np.ndarray, h: float) -> np.ndarray:
    """V |F|^2 at points, per-point charts chosen at the point."""
    c0, cs = coeffs
    rel = pts[:, None, :] - cfg.centers[None, :, :]
    flags = np.where(rel[..., 2] >= 0, geo.NORTH, geo.SOUTH) if cfg.k else np.zeros((len(pts), 0))

    def form(x):
        a0, asig = basis_forms(cfg, x, flags)
        out = c0 * a0
        for k, c in enumerate(cs):
            out = out + c * asig[k]
        return out

    Fc = coord_curvature(form, pts, h)
    Ff = frame_curvature(cfg, Fc, pts, flags)
    V = geo.potential(cfg, pts)
    return V * 0.5 * np.sum(Ff**2, axis=(-1, -2))


def _sphere_nodes(n_theta, n_phi):
    xg, wg = np.polynomial.legendre.leggauss(n_theta)
    phi = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    ct, ph = np.meshgrid(xg, phi, indexing="ij")
    st = np.sqrt(1 - ct**2)
    dirs = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)
    w = np.repeat(wg, n_phi) * (2 * np.pi / n_phi)
    return dirs, w


def l2_norm_estimate(coeffs, cfg: geo.TNConfig, R_max: float, grid: L2Grid = L2Grid()
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Partial integrals of int |F|^2 dvol over |t| < R for R on the shell edges.

    ``coeffs`` = (c0, c_sigma) as returned by connection_coeffs.  Returns (R, partial).
    """
    if grid.n_r < 2 or grid.n_theta < 8 or grid.n_phi < 8 or grid.n_r_bump < 8:
        raise GridTooCoarse("quadrature orders below the refinement bound")
    rho = grid.bump_radius
    if cfg.k > 1:
        sep = min(np.linalg.norm(a - b) for i, a in enumerate(cfg.centers)
                  for b in cfg.centers[i + 1:])
        rho = min(rho, 0.45 * sep)
    if cfg.k and np.max(np.linalg.norm(cfg.centers, axis=1)) + rho >= grid.shell_width:
        raise GridTooCoarse("centers must lie inside the first shell")
    dirs, wang = _sphere_nodes(grid.n_theta, grid.n_phi)
    tau_len = 2 * np.pi

    def chi_total(pts):
        out = np.zeros(len(pts))
        for nu in cfg.centers:
            out += _bump(np.linalg.norm(pts - nu, axis=1), rho)
        return out

    # center pieces
    core = 0.0
    if cfg.k:
        xr, wr = np.polynomial.legendre.leggauss(grid.n_r_bump)
        r = 0.5 * rho * (xr + 1)
        wr = 0.5 * rho * wr
        for nu in cfg.centers:
            pts = (nu[None, None, :] + r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
            # nudge nodes off string axes
            f = _density(coeff_tuple(coeffs), cfg, _offaxis(cfg, pts), grid.fd_h)
            f = f * _bump(np.linalg.norm(pts - nu, axis=1), rho)
            W = (wr[:, None] * r[:, None] ** 2 * wang[None, :]).reshape(-1)
            core += float(np.sum(W * f))
    edges = np.arange(0.0, R_max + 1e-12, grid.shell_width)
    xr, wr = np.polynomial.legendre.leggauss(grid.n_r)
    r_inner = (np.max(np.linalg.norm(cfg.centers, axis=1)) + rho) if cfg.k else 0.0
    dirs_in, wang_in = _sphere_nodes(2 * grid.n_theta, 2 * grid.n_phi)
    partial = [core * tau_len]
    acc = core
    for a, b in zip(edges[:-1], edges[1:]):
        # panels near the centers resolve the cutoff layer of the bumps
        npan = int(np.ceil((b - a) / (0.25 * rho))) if a < r_inner else 1
        d, wa = (dirs_in, wang_in) if a < r_inner else (dirs, wang)
        for pa in range(npan):
            lo = a + (b - a) * pa / npan
            hi = a + (b - a) * (pa + 1) / npan
            r = lo + 0.5 * (hi - lo) * (xr + 1)
            w = 0.5 * (hi - lo) * wr
            pts = (r[:, None, None] * d[None, :, :]).reshape(-1, 3)
            pts = _offaxis(cfg, pts)
            f = _density(coeff_tuple(coeffs), cfg, pts, grid.fd_h) * (1 - chi_total(pts))
            W = (w[:, None] * r[:, None] ** 2 * wa[None, :]).reshape(-1)
            acc += float(np.sum(W * f))
        partial.append(acc * tau_len)
    return edges, np.array(partial)


def coeff_tuple(coeffs):
    c0, cs = coeffs
    return float(c0), np.asarray(cs, dtype=float)


def _offaxis(cfg: geo.TNConfig, pts: np.ndarray, min_rho: float = 1e-3) -> np.ndarray:
    """Shift points that sit essentially on a center's z axis sideways."""
    pts = pts.copy()
    for nu in cfg.centers:
        d = pts - nu
        rho = np.hypot(d[:, 0], d[:, 1])
        bad = rho < min_rho * np.maximum(np.linalg.norm(d, axis=1), 1e-12)
        pts[bad, 0] += min_rho * np.maximum(np.linalg.norm(d[bad], axis=1), 1e-3)
    return pts


def shell_decay_rate(R: np.ndarray, partial: np.ndarray, R1: float, R2: float) -> float:
    """-log(inc(R2)/inc(R1)) / log(R2/R1) for the shell increments ending at R1, R2."""
    inc = np.diff(partial)
    i1 = int(np.argmin(np.abs(R[1:] - R1)))
    i2 = int(np.argmin(np.abs(R[1:] - R2)))
    return float(-np.log(inc[i2] / inc[i1]) / np.log(R[1:][i2] / R[1:][i1]))
