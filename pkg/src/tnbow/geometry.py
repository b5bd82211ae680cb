"""Gibbons-Hawking multi-Taub-NUT geometry.

Coordinates (t1, t2, t3, tau) with tau of period 2 pi, metric
    g = V |dt|^2 + (dtau + omega)^2 / V,   V = ell + sum_s 1/(2 |t - nu_s|),
orientation V dt1 dt2 dt3 dtau.  Frame indices 0..3 stand for Theta_1..Theta_4.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import CenterCollision, ChartBoundary, OnDiracString
from .quat import PAULI

NORTH, SOUTH = 1, -1


@dataclass(frozen=True)
class TNConfig:
    ell: float = 1.0
    centers: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    chart_tol: float = 1e-3

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "centers", c)
        if not self.ell > 0:
            raise ValueError("ell must be positive")
        for a, b in combinations(range(len(c)), 2):
            if np.linalg.norm(c[a] - c[b]) == 0.0:
                raise CenterCollision(f"centers {a} and {b} coincide")

    @property
    def k(self) -> int:
        return len(self.centers)


@dataclass(frozen=True)
class ChartPoint:
    t: np.ndarray
    tau: float = 0.0
    chart_flags: tuple[int, ...] = ()


@dataclass
class FramePoint:
    V: float
    omega: np.ndarray
    coframe: np.ndarray
    clifford: np.ndarray
    gamma: np.ndarray


# Clifford units: c^a = [[0, A_a], [-A_a^dag, 0]] on S+ (+) S-, A_j = i sigma_j, A_4 = 1.
_A = np.array([1j * PAULI[0], 1j * PAULI[1], 1j * PAULI[2], np.eye(2)], dtype=complex)


def _clifford() -> np.ndarray:
    c = np.zeros((4, 4, 4), dtype=complex)
    for a in range(4):
        c[a, :2, 2:] = _A[a]
        c[a, 2:, :2] = -_A[a].conj().T
    return c


CLIFFORD = _clifford()
GAMMA = -CLIFFORD[0] @ CLIFFORD[1] @ CLIFFORD[2] @ CLIFFORD[3]
# block of c^a mapping S+ to S-
C_PLUS = np.array([-a.conj().T for a in _A])


def chart_flags_for(cfg: TNConfig, t: np.ndarray) -> tuple[int, ...]:
    t = np.asarray(t, dtype=float)
    return tuple(NORTH if t[2] - nu[2] >= 0 else SOUTH for nu in cfg.centers)


def make_point(cfg: TNConfig, t, tau: float = 0.0, flags=None) -> ChartPoint:
    t = np.asarray(t, dtype=float)
    if flags is None:
        flags = chart_flags_for(cfg, t)
    p = ChartPoint(t=t, tau=float(tau), chart_flags=tuple(int(f) for f in flags))
    check_point(cfg, p)
    return p


def check_point(cfg: TNConfig, p: ChartPoint) -> None:
    for s, nu in enumerate(cfg.centers):
        x = p.t - nu
        r = np.linalg.norm(x)
        if r == 0.0:
            raise CenterCollision(f"point coincides with center {s}")
        flag = p.chart_flags[s]
        # angle from the excluded half-axis (-z for north, +z for south)
        cos_excl = -flag * x[2] / r
        if cos_excl > np.cos(cfg.chart_tol):
            raise OnDiracString(f"point within {cfg.chart_tol} rad of the string of center {s}")


def potential(cfg: TNConfig, t) -> np.ndarray | float:
    t = np.asarray(t, dtype=float)
    V = np.full(t.shape[:-1], cfg.ell)
    for s, nu in enumerate(cfg.centers):
        r = np.linalg.norm(t - nu, axis=-1)
        if np.any(r == 0.0):
            raise CenterCollision(f"point coincides with center {s}")
        V = V + 0.5 / r
    return V if V.ndim else float(V)


def grad_potential(cfg: TNConfig, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    g = np.zeros_like(t)
    for nu in cfg.centers:
        x = t - nu
        r = np.linalg.norm(x, axis=-1)[..., None]
        g -= 0.5 * x / r**3
    return g


def eta(x, flag) -> np.ndarray:
    """Monopole one-form about the origin: north (cos th - 1)/2 dphi, south (cos th + 1)/2 dphi.

    ``x`` has shape (..., 3); ``flag`` broadcasts against x[..., 0].
    """
    x = np.asarray(x, dtype=float)
    flag = np.asarray(flag)
    r = np.linalg.norm(x, axis=-1)
    den = 2.0 * r * (r + flag * x[..., 2])
    out = np.zeros_like(x)
    out[..., 0] = flag * x[..., 1] / den
    out[..., 1] = -flag * x[..., 0] / den
    return out


def omega_at(cfg: TNConfig, t, flags) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    w = np.zeros_like(t)
    for s, nu in enumerate(cfg.centers):
        w += eta(t - nu, flags[s])
    return w


def omega(cfg: TNConfig, p: ChartPoint) -> np.ndarray:
    check_point(cfg, p)
    return omega_at(cfg, p.t, p.chart_flags)


def coframe_at(V, w) -> np.ndarray:
    """Rows theta^a in the basis (dt1, dt2, dt3, dtau); broadcasts over leading axes."""
    V = np.asarray(V, dtype=float)
    w = np.asarray(w, dtype=float)
    sv = np.sqrt(V)
    th = np.zeros(V.shape + (4, 4))
    for j in range(3):
        th[..., j, j] = sv
        th[..., 3, j] = w[..., j] / sv
    th[..., 3, 3] = 1.0 / sv
    return th


def metric_at(V, w) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    w = np.asarray(w, dtype=float)
    g = np.zeros(V.shape + (4, 4))
    for i in range(3):
        for j in range(3):
            g[..., i, j] = w[..., i] * w[..., j] / V
        g[..., i, i] += V
        g[..., i, 3] = g[..., 3, i] = w[..., i] / V
    g[..., 3, 3] = 1.0 / V
    return g


def metric(cfg: TNConfig, p: ChartPoint) -> np.ndarray:
    return metric_at(potential(cfg, p.t), omega(cfg, p))


def frame_at(cfg: TNConfig, p: ChartPoint) -> FramePoint:
    w = omega(cfg, p)
    V = potential(cfg, p.t)
    return FramePoint(V=V, omega=w, coframe=coframe_at(V, w), clifford=CLIFFORD.copy(),
                      gamma=GAMMA.copy())


def frame_vectors(coframe: np.ndarray) -> np.ndarray:
    """Columns are the dual frame Theta_a in coordinate components."""
    return np.linalg.inv(coframe)


# ---- two-forms in the orthonormal frame ----

PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def _levi4() -> np.ndarray:
    eps = np.zeros((4,) * 4)
    from itertools import permutations

    for perm in permutations(range(4)):
        inv = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
        eps[perm] = (-1) ** inv
    return eps


EPS4 = _levi4()


def twoform_to_matrix(f) -> np.ndarray:
    f = np.asarray(f)
    F = np.zeros(f.shape[:-1] + (4, 4), dtype=f.dtype)
    for n, (a, b) in enumerate(PAIRS):
        F[..., a, b] = f[..., n]
        F[..., b, a] = -f[..., n]
    return F


def matrix_to_twoform(F) -> np.ndarray:
    F = np.asarray(F)
    return np.stack([F[..., a, b] for a, b in PAIRS], axis=-1)


def hodge_star2(f) -> np.ndarray:
    F = twoform_to_matrix(f)
    S = 0.5 * np.einsum("abcd,...cd->...ab", EPS4, F)
    return matrix_to_twoform(S)


def sd_forms() -> np.ndarray:
    """w^i = 1/2 theta^i ^ theta^4 + 1/4 eps_ijk theta^j ^ theta^k."""
    w = np.zeros((3, 6))
    idx = {p: n for n, p in enumerate(PAIRS)}
    eps3 = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}
    for i in range(3):
        w[i, idx[(i, 3)]] += 0.5
        for (a, j, k), s in eps3.items():
            if a == i and j < k:
                w[i, idx[(j, k)]] += 0.5 * s
    return w


def clifford_of_2form(f) -> np.ndarray:
    """Cl(sum_{a<b} f_ab theta^a ^ theta^b) = sum_{a<b} f_ab c^a c^b."""
    f = np.asarray(f)
    out = np.zeros(f.shape[:-1] + (4, 4), dtype=complex)
    for n, (a, b) in enumerate(PAIRS):
        out = out + f[..., n, None, None] * (CLIFFORD[a] @ CLIFFORD[b])
    return out


# ---- curvature by finite differences ----

def _stencil_ok(cfg: TNConfig, t: np.ndarray, flags) -> None:
    try:
        check_point(cfg, ChartPoint(t=t, chart_flags=tuple(flags)))
    except (OnDiracString, CenterCollision) as exc:
        raise ChartBoundary(f"finite-difference stencil leaves the chart: {exc}") from exc


def _metric_t(cfg, t, flags):
    return metric_at(potential(cfg, t), omega_at(cfg, t, flags))


def christoffel_fd(cfg: TNConfig, t: np.ndarray, flags, h: float) -> np.ndarray:
    """Gamma^r_{mn} from central differences of the metric (no tau dependence)."""
    g = _metric_t(cfg, t, flags)
    dg = np.zeros((4, 4, 4))  # dg[m] = d_m g
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        _stencil_ok(cfg, t + e, flags)
        _stencil_ok(cfg, t - e, flags)
        dg[m] = (_metric_t(cfg, t + e, flags) - _metric_t(cfg, t - e, flags)) / (2 * h)
    gi = np.linalg.inv(g)
    # Gamma_{l m n} = 1/2 (d_m g_ln + d_n g_lm - d_l g_mn)
    low = 0.5 * (np.einsum("mln->lmn", dg) + np.einsum("nlm->lmn", dg) - dg)
    return np.einsum("rl,lmn->rmn", gi, low)


def riemann_fd(cfg: TNConfig, t: np.ndarray, flags, h: float):
    """Coordinate Riemann R^r_{s m n} and the Christoffels at t."""
    G = christoffel_fd(cfg, t, flags, h)
    dG = np.zeros((4, 4, 4, 4))  # dG[m] = d_m Gamma
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        dG[m] = (christoffel_fd(cfg, t + e, flags, h) - christoffel_fd(cfg, t - e, flags, h)) / (2 * h)
    # R^r_{smn} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}
    R = (np.einsum("mrns->rsmn", dG) - np.einsum("nrms->rsmn", dG)
         + np.einsum("rml,lns->rsmn", G, G) - np.einsum("rnl,lms->rsmn", G, G))
    return R, G


def frame_riemann(cfg: TNConfig, t, flags, h: float) -> np.ndarray:
    """R_{abcd} in the orthonormal frame (first pair: endomorphism, second: form)."""
    R, _ = riemann_fd(cfg, t, flags, h)
    g = _metric_t(cfg, t, flags)
    th = coframe_at(potential(cfg, t), omega_at(cfg, t, flags))
    E = frame_vectors(th)
    Rlow = np.einsum("pr,rsmn->psmn", g, R)
    return np.einsum("psmn,pa,sb,mc,nd->abcd", Rlow, E, E, E, E)


def curl_fd(f, t: np.ndarray, h: float) -> np.ndarray:
    d = np.zeros((3, 3))
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        d[m] = (f(t + e) - f(t - e)) / (2 * h)
    # d[m, j] = d_m f_j
    return np.array([d[1, 2] - d[2, 1], d[2, 0] - d[0, 2], d[0, 1] - d[1, 0]])


def domega_residual(cfg: TNConfig, p: ChartPoint, h: float) -> float:
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        _stencil_ok(cfg, p.t + e, p.chart_flags)
        _stencil_ok(cfg, p.t - e, p.chart_flags)
    c = curl_fd(lambda x: omega_at(cfg, x, p.chart_flags), p.t, h)
    return float(np.abs(c - grad_potential(cfg, p.t)).max())


def sympl_residual(cfg: TNConfig, t, flags, h: float) -> float:
    """max |nabla w^i| with coordinate components from the analytic coframe."""
    G = christoffel_fd(cfg, t, flags, h)
    W = twoform_to_matrix(sd_forms())

    def wcoord(x):
        th = coframe_at(potential(cfg, x), omega_at(cfg, x, flags))
        return np.einsum("iab,am,bn->imn", W, th, th)

    w0 = wcoord(t)
    dw = np.zeros((4, 3, 4, 4))
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        dw[m] = (wcoord(t + e) - wcoord(t - e)) / (2 * h)
    nab = (dw - np.einsum("kmn,ikl->minl", G, w0) - np.einsum("kml,ink->minl", G, w0))
    return float(np.abs(nab).max())


def curvature_checks(cfg: TNConfig, p: ChartPoint, h: float) -> dict[str, float]:
    Rf = frame_riemann(cfg, p.t, p.chart_flags, h)
    forms = matrix_to_twoform(Rf)  # (4, 4, 6) indexed by the endomorphism pair
    sd = forms + hodge_star2(forms)
    return {
        "riemann_asd_residual": float(np.abs(sd).max()),
        "sympl_const_residual": sympl_residual(cfg, p.t, p.chart_flags, h),
        "domega_residual": domega_residual(cfg, p, h),
    }


def random_points(cfg: TNConfig, rng: np.random.Generator, n: int, rmin: float = 1.0,
                  rmax: float = 3.0, min_angle: float = 0.1) -> list[ChartPoint]:
    """Points at distance in [rmin, rmax] from the nearest center, away from string axes."""
    pts: list[ChartPoint] = []
    cen = cfg.centers if cfg.k else np.zeros((1, 3))
    while len(pts) < n:
        base = cen[rng.integers(len(cen))]
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        t = base + d * rng.uniform(rmin, rmax)
        if cfg.k:
            dist = np.linalg.norm(t - cfg.centers, axis=1)
            if dist.min() < rmin:
                continue
            x = t - cfg.centers
            cosz = np.abs(x[:, 2]) / dist
            if np.any(cosz > np.cos(min_angle)):
                continue
        pts.append(make_point(cfg, t, tau=rng.uniform(0, 2 * np.pi)))
    return pts


def fd_order(r_coarse: float, r_fine: float, floor: float = 0.0) -> float:
    """Observed order from residuals at h and h/2; inf when both sit at the floor."""
    if r_fine <= floor and r_coarse <= floor:
        return float("inf")
    if r_fine <= 0:
        return float("inf")
    return float(np.log2(r_coarse / r_fine))
