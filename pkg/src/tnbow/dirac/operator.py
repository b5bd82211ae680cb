"""Discretized twisted Dirac operators D_s^+ : S+ -> S- on truncated TN_k.

Fields are reduced to a tau mode e^{i n tau}.  With the effective 3d gauge field
    Phi = n + A_tau,   cA_j = A_j - omega_j Phi,
the positive Dirac operator reads
    D+ = sum_j C_j V^{-1/2} (d_j + i cA_j) + C_4 i sqrt(V) Phi + sum_a C_a Omega+_a,
with C_a the S+ -> S- block of c^a and Omega+ the S+ spin connection.  Spatial
derivatives are central link differences.  A Wilson term C_4 i (w h/2) s(x) (-Lap_h) enters
alongside Phi and lifts the lattice doublers.  The local scale |s(x)| matches the principal
symbol and is floored by h sqrt(V) |Phi|, so the doubler masses always beat the Higgs term,
which grows like 1/sqrt(r) at a nut.  The sign of s is constant over the lattice and equals the
sign of Phi at the nut (at infinity when there is none or Phi vanishes there).  A sign flip
inside the lattice traps doubler modes on the flip surface, and a sign opposite to Phi(nut)
binds a doubler mode to the nut, where the layouts' axes meet.

Node layouts:
  cartesian  a ball of a cubic lattice;
  axial      the (rho, z) half-plane for centers on the z axis, fields e^{i(j - sigma_3/2) phi};
  parabolic  one center, coordinates xi = sqrt(r + z'), zeta = sqrt(r - z') about it.  The
             TN metric is conformally flat in (xi, zeta) with the smooth factor 1 + 2 ell r, the
             two half-axes become coordinate axes, and the nut is a regular corner.

The reduced layouts difference u = sqrt(rho) chi rather than chi, with u = 0 beyond the axis.
This removes the real term sigma_1/(2 rho), which would otherwise mix with the imaginary
symbols of the other terms and let D+^dag D+ vanish at doubler momenta near the axis.

Matrices act on L2-normalized unknowns psi~ = W^{1/2} psi, W the volume weight, so
Dminus := Dplus^dag is the true adjoint.  Both are square over an extended node set
(the ball plus one layer); Dirichlet conditions mean restricting columns to the ball.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import abelian, geometry as geo
from ..errors import GridTooCoarse, StringIntersection

C_PLUS = geo.C_PLUS  # S+ -> S- blocks of c^1..c^4
C_MINUS = -np.conj(np.swapaxes(C_PLUS, -1, -2))  # S- -> S+ blocks A_a
LAYOUTS = ("cartesian", "axial", "parabolic")


@dataclass(frozen=True)
class Bundle:
    """Rank-one twist A_E = -lam a0 - sum_sigma m_sigma a^(sigma)."""

    lam: float = 0.0
    m: tuple = ()
    extra: object = None  # optional callable t -> (..., 4) coordinate one-form, added to A

    def charges(self, k: int) -> np.ndarray:
        m = np.zeros(k)
        if len(self.m):
            m[:] = np.asarray(self.m, dtype=float)
        return m


@dataclass(frozen=True)
class GridDomain:
    """Dirichlet ball of radius R_max.

    ``h`` is the lattice step in the layout's own coordinates (for ``parabolic`` the step in
    xi and zeta, so the spacing in t is sqrt(2 r) h).  ``j`` is the half-integer angular
    momentum of the reduced layouts.
    """

    R_max: float
    h: float
    n: int = 0
    center: tuple = (0.0, 0.0, 0.0)
    layout: str = "cartesian"
    j: float = 0.5
    offset: tuple = (0.5, 0.5, 0.5)
    wilson: float = 1.0


@dataclass
class Lattice:
    pts: np.ndarray          # (N, 3) points in t (reduced layouts: the phi = 0 slice)
    interior: np.ndarray     # (N,) bool
    fwd: np.ndarray          # (dim, N) forward neighbor index or -1
    step: np.ndarray         # (dim, 3) displacement in t per direction (cartesian, axial)
    weight: np.ndarray       # (N,) volume weight without V
    layout: str
    h: float
    coords: np.ndarray | None = None   # layout coordinates (N, dim)

    @property
    def size(self) -> int:
        return len(self.pts)


def _box_lattice(shape, lo, inside_fn, dim):
    """Index box with per-axis lower bounds; keeps the inside set plus one layer."""
    axes = [np.arange(l, l + s) for l, s in zip(lo, shape)]
    idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    inside = inside_fn(idx).reshape(shape)
    ext = inside.copy()
    for d in range(dim):
        for sgn in (1, -1):
            sh = np.zeros_like(inside)
            src = [slice(None)] * dim
            dst = [slice(None)] * dim
            if sgn == 1:
                src[d], dst[d] = slice(0, -1), slice(1, None)
            else:
                src[d], dst[d] = slice(1, None), slice(0, -1)
            sh[tuple(dst)] = inside[tuple(src)]
            ext |= sh
    keep = ext.reshape(-1)
    flat = -np.ones(int(np.prod(shape)), dtype=np.int64)
    flat[keep] = np.arange(keep.sum())
    flat = flat.reshape(shape)
    fwd = np.full((dim, int(keep.sum())), -1, dtype=np.int64)
    grid_idx = np.stack(np.nonzero(ext), axis=-1)
    for d in range(dim):
        nb = grid_idx.copy()
        nb[:, d] += 1
        ok = nb[:, d] < shape[d]
        f = np.full(len(nb), -1, dtype=np.int64)
        f[ok] = flat[tuple(nb[ok].T)]
        fwd[d] = f
    return idx[keep], inside.reshape(-1)[keep], fwd


def build_lattice(cfg: geo.TNConfig, grid: GridDomain) -> Lattice:
    h = grid.h
    R = grid.R_max
    c = np.asarray(grid.center, dtype=float)
    if grid.layout not in LAYOUTS:
        raise ValueError(f"unknown layout {grid.layout!r}")
    if cfg.k > 1:
        sep = min(np.linalg.norm(a - b) for i, a in enumerate(cfg.centers) for b in cfg.centers[i + 1:])
        if h >= sep / 8:
            raise GridTooCoarse(f"h={h} must be below a center separation / 8 = {sep / 8:.4g}")
    if grid.layout == "parabolic":
        if cfg.k != 1:
            raise ValueError("parabolic layout needs exactly one center")
        if h > np.sqrt(2 * R) / 4:
            raise GridTooCoarse("fewer than four cells across the domain radius")
    elif h > R / 4:
        raise GridTooCoarse("fewer than four cells across the domain radius")
    off = np.asarray(grid.offset, dtype=float)
    if grid.layout == "cartesian":
        m = int(np.ceil(R / h)) + 2
        idx, inside, fwd = _box_lattice((2 * m + 1,) * 3, (-m,) * 3,
                                        lambda I: np.linalg.norm(h * (I + off), axis=1) <= R,
                                        3)
        pts = c + h * (idx + off)
        lat = Lattice(pts=pts, interior=inside, fwd=fwd, step=h * np.eye(3),
                      weight=np.full(len(pts), h**3), layout="cartesian", h=h,
                      coords=pts - c)
    elif grid.layout == "axial":
        if cfg.k and np.abs(cfg.centers[:, :2]).max() > 0:
            raise ValueError("axial layout needs all centers on the z axis")
        m = int(np.ceil(R / h)) + 2

        def inside_fn(I):
            return np.hypot(h * (I[:, 0] + 0.5), h * (I[:, 1] + off[2])) <= R

        idx, inside, fwd = _box_lattice((m + 1, 2 * m + 1), (0, -m), inside_fn, 2)
        rho = h * (idx[:, 0] + 0.5)
        z = c[2] + h * (idx[:, 1] + off[2])
        pts = np.stack([rho, np.zeros_like(rho), z], axis=1)
        lat = Lattice(pts=pts, interior=inside, fwd=fwd,
                      step=np.array([[h, 0, 0], [0, 0, h]], dtype=float),
                      weight=rho * h**2, layout="axial", h=h,
                      coords=np.stack([rho, z - c[2]], axis=1))
    else:
        nu = cfg.centers[0]
        if abs(nu[0]) + abs(nu[1]) > 0:
            raise ValueError("parabolic layout needs the center on the z axis")
        m = int(np.ceil(np.sqrt(2 * R) / h)) + 2

        def inside_fn(I):
            xi, ze = h * (I[:, 0] + 0.5), h * (I[:, 1] + 0.5)
            return 0.5 * (xi**2 + ze**2) <= R

        idx, inside, fwd = _box_lattice((m + 1, m + 1), (0, 0), inside_fn, 2)
        xi, ze = h * (idx[:, 0] + 0.5), h * (idx[:, 1] + 0.5)
        rho = xi * ze
        z = nu[2] + 0.5 * (xi**2 - ze**2)
        pts = np.stack([rho, np.zeros_like(rho), z], axis=1)
        lat = Lattice(pts=pts, interior=inside, fwd=fwd, step=np.zeros((2, 3)),
                      weight=rho * (xi**2 + ze**2) * h**2, layout="parabolic", h=h,
                      coords=np.stack([xi, ze], axis=1))
    _check_strings(cfg, lat)
    return lat


def _check_strings(cfg: geo.TNConfig, lat: Lattice) -> None:
    for nu in cfg.centers:
        d = lat.pts - nu
        r = np.linalg.norm(d, axis=1)
        rho = np.hypot(d[:, 0], d[:, 1])
        if np.any(r < 1e-9 * lat.h):
            raise StringIntersection("a node coincides with a center")
        if lat.layout == "cartesian" and np.any((rho < 1e-6 * lat.h) & (d[:, 2] < 0)):
            raise StringIntersection("a node lies on a Dirac string")


def _fields(cfg, s, bundle: Bundle, x, lengths):
    """V, omega, A (coordinate components, 4) at points x with north charts."""
    flags = np.full(x.shape[:-1] + (cfg.k,), geo.NORTH)
    V = geo.potential(cfg, x)
    w = geo.omega_at(cfg, x, np.moveaxis(flags, -1, 0)) if cfg.k else np.zeros_like(x)
    c0, cs = abelian.connection_coeffs(s, cfg, lengths, (bundle.lam, bundle.charges(cfg.k)))
    A = np.zeros(x.shape[:-1] + (4,))
    if cfg.k or c0:
        a0, asig = abelian.basis_forms(cfg, x, flags)
        A = c0 * a0
        for k, cc in enumerate(cs):
            if cc:
                A = A + cc * asig[k]
    if bundle.extra is not None:
        A = A + bundle.extra(x)
    return V, w, A


def effective_fields(cfg, s, bundle, x, n, lengths=None):
    """V, Phi = n + A_tau and cA = A - omega Phi at points x."""
    V, w, A = _fields(cfg, s, bundle, x, lengths)
    Phi = n + A[..., 3]
    cA = A[..., :3] - w * Phi[..., None]
    return V, Phi, cA


def spin_plus(cfg: geo.TNConfig, x: np.ndarray, h: float = 1e-4, block: str = "plus") -> np.ndarray:
    """Spin connection Omega_a (..., 4, 2, 2) on S+ (or S- with block="minus"), from d theta^a."""
    flags = np.full(x.shape[:-1] + (cfg.k,), geo.NORTH)
    fl = np.moveaxis(flags, -1, 0)

    def coframe(y):
        V = geo.potential(cfg, y)
        w = geo.omega_at(cfg, y, fl) if cfg.k else np.zeros_like(y)
        return geo.coframe_at(V, w)

    th = coframe(x)
    E = np.linalg.inv(th)  # E[..., mu, a]
    dth = np.zeros(th.shape[:-2] + (4, 4, 4))  # [..., m, a, n] = d_m theta^a_n
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        dth[..., m, :, :] = (coframe(x + e) - coframe(x - e)) / (2 * h)
    # d theta^c (Theta_a, Theta_b) = (d_m theta^c_n - d_n theta^c_m) E^m_a E^n_b = -C^c_ab
    curl = np.einsum("...mcn,...ma,...nb->...abc", dth, E, E)
    Cabc = -(curl - np.swapaxes(curl, -3, -2))
    Gam = 0.5 * (Cabc - np.einsum("...bca->...abc", Cabc) + np.einsum("...cab->...abc", Cabc))
    # rho_a = 1/4 sum_{bc} Gamma_abc c^b c^c
    sl = slice(0, 2) if block == "plus" else slice(2, 4)
    cc = np.einsum("bij,cjk->bcik", geo.CLIFFORD, geo.CLIFFORD)[:, :, sl, sl]
    return 0.25 * np.einsum("...abc,bcik->...aik", Gam, cc)


@dataclass
class DiracDiscretization:
    Dplus: sp.csr_matrix
    Dminus: sp.csr_matrix
    s: float
    bundle: Bundle
    grid: GridDomain
    lattice: Lattice
    V: np.ndarray
    extras: dict = field(default_factory=dict)

    @property
    def interior_cols(self) -> np.ndarray:
        return np.flatnonzero(np.repeat(self.lattice.interior, 2))

    @property
    def weight(self) -> np.ndarray:
        return self.V * self.lattice.weight


class _Coo:
    def __init__(self):
        self.r, self.c, self.v = [], [], []

    def add(self, r, c, blocks):
        for a in range(2):
            for b in range(2):
                self.r.append(2 * r + a)
                self.c.append(2 * c + b)
                self.v.append(blocks[:, a, b])

    def matrix(self, N):
        return sp.csr_matrix((np.concatenate(self.v), (np.concatenate(self.r), np.concatenate(self.c))),
                             shape=(2 * N, 2 * N))


def _principal(lat: Lattice, V: np.ndarray):
    """Per direction: coefficient K_d (N, 2, 2) of d/dx_d in D+, and the Wilson scale (N,)."""
    isv = 1.0 / np.sqrt(V)
    if lat.layout == "cartesian":
        K = [C_PLUS[d][None] * isv[:, None, None] for d in range(3)]
        return K, np.sqrt(V)
    if lat.layout == "axial":
        K = [C_PLUS[0][None] * isv[:, None, None], C_PLUS[2][None] * isv[:, None, None]]
        return K, np.sqrt(V)
    xi, ze = lat.coords[:, 0], lat.coords[:, 1]
    J = xi**2 + ze**2
    f = (isv / J)[:, None, None]
    K = [(ze[:, None, None] * C_PLUS[0] + xi[:, None, None] * C_PLUS[2]) * f,
         (xi[:, None, None] * C_PLUS[0] - ze[:, None, None] * C_PLUS[2]) * f]
    return K, isv / np.sqrt(J)


def asymptotic_higgs(cfg, s, bundle, n, lengths=None) -> float:
    far = np.array([[0.0, 0.0, 1e9]])
    return float(effective_fields(cfg, s, bundle, far, n, lengths)[1][0])


def wilson_sign(cfg, s, bundle, grid, lat, Phi, lengths=None) -> float:
    """Sign of Phi at the nut nearest the domain center, else at infinity."""
    ref = 0.0
    if cfg.k:
        c = lat.pts[np.argmin(np.linalg.norm(lat.pts - np.asarray(grid.center, float), axis=1))]
        nut = cfg.centers[np.argmin(np.linalg.norm(cfg.centers - c, axis=1))]
        ref = Phi[np.argmin(np.linalg.norm(lat.pts - nut, axis=1))]
    if abs(ref) < 1e-9:
        ref = asymptotic_higgs(cfg, s, bundle, grid.n, lengths)
    return 1.0 if ref >= 0 else -1.0


def wilson_profile(lat: Lattice, V: np.ndarray, Phi: np.ndarray, sign: float = 1.0) -> np.ndarray:
    """Signed Wilson strength s(x) = sign * max(principal scale, h sqrt(V) |Phi|)."""
    _, base = _principal(lat, V)
    return sign * np.maximum(base, lat.h * np.sqrt(V) * np.abs(Phi))


def _assemble(cfg, s, bundle, grid, lat, lengths, with_spin=True, wprof=None):
    N = lat.size
    h = lat.h
    x = lat.pts
    V, Phi, cA = effective_fields(cfg, s, bundle, x, grid.n, lengths)
    K, _ = _principal(lat, V)
    if wprof is None:
        wprof = wilson_profile(lat, V, Phi, wilson_sign(cfg, s, bundle, grid, lat, Phi, lengths))
    ww = 0.5 * grid.wilson * h * wprof / h**2
    C4i = 1j * C_PLUS[3]

    out = _Coo()
    diag = C4i[None] * (np.sqrt(V) * Phi)[:, None, None]
    reduced = lat.layout in ("axial", "parabolic")
    # reduced layouts difference u = sqrt(rho) chi, so hops carry sqrt(rho_c / rho_r)
    sq = np.sqrt(x[:, 0]) if reduced else None
    for d in range(len(K)):
        nb = lat.fwd[d]
        ok = nb >= 0
        r = np.flatnonzero(ok)
        c = nb[ok]
        if lat.layout == "parabolic":
            U = np.ones(len(r), dtype=complex)
        else:
            mid = x[r] + 0.5 * lat.step[d]
            _, _, cAm = effective_fields(cfg, s, bundle, mid, grid.n, lengths)
            U = np.exp(1j * cAm @ lat.step[d])
        if reduced:
            U_rc = U * sq[c] / sq[r]
            U_cr = np.conj(U) * sq[r] / sq[c]
        else:
            U_rc, U_cr = U, np.conj(U)
        # central difference plus Wilson hop, both ways along the link r -> c
        fr = K[d][r] / (2 * h) - C4i[None] * ww[r, None, None]
        fc = -K[d][c] / (2 * h) - C4i[None] * ww[c, None, None]
        out.add(r, c, fr * U_rc[:, None, None])
        out.add(c, r, fc * U_cr[:, None, None])
        diag = diag + C4i[None] * (2 * ww)[:, None, None]
    if reduced:
        # angular part i sigma_2 (j + cA_phi)/rho; u vanishes beyond the axis
        rho = x[:, 0]
        cAphi = rho * cA[:, 1]
        diag = diag + C_PLUS[1][None] * (1j * (grid.j + cAphi) / (rho * np.sqrt(V)))[:, None, None]
    if with_spin and cfg.k:
        Om = spin_plus(cfg, x)
        diag = diag + np.einsum("aij,najk->nik", C_PLUS, Om)
    out.add(np.arange(N), np.arange(N), diag)
    D = out.matrix(N)
    s_half = np.repeat(np.sqrt(V * lat.weight), 2)
    Dt = sp.diags(s_half) @ D @ sp.diags(1.0 / s_half)
    return Dt.tocsr(), V, wprof


def build_dirac(cfg: geo.TNConfig, s: float, bundle: Bundle, grid: GridDomain, lengths=None,
                lattice: Lattice | None = None, with_spin: bool = True,
                wilson: np.ndarray | None = None) -> DiracDiscretization:
    """Assemble D+ and D- = D+^dag.

    ``wilson`` freezes the Wilson profile s(x) (see ``extras["wilson"]`` of another build);
    the s-derivative of D is then exactly C_4 i / sqrt(V).
    """
    lat = lattice if lattice is not None else build_lattice(cfg, grid)
    Dp, V, wp = _assemble(cfg, s, bundle, grid, lat, lengths, with_spin, wilson)
    return DiracDiscretization(Dplus=Dp, Dminus=Dp.conj().T.tocsr(), s=s, bundle=bundle,
                               grid=grid, lattice=lat, V=V, extras={"wilson": wp})


def rough_laplacian_matrix(cfg: geo.TNConfig, s: float, bundle: Bundle, grid: GridDomain,
                           lat: Lattice, lengths=None) -> sp.csr_matrix:
    """nabla^* nabla = sum_j N_j^dag N_j + V Phi^2 on S+ (Cartesian), in the unknowns of Dplus.

    N_j = V^{-1/2}(d_j + i cA_j) is the central link difference used by Dplus, so the lattice
    Weitzenbock identity compares like with like.
    """
    if lat.layout != "cartesian":
        raise ValueError("Laplacian assembled on the Cartesian layout only")
    N = lat.size
    h = lat.h
    x = lat.pts
    V, Phi, _ = effective_fields(cfg, s, bundle, x, grid.n, lengths)
    s_half = np.sqrt(V * lat.weight)
    isv = 1.0 / np.sqrt(V)
    L = sp.diags((V * Phi**2).astype(complex))
    for d in range(3):
        nb = lat.fwd[d]
        ok = nb >= 0
        r = np.flatnonzero(ok)
        c = nb[ok]
        _, _, cAm = effective_fields(cfg, s, bundle, x[r] + 0.5 * lat.step[d], grid.n, lengths)
        U = np.exp(1j * h * cAm[:, d])
        vals = np.concatenate([U * isv[r] / (2 * h) * s_half[r] / s_half[c],
                               -np.conj(U) * isv[c] / (2 * h) * s_half[c] / s_half[r]])
        Nd = sp.csr_matrix((vals, (np.concatenate([r, c]), np.concatenate([c, r]))), shape=(N, N))
        L = L + Nd.conj().T @ Nd
    return sp.kron(L, sp.eye(2)).tocsr()
