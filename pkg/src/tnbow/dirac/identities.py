"""Operator identities of the discretized Dirac family, checked on test sections.

All residuals are relative L2 norms ||R psi|| / ||psi|| in the normalized unknowns, with
psi a smooth compactly supported bump (times a fixed spinor and a plane wave) that sits
well inside the Dirichlet ball, so boundary rows never contribute.

Conventions: D+ = sum_a C_a nabla_a with C = C_PLUS, and on S+ the endomorphism
c^4 c^j equals i sigma_j = I_j^dag.  The identities checked are
    [D+, t^i] = C_i / sqrt(V),
    [D+, i d/ds] = C_4 / sqrt(V)          (d/ds D+ = i C_4 / sqrt(V)),
    D- D+ = -(1/V) sum_j nabla_j nabla_j + V Phi^2,
    D- (C_4 / sqrt(V)) psi = -(1/sqrt(V)) (sum_j I_j^dag nabla_j + nabla_4) psi,
with nabla_j = V^{-1/2}(d_j + i cA_j) and nabla_4 = i sqrt(V) Phi.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np
import scipy.sparse as sp

from .. import geometry as geo
from .operator import (C_PLUS, Bundle, GridDomain, Lattice, build_dirac, build_lattice,
                       effective_fields, rough_laplacian_matrix)


def bump_section(lat: Lattice, center, radius: float, spinor=(1.0, 0.5j),
                 wave=(0.7, -0.4, 0.3)) -> np.ndarray:
    """Smooth bump exp(1 - 1/(1 - r^2/a^2)) e^{i k.x} chi, flattened to (2N,)."""
    d = lat.pts - np.asarray(center, dtype=float)
    q = np.sum(d**2, axis=1) / radius**2
    b = np.zeros(len(q))
    m = q < 1
    b[m] = np.exp(1.0 - 1.0 / (1.0 - q[m]))
    ph = np.exp(1j * d @ np.asarray(wave, dtype=float))
    chi = np.asarray(spinor, dtype=complex)
    chi = chi / np.linalg.norm(chi)
    return (b * ph)[:, None] * chi[None, :]


def _blockdiag(mats: np.ndarray) -> sp.csr_matrix:
    """(N, 2, 2) node blocks -> sparse (2N, 2N)."""
    N = len(mats)
    r = np.repeat(2 * np.arange(N), 4) + np.tile([0, 0, 1, 1], N)
    c = np.repeat(2 * np.arange(N), 4) + np.tile([0, 1, 0, 1], N)
    return sp.csr_matrix((mats.reshape(-1), (r, c)), shape=(2 * N, 2 * N))


def _tilde(lat: Lattice, V: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return (np.sqrt(V * lat.weight)[:, None] * psi).reshape(-1)


def _rel(r: np.ndarray, psi: np.ndarray) -> float:
    return float(np.linalg.norm(r) / np.linalg.norm(psi))


def _setup(cfg, grid, lengths, radius_frac):
    lat = build_lattice(cfg, grid)
    V = geo.potential(cfg, lat.pts) if cfg.k else np.full(lat.size, cfg.ell)
    psi = bump_section(lat, grid.center, radius_frac * grid.R_max)
    return lat, V, _tilde(lat, V, psi)


def commutator_checks(cfg: geo.TNConfig, s: float, grid: GridDomain, bundle: Bundle | None = None,
                      lengths=None, delta: float = 1e-4, radius_frac: float = 0.8) -> dict:
    """res_t and res_s on a Cartesian ball; s +- delta must stay inside one bow interval."""
    bundle = bundle or Bundle()
    lat, V, psi = _setup(cfg, grid, lengths, radius_frac)
    D = build_dirac(cfg, s, bundle, grid, lengths, lattice=lat)
    iv = (1.0 / np.sqrt(V))[:, None, None]
    res_t = 0.0
    for i in range(3):
        t = np.repeat(lat.pts[:, i], 2)
        comm = D.Dplus @ (t * psi) - t * (D.Dplus @ psi)
        target = _blockdiag(C_PLUS[i][None] * iv) @ psi
        res_t = max(res_t, _rel(comm - target, psi))
    Dp = build_dirac(cfg, s + delta, bundle, grid, lengths, lattice=lat)
    Dm = build_dirac(cfg, s - delta, bundle, grid, lengths, lattice=lat)
    comm_s = -1j * ((Dp.Dplus - Dm.Dplus) @ psi) / (2 * delta)
    res_s = _rel(comm_s - _blockdiag(C_PLUS[3][None] * iv) @ psi, psi)
    return {"res_t": res_t, "res_s": res_s}


def weitzenbock_check(cfg: geo.TNConfig, s: float, grid: GridDomain, bundle: Bundle | None = None,
                      lengths=None, radius_frac: float = 0.8) -> float:
    """||(D- D+ - nabla^* nabla) psi|| / ||psi||."""
    bundle = bundle or Bundle()
    lat, V, psi = _setup(cfg, grid, lengths, radius_frac)
    D = build_dirac(cfg, s, bundle, grid, lengths, lattice=lat)
    L = rough_laplacian_matrix(cfg, s, bundle, grid, lat, lengths)
    return _rel(D.Dminus @ (D.Dplus @ psi) - L @ psi, psi)


def geomprelim_check(cfg: geo.TNConfig, s: float, grid: GridDomain, bundle: Bundle | None = None,
                     lengths=None, radius_frac: float = 0.8) -> float:
    """||D- (C_4/sqrt V) psi + V^{-1/2}(I_j^dag nabla_j + nabla_4) psi|| / ||psi||.

    The bracket is D+ without its Wilson term plus 2 nabla_4, since C_4 = -1.
    """
    bundle = bundle or Bundle()
    lat, V, psi = _setup(cfg, grid, lengths, radius_frac)
    D = build_dirac(cfg, s, bundle, grid, lengths, lattice=lat)
    D0 = build_dirac(cfg, s, bundle, replace(grid, wilson=0.0), lengths, lattice=lat)
    _, Phi, _ = effective_fields(cfg, s, bundle, lat.pts, grid.n, lengths)
    iv = 1.0 / np.sqrt(V)
    lhs = D.Dminus @ (_blockdiag(C_PLUS[3][None] * iv[:, None, None]) @ psi)
    nab4 = np.repeat(1j * np.sqrt(V) * Phi, 2)
    rhs = -np.repeat(iv, 2) * (D0.Dplus @ psi + 2 * nab4 * psi)
    return _rel(lhs - rhs, psi)


def selfdual_perturbation(cfg: geo.TNConfig, eps: float, sign: int = 1):
    """Constant-field abelian one-form eps(-y/2, x/2, 0, c z) on a flat background.

    sign=+1 gives self-dual curvature (violates the Weitzenbock identity), sign=-1
    anti-self-dual (preserves it).
    """
    if cfg.k:
        raise ValueError("the constant-field perturbation needs a flat background")
    c = sign / cfg.ell

    def extra(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (4,))
        out[..., 0] = -0.5 * eps * x[..., 1]
        out[..., 1] = 0.5 * eps * x[..., 0]
        out[..., 3] = eps * c * x[..., 2]
        return out

    return extra


def identity_sweep(cfg: geo.TNConfig, s: float, grid: GridDomain, hs=(0.2, 0.1, 0.05),
                   bundle: Bundle | None = None, lengths=None) -> dict:
    """All residuals for each h, plus observed orders between consecutive steps."""
    rows = []
    for h in hs:
        g = replace(grid, h=h)
        r = commutator_checks(cfg, s, g, bundle, lengths)
        r["weitzenbock"] = weitzenbock_check(cfg, s, g, bundle, lengths)
        r["geomprelim"] = geomprelim_check(cfg, s, g, bundle, lengths)
        rows.append(r)
    orders = {k: [geo.fd_order(a[k], b[k], floor=1e-9) for a, b in zip(rows, rows[1:])]
              for k in rows[0]}
    return {"h": list(hs), "residuals": rows, "orders": orders}


def large_gauge_check(cfg: geo.TNConfig, s: float, grid: GridDomain, bundle: Bundle | None = None,
                      lengths=None) -> float:
    """Largest gap between the singular values of D+ at (s, n) and at (s + ell, n - 1).

    Dense SVD, so the grid should be small.
    """
    bundle = bundle or Bundle()
    lat = build_lattice(cfg, grid)
    a = build_dirac(cfg, s, bundle, grid, lengths, lattice=lat)
    b = build_dirac(cfg, s + cfg.ell, bundle, replace(grid, n=grid.n - 1), lengths, lattice=lat)
    cols = a.interior_cols
    sa = np.linalg.svd(a.Dplus[:, cols].toarray(), compute_uv=False)
    sb = np.linalg.svd(b.Dplus[:, cols].toarray(), compute_uv=False)
    return float(np.abs(sa - sb).max())
