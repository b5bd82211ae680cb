"""Nahm data on bow intervals and the moment map conditions.

Covariant derivative nabla = d/ds + i T0.  The Nahm equations
[i nabla, T1] = [T2, T3] (cyclic) read
    dT1/ds = -i([T2, T3] + [T0, T1])   and cyclic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, PoleEncountered, RankMismatch, ShapeMismatch
from .quat import E_UNITS, QuatMatrix, charge_conjugate_block, im_matrix


def _comm(a, b):
    return a @ b - b @ a


def _shapes(*Ts):
    shp = np.shape(Ts[0])
    if len(shp) != 2 or shp[0] != shp[1]:
        raise ShapeMismatch(f"expected square matrices, got {shp}")
    for T in Ts[1:]:
        if np.shape(T) != shp:
            raise ShapeMismatch(f"shape {np.shape(T)} differs from {shp}")


def nahm_rhs(T0, T1, T2, T3):
    _shapes(T0, T1, T2, T3)
    T0, T1, T2, T3 = (np.asarray(x, dtype=complex) for x in (T0, T1, T2, T3))
    d1 = -1j * (_comm(T2, T3) + _comm(T0, T1))
    d2 = -1j * (_comm(T3, T1) + _comm(T0, T2))
    d3 = -1j * (_comm(T1, T2) + _comm(T0, T3))
    return d1, d2, d3


def spectral_invariants(T1, T2, T3) -> np.ndarray:
    _shapes(T1, T2, T3)
    L = np.asarray(T1, dtype=complex) + 1j * np.asarray(T2, dtype=complex)
    out = []
    P = np.eye(L.shape[0], dtype=complex)
    for _ in range(L.shape[0]):
        P = P @ L
        out.append(np.trace(P))
    return np.array(out)


def pole_solution(u: float, rep: np.ndarray | None = None) -> np.ndarray:
    """T_j = -rho_j/(2u) for an su(2) triple rho with [rho_i, rho_j] = 2 i eps_ijk rho_k."""
    from .quat import PAULI

    rho = PAULI if rep is None else rep
    return -np.asarray(rho) / (2 * u)


def su2_irrep(n: int) -> np.ndarray:
    """Spin (n-1)/2 analogues of the Pauli matrices (rho_j = 2 J_j)."""
    j = (n - 1) / 2
    m = j - np.arange(n)
    Jp = np.zeros((n, n), dtype=complex)
    for a in range(1, n):
        Jp[a - 1, a] = np.sqrt(j * (j + 1) - m[a] * (m[a] + 1))
    Jx = (Jp + Jp.conj().T) / 2
    Jy = (Jp - Jp.conj().T) / (2j)
    Jz = np.diag(m).astype(complex)
    return 2 * np.array([Jx, Jy, Jz])


@dataclass
class Segment:
    """Nahm data on one subinterval: T[i, a] is T^a at s[i] (a = 0..3)."""

    s: np.ndarray
    T: np.ndarray

    @property
    def rank(self) -> int:
        return self.T.shape[-1]


@dataclass
class BowRep:
    lengths: np.ndarray
    lam: list = field(default_factory=list)
    lam0: list = field(default_factory=list)

    @property
    def ell(self) -> float:
        return float(np.sum(self.lengths))

    @property
    def p(self) -> np.ndarray:
        return np.cumsum(self.lengths)


@dataclass
class BowDataGrid:
    """Segments ordered along the circle from s = 0.

    ``edges[sigma]`` = (index of segment ending at p_sigma, index of segment starting there),
    ``B[sigma]`` has shape (2 R-, R+), ``Q[lam]`` shape (2 R,).
    """

    segments: list
    B: dict = field(default_factory=dict)
    Q: dict = field(default_factory=dict)

    def check_hermitian(self, tol: float = 1e-12) -> float:
        worst = 0.0
        for seg in self.segments:
            if seg.T.size:
                worst = max(worst, float(np.abs(seg.T - np.conj(np.swapaxes(seg.T, -1, -2))).max()))
        return worst


def _rk4_step(T, h):
    def f(X):
        d = nahm_rhs(np.zeros_like(X[0]), X[0], X[1], X[2])
        return np.array(d)

    k1 = f(T)
    k2 = f(T + 0.5 * h * k1)
    k3 = f(T + 0.5 * h * k2)
    k4 = f(T + h * k3)
    return T + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _herm(X):
    return 0.5 * (X + np.conj(np.swapaxes(X, -1, -2)))


def integrate_nahm(s_out: np.ndarray, T_init, gauge_T0=None, rhs_tol: float = 0.05,
                   max_step: float | None = None, min_step: float = 1e-6) -> Segment:
    """RK4 in the gauge T0 = 0 from s_out[0] through the (monotone) output nodes.

    ``T_init`` holds (T1, T2, T3) at s_out[0].  A nonzero ``gauge_T0`` is not supported
    by the integrator; it is accepted only as None or zeros.
    """
    T = _herm(np.asarray(T_init, dtype=complex))
    if T.ndim != 3 or T.shape[0] != 3 or T.shape[1] != T.shape[2]:
        raise ShapeMismatch("initial data must be (3, n, n)")
    if gauge_T0 is not None and np.any(np.asarray(gauge_T0) != 0):
        raise ValueError("integration is carried out in the gauge T0 = 0")
    s_out = np.asarray(s_out, dtype=float)
    direction = np.sign(s_out[-1] - s_out[0]) or 1.0
    out = np.zeros((len(s_out), 4) + T.shape[1:], dtype=complex)
    out[0, 1:] = T
    s = s_out[0]
    for i in range(1, len(s_out)):
        target = s_out[i]
        while (target - s) * direction > 1e-15:
            normT = max(np.linalg.norm(T), 1e-300)
            h = min(abs(target - s), 0.1 / normT)
            if max_step is not None:
                h = min(h, max_step)
            rn = np.linalg.norm(np.array(nahm_rhs(np.zeros_like(T[0]), *T)))
            while rn * h > rhs_tol and h > min_step:
                h *= 0.5
            if h <= min_step:
                raise PoleEncountered(f"step underflow at s={s:.6g}",
                                      s_pole=float(s + direction * normT / max(rn, 1e-300)))
            T = _herm(_rk4_step(T, direction * h))
            s = s + direction * h
            if not np.all(np.isfinite(T)):
                raise PoleEncountered(f"non-finite data at s={s:.6g}", s_pole=float(s))
        s = target
        out[i, 1:] = T
    return Segment(s=s_out.copy(), T=out)


def _quat_of_T(Tvec) -> np.ndarray:
    """e_j T^j as a (2n, 2n) matrix from three n x n matrices."""
    n = Tvec[0].shape[0]
    comps = np.zeros((4, n, n), dtype=complex)
    comps[1:] = Tvec
    return QuatMatrix(comps).matrix()


def _nu_matrix(nu, n):
    return np.kron(np.einsum("j,jab->ab", np.asarray(nu, dtype=float), E_UNITS[1:]), np.eye(n))


def jump_from_Q(Q: np.ndarray) -> np.ndarray:
    """Delta T^j (3, n, n) with e_j Delta T^j = Im(i Q Q^dag)."""
    Q = np.asarray(Q, dtype=complex).reshape(-1, 1)
    X = QuatMatrix.from_matrix(im_matrix(1j * Q @ Q.conj().T))
    return X.comps[1:]


def endpoint_T_from_B(B: np.ndarray, nu) -> np.ndarray:
    """T^j(p-) with e_j T^j - nu = -Im(i B B^dag)."""
    B = np.asarray(B, dtype=complex)
    n = B.shape[0] // 2
    M = -im_matrix(1j * B @ B.conj().T) + _nu_matrix(nu, n)
    return QuatMatrix.from_matrix(M).comps[1:]


def moment_residuals(rep: BowRep, data: BowDataGrid, nu) -> dict:
    """Operator-norm residuals of the jump and endpoint conditions.

    Λ0 points are keyed by their s value in ``data.Q``; the segment ending at lam and the
    one starting there are located by node positions.  Edges use ``data.B`` keyed by sigma,
    with sigma-th edge joining the segment ending at p_sigma to the next one (cyclic).
    """
    nu = np.asarray(nu, dtype=float).reshape(-1, 3)
    out = {"jump": {}, "p_minus": {}, "p_plus": {}}
    segs = data.segments
    ell = rep.ell

    def ending_at(x):
        for i, sg in enumerate(segs):
            if abs(sg.s[-1] - x) < 1e-12 or abs(sg.s[-1] - x - ell) < 1e-12:
                return i
        raise KeyError(x)

    def starting_at(x):
        for i, sg in enumerate(segs):
            if abs(sg.s[0] - x) < 1e-12 or abs(sg.s[0] - (x % ell)) < 1e-12:
                return i
        raise KeyError(x)

    for lam in rep.lam0:
        a, b = segs[ending_at(lam)], segs[starting_at(lam)]
        if a.rank != b.rank:
            raise RankMismatch(f"ranks {a.rank} and {b.rank} differ at the Λ0 point {lam}")
        n = a.rank
        Q = np.asarray(data.Q.get(lam, np.zeros(2 * n)), dtype=complex).reshape(-1, 1)
        lhs = _quat_of_T(b.T[0, 1:] - a.T[-1, 1:])
        rhs = im_matrix(1j * Q @ Q.conj().T)
        out["jump"][lam] = float(np.linalg.norm(lhs - rhs, 2)) if n else 0.0
    for sigma, p in enumerate(rep.p):
        a, b = segs[ending_at(p)], segs[starting_at(p % ell)]
        rm, rp = a.rank, b.rank
        B = np.asarray(data.B.get(sigma, np.zeros((2 * rm, rp))), dtype=complex).reshape(2 * rm, rp)
        if rm:
            lhs = _quat_of_T(a.T[-1, 1:]) - _nu_matrix(nu[sigma], rm)
            rhs = -im_matrix(1j * B @ B.conj().T)
            out["p_minus"][sigma] = float(np.linalg.norm(lhs - rhs, 2))
        else:
            out["p_minus"][sigma] = 0.0
        if rp:
            Bc = charge_conjugate_block(B)
            lhs = _quat_of_T(b.T[0, 1:]) - _nu_matrix(nu[sigma], rp)
            rhs = im_matrix(1j * Bc @ Bc.conj().T)
            out["p_plus"][sigma] = float(np.linalg.norm(lhs - rhs, 2))
        else:
            out["p_plus"][sigma] = 0.0
    return out


@dataclass
class BowTangent:
    segments: list
    dB: dict = field(default_factory=dict)
    dQ: dict = field(default_factory=dict)


def _trapz(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def affine_norm(tangent: BowTangent, grid: BowDataGrid | None = None) -> float:
    """Sum |dB|^2 + sum |dQ|^2 + int (|dT0|^2 + sum_j tr dT^j^dag dT^j) ds."""
    if grid is not None:
        if len(grid.segments) != len(tangent.segments) or any(
                a.s.shape != b.s.shape or np.abs(a.s - b.s).max() > 1e-12
                for a, b in zip(grid.segments, tangent.segments)):
            raise GridMismatch("tangent data live on a different grid")
    tot = 0.0
    for B in tangent.dB.values():
        tot += float(np.sum(np.abs(B) ** 2))
    for Q in tangent.dQ.values():
        tot += float(np.sum(np.abs(Q) ** 2))
    for seg in tangent.segments:
        dens = np.real(np.einsum("iajk,iajk->i", np.conj(seg.T), seg.T))
        tot += _trapz(dens, seg.s)
    return tot
