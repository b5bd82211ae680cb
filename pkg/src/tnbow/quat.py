"""Quaternions as 2x2 complex matrices.

Units: e_0 = 1, e_j = -i sigma_j, so that i e_j = sigma_j and e_1 e_2 = e_3.
An End(E)-valued quaternion X = sum_a e_a (x) X^a is stored by its four
components and realised as a (2n, 2n) matrix with the spinor index outermost.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
ID2 = np.eye(2, dtype=complex)

# e[0] = 1, e[j] = -i sigma_j
E_UNITS = np.array([ID2, -1j * PAULI[0], -1j * PAULI[1], -1j * PAULI[2]])


@dataclass(frozen=True)
class QuatUnitRep:
    """Unit tables.  ``I`` is indexed like ``e`` (I[0] is the identity)."""

    e: np.ndarray
    I: np.ndarray

    def table(self) -> dict:
        def enc(m):
            return [[[float(v.real), float(v.imag)] for v in row] for row in m]

        return {"e": [enc(m) for m in self.e], "I": [enc(m) for m in self.I]}


# On S+ the units I_j coincide with e_j in this representation; the contragredient
# action on the dual is z^dagger -> z^dagger e_j^dagger.
UNITS = QuatUnitRep(e=E_UNITS.copy(), I=E_UNITS.copy())


@dataclass
class QuatMatrix:
    """X = sum_a e_a (x) X^a with components of shape (4, n, n)."""

    comps: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.comps, dtype=complex)
        if c.ndim != 3 or c.shape[0] != 4 or c.shape[1] != c.shape[2]:
            from .errors import ShapeMismatch

            raise ShapeMismatch(f"expected (4, n, n) components, got {c.shape}")
        self.comps = c

    @property
    def n(self) -> int:
        return self.comps.shape[1]

    def matrix(self) -> np.ndarray:
        return np.einsum("aij,akl->ikjl", E_UNITS, self.comps).reshape(2 * self.n, 2 * self.n)

    @classmethod
    def from_matrix(cls, M: np.ndarray) -> "QuatMatrix":
        M = np.asarray(M, dtype=complex)
        n = M.shape[0] // 2
        blocks = M.reshape(2, n, 2, n)
        # X^a = 1/2 tr_S(e_a^dagger X)
        comps = 0.5 * np.einsum("aji,jkil->akl", E_UNITS.conj(), blocks)
        return cls(comps)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        c = self.comps
        ok0 = np.abs(c[0] - c[0].conj().T).max() <= tol
        okj = all(np.abs(c[j] + c[j].conj().T).max() <= tol for j in (1, 2, 3))
        return bool(ok0 and okj)


def charge_conjugate(z: np.ndarray) -> np.ndarray:
    """(z1, z2) -> (-conj z2, conj z1); acts on the leading axis."""
    z = np.asarray(z, dtype=complex)
    return np.stack([-np.conj(z[1]), np.conj(z[0])])


def charge_conjugate_block(B: np.ndarray) -> np.ndarray:
    """Conjugate of B in Hom(E+, S (x) E-), shape (2 R-, R+), returned in Hom(E-, S (x) E+)."""
    B = np.asarray(B, dtype=complex)
    r = B.shape[0] // 2
    B1, B2 = B[:r], B[r:]
    return np.vstack([-B2.conj().T, B1.conj().T])


def fierz_contract(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    return np.einsum("aij,jk,alk->il", UNITS.I, X, UNITS.I.conj())


def quaternionic_im(X: QuatMatrix) -> QuatMatrix:
    c = X.comps.copy()
    c[0] = 0.0
    return QuatMatrix(c)


def im_matrix(M: np.ndarray) -> np.ndarray:
    """Im M = M - 1/4 sum_a e_a M e_a^dagger on a (2n, 2n) matrix."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0] // 2
    acc = np.zeros_like(M)
    for ea in E_UNITS:
        E = np.kron(ea, np.eye(n))
        acc += E @ M @ E.conj().T
    return M - 0.25 * acc


def tensor_identity_check(X: QuatMatrix) -> float:
    """Frobenius norm of sum_{a,b} I_a I_b^dag (x) I_a^dag X I_b - 4(1 (x) X^0 + I_k (x) X^k).

    On the right, X^a is read as 1_S (x) X^a acting on S (x) E.
    """
    n = X.n
    Xm = X.matrix()
    I = UNITS.I
    Ie = np.kron(I, np.eye(n))                                   # (4, 2n, 2n)
    P = np.einsum("aij,bkj->abik", I, I.conj())                  # I_a I_b^dag
    M = np.einsum("aji,jk,bkl->abil", Ie.conj(), Xm, Ie)         # I_a^dag X I_b
    lhs = np.einsum("abij,abkl->ikjl", P, M).reshape(4 * n, 4 * n)
    rhs = np.einsum("aij,kl,amn->ikmjln", I, ID2, X.comps).reshape(4 * n, 4 * n)
    return float(np.linalg.norm(lhs - 4 * rhs))


def slash(x: np.ndarray) -> np.ndarray:
    """i sum_j e_j x^j = sigma . x for x of shape (..., 3)."""
    return np.einsum("...j,jab->...ab", np.asarray(x, dtype=float), PAULI)


def identity_residuals(rng: np.random.Generator, n_samples: int) -> dict[str, float]:
    """Worst residuals of the algebraic identities over random inputs."""
    I = UNITS.I
    e = UNITS.e
    out = {"algebra": 0.0, "cc_involution": 0.0, "cc_commutes": 0.0, "cc0": 0.0,
           "cc1": 0.0, "fierz": 0.0, "tens": 0.0, "im_idempotent": 0.0}
    for j in range(1, 4):
        out["algebra"] = max(out["algebra"], np.abs(e[j] @ e[j] + ID2).max(),
                             np.abs(e[j].conj().T + e[j]).max())
    out["algebra"] = max(out["algebra"], np.abs(e[1] @ e[2] - e[3]).max(),
                         np.abs(e[2] @ e[3] - e[1]).max(), np.abs(e[3] @ e[1] - e[2]).max(),
                         np.abs(e[1] @ e[2] @ e[3] + ID2).max())
    for _ in range(n_samples):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        w = rng.normal(size=2) + 1j * rng.normal(size=2)
        zc, wc = charge_conjugate(z), charge_conjugate(w)
        out["cc_involution"] = max(out["cc_involution"], np.abs(charge_conjugate(zc) + z).max(),
                                   abs(np.linalg.norm(zc) - np.linalg.norm(z)))
        for j in range(1, 4):
            out["cc_commutes"] = max(out["cc_commutes"],
                                     np.abs(charge_conjugate(e[j] @ z) - e[j] @ zc).max())
        zw = np.outer(z, w.conj())
        lhs0 = np.einsum("aij,jk,alk->il", I, zw, I.conj())
        out["cc0"] = max(out["cc0"], np.abs(lhs0 - 2 * (w.conj() @ z) * ID2).max())
        lhs1 = np.einsum("aij,jk,akl->il", I, zw, I)
        out["cc1"] = max(out["cc1"], np.abs(lhs1 + 2 * np.outer(wc, zc.conj())).max())
        X = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        out["fierz"] = max(out["fierz"], np.abs(fierz_contract(X) - 2 * np.trace(X) * ID2).max())
        nq = int(rng.integers(1, 4))
        Q = QuatMatrix(rng.normal(size=(4, nq, nq)) + 1j * rng.normal(size=(4, nq, nq)))
        out["tens"] = max(out["tens"], tensor_identity_check(Q))
        im1 = quaternionic_im(Q)
        out["im_idempotent"] = max(
            out["im_idempotent"],
            np.abs(quaternionic_im(im1).comps - im1.comps).max(),
            np.abs(im_matrix(Q.matrix()) - im1.matrix()).max(),
        )
    return {k: float(v) for k, v in out.items()}
