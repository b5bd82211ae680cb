"""Kernel scans of D_s^- across the bow circle and Down-transform data.

Each s builds D+ for every tau mode |n| <= n_max (and, on reduced layouts, every angular
momentum |j| <= j_max), computes the smallest singular values by shift-invert on the
Gram matrix, and pools them.  The four smallest pooled values of D- are reported; the
fifth sets the gap, and R(s) counts values below 0.1 gap.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg as sla

from .. import abelian, geometry as geo
from ..errors import NoSpectralGap, RankNotOne
from ..nahm import BowDataGrid, BowRep, Segment, moment_residuals
from .operator import Bundle, GridDomain, build_dirac, build_lattice

KERNEL_FRAC = 0.1
TRIVKER_FRAC = 0.5
AMBIGUOUS_FRAC = 0.25


def small_singular_values(A, k: int):
    """k smallest singular values of sparse A (ascending) and right singular vectors."""
    M = (A.conj().T @ A).tocsc()
    lu = sla.splu(M)
    op = sla.LinearOperator(M.shape, matvec=lu.solve, dtype=complex)
    w, v = sla.eigsh(M, k=k, sigma=0.0, OPinv=op, which="LM")
    o = np.argsort(w)
    return np.sqrt(np.abs(w[o])), v[:, o]


def sectors(grid: GridDomain, n_max: int = 2, j_max: float = 2.5,
            modes=None) -> list[tuple[int, float]]:
    ns = range(-n_max, n_max + 1) if modes is None else [int(n) for n in modes]
    if grid.layout == "cartesian":
        return [(n, grid.j) for n in ns]
    js = np.arange(-j_max, j_max + 0.5, 1.0)
    return [(n, float(j)) for n in ns for j in js]


def markings(cfg: geo.TNConfig, bundle: Bundle, lengths=None) -> np.ndarray:
    """Sorted points of the circle [0, ell) where R may jump: Λ and the edges p_sigma."""
    pts = [lam % cfg.ell for lam in np.atleast_1d(bundle.lam)]
    pts += [p % cfg.ell for p in abelian.bow_points(cfg, lengths)]
    return np.unique(np.round(pts, 12))


def scan_windows(cfg: geo.TNConfig, bundle: Bundle, per_window: int, lengths=None,
                 margin: float = 0.02) -> np.ndarray:
    """per_window evenly spaced s in each gap between markings, margin*ell clear of them."""
    ell = cfg.ell
    mk = markings(cfg, bundle, lengths)
    if len(mk) == 0:
        mk = np.array([0.0])
    ends = np.append(mk, mk[0] + ell)
    out = []
    for a, b in zip(ends[:-1], ends[1:]):
        lo, hi = a + margin * ell, b - margin * ell
        if hi > lo:
            out.append(np.linspace(lo, hi, per_window) % ell)
    return np.sort(np.concatenate(out))


@dataclass
class KernelScan:
    s: np.ndarray
    sv_plus: np.ndarray       # (ns, 4) smallest pooled singular values of D+
    sv_minus: np.ndarray      # (ns, 4) smallest pooled singular values of D-
    gap: np.ndarray           # (ns,) fifth smallest of D-
    R: np.ndarray             # (ns,) detected rank
    T: np.ndarray             # (ns, 3) <psi, t^j psi> where R = 1, else nan
    kernel_sectors: list = field(default_factory=list)
    cfg: geo.TNConfig | None = None
    bundle: Bundle | None = None
    grid: GridDomain | None = None
    lengths: object = None

    @property
    def triv_ker(self) -> np.ndarray:
        """Discrete trivial-kernel test for D+ at every s."""
        return self.sv_plus[:, 0] > TRIVKER_FRAC * self.gap


def _expectation(lat, vec) -> np.ndarray:
    """<psi, t psi> for a unit vector on the interior nodes."""
    pts = lat.pts[lat.interior]
    dens = np.sum(np.abs(vec.reshape(-1, 2)) ** 2, axis=1)
    dens = dens / dens.sum()
    T = dens @ pts
    if lat.layout != "cartesian":
        # sections carry e^{i m phi}, so <x> and <y> average to zero over the circle
        T[:2] = 0.0
    return T


def kernel_scan(cfg: geo.TNConfig, bundle: Bundle, s_values, grid: GridDomain, lengths=None,
                n_max: int = 2, j_max: float = 2.5, k: int = 4, strict: bool = True,
                margin: float = 0.02, modes=None, progress=None) -> KernelScan:
    """Pooled singular values, rank function and kernel centroid at each s.

    Raises ValueError for s within margin*ell of a marking and NoSpectralGap (when
    ``strict``) if one of the k smallest values of D- falls between 0.1 and 0.25 of the gap.
    """
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    mk = markings(cfg, bundle, lengths)
    for s in s_values:
        if len(mk):
            d = np.abs((s - mk + 0.5 * cfg.ell) % cfg.ell - 0.5 * cfg.ell)
            if d.min() < margin * cfg.ell * (1 - 1e-9):
                raise ValueError(f"s={s} lies within {margin} ell of a marking")
    lat = build_lattice(cfg, grid)
    secs = sectors(grid, n_max, j_max, modes)
    per = 2 if len(secs) > 1 else k + 1
    ns = len(s_values)
    svp = np.zeros((ns, k))
    svm = np.zeros((ns, k))
    gap = np.zeros(ns)
    R = np.zeros(ns, dtype=int)
    T = np.full((ns, 3), np.nan)
    ksec = []
    for i, s in enumerate(s_values):
        plus, minus = [], []
        for n, j in secs:
            g = replace(grid, n=n, j=j)
            D = build_dirac(cfg, s, bundle, g, lengths, lattice=lat)
            cols = D.interior_cols
            sp_, _ = small_singular_values(D.Dplus[:, cols], min(per, k))
            sm_, vm = small_singular_values(D.Dminus[:, cols], per)
            plus += list(sp_)
            minus += [(v, (n, j), vm[:, a]) for a, v in enumerate(sm_)]
        plus.sort()
        minus.sort(key=lambda e: e[0])
        vals = np.array([e[0] for e in minus])
        svp[i] = plus[:k]
        svm[i] = vals[:k]
        gap[i] = vals[k]
        small = vals[:k] < KERNEL_FRAC * gap[i]
        R[i] = int(small.sum())
        amb = (vals[:k] >= KERNEL_FRAC * gap[i]) & (vals[:k] < AMBIGUOUS_FRAC * gap[i])
        if strict and amb.any():
            raise NoSpectralGap(f"s={s}: singular value {vals[:k][amb][0]:.3g} is not separated "
                                f"from the gap {gap[i]:.3g}")
        ksec.append([minus[a][1] for a in range(R[i])])
        if R[i] == 1:
            T[i] = _expectation(lat, minus[0][2])
        if progress is not None:
            progress(i, s, R[i])
    return KernelScan(s=s_values, sv_plus=svp, sv_minus=svm, gap=gap, R=R, T=T,
                      kernel_sectors=ksec, cfg=cfg, bundle=bundle, grid=grid, lengths=lengths)


def _pieces(scan: KernelScan):
    """Bow subintervals (a, b) between consecutive markings with the scan indices inside."""
    ell = scan.cfg.ell
    mk = markings(scan.cfg, scan.bundle, scan.lengths)
    if len(mk) == 0:
        mk = np.array([0.0])
    ends = np.append(mk, mk[0] + ell)
    out = []
    for a, b in zip(ends[:-1], ends[1:]):
        ss = (scan.s - a) % ell + a
        idx = np.flatnonzero((ss > a) & (ss < b))
        out.append((a, b, idx[np.argsort(ss[idx])], ss))
    return out


@dataclass
class DownData:
    pieces: list              # (a, b, rank) per subinterval
    T_mean: dict              # piece index -> mean T (3,)
    T_spread: dict            # piece index -> max_j |T^j - mean| / |mean|
    B: dict                   # sigma -> (2 R-, R+) block
    pend: dict                # sigma -> max of the p- / p+ residuals
    rep: BowRep | None = None
    data: BowDataGrid | None = None


def _end_value(s, T, x):
    if len(s) == 1:
        return T[0]
    A = np.stack([np.ones_like(s), s - x], axis=1)
    coef, *_ = np.linalg.lstsq(A, T, rcond=None)
    return coef[0]


def down_extract(scan: KernelScan, cfg: geo.TNConfig | None = None) -> DownData:
    """Rank-one Nahm data from a scan and the edge residuals of the moment map.

    Within a subinterval the rank must be constant and at most one (RankNotOne otherwise).
    Endpoint values are linear least-squares extrapolations of the scanned T.  Blocks B
    joining two rank-one sides are not extracted (NotImplementedError); on a single-center
    circle one side is always empty.
    """
    cfg = cfg or scan.cfg
    pieces = []
    segs = []
    T_mean, T_spread = {}, {}
    for q, (a, b, idx, ss) in enumerate(_pieces(scan)):
        ranks = set(scan.R[idx].tolist())
        if len(ranks) > 1:
            raise RankNotOne(f"rank varies inside ({a:.4g}, {b:.4g}): {sorted(ranks)}")
        rank = ranks.pop() if ranks else None
        if rank is not None and rank > 1:
            raise RankNotOne(f"rank {rank} on ({a:.4g}, {b:.4g})")
        pieces.append((a, b, rank))
        if rank == 1:
            s_in, T_in = ss[idx], scan.T[idx]
            mean = T_in.mean(axis=0)
            T_mean[q] = mean
            T_spread[q] = float(np.abs(T_in - mean).max() / max(np.linalg.norm(mean), 1e-300))
            s_nodes = np.concatenate([[a], s_in, [b]])
            Tn = np.concatenate([[_end_value(s_in, T_in, a)], T_in, [_end_value(s_in, T_in, b)]])
            Tseg = np.zeros((len(s_nodes), 4, 1, 1), dtype=complex)
            Tseg[:, 1:, 0, 0] = Tn
            segs.append(Segment(s=s_nodes, T=Tseg))
        elif rank == 0:
            segs.append(Segment(s=np.array([a, b]), T=np.zeros((2, 4, 0, 0), dtype=complex)))
        else:
            segs.append(None)
    p = abelian.bow_points(cfg, scan.lengths)
    lengths = np.diff(np.concatenate([[0.0], p]))
    rep = BowRep(lengths=lengths, lam=list(np.atleast_1d(scan.bundle.lam)), lam0=[])
    B, pend = {}, {}
    ell = cfg.ell
    for sigma, ps in enumerate(p):
        before = [q for q, (a, b, _) in enumerate(pieces) if np.isclose(b % ell, ps % ell)]
        after = [q for q, (a, b, _) in enumerate(pieces) if np.isclose(a % ell, ps % ell)]
        if not before or not after or segs[before[0]] is None or segs[after[0]] is None:
            pend[sigma] = float("nan")
            continue
        rm, rp = pieces[before[0]][2], pieces[after[0]][2]
        if rm and rp:
            raise NotImplementedError("B between two nonempty kernels is not extracted")
        B[sigma] = np.zeros((2 * rm, rp), dtype=complex)
        # one-edge subproblem on a circle of length ell: the piece before p_sigma is moved
        # to end at ell, the piece after it to start at 0
        sm, sa = segs[before[0]], segs[after[0]]
        one = BowRep(lengths=np.array([ell]))
        sub = BowDataGrid(segments=[Segment(s=sa.s - sa.s[0], T=sa.T),
                                    Segment(s=sm.s - sm.s[-1] + ell, T=sm.T)],
                          B={0: B[sigma]})
        res = moment_residuals(one, sub, cfg.centers[sigma])
        pend[sigma] = max(res["p_minus"][0], res["p_plus"][0])
    data = BowDataGrid(segments=[s for s in segs if s is not None], B=B)
    return DownData(pieces=pieces, T_mean=T_mean, T_spread=T_spread, B=B, pend=pend,
                    rep=rep, data=data)
