"""Command line harness: ``tnbow verify``, ``quotient-metric``, ``nahm``, ``dirac``, ``dump-conventions``.

Reports are JSON with sorted keys, so a fixed config and seed give identical bytes.
Exit status: 0 when every check passes, 1 when one fails, 2 for configuration or usage errors.
The only environment variable read is TNBOW_THREADS (BLAS thread count).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys

SCHEMA_VERSION = 1
SUITE_ORDER = ("quat", "geometry", "abelian", "smallbow", "nahm", "dirac")
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _set_threads() -> None:
    n = os.environ.get("TNBOW_THREADS")
    if n:
        for var in THREAD_VARS:
            os.environ[var] = n


def environment_stamp() -> dict:
    import numpy
    import scipy

    from . import __version__

    return {"python": platform.python_version(), "numpy": numpy.__version__,
            "scipy": scipy.__version__, "tnbow": __version__}


def run_suite(config, suite_name: str, tol_scale: float = 1.0) -> dict:
    """Run one suite (or ``all``) and assemble the report dict."""
    import numpy as np

    from .errors import SuiteUnknown
    from .suites import SUITES, digest

    if suite_name == "all":
        names = list(SUITE_ORDER)
    elif suite_name in SUITES:
        names = [suite_name]
    else:
        raise SuiteUnknown(f"unknown suite {suite_name!r}; choose from {', '.join(SUITE_ORDER)} or all")
    checks = []
    for name in names:
        rng = np.random.default_rng([config.seed, SUITE_ORDER.index(name)])
        checks += [c.as_dict() for c in SUITES[name](config, rng, tol_scale)]
    return {"schema_version": SCHEMA_VERSION, "suite": suite_name, "seed": config.seed,
            "config_digest": digest(config.as_dict()), "tol_scale": tol_scale,
            "environment": environment_stamp(), "checks": checks,
            "passed": all(c["pass"] for c in checks)}


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, int)) and not isinstance(v, float):
        return str(int(v))
    try:
        import numpy as np

        if isinstance(v, np.integer):
            return str(int(v))
    except ImportError:  # pragma: no cover
        pass
    return format(float(v) + 0.0, ".12g")  # no negative zeros


def emit_plotdata(header, rows, out=None) -> str:
    """Write a CSV with a header row and 12 significant digits; returns the text.

    ``out`` may be a path, an open text stream or None (text only).
    """
    from .errors import IoError

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row of length {len(row)} under a header of {len(header)}")
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if out is None:
        return text
    if hasattr(out, "write"):
        out.write(text)
        return text
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {out}: {exc}") from exc
    return text


def scan_rows(scan) -> tuple[list, list]:
    header = (["s"] + [f"sv{i}_plus" for i in range(1, 5)] + [f"sv{i}_minus" for i in range(1, 5)]
              + ["R", "T1", "T2", "T3"])
    rows = [[s, *sp, *sm, r, *t] for s, sp, sm, r, t in
            zip(scan.s, scan.sv_plus, scan.sv_minus, scan.R, scan.T)]
    return header, rows


def quotient_sweep(tn, point, Ns) -> tuple[list, list]:
    """Relative error of the quotient metric against the closed form for each N."""
    import numpy as np

    from . import geometry as geo, smallbow

    gt = geo.metric(tn, point)
    rows = []
    for N in Ns:
        err = np.abs(smallbow.quotient_metric(tn, point, N) - gt).max() / np.abs(gt).max()
        rows.append([N, err])
    return ["N", "relative_error"], rows


# ---- subcommand bodies ----

def _load(args):
    from .config import RunConfig, load_config, with_overrides

    cfg = load_config(args.config) if args.config else RunConfig()
    return with_overrides(cfg, seed=args.seed, samples=getattr(args, "samples", None))


def _write(text: str, out) -> None:
    from .errors import IoError

    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {out}: {exc}") from exc


def abelian_profile(cfg, s: float, rmax: float, rng) -> tuple[list, list]:
    """Rows (R, partial_integral, asd_max): L2 partial integrals of F(a_s) and the largest
    pointwise ASD residual among sample points with |t| <= R."""
    import numpy as np

    from . import abelian, geometry as geo

    tn = cfg.tn
    coeffs = abelian.connection_coeffs(s, tn, cfg.lengths)
    reach = float(np.max(np.linalg.norm(tn.centers, axis=1))) if tn.k else 0.0
    grid = abelian.L2Grid(bump_radius=0.5, shell_width=float(max(1.0, np.ceil(reach + 0.6))))
    R, P = abelian.l2_norm_estimate(coeffs, tn, rmax, grid)
    pts = geo.random_points(tn, rng, cfg.samples, rmin=1.0, rmax=max(1.5, rmax - reach))
    radius = np.array([np.linalg.norm(p.t) for p in pts])
    res = np.array([abelian.curvature_asd(s, tn, p, cfg.h, cfg.lengths).asd_residual for p in pts])
    rows = []
    for r, q in zip(R, P):
        m = radius <= r
        rows.append([r, q, float(res[m].max()) if m.any() else 0.0])
    return ["R", "partial_integral", "asd_max"], rows


def cmd_verify(args) -> int:
    import numpy as np

    cfg = _load(args)
    if args.suite == "abelian" and args.s is not None:
        rng = np.random.default_rng([cfg.seed, SUITE_ORDER.index("abelian")])
        header, rows = abelian_profile(cfg, args.s, args.rmax, rng)
        emit_plotdata(header, rows, args.out or sys.stdout)
        return 0
    report = run_suite(cfg, args.suite, args.tol_scale)
    _write(report_json(report), args.out)
    return 0 if report["passed"] else 1


def _floats(text: str, n: int, what: str) -> list:
    from .errors import ConfigInvalid

    try:
        v = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigInvalid(f"{what}: {exc}") from exc
    if len(v) != n:
        raise ConfigInvalid(f"{what} needs {n} comma-separated numbers")
    return v


def cmd_quotient(args) -> int:
    import numpy as np

    from . import geometry as geo, smallbow
    from .suites import digest

    cfg = _load(args)
    tn = cfg.tn
    x, y, z, tau = _floats(args.point, 4, "--point")
    p = geo.make_point(tn, [x, y, z], tau=tau)
    if args.sweep:
        Ns = [int(v) for v in args.sweep.split(",")]
        header, rows = quotient_sweep(tn, p, Ns)
        emit_plotdata(header, rows, args.out or sys.stdout)
        return 0
    N = args.grid or cfg.N
    G = smallbow.quotient_metric(tn, p, N, cfg.lengths)
    gt = geo.metric(tn, p)
    err = float(np.abs(G - gt).max() / np.abs(gt).max())
    tol = cfg.tol("quotient", args.tol_scale)
    report = {"schema_version": SCHEMA_VERSION, "point": [x, y, z, tau], "N": N,
              "gram": G.tolist(), "oracle": gt.tolist(), "relative_error": err,
              "tolerance": tol, "pass": err <= tol, "ref": "quotient-metric",
              "inputs_digest": digest({"centers": tn.centers, "ell": tn.ell, "point": [x, y, z, tau], "N": N}),
              "environment": environment_stamp()}
    _write(report_json(report), args.out)
    return 0 if report["pass"] else 1


def nahm_integration(cfg, rng):
    """Integrate the configured Nahm data; returns (header, rows)."""
    import numpy as np

    from . import nahm

    n = cfg.nahm_rank
    a, b, nodes = cfg.nahm_s
    s = np.linspace(a, b, nodes)
    if cfg.nahm_init == "pole":
        # u = s - s0 with the pole at s0 = 0
        T0 = nahm.pole_solution(a, nahm.su2_irrep(n))
    else:
        X = rng.normal(size=(3, n, n)) + 1j * rng.normal(size=(3, n, n))
        X = X + np.conj(np.swapaxes(X, -1, -2))
        T0 = 0.5 * X / np.linalg.norm(X)
    seg = nahm.integrate_nahm(s, T0)
    header = ["s"]
    for c in (1, 2, 3):
        for i in range(n):
            for j in range(n):
                header += [f"T{c}_{i}{j}_re", f"T{c}_{i}{j}_im"]
    header += [f"inv{q}_{part}" for q in range(1, n + 1) for part in ("re", "im")]
    rows = []
    for i, x in enumerate(s):
        T = seg.T[i, 1:]
        inv = nahm.spectral_invariants(*T)
        vals = np.stack([T.real, T.imag], axis=-1).reshape(-1)
        rows.append([x, *vals, *np.stack([inv.real, inv.imag], axis=-1).reshape(-1)])
    return header, rows


def cmd_nahm_integrate(args) -> int:
    import numpy as np

    cfg = _load(args)
    rng = np.random.default_rng([cfg.seed, SUITE_ORDER.index("nahm")])
    header, rows = nahm_integration(cfg, rng)
    emit_plotdata(header, rows, args.out or sys.stdout)
    return 0


def _cplx(obj):
    import numpy as np

    if isinstance(obj, dict):
        return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", 0.0), dtype=float)
    return np.asarray(obj, dtype=complex)


def load_bow_data(path):
    """Read a bow-data JSON file.

    Layout::

        {"lengths": [...], "lam0": [...], "centers": [[x, y, z], ...],
         "segments": [{"s": [...], "T": {"re": [...], "im": [...]}}, ...],
         "B": {"0": {"re": ..., "im": ...}}, "Q": {"0.5": [...]}}

    ``T`` has shape (nodes, 4, R, R); plain nested lists are read as real.
    """
    import numpy as np

    from .errors import ConfigInvalid
    from .nahm import BowDataGrid, BowRep, Segment

    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        rep = BowRep(lengths=np.asarray(d["lengths"], dtype=float), lam=list(d.get("lam", [])),
                     lam0=[float(x) for x in d.get("lam0", [])])
        segs = []
        for sg in d["segments"]:
            T = _cplx(sg["T"])
            if T.size == 0:
                T = T.reshape(len(sg["s"]), 4, 0, 0)
            segs.append(Segment(s=np.asarray(sg["s"], dtype=float), T=T))
        data = BowDataGrid(segments=segs,
                           B={int(k): _cplx(v) for k, v in d.get("B", {}).items()},
                           Q={float(k): _cplx(v) for k, v in d.get("Q", {}).items()})
        centers = np.asarray(d["centers"], dtype=float).reshape(-1, 3)
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise ConfigInvalid(f"cannot read bow data from {path}: {exc}") from exc
    return rep, data, centers


def cmd_nahm_residuals(args) -> int:
    from .config import RunConfig, load_config
    from .nahm import moment_residuals

    cfg = load_config(args.config) if args.config else RunConfig()
    rep, data, centers = load_bow_data(args.data)
    res = moment_residuals(rep, data, centers)
    tol = cfg.tol("nahm_synthetic", args.tol_scale)
    flat = {kind: {str(k): v for k, v in vals.items()} for kind, vals in res.items()}
    worst = max([v for vals in res.values() for v in vals.values()], default=0.0)
    report = {"schema_version": SCHEMA_VERSION, "residuals": flat, "max_residual": worst,
              "tolerance": tol, "pass": worst <= tol, "ref": "nahm-jump/nahm-endpoint"}
    _write(report_json(report), args.out)
    return 0 if report["pass"] else 1


def scan_setup(cfg, mode=None):
    """(TNConfig, Bundle, GridDomain) for a kernel scan of the configured bow.

    Layout: parabolic about the nut for one center, axial when every center lies on the
    z axis, Cartesian otherwise.
    """
    import numpy as np

    from .dirac import Bundle, GridDomain
    from .errors import ConfigInvalid

    tn = cfg.tn
    if len(cfg.lam) != 1:
        raise ConfigInvalid("the rank-one scan takes exactly one lambda")
    bundle = Bundle(lam=cfg.lam[0], m=tuple(cfg.charges))
    c = tn.centers
    if tn.k == 1:
        grid = GridDomain(R_max=cfg.R_max, h=cfg.lattice_h, layout="parabolic", center=tuple(c[0]))
    elif tn.k and np.allclose(c[:, :2], 0.0):
        grid = GridDomain(R_max=cfg.R_max, h=cfg.lattice_h, layout="axial",
                          center=(0.0, 0.0, float(c[:, 2].mean())))
    else:
        center = tuple(c.mean(axis=0)) if tn.k else (0.0, 0.0, 0.0)
        grid = GridDomain(R_max=cfg.R_max, h=cfg.lattice_h, center=center)
    return tn, bundle, grid


def _s_range(text: str):
    import numpy as np

    from .errors import ConfigInvalid

    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise ConfigInvalid(f"--s-range expects a:b:n, got {text!r}") from exc


def cmd_dirac_scan(args) -> int:
    from .dirac import kernel_scan

    cfg = _load(args)
    tn, bundle, grid = scan_setup(cfg)
    s = _s_range(args.s_range)
    modes = None if args.mode is None else [args.mode]
    scan = kernel_scan(tn, bundle, s, grid, cfg.lengths, modes=modes)
    header, rows = scan_rows(scan)
    emit_plotdata(header, rows, args.out or sys.stdout)
    return 0 if bool(scan.triv_ker.all()) else 1


def cmd_dirac_identities(args) -> int:
    from dataclasses import replace

    from .dirac import commutator_checks, geomprelim_check, weitzenbock_check
    from .suites import dirac_identity_configs

    cfg = _load(args)
    out = {}
    for tag, tn, s, grid, bundle in dirac_identity_configs(cfg.ell):
        g = replace(grid, h=args.h)
        r = commutator_checks(tn, s, g, bundle)
        r["weitzenbock"] = weitzenbock_check(tn, s, g, bundle)
        r["geomprelim"] = geomprelim_check(tn, s, g, bundle)
        out[tag] = r
    _write(report_json({"schema_version": SCHEMA_VERSION, "h": args.h, "residuals": out}), args.out)
    return 0


def conventions() -> dict:
    import numpy as np

    from . import geometry as geo, quat

    def enc(m):
        m = np.asarray(m)
        return [[[float(v.real), float(v.imag)] for v in row] for row in m]

    return {
        "schema_version": SCHEMA_VERSION,
        "quaternion_units": quat.UNITS.table(),
        "clifford": [enc(c) for c in geo.CLIFFORD],
        "chirality": enc(geo.GAMMA),
        "c_plus_blocks": [enc(c) for c in geo.C_PLUS],
        "notes": {
            "complex_entries": "[real, imag] pairs",
            "units": "e_0 = 1, e_j = -i sigma_j, so e_1 e_2 = e_3",
            "coframe": "theta^j = sqrt(V) dt^j, theta^4 = (dtau + omega) / sqrt(V)",
            "dirac_strings": "per center, north chart eta = ((cos th - 1)/2) dphi for z > z_sigma, "
                             "south chart eta = ((cos th + 1)/2) dphi otherwise",
            "omega": "sum over centers of eta_sigma",
        },
    }


def cmd_conventions(args) -> int:
    _write(report_json(conventions()), args.out)
    return 0


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags with suppressed defaults, so a value given
    # before the subcommand is not overwritten
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="INI configuration file", **kw)
    p.add_argument("--seed", type=int, help="override the configured seed", **kw)
    p.add_argument("--tol-scale", type=float, help="multiply residual tolerances",
                   **(kw or {"default": 1.0}))
    p.add_argument("--out", help="output file (default: stdout)", **kw)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    ap = argparse.ArgumentParser(prog="tnbow", description=__doc__.splitlines()[0],
                                 parents=[_global_flags(suppress=False)])
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", help="quat, geometry, abelian, smallbow, nahm, dirac or all")
    v.add_argument("--samples", type=int, help="sample count for geometry/abelian/smallbow")
    v.add_argument("--s", type=float, help="abelian: emit the L2 profile CSV at this s")
    v.add_argument("--rmax", type=float, default=40.0, help="abelian profile radius")
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("quotient-metric", parents=[common], help="quotient metric at one point")
    q.add_argument("--point", required=True, help="x,y,z,tau")
    q.add_argument("--grid", type=int, help="nodes per bow interval")
    q.add_argument("--sweep", help="comma-separated N values; emits an error-vs-N CSV")
    q.set_defaults(func=cmd_quotient)

    n = sub.add_parser("nahm", help="Nahm data tools")
    nsub = n.add_subparsers(dest="action", required=True)
    ni = nsub.add_parser("integrate", parents=[common], help="integrate the configured Nahm data")
    ni.set_defaults(func=cmd_nahm_integrate)
    nr = nsub.add_parser("residuals", parents=[common], help="jump and endpoint residuals of a data file")
    nr.add_argument("--data", required=True)
    nr.set_defaults(func=cmd_nahm_residuals)

    d = sub.add_parser("dirac", help="Dirac family tools")
    dsub = d.add_subparsers(dest="action", required=True)
    ds = dsub.add_parser("scan", parents=[common], help="kernel scan over s")
    ds.add_argument("--s-range", required=True, help="a:b:n")
    ds.add_argument("--mode", type=int, help="restrict to one tau mode n")
    ds.set_defaults(func=cmd_dirac_scan)
    di = dsub.add_parser("identities", parents=[common], help="operator identity residuals at one h")
    di.add_argument("--h", type=float, default=0.1)
    di.set_defaults(func=cmd_dirac_identities)

    c = sub.add_parser("dump-conventions", parents=[common], help="print representation tables")
    c.set_defaults(func=cmd_conventions)
    return ap


def main(argv=None) -> int:
    _set_threads()
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    from .errors import ConfigInvalid, IoError, NoSpectralGap, SuiteUnknown, TNBowError

    try:
        return args.func(args)
    except (ConfigInvalid, SuiteUnknown, IoError) as exc:
        print(f"tnbow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (NoSpectralGap, TNBowError, ValueError) as exc:
        print(f"tnbow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
