"""Run configuration: a flat INI file read with configparser.

Example::

    [tn]
    ell = 1.0
    centers = 0, 0, 0.5; 0.3, -0.4, -0.6

    [bow]
    lambda = 0.4
    charges = 1, 0

    [grid]
    h = 1e-3
    lattice_h = 0.1
    R_max = 8
    N = 256

    [tolerances]
    exact = 1e-12
    fd = 1e-4

    [run]
    seed = 20240601
    samples = 20

    [nahm]
    rank = 2
    init = pole
    s = 1.0, 0.05, 20
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .errors import ConfigInvalid
from .geometry import TNConfig

DEFAULT_TOLERANCES = {
    "exact": 1e-12,       # algebraic identities
    "fd": 1e-4,           # pointwise finite-difference identities
    "order": 1.8,         # minimum observed order for second-order stencils
    "dirac_order": 0.9,   # minimum observed order for the lattice Dirac identities
    "quotient": 1e-3,     # relative error of the quotient metric
    "nahm_pole": 1e-6,
    "nahm_drift": 1e-8,
    "nahm_synthetic": 1e-10,
    "l2_rate": 1.8,
    "gauge": 1e-8,
}


@dataclass(frozen=True)
class RunConfig:
    ell: float = 1.0
    centers: tuple = ((0.0, 0.0, 0.0),)
    chart_tol: float = 1e-3
    lengths: tuple | None = None
    lam: tuple = (0.4,)
    charges: tuple = ()
    h: float = 1e-3
    lattice_h: float = 0.1
    R_max: float = 8.0
    N: int = 256
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 20240601
    samples: int = 20
    nahm_rank: int = 2
    nahm_init: str = "pole"
    nahm_s: tuple = (1.0, 0.05, 20)

    @property
    def tn(self) -> TNConfig:
        return TNConfig(ell=self.ell, centers=np.array(self.centers, dtype=float).reshape(-1, 3),
                        chart_tol=self.chart_tol)

    def tol(self, key: str, scale: float = 1.0) -> float:
        return self.tolerances[key] * scale

    def as_dict(self) -> dict:
        d = asdict(self)
        d["tolerances"] = dict(sorted(self.tolerances.items()))
        return d


def _floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(x) for x in text.split(","))


def _points(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    out = []
    for chunk in text.split(";"):
        v = _floats(chunk)
        if len(v) != 3:
            raise ConfigInvalid(f"center {chunk.strip()!r} needs three coordinates")
        out.append(v)
    return tuple(out)


_KEYS = {
    "tn": {"ell", "centers", "chart_tol"},
    "bow": {"lengths", "lambda", "charges"},
    "grid": {"h", "lattice_h", "r_max", "n"},
    "tolerances": set(DEFAULT_TOLERANCES),
    "run": {"seed", "samples"},
    "nahm": {"rank", "init", "s"},
}


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigInvalid(str(exc)) from exc
    for sec in cp.sections():
        if sec not in _KEYS:
            raise ConfigInvalid(f"unknown section [{sec}]")
        extra = set(cp[sec]) - _KEYS[sec]
        if extra:
            raise ConfigInvalid(f"unknown keys in [{sec}]: {sorted(extra)}")
    kw: dict = {}
    try:
        if cp.has_section("tn"):
            s = cp["tn"]
            if "ell" in s:
                kw["ell"] = float(s["ell"])
            if "centers" in s:
                kw["centers"] = _points(s["centers"])
            if "chart_tol" in s:
                kw["chart_tol"] = float(s["chart_tol"])
        if cp.has_section("bow"):
            s = cp["bow"]
            if "lengths" in s:
                kw["lengths"] = _floats(s["lengths"]) or None
            if "lambda" in s:
                kw["lam"] = _floats(s["lambda"])
            if "charges" in s:
                kw["charges"] = _floats(s["charges"])
        if cp.has_section("grid"):
            s = cp["grid"]
            for key, name, typ in (("h", "h", float), ("lattice_h", "lattice_h", float),
                                   ("r_max", "R_max", float), ("n", "N", int)):
                if key in s:
                    kw[name] = typ(s[key])
        tols = dict(DEFAULT_TOLERANCES)
        if cp.has_section("tolerances"):
            for key, val in cp["tolerances"].items():
                tols[key] = float(val)
        kw["tolerances"] = tols
        if cp.has_section("run"):
            s = cp["run"]
            if "seed" in s:
                kw["seed"] = int(s["seed"], 0)
            if "samples" in s:
                kw["samples"] = int(s["samples"])
        if cp.has_section("nahm"):
            s = cp["nahm"]
            if "rank" in s:
                kw["nahm_rank"] = int(s["rank"])
            if "init" in s:
                kw["nahm_init"] = s["init"].strip()
            if "s" in s:
                a, b, n = _floats(s["s"])
                kw["nahm_s"] = (a, b, int(n))
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from exc
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from exc


def validate(cfg: RunConfig) -> None:
    """Schema checks, run before any computation."""
    bad = [k for k, v in cfg.tolerances.items() if not (v > 0 and np.isfinite(v))]
    if bad:
        raise ConfigInvalid(f"tolerances must be positive: {bad}")
    if not cfg.ell > 0:
        raise ConfigInvalid("ell must be positive")
    if not (cfg.h > 0 and cfg.lattice_h > 0 and cfg.R_max > 0 and cfg.N >= 8):
        raise ConfigInvalid("grid block needs h, lattice_h, R_max > 0 and N >= 8")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigInvalid("seed must be a 64-bit unsigned integer")
    if cfg.samples < 1:
        raise ConfigInvalid("samples must be positive")
    if cfg.nahm_rank < 1 or cfg.nahm_init not in ("pole", "random") or cfg.nahm_s[2] < 2:
        raise ConfigInvalid("nahm block needs rank >= 1, init in {pole, random} and >= 2 nodes")
    k = len(cfg.centers)
    c = np.array(cfg.centers, dtype=float).reshape(-1, 3)
    if k > 1 and min(np.linalg.norm(c[i] - c[j]) for i in range(k) for j in range(i + 1, k)) == 0:
        raise ConfigInvalid("centers must be distinct")
    if cfg.charges and len(cfg.charges) != k:
        raise ConfigInvalid("one charge per center")
    if cfg.lengths is not None:
        L = np.asarray(cfg.lengths)
        if len(L) != k or np.any(L <= 0) or not np.isclose(L.sum(), cfg.ell):
            raise ConfigInvalid("lengths must be positive, one per center, summing to ell")


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    out = replace(cfg, **{k: v for k, v in kw.items() if k in known and v is not None})
    validate(out)
    return out
