"""Twisted Dirac operators on truncated multi-Taub-NUT: assembly, identities, kernel scans."""
from .identities import (commutator_checks, geomprelim_check, identity_sweep,
                         selfdual_perturbation, weitzenbock_check)
from .kernel import (DownData, KernelScan, down_extract, kernel_scan, markings, scan_windows,
                     small_singular_values)
from .operator import (Bundle, DiracDiscretization, GridDomain, Lattice, build_dirac,
                       build_lattice, effective_fields, rough_laplacian_matrix)

__all__ = [
    "Bundle", "DiracDiscretization", "DownData", "GridDomain", "KernelScan", "Lattice",
    "build_dirac", "build_lattice", "commutator_checks", "down_extract", "effective_fields",
    "geomprelim_check", "identity_sweep", "kernel_scan", "markings", "rough_laplacian_matrix",
    "scan_windows", "selfdual_perturbation", "small_singular_values", "weitzenbock_check",
]
