"""Point scatterers on flat tori: perturbed spectra, truncated eigenfunctions,
and small-scale mass equidistribution scans."""

from . import ballmass, cli, equidist, greens, lattice, spectrum
from ._series import PoleProximityError
from .ballmass import (
    MassQuery,
    ModeCorrelation,
    StepTooCoarseError,
    ball_kernel,
    bessel_j1,
    correlate,
    mass_ratio,
    mass_ratio_quadrature,
)
from .equidist import DiscrepancyReport, ScanPlan, radius_grid, scan
from .greens import (
    EmptyWindowError,
    NormReport,
    TruncatedEigenfunction,
    build_truncated,
    full_norm_sq,
    truncation_defect,
)
from .lattice import (
    FourAdicSplit,
    LatticeShell,
    NormSequence,
    enumerate_norms,
    enumerate_shell,
    four_adic_split,
    is_representable,
    landau_count,
    nearest_norm,
)
from .spectrum import (
    BracketFailureError,
    PerturbedSpectrum,
    ScattererConfig,
    SolverError,
    SpectrumEntry,
    c0,
    solve_spectrum,
    spectral_function,
)

__version__ = "0.1.0"

__all__ = [
    "ballmass",
    "cli",
    "equidist",
    "greens",
    "lattice",
    "spectrum",
    "MassQuery",
    "ModeCorrelation",
    "StepTooCoarseError",
    "ball_kernel",
    "bessel_j1",
    "correlate",
    "mass_ratio",
    "mass_ratio_quadrature",
    "DiscrepancyReport",
    "ScanPlan",
    "radius_grid",
    "scan",
    "EmptyWindowError",
    "NormReport",
    "TruncatedEigenfunction",
    "build_truncated",
    "full_norm_sq",
    "truncation_defect",
    "FourAdicSplit",
    "LatticeShell",
    "NormSequence",
    "enumerate_norms",
    "enumerate_shell",
    "four_adic_split",
    "is_representable",
    "landau_count",
    "nearest_norm",
    "BracketFailureError",
    "PerturbedSpectrum",
    "PoleProximityError",
    "ScattererConfig",
    "SolverError",
    "SpectrumEntry",
    "c0",
    "solve_spectrum",
    "spectral_function",
    "__version__",
]
