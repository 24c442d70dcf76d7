"""Numerical laboratory for planar fractional Brownian motion and its area.

The package samples two-dimensional fBm exactly on dyadic grids, computes the
dyadic Levy area and p-variation calculus (1D and 2D, with Young integrals),
carries the reproducing-kernel Gram calculus for kernel combinations, and
assembles the covariance matrix of (endpoint, area) together with the
diagnostics that probe the integrability of its inverse determinant.
"""

__version__ = "0.1.0"

from .area import (
    AreaConvergence,
    AreaSeries,
    area_convergence,
    area_series,
    levy_area,
    levy_area_batch,
    rotation_form,
)
from .cameron_martin import CMElement, kernel_integral, kernel_integral_norm, kernel_section
from .covariance import (
    DomainError,
    FbmCovariance,
    HurstParams,
    QuadratureError,
    Rect,
    interval_case,
    sample_disjoint_quads,
    sample_rects,
)
from .density import DensityEstimate, kde, sample_y, smoothness_probe
from .malliavin import (
    MalliavinBatch,
    MalliavinReport,
    area_derivative,
    area_form,
    area_gradient,
    malliavin_batch,
    malliavin_report,
    moment_diagnostic,
    quarter_turn,
    spectral_diagnostic,
    tail_diagnostic,
)
from .sampling import (
    GridMismatchError,
    GridPath,
    SampleBatch,
    dyadic_project,
    dyadic_times,
    holder_profile,
    sample_fbm,
    self_similarity_check,
)
from .variation import SizeError, pvar2d, pvar2d_cells, pvar_bruteforce, pvar_exact
from .young import young_integral, young_integral_2d

__all__ = [
    "__version__",
    "AreaConvergence",
    "AreaSeries",
    "area_convergence",
    "area_series",
    "levy_area",
    "levy_area_batch",
    "rotation_form",
    "CMElement",
    "kernel_integral",
    "kernel_integral_norm",
    "kernel_section",
    "DomainError",
    "FbmCovariance",
    "HurstParams",
    "QuadratureError",
    "Rect",
    "interval_case",
    "sample_disjoint_quads",
    "sample_rects",
    "DensityEstimate",
    "kde",
    "sample_y",
    "smoothness_probe",
    "MalliavinBatch",
    "MalliavinReport",
    "area_derivative",
    "area_form",
    "area_gradient",
    "malliavin_batch",
    "malliavin_report",
    "moment_diagnostic",
    "quarter_turn",
    "spectral_diagnostic",
    "tail_diagnostic",
    "GridMismatchError",
    "GridPath",
    "SampleBatch",
    "dyadic_project",
    "dyadic_times",
    "holder_profile",
    "sample_fbm",
    "self_similarity_check",
    "SizeError",
    "pvar2d",
    "pvar2d_cells",
    "pvar_bruteforce",
    "pvar_exact",
    "young_integral",
    "young_integral_2d",
]
