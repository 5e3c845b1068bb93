"""Certified high-contrast eigenvalue series for 2D periodic media.

The package computes Bloch band structure of a square lattice of
inclusions at large coefficient contrast by expanding each eigenvalue
group in powers of the inverse contrast, with closed-form convergence
certificates and an independent plane-wave reference solver.
"""

from .certificates import (
    Certificate,
    CertificateError,
    build_certificate,
    gap_d,
    mu_minus_from_theta,
    radius,
    separation_check,
    theta_disks,
    truncation_bound,
    z_star,
)
from .geometry import (
    BoundaryMesh,
    ConfigurationError,
    Inclusion,
    InclusionSet,
    PeriodCell,
    build_mesh,
    min_separation,
)
from .lattice_green import GreenEvaluator, QuasiMomentum, SingularPointError
from .limit_spectrum import (
    DirichletMode,
    DirichletSpectrum,
    LimitSpectrum,
    LimitValue,
    ResolutionError,
    bessel_zero,
    disk_dirichlet,
    fd_dirichlet,
    limit_spectrum,
    spectral_function,
    spectral_roots,
)
from .np_spectrum import (
    AssemblyError,
    EigensolveError,
    LayerOperators,
    NPSpectrum,
    assemble,
    resonance_spectrum,
)
from .oracle import (
    OracleError,
    OracleResult,
    PlaneWaveBasis,
    beta_of_z_oracle,
    bloch_solve,
    chi_fourier,
)
from .series_engine import (
    MultiplicityError,
    OperatorChain,
    SeriesError,
    SeriesExpansion,
    SeriesModel,
    build_chain,
    build_series_model,
    coefficient_beta1,
    coefficients_contour,
    coefficients_layer_rs,
    corrector,
    evaluate_series,
)

__version__ = "0.1.0"
