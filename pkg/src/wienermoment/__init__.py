"""Finite-mesh moment problems for functionals of a discretized Brownian path."""

__version__ = "0.1.0"

from .polyalg import (  # noqa: E402
    DiscretePath,
    Monomial,
    Polynomial,
    TimeGrid,
    X,
    evaluate,
    poly_add,
    poly_mul,
    mono_mul,
    refine_to_grid,
    scale_arg,
)
from .functional import (  # noqa: E402
    AtomFunctional,
    AtomicPathMeasure,
    GaussianFunctional,
    TableFunctional,
    gaussian_moment,
    mc_build,
    table_from,
    time_extension_scan,
)
from .certify import (  # noqa: E402
    basis_monomials,
    localizing_matrix,
    min_eigenvalue,
    qv_defect,
    qv_scan,
    schmuedgen_check,
)
from .lattice import LatticeSpec, quantization_error, quantize_measure, round_point  # noqa: E402
from .represent import BandSpec, enumerate_band_paths, fit_weights, solve  # noqa: E402
from .factorize import decompose, moment_transport_check, pushforward, reconstruct  # noqa: E402
