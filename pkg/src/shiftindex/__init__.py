"""Numerical laboratory for elliptic differential operators with shifts on flat tori."""

from .symbols import (
    FirstOrderCoefficient,
    OperatorValuedSymbol,
    ShiftOperatorSpec,
    SymbolDomainError,
    TorusIsometry,
    WindowError,
    cylinder_product_symbol,
    cylinder_symbol,
    evaluate_symbol,
    external_product,
    homogenize,
    orbit_symbol,
    weight_vector,
)
from .ellipticity import (
    CosphereGrid,
    EllipticityReport,
    check_elliptic,
    check_elliptic_orbit,
    min_singular_value,
    rescale_sigma_s,
    rescaled_orbit_min_sv,
)
from .assembly import (
    AssembledOperator,
    DimensionCapError,
    EdgeFilter,
    IndexReport,
    TruncationError,
    assemble_A,
    assemble_cylinder_product,
    assemble_on_torus,
    hermite_shift_matrix,
    numerical_index,
    s_independence_check,
)
from .uniformize import (
    CylinderSample,
    DecayError,
    FiberedSample,
    GammaSample,
    apply_I,
    apply_I_inv,
    apply_J,
    apply_J_inv,
    apply_K,
    apply_K_inv,
    conjugate_shift_check,
    factorization_check,
    make_cylinder_sample,
)
from .chern import (
    CallableSymbolField,
    EllipticityLostError,
    MappingTorusGrid,
    SpecSymbolField,
    ToddData,
    TraceTailError,
    UnsupportedDimensionError,
    chern_integrand,
    closedness_residual,
    homotopy_invariance_check,
    topological_index,
)
from .specio import SpecFormatError, load_spec, parse_spec, spec_hash

__version__ = "0.1.0"
