"""Band gaps of 1D layered phononic crystals.

Transfer-matrix dispersion and first-gap extraction, Monte Carlo Sobol'
sensitivity analysis over a five-ratio design space, and reduced-order
design equations with their error diagnostics.
"""
from .sampling import (
    GENERATOR_NAME,
    ParameterDef,
    ParameterSpace,
    SampleSet,
    canonical_space,
    lhs_sample,
    map_to_space,
    rescale_affine,
)
from .sobol import (
    ModelEvaluationError,
    ModelFunction,
    SobolFunctionEstimate,
    SobolResult,
    analytic_poly_model,
    analytic_poly_reference,
    estimate_f0,
    estimate_sobol_function_1d,
    estimate_sobol_function_2d,
    first_order_variance,
    second_order_variance,
    sobol_indices,
    total_variance,
)
from .crystal import (
    NU_CAP,
    BandGap,
    DispersionPoint,
    Layer,
    NoBandGapError,
    ObjectiveKind,
    Polarization,
    UnitCell,
    cell_transfer_matrix,
    dispersion_curve,
    first_band_gap,
    half_trace,
    lame_from_e_nu,
    layer_transfer_matrix,
    objective,
    objective_model,
    transit_time,
    two_layer_cell,
    two_layer_half_trace,
    wave_speed,
)
from .design import (
    DesignEquation,
    TruncationCurve,
    design_model,
    eval_design_equation,
    fit_polynomial_surrogate,
    load_design_equations,
    scaled_l2_error,
    to_hertz,
    truncation_curve,
)

__version__ = "0.1.0"
