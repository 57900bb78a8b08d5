"""Positive and discrete (tempered) stable laws, and a Monte Carlo lab for
limit theorems of tempered heavy-tailed triangular arrays."""

__version__ = "0.1.0"

from .diagnostics import (
    STANDARD_Z_GRID,
    EmpiricalTransform,
    GapReport,
    KsResult,
    empirical_lt,
    empirical_pgf,
    ks_two_sample,
    standard_s_grid,
    sup_gap,
)
from .heavy_tails import (
    BaseMeasure,
    DegenerateMeasureError,
    NormingSequence,
    TemperedMeasure,
    norming_a,
    sample_base,
    sample_tempered,
    temper,
)
from .limit_lab import (
    ArrayExperiment,
    ConfigurationError,
    ConvergenceReport,
    LimitLaw,
    Regime,
    Schedule,
    check_array_conditions,
    classify_regime,
    natural_scale_experiment,
    prop34_embedding,
    run_experiment,
)
from .numerics import (
    DomainError,
    InversionError,
    QuadratureError,
    QuadratureSpec,
    RngStream,
    invert_monotone,
    levy_integral,
)
from .stable import StableParams, ds_pgf, ds_sample, ps_laplace, ps_sample
from .tempered import (
    DtsParams,
    PmfTable,
    PtsParams,
    dts_pgf,
    dts_pmf,
    dts_sample,
    pts_laplace,
    pts_laplace_exponent,
    pts_sample,
    thin,
)
from .tempering import TemperingFunction, rescale, validate_integrability
