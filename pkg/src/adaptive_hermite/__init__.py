"""Adaptive Hermite spectral solver for parabolic problems on the real line."""

from .basis import (
    BasisParams,
    QuadratureRule,
    SpectralField,
    analyze,
    collocation_points,
    gauss_hermite_rule,
    hermite_function,
    hermite_function_table,
    synthesize,
)
from .controller import (
    AdaptationEvent,
    AdaptiveConfig,
    EventKind,
    ThresholdState,
    controller_step,
    maybe_adapt_order,
    maybe_move,
    maybe_scale,
)
from .indicators import (
    DegenerateIndicator,
    exterior_error_indicators,
    frequency_indicator,
    snapshot,
)
from .integrator import (
    BilinearForm,
    ConfigurationError,
    NumericalError,
    Propagator,
    SourceTerm,
    assemble_stiffness,
    expm_apply,
    step,
)
from .ledger import LedgerTotals, record, verify_bound
from .problems import ParabolicProblem, example1, example2, relative_l2_error
from .spectral_ops import (
    deriv_norm,
    differentiate,
    interpolate,
    project,
    tail_norm,
    x_weighted_deriv_norm,
)
from .experiments import RunConfig, RunRecord, compare_moving_modes, run, sweep

__version__ = "0.1.0"
