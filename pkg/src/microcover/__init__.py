"""Exact-arithmetic interval combinatorics with certified witnesses."""

__version__ = "0.1.0"

SCHEMA = "microcover/1"

from .exact import (  # noqa: F401
    Digit7Stream,
    DigitPrefixExhausted,
    Interval,
    PreconditionError,
    Rational,
    WindowInsufficientError,
    digits_base7,
    distance,
    intersects,
    length,
    shift,
)
from .omega import (  # noqa: F401
    DensityReport,
    OmegaSet,
    count_prefix,
    density_estimate,
    density_exact,
    parse_omega_set,
    partition_dyadic,
)
from .spacing import (  # noqa: F401
    BlockIndex,
    PlacedFamily,
    SpacingTree,
    block_index,
    build_k_hierarchy,
    compute_Y,
    compute_Z,
    place_intervals,
    q_sequence,
    step_diagnostics,
    terminal_enumeration,
)
from .covers import (  # noqa: F401
    CoverAttempt,
    GeometricConstraint,
    LogarithmicConstraint,
    ValidationReport,
    adversary_generate,
    corollary_witness,
    covers_region,
    validate,
)
from .constructions import (  # noqa: F401
    MicroXApprox,
    ShiftExperiment,
    WitnessChain,
    build_X,
    extract_uncovered_point,
    reindex_density_avoid,
    reindex_ln_avoid,
    shift_family_experiment,
    thin_reindex,
    union_reindex_Mprime,
    verify_microscopic,
)
