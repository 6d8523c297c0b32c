"""Asymptotic one-sided device-independent key-rate bounds for Gaussian CVQKD.

Covariance-matrix algebra for Gaussian states, entropic
uncertainty-relation verification, the eight squeezed/coherent x
homodyne/heterodyne x DR/RR key-rate bounds, channel-parameter security
analysis and a seeded Monte Carlo validation path.
"""

from .bounds import (
    ConditionalVariances,
    Flavor,
    KeyRateResult,
    Measurement,
    OneSidedDI,
    ProtocolSpec,
    Reconciliation,
    SteeringDirection,
    VarianceKind,
    classify_1sdi,
    devetak_winter_oracle,
    gaussian_shannon_entropy,
    infer_full_mode_variance,
    key_rate,
    measured_conditional_vn_entropy,
    steering_parameter,
    verify_ur_bipartite,
    verify_ur_tripartite,
)
from .errors import (
    CVQKDError,
    DegenerateConditioningError,
    DomainError,
    InsufficientDataError,
    TagMismatchError,
    UnphysicalInferenceError,
    UnphysicalStateError,
)
from .gaussian import (
    ChannelParams,
    CovarianceMatrix,
    ModeQuadrature,
    Quadrature,
    apply_channel,
    condition_on_homodyne,
    conditional_variance,
    entropy_g,
    reduced_state,
    split_with_vacuum,
    symplectic_eigenvalues,
    thermal,
    tmsv,
    vacuum,
    von_neumann_entropy,
)
from .montecarlo import (
    EstimateWithError,
    MeasurementRecord,
    SimulatedKeyRate,
    empirical_entropy,
    estimate_conditional_variance,
    sample_quadratures,
    simulate_protocol_run,
)
from .security import (
    FibreModel,
    SweepConfig,
    key_rate_at,
    max_distance,
    max_excess_noise,
    optimize_modulation,
    protocol_cond_variances,
    security_region,
    threshold_transmission,
)

__version__ = "0.1.0"
