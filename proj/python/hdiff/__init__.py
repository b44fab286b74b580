"""Diffusions, parallel and damped transport, coupled families and exact
optimal transport on constant-curvature manifolds."""

from ._core import (  # noqa: F401
    ContractionParams,
    ContractionReport,
    CostProfile,
    CurveC1,
    CutLocusError,
    DomainError,
    EmpiricalMeasure,
    HorizontalFamily,
    Manifold,
    MissingGridPointError,
    NoisePath,
    SchemaError,
    StepTooLargeError,
    TangentVector,
    TimeGrid,
    Trajectory,
    TransportKind,
    TransportOperator,
    TransportPlan,
    __version__,
    build_family,
    contraction_experiment,
    cost_matrix,
    coupled_step,
    damped_transport_path,
    deformed_derivative,
    derivative_check,
    derivative_fd,
    diffusion_step,
    evolve_pair_fan,
    gaussian_at,
    isotone_nonincreasing,
    make_manifold,
    parallel_transport_path,
    parse_config_json,
    run_experiment,
    sample_noise,
    simulate,
    simulate_coupled,
    solve_exact,
    w_norm_profile,
    wasserstein_p,
)
