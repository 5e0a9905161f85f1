"""Three-body spacecraft attitude dynamics, linearization and controller design."""

from ._kanesat import (
    ChainConfig,
    ConfigError,
    Degenerate,
    Diverged,
    GimbalLock,
    KanesatError,
    NotStabilizable,
    RigidBodyParams,
    Scenario,
    SingularBlock,
    SingularMass,
    Uncontrollable,
    compare,
    energy_metric,
    linearize,
    load_scenario,
    lqr,
    robust_pole_assignment,
    simulate,
    spectral_peak,
    state_derivative,
    verify,
)

__all__ = [name for name in dir() if not name.startswith("_")]
