"""Dimensionless simulator and pulse-shaping toolkit for two resonant
pulses in a three-level lambda medium under coherent population trapping."""

from ._version import __version__
from .core import (
    AtomState,
    EnvelopeSpec,
    EnvelopeSum,
    FieldState,
    Gaussian,
    LinearRamp,
    MediumSpec,
    PulseMetrics,
    SuperGaussian,
    Tabulated,
    TanhStep,
    TauGrid,
    ZetaGrid,
    constant_envelope,
    mixing_angle,
    photon_invariant,
    pulse_metrics,
    sample_envelope,
)
from .direct import (
    SimulationResult,
    Snapshot,
    SolverConfig,
    evolve_atoms,
    field_rhs,
    propagate,
    step_zeta,
)
from .adiabatic import (
    CharacteristicField,
    ThetaEffectiveK,
    adiabaticity_ratio,
    build_characteristics,
    characteristic_tau,
    detect_crossing,
    reconstruct,
    trace_back,
)
from .shaping import (
    CompressionReport,
    DesignProblem,
    DesignResult,
    Scenario,
    builtin_designs,
    builtin_scenarios,
    compression_report,
    design_coupling,
    scenario_by_name,
    theta_from_probe,
)
from .diagnostics import (
    ConvergenceStudy,
    CrossValidation,
    DiagnosticsReport,
    EdgeSlopes,
    build_report,
    coherence_map,
    conservation_residual,
    convergence_study,
    copropagation_lag,
    cross_validate,
    edge_slopes,
    reconstruct_series,
)
from . import errors

__all__ = [name for name in dir() if not name.startswith("_")]
