"""Exact Gaussian simulation of continuous-variable teleportation circuits."""

__version__ = "0.1.0"

from .algebra import (
    V0,
    CircuitState,
    FeedforwardError,
    LinearForm,
    MeasurementRecord,
    Mode,
    Orientation,
    Quadrature,
    Symbol,
    SymbolKind,
    add_signal_mode,
    add_squeezed_mode,
    add_vacuum_mode,
    apply_beamsplitter,
    apply_cz,
    apply_feedforward,
    apply_phase_rotation,
    bracket,
    check_symplectic,
    displace_by_record,
    homodyne,
    new_state,
    noise_budget,
    solve_feedforward_gains,
)
from .montecarlo import (
    ShotConfig,
    ShotEstimate,
    ValidationOutcome,
    canonical_validation_set,
    run_shots,
    validate_against_exact,
)
from .protocols import (
    BS_REFERENCE_MSE,
    HYBRID_OPTICAL_UNIT_GAIN_R,
    PROTOCOLS,
    ConstructionMismatchError,
    NoRootError,
    OpticalCzMap,
    OpticalCzSpec,
    ProtocolReport,
    apply_optical_cz_map,
    build_circuit,
    build_optical_cz,
    compose_czcz_optical,
    crossover_R,
    czcz_optical_mse_curves,
    hybrid_optical_mse_curves,
    hybrid_signal_matrix,
    optical_cz_matrix,
    teleport_bs,
    teleport_czcz,
    teleport_czcz_optical,
    teleport_hybrid,
    teleport_hybrid_optical,
)

__all__ = [name for name in dir() if not name.startswith("_")]
