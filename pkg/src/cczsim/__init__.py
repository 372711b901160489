"""Pulse-level simulation of a cavity-mediated three-qubit controlled-phase gate."""

from .analysis import (
    CCZ,
    FeasibilityReport,
    FidelityReport,
    build_ccz_decomposition,
    cavity_lifetime,
    channel_fidelities,
    circuit_unitary,
    error_scaling_sweep,
    extract_channel,
    extract_gate,
    feasibility_check,
    gate_fidelities,
)
from .dynamics import EvolutionMode
from .hilbert import CompositeSpace, LogicalEncoding
from .protocol import (
    ProtocolConfig,
    Schedule,
    compile_ccz_schedule,
    emit_schedule,
    parse_schedule,
    run_schedule,
    run_schedule_density,
    step_expectations,
    total_operation_time,
)

__all__ = [
    "CCZ",
    "CompositeSpace",
    "EvolutionMode",
    "FeasibilityReport",
    "FidelityReport",
    "LogicalEncoding",
    "ProtocolConfig",
    "Schedule",
    "build_ccz_decomposition",
    "cavity_lifetime",
    "channel_fidelities",
    "circuit_unitary",
    "compile_ccz_schedule",
    "emit_schedule",
    "error_scaling_sweep",
    "extract_channel",
    "extract_gate",
    "feasibility_check",
    "gate_fidelities",
    "parse_schedule",
    "run_schedule",
    "run_schedule_density",
    "step_expectations",
    "total_operation_time",
]
