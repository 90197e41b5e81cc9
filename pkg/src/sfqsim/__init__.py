"""Simulator and benchmarking toolkit for SFQ digital control of transmon
qubits: pulse-train gate simulation, randomized benchmarking, demultiplexer
crosstalk and margins, decay fitting, and cryogenic heat budgeting."""

__version__ = "0.1.0"

from .qdevice import TransmonModel, TransmonParams, delta_theta, diagonalize, solve_ej_ec
from .sfqdrive import (
    ClockConfig,
    DecoherenceChannels,
    GateSpec,
    PulseShape,
    apply_n,
    build_cycle_propagator,
    calibrate_np,
    clock_phase_to_axis,
)
from .superop import Superoperator

__all__ = [
    "TransmonModel",
    "TransmonParams",
    "delta_theta",
    "diagonalize",
    "solve_ej_ec",
    "ClockConfig",
    "DecoherenceChannels",
    "GateSpec",
    "PulseShape",
    "apply_n",
    "build_cycle_propagator",
    "calibrate_np",
    "clock_phase_to_axis",
    "Superoperator",
    "__version__",
]
