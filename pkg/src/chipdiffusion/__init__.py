"""Diffusion on finite multigraphs: simulation, period detection and invariant checks."""

from .analysis import (
    PeriodReport,
    VerificationReport,
    default_cap,
    detect_period,
    detect_period_generic,
    stabilization_times,
    verify_theorem,
)
from .engine import Configuration, Trace, edge_labels, lower_bound, potential, step, trace
from .errors import (
    ArithmeticOverflow,
    CapExceeded,
    CountMismatch,
    DiffusionError,
    IndexOutOfRange,
    InvalidParams,
    LengthMismatch,
    MalformedLine,
    SelfLoop,
    SinkWriteFailure,
    TraceTooShort,
)
from .experiments import FamilySpec, fn_lower_bound_search, required_offset, scan_transients, star_offset
from .graph import MultiGraph, generate, parse_edge_list, serialize_edge_list

__version__ = "0.1.0"

__all__ = [
    "ArithmeticOverflow",
    "CapExceeded",
    "Configuration",
    "CountMismatch",
    "DiffusionError",
    "FamilySpec",
    "IndexOutOfRange",
    "InvalidParams",
    "LengthMismatch",
    "MalformedLine",
    "MultiGraph",
    "PeriodReport",
    "SelfLoop",
    "SinkWriteFailure",
    "Trace",
    "TraceTooShort",
    "VerificationReport",
    "default_cap",
    "detect_period",
    "detect_period_generic",
    "edge_labels",
    "fn_lower_bound_search",
    "generate",
    "lower_bound",
    "parse_edge_list",
    "potential",
    "required_offset",
    "scan_transients",
    "serialize_edge_list",
    "stabilization_times",
    "star_offset",
    "step",
    "trace",
    "verify_theorem",
]
