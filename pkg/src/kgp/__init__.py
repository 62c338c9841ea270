import logging
import sys

from . import _config
from .continuation import (
    RefinementSchedule,
    SweepReport,
    SweepRow,
    continuation_in_epsilon,
    is_semi_trivial,
    nontrivial_search,
    refine,
)
from .exceptions import (
    AliasedGrid,
    KGPException,
    LinearSolveBreakdown,
    MaxIterations,
    NoNontrivialFound,
    NonPositiveAmplitude,
    NotInRange,
    NotKernel,
    SpectrumCollision,
    TruncationMismatch,
    UserError,
)
from .functional import (
    DecompositionReport,
    EnergyBreakdown,
    FieldPair,
    Forcing,
    ResidualNorms,
    decomposition_report,
    decoupled_residual_norms,
    energy,
    gradient,
    manufactured_forcing,
    residual_norms,
    tail_residual,
)
from .io import CoefficientFile, read_coefficients, write_coefficients
from .lifecycle import SolveHooks
from .nonlinearity import (
    Amplitude,
    HypothesisReport,
    Nonlinearity,
    check_all,
    check_h1,
    check_h2,
    check_h3,
    check_h4,
    check_remark12,
    from_function,
    parse_descriptor,
    polynomial,
    power_law,
    zero,
)
from .report import SolveReport
from .solver import InitialGuess, SolveConfig, SolveOverrides, fixed_point_solve, newton_solve
from .spectral import (
    GridField,
    ModeClass,
    ModeIndex,
    SpectralField,
    SpectralGapInfo,
    TrigTerm,
    Truncation,
    classify,
    from_grid,
    h_norm,
    kernel_part,
    l2_norm,
    range_part,
    spectral_gap,
    spectrum_membership,
    spectrum_table,
    split,
    to_grid,
)
from .tracing import (
    Span,
    Trace,
    TracingProcessor,
    add_trace_processor,
    set_trace_processors,
    set_tracing_disabled,
    trace,
)
from .usage import SolveUsage
from .version import __version__
from .wave_rep import (
    KernelProfile,
    continuity_report,
    kernel_profile,
    linf_report,
    lipschitz_report,
    orthogonality_check,
    range_condition,
    represent_w1,
)


def set_default_fft_workers(workers: int | None) -> None:
    """Cap the worker threads of the sine and Fourier transforms. `0` uses every CPU; `None`
    defers to the KGP_THREADS environment variable."""
    _config.set_default_fft_workers(workers)


def enable_verbose_stdout_logging():
    """Enables verbose logging to stdout. This is useful for debugging."""
    logger = logging.getLogger("kgp")
    logger.setLevel(logging.DEBUG)
    logger.addHandler(logging.StreamHandler(sys.stdout))


__all__ = [
    "__version__",
    "AliasedGrid",
    "Amplitude",
    "CoefficientFile",
    "DecompositionReport",
    "EnergyBreakdown",
    "FieldPair",
    "Forcing",
    "GridField",
    "HypothesisReport",
    "InitialGuess",
    "KGPException",
    "KernelProfile",
    "LinearSolveBreakdown",
    "MaxIterations",
    "ModeClass",
    "ModeIndex",
    "NoNontrivialFound",
    "NonPositiveAmplitude",
    "Nonlinearity",
    "NotInRange",
    "NotKernel",
    "RefinementSchedule",
    "ResidualNorms",
    "SolveConfig",
    "SolveHooks",
    "SolveOverrides",
    "SolveReport",
    "SolveUsage",
    "Span",
    "SpectralField",
    "SpectralGapInfo",
    "SpectrumCollision",
    "SweepReport",
    "SweepRow",
    "Trace",
    "TracingProcessor",
    "TrigTerm",
    "Truncation",
    "TruncationMismatch",
    "UserError",
    "add_trace_processor",
    "check_all",
    "check_h1",
    "check_h2",
    "check_h3",
    "check_h4",
    "check_remark12",
    "classify",
    "continuation_in_epsilon",
    "continuity_report",
    "decomposition_report",
    "decoupled_residual_norms",
    "enable_verbose_stdout_logging",
    "energy",
    "fixed_point_solve",
    "from_function",
    "from_grid",
    "gradient",
    "h_norm",
    "is_semi_trivial",
    "kernel_part",
    "kernel_profile",
    "l2_norm",
    "linf_report",
    "lipschitz_report",
    "manufactured_forcing",
    "newton_solve",
    "nontrivial_search",
    "orthogonality_check",
    "parse_descriptor",
    "polynomial",
    "power_law",
    "range_condition",
    "range_part",
    "read_coefficients",
    "refine",
    "represent_w1",
    "residual_norms",
    "set_default_fft_workers",
    "set_trace_processors",
    "set_tracing_disabled",
    "spectral_gap",
    "spectrum_membership",
    "spectrum_table",
    "split",
    "tail_residual",
    "to_grid",
    "trace",
    "write_coefficients",
    "zero",
]
