"""Static/dynamic decomposition diagnostics for nonlinear systems with memory."""

from . import decomp, indicators, lipschitz, signals, stats, synth
from .decomp import DecompositionResult, StaticModel, decompose, fit_static, verify_identities
from .indicators import IndicatorReport, full_report
from .signals import SampledSignal, align_and_normalize, load_signal, save_signal
from .synth import SystemKind, SystemSpec, make_system, simulate

__version__ = "0.1.0"

__all__ = [
    "DecompositionResult", "IndicatorReport", "SampledSignal", "StaticModel", "SystemKind",
    "SystemSpec", "align_and_normalize", "decomp", "decompose", "fit_static", "full_report",
    "indicators", "lipschitz", "load_signal", "make_system", "save_signal", "signals", "simulate",
    "stats", "synth", "verify_identities",
]
