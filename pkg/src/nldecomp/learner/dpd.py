"""Indirect-learning predistortion built on the two learning pipelines.

A post-inverse is fitted from the gain-normalized PA output back to the PA
input, then deployed unchanged in front of the PA.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import stats
from ..decomp import StaticModel
from ..errors import NoReference
from ..signals import SampledSignal, as_signal, generate_multicarrier
from ..synth import SystemSpec, make_system, simulate
from .features import build_features
from .metrics import aclr_dbc, evm_db
from .mlp import MlpModel, TrainConfig, TrainingTrace
from .pipelines import (ARVTDNN, SRTDNN, Preset, full_learning, predict_full, predict_residual,
                        residual_learning)

__all__ = [
    "Modeler",
    "DpdConfig",
    "DpdResult",
    "Predistorter",
    "reference_pa",
    "reference_drive",
    "channel_bandwidth",
    "indirect_dpd",
]


class Modeler(str, enum.Enum):
    FULL = "Full"
    RESIDUAL = "Residual"

    @classmethod
    def _missing_(cls, value):
        return {"full": cls.FULL, "residual": cls.RESIDUAL}.get(str(value).lower())


def reference_pa(seed=42) -> SystemSpec:
    """The memory-polynomial PA used for the linearization experiments."""
    return make_system("MemoryPolynomial", seed, nl_order=5, memory_depth=3, dynamic_strength=0.3)


def reference_drive(seed=42, length=32768, active_fraction=0.25, backoff_db=6.0):
    """64-QAM multicarrier frame scaled to a mean power of ``-backoff_db`` dB."""
    x = generate_multicarrier(seed, length, active_fraction, 64)
    k = 10.0 ** (-backoff_db / 20.0)
    grid = dataclasses.replace(x.reference, scale=x.reference.scale * k)
    return SampledSignal(x.samples * k, x.sample_rate_hz, x.domain_tag, grid)


def channel_bandwidth(x) -> float:
    """Occupied bandwidth (cycles/sample) of a frame carrying a reference grid."""
    grid = getattr(x, "reference", None)
    if grid is None:
        raise NoReference("channel bandwidth needs a multicarrier reference grid")
    f = np.abs(np.fft.fftfreq(grid.nfft)[grid.bins])
    return float(2 * f.max() + 1.0 / grid.nfft)


@dataclass
class DpdConfig:
    train: TrainConfig = field(default_factory=lambda: TrainConfig(step_size=0.05, max_iters=10_000))
    full_preset: Preset = ARVTDNN
    residual_preset: Preset = SRTDNN
    static_order: int = 7
    train_fraction: float = 1.0
    channel_bw: Optional[float] = None

    def to_dict(self):
        return {"train": self.train.to_dict(), "full_preset": self.full_preset.to_dict(),
                "residual_preset": self.residual_preset.to_dict(),
                "static_order": self.static_order, "train_fraction": self.train_fraction,
                "channel_bw": self.channel_bw}


@dataclass(eq=False)
class Predistorter:
    modeler: Modeler
    model: MlpModel
    static_model: Optional[StaticModel] = None

    def __call__(self, x):
        if self.static_model is None:
            return predict_full(self.model, x)
        return predict_residual(self.static_model, self.model, x)

    def to_dict(self):
        return {"modeler": self.modeler.value, "model": self.model.to_dict(),
                "static_model": None if self.static_model is None else self.static_model.to_dict()}


@dataclass(eq=False)
class DpdResult:
    predistorter: Predistorter
    trace: TrainingTrace
    linear_gain: complex
    aclr_before_dbc: float
    aclr_after_dbc: float
    evm_before_db: float
    evm_after_db: float
    mac_per_inference: int
    train_samples_used: int
    channel_bw: float
    linearized: object = field(repr=False, default=None)

    @property
    def aclr_improvement_db(self):
        return self.aclr_before_dbc - self.aclr_after_dbc

    @property
    def evm_improvement_db(self):
        return self.evm_before_db - self.evm_after_db

    def metrics(self):
        return {
            "modeler": self.predistorter.modeler.value,
            "aclr_before_dbc": self.aclr_before_dbc,
            "aclr_after_dbc": self.aclr_after_dbc,
            "aclr_improvement_db": self.aclr_improvement_db,
            "evm_before_db": self.evm_before_db,
            "evm_after_db": self.evm_after_db,
            "evm_improvement_db": self.evm_improvement_db,
            "mac_per_inference": self.mac_per_inference,
            "param_count": self.trace.param_count,
            "train_samples_used": self.train_samples_used,
            "samples_processed": self.trace.samples_processed,
            "iterations": self.trace.iterations,
            "linear_gain": [float(np.real(self.linear_gain)), float(np.imag(self.linear_gain))],
            "channel_bw": self.channel_bw,
        }


def indirect_dpd(x, pa_spec: SystemSpec, modeler="Residual", config: DpdConfig = None) -> DpdResult:
    """Fit a post-inverse on ``(y / g, x)`` and apply it as a pre-inverse.

    ``g`` is the least-squares linear gain of the PA on ``x``; all outputs are
    divided by it so that the linearized chain targets unit gain. EVM and ACLR
    are measured on the gain-normalized PA output with and without the
    predistorter.
    """
    cfg = config or DpdConfig()
    modeler = Modeler(modeler)
    x = as_signal(x)
    xs = x.samples
    y = simulate(pa_spec, x)
    gain = np.vdot(xs, y.samples) / np.vdot(xs, xs)
    yn = x.replace(y.samples / gain)
    n_rows = int(round(cfg.train_fraction * xs.size))
    preset = cfg.full_preset if modeler is Modeler.FULL else cfg.residual_preset
    rows = np.arange(max(16, preset.features.delay_taps), max(n_rows, 32))
    # post-inverse: the roles of input and output are swapped
    if modeler is Modeler.FULL:
        model, trace = full_learning(yn, x, preset, cfg.train, rows)
        pd = Predistorter(modeler, model)
    else:
        static, model, trace = residual_learning(yn, x, cfg.static_order, preset, cfg.train, rows)
        pd = Predistorter(modeler, model, static)
    z = pd(x)
    lin = simulate(pa_spec, z)
    lin = lin.replace(lin.samples / gain)
    bw = cfg.channel_bw if cfg.channel_bw is not None else channel_bandwidth(x)
    has_ref = x.reference is not None
    return DpdResult(
        predistorter=pd,
        trace=trace,
        linear_gain=complex(gain),
        aclr_before_dbc=aclr_dbc(yn, bw),
        aclr_after_dbc=aclr_dbc(lin, bw),
        evm_before_db=evm_db(x, yn) if has_ref else float("nan"),
        evm_after_db=evm_db(x, lin) if has_ref else float("nan"),
        mac_per_inference=trace.mac_per_inference,
        train_samples_used=int(rows.size),
        channel_bw=bw,
        linearized=lin,
    )
