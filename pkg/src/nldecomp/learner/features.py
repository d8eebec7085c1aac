"""Time-delay feature matrices for the shallow networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TooShort
from ..signals import as_signal

__all__ = [
    "FEATURE_KINDS",
    "FeatureSpec",
    "ARVTDNN_FEATURES",
    "SRTDNN_FEATURES",
    "build_features",
    "column_names",
]

FEATURE_KINDS = ("I", "Q", "|x|", "|x|^2", "|x|^3")


@dataclass(frozen=True)
class FeatureSpec:
    delay_taps: int = 0
    feature_kinds: tuple = FEATURE_KINDS

    def __post_init__(self):
        kinds = tuple(self.feature_kinds)
        bad = [k for k in kinds if k not in FEATURE_KINDS]
        if bad or not kinds:
            raise ValueError(f"unknown feature kinds {bad}; choose from {FEATURE_KINDS}")
        if len(set(kinds)) != len(kinds):
            raise ValueError("duplicate feature kinds")
        if self.delay_taps < 0:
            raise ValueError("delay_taps must be >= 0")
        # canonical order keeps column layout deterministic
        object.__setattr__(self, "feature_kinds", tuple(k for k in FEATURE_KINDS if k in kinds))

    @property
    def n_features(self):
        return (self.delay_taps + 1) * len(self.feature_kinds)

    def to_dict(self):
        return {"delay_taps": self.delay_taps, "feature_kinds": list(self.feature_kinds)}


ARVTDNN_FEATURES = FeatureSpec(4, FEATURE_KINDS)
SRTDNN_FEATURES = FeatureSpec(0, FEATURE_KINDS)


def _kind(x, kind):
    if kind == "I":
        return x.real
    if kind == "Q":
        return x.imag
    a = np.abs(x)
    if kind == "|x|":
        return a
    if kind == "|x|^2":
        return a * a
    return a * a * a


def column_names(spec: FeatureSpec):
    return [f"{k}[n-{q}]" for q in range(spec.delay_taps + 1) for k in spec.feature_kinds]


def build_features(x, spec: FeatureSpec) -> np.ndarray:
    """Row n holds, tap by tap, the selected kinds of x[n - q] (zero prehistory)."""
    xs = as_signal(x).samples
    n = xs.size
    if n <= spec.delay_taps:
        raise TooShort(f"{n} samples cannot feed {spec.delay_taps} delay taps")
    k = len(spec.feature_kinds)
    out = np.zeros((n, spec.n_features), dtype=np.float64)
    for q in range(spec.delay_taps + 1):
        xq = np.zeros_like(xs)
        xq[q:] = xs[: n - q]
        for j, kind in enumerate(spec.feature_kinds):
            out[:, q * k + j] = _kind(xq, kind)
    return out
