"""Full-distortion versus structured residual learning of a behavioral model.

The full pipeline trains one network on the whole deviation ``y - x``. The
residual pipeline first fits a static odd polynomial G by least squares and
trains the network only on ``h = y - G(x)``; its reconstruction is
``G(x) + N(x)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..decomp import DEFAULT_GUARD, StaticModel, fit_static
from ..errors import LengthMismatch
from ..signals import as_signal
from ..synth import eval_odd_poly
from .features import ARVTDNN_FEATURES, SRTDNN_FEATURES, FeatureSpec, build_features
from .mlp import MlpModel, TrainConfig, TrainingTrace, complexity_account, train

__all__ = [
    "Preset",
    "ARVTDNN",
    "SRTDNN",
    "PRESETS",
    "default_rows",
    "full_learning",
    "residual_learning",
    "predict_full",
    "predict_residual",
    "pipeline_macs",
]


@dataclass(frozen=True)
class Preset:
    name: str
    features: FeatureSpec
    hidden: int
    static_order: Optional[int] = None

    def with_hidden(self, hidden):
        return dataclasses.replace(self, hidden=int(hidden))

    def to_dict(self):
        return {"name": self.name, "features": self.features.to_dict(), "hidden": self.hidden,
                "static_order": self.static_order}


# full learner: 5 taps x 5 kinds; residual learner: tap 0 only, wider hidden layer
ARVTDNN = Preset("ARVTDNN", ARVTDNN_FEATURES, 25)
SRTDNN = Preset("SRTDNN", SRTDNN_FEATURES, 50, static_order=7)
PRESETS = {"ARVTDNN": ARVTDNN, "SRTDNN": SRTDNN, "full": ARVTDNN, "residual": SRTDNN}


def default_rows(n, features: FeatureSpec):
    """Training rows: everything after the prehistory guard."""
    return np.arange(max(DEFAULT_GUARD, features.delay_taps), n)


def _prepare(x, y, rows, features):
    xs, ys = as_signal(x).samples, as_signal(y).samples
    if xs.size != ys.size:
        raise LengthMismatch(f"x has {xs.size} samples, y has {ys.size}")
    rows = default_rows(xs.size, features) if rows is None else np.asarray(rows)
    return xs, ys, rows


def _config(config, preset):
    return dataclasses.replace(config or TrainConfig(), hidden=preset.hidden)


def pipeline_macs(model: MlpModel, static_model: Optional[StaticModel] = None):
    return complexity_account(model, 0 if static_model is None else static_model.n_terms)[1]


def full_learning(x, y, preset: Preset = ARVTDNN, config: TrainConfig = None, rows=None,
                  features=None):
    """Train on the total deviation ``y - x``; returns ``(model, trace)``.

    ``rows`` selects the training samples (all post-guard rows by default).
    A precomputed feature matrix may be passed to skip rebuilding it.
    """
    xs, ys, rows = _prepare(x, y, rows, preset.features)
    F = build_features(xs, preset.features) if features is None else features
    model, trace = train(F[rows], (ys - xs)[rows], _config(config, preset), preset.name)
    model.feature_spec = preset.features
    trace.extra.update({"target": "d", "network_macs": trace.mac_per_inference,
                        "static_terms": 0})
    return model, trace


def residual_learning(x, y, static_order=None, preset: Preset = SRTDNN, config: TrainConfig = None,
                      rows=None, features=None):
    """Fit G on the training rows, then train on ``h = y - G(x)``.

    Returns ``(static_model, model, trace)``. The trace's MAC count includes
    the static polynomial (2 per basis term).
    """
    xs, ys, rows = _prepare(x, y, rows, preset.features)
    order = static_order or preset.static_order or 7
    static = fit_static(xs[rows], ys[rows], order)
    g = eval_odd_poly(static.coefficients, xs)
    F = build_features(xs, preset.features) if features is None else features
    model, trace = train(F[rows], (ys - g)[rows], _config(config, preset), preset.name)
    model.feature_spec = preset.features
    net = trace.mac_per_inference
    trace.mac_per_inference = pipeline_macs(model, static)
    trace.extra.update({"target": "h", "network_macs": net, "static_terms": static.n_terms,
                        "static_order": order})
    return static, model, trace


def _features_for(model, xs, features):
    if features is not None:
        return features
    if model.feature_spec is None:
        raise ValueError("model carries no feature spec; pass the feature matrix")
    return build_features(xs, model.feature_spec)


def predict_full(model: MlpModel, x, features=None):
    """Reconstruction ``x + N(x)`` as a signal."""
    x = as_signal(x)
    return x.replace(x.samples + model.predict(_features_for(model, x.samples, features)))


def predict_residual(static: StaticModel, model: MlpModel, x, features=None):
    """Reconstruction ``G(x) + N(x)`` as a signal."""
    x = as_signal(x)
    g = eval_odd_poly(static.coefficients, x.samples)
    return x.replace(g + model.predict(_features_for(model, x.samples, features)))
