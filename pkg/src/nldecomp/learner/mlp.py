"""One-hidden-layer tanh network trained by plain mini-batch gradient descent.

The optimizer is deliberately stateless (fixed step, seeded shuffling) so that
convergence comparisons between targets reflect the targets themselves.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..errors import DivergedLoss
from .features import FeatureSpec

__all__ = [
    "MlpModel",
    "TrainConfig",
    "TrainingTrace",
    "init_mlp",
    "loss_and_grads",
    "train",
    "complexity_account",
    "gradient_check",
    "complex_to_real",
    "real_to_complex",
]


def complex_to_real(t):
    t = np.asarray(getattr(t, "samples", t))
    if np.iscomplexobj(t) or t.ndim == 1:
        t = np.asarray(t, dtype=np.complex128)
        return np.stack([t.real, t.imag], axis=1)
    return np.asarray(t, dtype=np.float64)


def real_to_complex(out):
    return out[:, 0] + 1j * out[:, 1]


@dataclass(eq=False)
class MlpModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    input_offset: np.ndarray
    input_scale: np.ndarray
    seed: int = 0
    activation: str = "tanh"
    preset: str = "custom"
    feature_spec: Optional[FeatureSpec] = None

    @property
    def layer_sizes(self):
        return [self.W1.shape[0], self.W1.shape[1], self.W2.shape[1]]

    @property
    def param_count(self):
        return sum((a + 1) * b for a, b in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    def params(self):
        return [self.W1, self.b1, self.W2, self.b2]

    def copy(self):
        return MlpModel(*(p.copy() for p in self.params()), self.input_offset.copy(),
                        self.input_scale.copy(), self.seed, self.activation, self.preset,
                        self.feature_spec)

    def _hidden(self, features):
        z = (np.asarray(features, dtype=np.float64) - self.input_offset) / self.input_scale
        return z, np.tanh(z @ self.W1 + self.b1)

    def forward(self, features):
        """Real outputs of shape (N, 2)."""
        return self._hidden(features)[1] @ self.W2 + self.b2

    def predict(self, features):
        return real_to_complex(self.forward(features))

    def to_dict(self):
        return {
            "layer_sizes": self.layer_sizes,
            "activation": self.activation,
            "seed": int(self.seed),
            "preset": self.preset,
            "weights": [self.W1.reshape(-1).tolist(), self.W2.reshape(-1).tolist()],
            "biases": [self.b1.tolist(), self.b2.tolist()],
            "input_offset": self.input_offset.tolist(),
            "input_scale": self.input_scale.tolist(),
            "weight_layout": "row-major, shape (n_in, n_out) per layer",
            "features": None if self.feature_spec is None else self.feature_spec.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        f, h, o = d["layer_sizes"]
        w1, w2 = d["weights"]
        b1, b2 = d["biases"]
        return cls(
            np.array(w1, dtype=np.float64).reshape(f, h),
            np.array(b1, dtype=np.float64),
            np.array(w2, dtype=np.float64).reshape(h, o),
            np.array(b2, dtype=np.float64),
            np.array(d["input_offset"], dtype=np.float64),
            np.array(d["input_scale"], dtype=np.float64),
            int(d.get("seed", 0)),
            d.get("activation", "tanh"),
            d.get("preset", "custom"),
            None if d.get("features") is None else FeatureSpec(
                int(d["features"]["delay_taps"]), tuple(d["features"]["feature_kinds"])),
        )

    def to_json(self):
        return json.dumps(self.to_dict())


def init_mlp(n_in, hidden, seed=0, offset=None, scale=None, n_out=2, preset="custom",
             init_gain=1.0) -> MlpModel:
    """Glorot-uniform hidden layer times ``init_gain``; zero output layer (prediction starts at 0)."""
    rng = np.random.default_rng(seed)
    lim = init_gain * math.sqrt(6.0 / (n_in + hidden))
    W1 = rng.uniform(-lim, lim, (n_in, hidden))
    off = np.zeros(n_in) if offset is None else np.asarray(offset, dtype=np.float64)
    sc = np.ones(n_in) if scale is None else np.asarray(scale, dtype=np.float64)
    return MlpModel(W1, np.zeros(hidden), np.zeros((hidden, n_out)), np.zeros(n_out), off, sc,
                    seed, "tanh", preset)


def loss_and_grads(model: MlpModel, features, targets, with_grads=True):
    """Loss mean_n |out_n - t_n|^2 (summed over the two outputs) and its gradients."""
    z, a = model._hidden(features)
    err = a @ model.W2 + model.b2 - targets
    n = err.shape[0]
    loss = float(np.sum(err * err) / n)
    if not with_grads:
        return loss, None
    dout = (2.0 / n) * err
    gW2 = a.T @ dout
    gb2 = dout.sum(axis=0)
    dz = (dout @ model.W2.T) * (1.0 - a * a)
    gW1 = z.T @ dz
    gb1 = dz.sum(axis=0)
    return loss, [gW1, gb1, gW2, gb2]


@dataclass
class TrainConfig:
    hidden: int = 25
    seed: int = 0
    step_size: float = 0.05
    max_iters: int = 20_000
    target_loss: float = 0.0
    batch_size: int = 128
    eval_every: Optional[int] = None
    standardize: bool = True
    divergence_factor: float = 1e6
    init_gain: float = 1.0
    input_rms: float = 1.0
    wall_time_budget_s: Optional[float] = None

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainingTrace:
    iterations: int
    loss_curve: list
    eval_iterations: list
    iterations_to_target: Optional[int]
    best_iteration: int
    train_samples_used: int
    samples_processed: int
    mac_per_inference: int
    param_count: int
    wall_time_budget_respected: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def initial_loss(self):
        return self.loss_curve[0]

    @property
    def final_loss(self):
        return min(self.loss_curve)

    def to_dict(self):
        return asdict(self)


def complexity_account(model: MlpModel, static_terms=0):
    """``(param_count, mac_per_inference)`` from layer shapes.

    MACs count one multiply-accumulate per weight; a static polynomial stage
    adds 2 per basis term (power update plus coefficient product).
    """
    sizes = model.layer_sizes
    macs = sum(a * b for a, b in zip(sizes[:-1], sizes[1:])) + 2 * int(static_terms)
    return model.param_count, macs


def train(features, targets, config: TrainConfig = None, preset="custom"):
    """Minimize the mean-squared error; identical inputs give identical models.

    Stops once the full-batch training loss is at or below
    ``config.target_loss`` (checked every ``eval_every`` updates, one epoch by
    default) or after ``max_iters`` updates. The returned model is the best
    evaluated checkpoint, so its loss never exceeds the initial loss.
    """
    cfg = config or TrainConfig()
    X = np.asarray(features, dtype=np.float64)
    T = complex_to_real(targets)
    n, f = X.shape
    if T.shape[0] != n:
        raise ValueError("features and targets need the same number of rows")
    if cfg.standardize:
        off = X.mean(axis=0)
        sc = X.std(axis=0)
        sc[sc == 0] = 1.0
        sc = sc / cfg.input_rms
    else:
        off, sc = np.zeros(f), np.ones(f)
    model = init_mlp(f, cfg.hidden, cfg.seed, off, sc, T.shape[1], preset, cfg.init_gain)
    if n < 10 * model.param_count:
        warnings.warn(f"{n} training rows for {model.param_count} parameters", RuntimeWarning,
                      stacklevel=2)
    Z = (X - off) / sc
    # a standardized copy lets the loop skip re-normalization
    work = init_mlp(f, cfg.hidden, cfg.seed, None, None, T.shape[1], preset, cfg.init_gain)
    W1, b1, W2, b2 = work.params()
    rng = np.random.default_rng([cfg.seed, 0x5EED])
    bs = min(cfg.batch_size, n)
    steps_per_epoch = max(1, n // bs)
    eval_every = cfg.eval_every or steps_per_epoch
    lr = cfg.step_size

    def full_loss():
        e = np.tanh(Z @ W1 + b1) @ W2 + b2 - T
        return float(np.sum(e * e) / n)

    l0 = full_loss()
    curve, evals = [l0], [0]
    best, best_it, best_params = l0, 0, [p.copy() for p in (W1, b1, W2, b2)]
    hit = 0 if l0 <= cfg.target_loss else None
    it = 0
    t0 = time.perf_counter()
    budget_ok = True
    perm = rng.permutation(n)
    pos = 0
    while hit is None and it < cfg.max_iters:
        if pos + bs > n:
            perm = rng.permutation(n)
            pos = 0
        idx = perm[pos : pos + bs]
        pos += bs
        zb, tb = Z[idx], T[idx]
        a = np.tanh(zb @ W1 + b1)
        dout = (2.0 / bs) * (a @ W2 + b2 - tb)
        dz = (dout @ W2.T) * (1.0 - a * a)
        W2 -= lr * (a.T @ dout)
        b2 -= lr * dout.sum(axis=0)
        W1 -= lr * (zb.T @ dz)
        b1 -= lr * dz.sum(axis=0)
        it += 1
        if it % eval_every == 0 or it == cfg.max_iters:
            cur = full_loss()
            if not math.isfinite(cur) or cur > cfg.divergence_factor * max(l0, 1e-300):
                raise DivergedLoss(f"loss {cur!r} at iteration {it}; reduce the step size")
            curve.append(cur)
            evals.append(it)
            if cur < best:
                best, best_it = cur, it
                best_params = [p.copy() for p in (W1, b1, W2, b2)]
            if cur <= cfg.target_loss:
                hit = it
            if cfg.wall_time_budget_s is not None and time.perf_counter() - t0 > cfg.wall_time_budget_s:
                budget_ok = False
                break
    model.W1, model.b1, model.W2, model.b2 = best_params
    params, macs = complexity_account(model)
    trace = TrainingTrace(
        iterations=it,
        loss_curve=curve,
        eval_iterations=evals,
        iterations_to_target=hit,
        best_iteration=best_it,
        train_samples_used=n,
        samples_processed=it * bs,
        mac_per_inference=macs,
        param_count=params,
        wall_time_budget_respected=budget_ok,
    )
    return model, trace


def gradient_check(model: MlpModel, features, targets, n_coords=10, seed=0, step=1e-6):
    """Max relative error between backprop and central differences on random coordinates."""
    T = complex_to_real(targets)
    _, grads = loss_and_grads(model, features, T)
    rng = np.random.default_rng(seed)
    params = model.params()
    sizes = np.array([p.size for p in params])
    worst = 0.0
    for _ in range(n_coords):
        k = int(rng.choice(len(params), p=sizes / sizes.sum()))
        flat = params[k].reshape(-1)
        i = int(rng.integers(flat.size))
        orig = flat[i]
        flat[i] = orig + step
        lp, _ = loss_and_grads(model, features, T, with_grads=False)
        flat[i] = orig - step
        lm, _ = loss_and_grads(model, features, T, with_grads=False)
        flat[i] = orig
        num = (lp - lm) / (2 * step)
        ana = grads[k].reshape(-1)[i]
        denom = max(abs(num), abs(ana), 1e-12)
        worst = max(worst, abs(num - ana) / denom)
    return worst
