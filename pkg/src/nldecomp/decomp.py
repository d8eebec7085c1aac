"""Two-stage split of a measured record into static and dynamic parts.

Given aligned X and Y, a memoryless odd polynomial G is fitted by least
squares and the record is split as ``Y = X + d = G + h`` with ``r = G - X``.
Statistics are taken over a support that skips a leading guard of samples so
prehistory transients of causal systems do not enter the expectations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import linalg

from . import stats
from .errors import BadOrder, IllConditioned, TooFewSamples
from .signals import AlignmentReport, SampledSignal, align_and_normalize, as_signal, save_signal
from .synth import eval_odd_poly, odd_basis

__all__ = [
    "StaticModel",
    "DecompositionResult",
    "IdentityReport",
    "MAX_STATIC_ORDER",
    "DEFAULT_GUARD",
    "fit_static",
    "apply_static",
    "select_order",
    "decompose",
    "verify_identities",
]

MAX_STATIC_ORDER = 13
DEFAULT_GUARD = 16
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class StaticModel:
    order: int
    coefficients: np.ndarray
    fit_condition_number: float = 1.0

    def __post_init__(self):
        if self.order < 1 or self.order % 2 == 0:
            raise BadOrder(f"static model order must be odd, got {self.order}")
        c = np.array(self.coefficients, dtype=np.complex128).reshape(-1)
        if c.size != (self.order + 1) // 2:
            raise ValueError(f"order {self.order} needs {(self.order + 1) // 2} coefficients")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite static coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def identity(cls, order=1):
        c = np.zeros((order + 1) // 2, dtype=np.complex128)
        c[0] = 1.0
        return cls(order, c)

    @property
    def n_terms(self):
        return self.coefficients.size

    def __call__(self, x):
        return apply_static(self, x)

    def to_dict(self):
        return {
            "order": int(self.order),
            "coefficients": [[float(c.real), float(c.imag)] for c in self.coefficients],
            "fit_condition_number": float(self.fit_condition_number),
        }

    @classmethod
    def from_dict(cls, d):
        c = [complex(a, b) for a, b in d["coefficients"]]
        return cls(int(d["order"]), c, float(d.get("fit_condition_number", 1.0)))


def fit_static(x, y, order) -> StaticModel:
    """Least-squares fit of y ~ sum_k c_k x|x|^(k-1) via column-scaled QR.

    The reported condition number is that of the column-equilibrated
    regression matrix; above 1e12 the fit is rejected.
    """
    if order < 1 or order % 2 == 0 or order > MAX_STATIC_ORDER:
        raise BadOrder(f"order must be odd in [1, {MAX_STATIC_ORDER}], got {order}")
    xs = as_signal(x).samples
    ys = as_signal(y).samples
    if xs.size != ys.size:
        raise ValueError("x and y must have equal length")
    n_terms = (order + 1) // 2
    if xs.size < 10 * n_terms:
        raise TooFewSamples(f"{xs.size} samples is too few for {n_terms} basis terms")
    A = odd_basis(xs, order)
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise IllConditioned("input is identically zero")
    As = A / norms
    Q, R = linalg.qr(As, mode="economic")
    sv = linalg.svdvals(R)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if not cond <= MAX_CONDITION:
        raise IllConditioned(f"regression matrix condition number {cond:.3g} exceeds 1e12")
    coef = linalg.solve_triangular(R, Q.conj().T @ ys) / norms
    return StaticModel(order, coef, cond)


def apply_static(model: StaticModel, x) -> SampledSignal:
    x = as_signal(x)
    return x.replace(eval_odd_poly(model.coefficients, x.samples))


def select_order(x, y, max_order=MAX_STATIC_ORDER, holdout_fraction=0.2, rtol=1e-6):
    """Pick the static order with the lowest holdout residual power.

    The last ``holdout_fraction`` of the record is held out. Orders within
    ``rtol`` of the best holdout power resolve to the lowest such order.
    Returns ``(order, {order: holdout_power})``.
    """
    xs = as_signal(x).samples
    ys = as_signal(y).samples
    n_train = int(round(xs.size * (1 - holdout_fraction)))
    scores = {}
    for order in range(1, max_order + 1, 2):
        try:
            m = fit_static(xs[:n_train], ys[:n_train], order)
        except (IllConditioned, TooFewSamples):
            continue
        resid = ys[n_train:] - eval_odd_poly(m.coefficients, xs[n_train:])
        scores[order] = stats.power(resid)
    if not scores:
        raise IllConditioned("no static order could be fitted")
    best = min(scores.values())
    floor = best * (1 + rtol) + 1e-300 + 1e-24 * stats.power(ys)
    chosen = min(o for o, s in scores.items() if s <= floor)
    return chosen, scores


@dataclass(frozen=True, eq=False)
class IdentityReport:
    pointwise_residual: float
    energy_residual_xd: float
    energy_residual_gh: float
    diagnostic_residual: float
    mean_identity_residual: float
    power_identity_residual: float
    variance_identity_residual: float
    scale: float
    tol: float
    passed: bool

    def to_dict(self):
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                for k, v in self.__dict__.items()}


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    """Aligned record plus its split; ``support`` bounds the statistics window."""

    x: SampledSignal
    y: SampledSignal
    g: SampledSignal
    d: SampledSignal
    h: SampledSignal
    r: SampledSignal
    static_model: StaticModel
    alignment: AlignmentReport
    support: tuple
    order_scores: dict = field(default_factory=dict)
    centered: bool = False

    def on_support(self, name):
        """Samples of one component restricted to the statistics support."""
        lo, hi = self.support
        return getattr(self, name).samples[lo:hi]

    @property
    def n_support(self):
        return self.support[1] - self.support[0]

    def manifest(self):
        return {
            "static_model": self.static_model.to_dict(),
            "alignment": self.alignment.to_dict(),
            "support": [int(self.support[0]), int(self.support[1])],
            "length": len(self.x),
            "sample_rate_hz": self.x.sample_rate_hz,
            "centered": self.centered,
            "order_scores": {str(k): float(v) for k, v in self.order_scores.items()},
            "files": {k: f"{k}.bin" for k in ("x", "y", "g", "d", "h", "r")},
            "expectation_convention": "Re{E[a conj(b)]}",
        }

    def export(self, directory):
        """Write the six signals as NLDS binaries plus ``manifest.json``."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        for k in ("x", "y", "g", "d", "h", "r"):
            save_signal(getattr(self, k), out / f"{k}.bin")
        (out / "manifest.json").write_text(json.dumps(self.manifest(), indent=2, sort_keys=True))
        return out


def decompose(
    x,
    y,
    order: Optional[int] = None,
    *,
    align=False,
    normalize_gain=True,
    memory_depth=0,
    guard: Optional[int] = None,
    center=False,
    max_order=MAX_STATIC_ORDER,
    holdout_fraction=0.2,
) -> DecompositionResult:
    """Fit G on the statistics support and return all six signals.

    With ``align=True`` the record first goes through
    :func:`~nldecomp.signals.align_and_normalize`. ``center=True`` removes the
    support means of x and y before fitting, which makes every variance
    insensitive to a common DC offset. When ``order`` is None it is chosen by
    :func:`select_order`, then G is refitted on the full support.
    """
    x, y = as_signal(x), as_signal(y)
    if align:
        x, y, report = align_and_normalize(x, y, normalize_gain=normalize_gain)
    else:
        if len(x) != len(y):
            raise ValueError("x and y must have equal length (or pass align=True)")
        report = AlignmentReport.identity(x, y)
    n = len(x)
    if guard is None:
        guard = max(DEFAULT_GUARD, int(memory_depth))
    if guard >= n:
        raise TooFewSamples("guard leaves no samples for statistics")
    lo, hi = guard, n
    xs, ys = x.samples, y.samples
    if center:
        xs = xs - xs[lo:hi].mean()
        ys = ys - ys[lo:hi].mean()
        x, y = x.replace(xs), y.replace(ys)
    scores = {}
    if order is None:
        order, scores = select_order(xs[lo:hi], ys[lo:hi], max_order, holdout_fraction)
    model = fit_static(xs[lo:hi], ys[lo:hi], order)
    gs = eval_odd_poly(model.coefficients, xs)
    return DecompositionResult(
        x=x,
        y=y,
        g=x.replace(gs),
        d=x.replace(ys - xs),
        h=x.replace(ys - gs),
        r=x.replace(gs - xs),
        static_model=model,
        alignment=report,
        support=(lo, hi),
        order_scores=scores,
        centered=center,
    )


def verify_identities(res: DecompositionResult, tol=1e-9) -> IdentityReport:
    """Check the distortion, energy and diagnostic identities on the support.

    Energy and diagnostic residuals are compared against
    ``tol * max(1, E|y|^2)``; the pointwise identity against
    ``1e-12 * max(1, max|y|)``.
    """
    X, Y, G, d, h, r = (res.on_support(k) for k in ("x", "y", "g", "d", "h", "r"))
    pointwise = float(np.max(np.abs(r - (d - h)), initial=0.0))
    ey2 = stats.power(Y)
    e_xd = abs(ey2 - (stats.power(X) + 2 * stats.cross(X, d) + stats.power(d)))
    e_gh = abs(ey2 - (stats.power(G) + 2 * stats.cross(G, h) + stats.power(h)))
    theta = stats.power(G) - stats.power(X)
    alpha = stats.cross(h, G) - stats.cross(d, X)
    diag = abs((theta + 2 * alpha) - (stats.power(r) + 2 * stats.cross(r, h)))
    dh = d - h
    mean_id = abs(complex(r.mean()) - complex(dh.mean()))
    pow_id = abs(stats.power(r) - stats.power(dh))
    var_id = abs(stats.variance(r) - stats.variance(dh))
    scale = max(1.0, ey2)
    ymax = max(1.0, float(np.max(np.abs(Y), initial=0.0)))
    passed = (
        pointwise <= 1e-12 * ymax
        and max(e_xd, e_gh, diag, pow_id, var_id) <= tol * scale
        and mean_id <= tol * max(1.0, np.sqrt(ey2))
    )
    return IdentityReport(pointwise, e_xd, e_gh, diag, mean_id, pow_id, var_id, scale, tol, passed)
