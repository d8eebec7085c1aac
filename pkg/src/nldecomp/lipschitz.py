"""Mean-squared Lipschitz constants estimated from samples.

With x1, x2 drawn i.i.d., E|f(x1) - f(x2)|^2 = 2 Var(f), so the mean-squared
Lipschitz constant collapses to sqrt(Var f / Var x). That collapsed value is
the primary estimate; :func:`holder_sanity` keeps a bucketed, pairwise view
of the same ratio for inputs where the collapse is in doubt.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import stats
from .decomp import DecompositionResult
from .errors import DegenerateInput, LengthMismatch, TooFewSamples
from .indicators import DEGENERATE_RATIO

__all__ = [
    "LipschitzEstimate",
    "DominanceResult",
    "sample_pairs",
    "ms_lipschitz",
    "two_var_identity_check",
    "lipschitz_dominance",
    "holder_sanity",
    "write_bucket_csv",
]

DEFAULT_PAIRS = 100_000


def _values(a):
    return np.asarray(getattr(a, "samples", a))


def sample_pairs(n, n_pairs, seed):
    """Uniform ordered index pairs (i, j) with i != j."""
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, n_pairs)
    j = (i + rng.integers(1, n, n_pairs)) % n
    return i, j


def _pair_sq(f, i, j):
    df = f[i] - f[j]
    return df.real**2 + df.imag**2 if np.iscomplexobj(df) else df**2


@dataclass(frozen=True)
class LipschitzEstimate:
    l_value: float
    var_f: float
    var_x: float
    pair_estimate_2var: float
    pair_stderr: float
    n_pairs: int
    seed: int

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def ms_lipschitz(f_samples, x_samples, n_pairs=DEFAULT_PAIRS, seed=0) -> LipschitzEstimate:
    f, x = _values(f_samples), _values(x_samples)
    if f.size != x.size:
        raise LengthMismatch(f"f has {f.size} samples, x has {x.size}")
    if f.size < 1000:
        raise TooFewSamples("need at least 1000 samples")
    var_x = stats.variance(x, ddof=1)
    if not var_x > 1e-300:
        raise DegenerateInput("input variance is zero")
    var_f = stats.variance(f, ddof=1)
    i, j = sample_pairs(f.size, n_pairs, seed)
    sq = _pair_sq(f, i, j)
    return LipschitzEstimate(
        l_value=math.sqrt(var_f / var_x),
        var_f=var_f,
        var_x=var_x,
        pair_estimate_2var=float(sq.mean()),
        pair_stderr=float(sq.std(ddof=1) / math.sqrt(n_pairs)),
        n_pairs=int(n_pairs),
        seed=int(seed),
    )


def two_var_identity_check(f_samples, seed=0, n_pairs=DEFAULT_PAIRS):
    """``(pair_mean, two_var, z_score)`` comparing E|f_i - f_j|^2 to 2 Var(f)."""
    f = _values(f_samples)
    if f.size < 1000:
        raise TooFewSamples("need at least 1000 samples")
    i, j = sample_pairs(f.size, n_pairs, seed)
    sq = _pair_sq(f, i, j)
    pair_mean = float(sq.mean())
    two_var = 2.0 * stats.variance(f, ddof=1)
    se = float(sq.std(ddof=1) / math.sqrt(n_pairs))
    z = 0.0 if se == 0 else (pair_mean - two_var) / se
    return pair_mean, two_var, z


@dataclass(frozen=True)
class DominanceResult:
    l_d: float
    l_h: float
    dominant: bool
    degenerate: bool
    var_d: float
    var_h: float

    def to_dict(self):
        return asdict(self)


def lipschitz_dominance(res: DecompositionResult, n_pairs=DEFAULT_PAIRS, seed=0) -> DominanceResult:
    """L_d and L_h against the same input; ``dominant`` iff L_d > L_h on a non-degenerate record."""
    x, d, h, y = (res.on_support(k) for k in ("x", "d", "h", "y"))
    ed = ms_lipschitz(d, x, n_pairs, seed)
    eh = ms_lipschitz(h, x, n_pairs, seed)
    # distortionless record: both constants are rounding noise
    degenerate = ed.var_f <= DEGENERATE_RATIO * stats.power(y)
    dominant = ed.l_value > eh.l_value and not degenerate
    return DominanceResult(ed.l_value, eh.l_value, bool(dominant), bool(degenerate),
                           ed.var_f, eh.var_f)


def holder_sanity(f_samples, x_samples, k_grid=None, n_pairs=200_000, seed=0):
    """Bucket random pairs by |x_i - x_j| quantiles and report E|df|^2 / E|dx|^2.

    ``k_grid`` holds the quantile levels of the bucket edges (deciles by
    default). Returns ``(rows, max_ratio)``; each row is a dict with
    bucket_low, bucket_high, ratio and n_pairs.
    """
    f, x = _values(f_samples), _values(x_samples)
    if f.size != x.size:
        raise LengthMismatch(f"f has {f.size} samples, x has {x.size}")
    if f.size < 10_000:
        raise TooFewSamples("need at least 10^4 samples")
    if k_grid is None:
        k_grid = np.linspace(0.0, 1.0, 11)
    i, j = sample_pairs(f.size, n_pairs, seed)
    dx = np.abs(x[i] - x[j])
    dfsq = _pair_sq(f, i, j)
    edges = np.quantile(dx, k_grid)
    which = np.clip(np.searchsorted(edges, dx, side="right") - 1, 0, len(edges) - 2)
    rows = []
    for b in range(len(edges) - 1):
        mask = which == b
        cnt = int(mask.sum())
        den = float(np.sum(dx[mask] ** 2))
        ratio = float(np.sum(dfsq[mask]) / den) if den > 0 else math.nan
        rows.append({"bucket_low": float(edges[b]), "bucket_high": float(edges[b + 1]),
                     "ratio": ratio, "n_pairs": cnt})
    finite = [r["ratio"] for r in rows if math.isfinite(r["ratio"])]
    return rows, (max(finite) if finite else math.nan)


def write_bucket_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["bucket_low", "bucket_high", "ratio", "n_pairs"])
        w.writeheader()
        w.writerows(rows)
