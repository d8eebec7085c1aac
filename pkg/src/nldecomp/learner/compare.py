"""Seed ensembles comparing the total-distortion and residual learning targets.

Four comparisons are produced per seed:

* ``min_hidden``: smallest hidden width in a sweep whose holdout
  reconstruction NMSE reaches the target, for the d and h targets on the same
  memory-aware features.
* ``iters_to_target``: updates until the training NMSE first reaches the
  target, at one matched width and step size.
* ``gap``: absolute holdout-minus-train NMSE (linear, relative to the record
  power) of the two preset pipelines.
* ``size_curve``: holdout NMSE of the preset pipelines against training-set
  size, used for the sample-efficiency ratio.

NMSE always refers to the reconstruction of y, normalized by E|y|^2 on the
rows in question.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import stats
from ..signals import generate_filtered_noise
from ..synth import eval_odd_poly, make_system, simulate
from ..decomp import DEFAULT_GUARD, fit_static
from .features import ARVTDNN_FEATURES, build_features
from .mlp import TrainConfig, train
from .pipelines import ARVTDNN, SRTDNN, full_learning, residual_learning

__all__ = [
    "CompareConfig",
    "SWEEP_COLUMNS",
    "split_rows",
    "make_record",
    "run_seed",
    "run_comparison",
    "summarize",
    "write_sweep_csv",
]

SWEEP_COLUMNS = (
    "seed", "experiment", "preset", "target", "hidden", "train_rows", "params", "macs", "iters",
    "iters_to_target", "samples_processed", "train_flops", "train_nmse_db", "nmse_db",
    "evm_db", "aclr_dbc",
)


@dataclass
class CompareConfig:
    seeds: tuple = tuple(range(20))
    length: int = 32768
    kind: str = "MemoryPolynomial"
    nl_order: int = 5
    memory_depth: int = 3
    dynamic_strength: float = 0.05
    bandwidth_fraction: float = 0.5
    holdout_fraction: float = 0.2
    nmse_target_db: float = -35.0
    hidden_grid: tuple = (5, 10, 20, 40, 80)
    matched_hidden: int = 20
    step_size: float = 0.05
    max_iters: int = 6_000
    batch_size: int = 128
    size_fractions: tuple = (1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0)
    static_order: int = 7
    jobs: int = 1

    def to_dict(self):
        d = dataclasses.asdict(self)
        for k in ("seeds", "hidden_grid", "size_fractions"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise KeyError(f"unknown comparison keys: {sorted(unknown)}")
        d = dict(d)
        for k in ("seeds", "hidden_grid", "size_fractions"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


def split_rows(n, guard, holdout_fraction, seed):
    """Seeded random split of the post-guard rows into (train, holdout), each sorted."""
    rng = np.random.default_rng([seed, 0xB01D])
    perm = rng.permutation(np.arange(guard, n))
    n_hold = int(round(holdout_fraction * perm.size))
    return perm[n_hold:], np.sort(perm[:n_hold])


def make_record(seed, cfg: CompareConfig):
    x = generate_filtered_noise(seed, cfg.length, cfg.bandwidth_fraction)
    spec = make_system(cfg.kind, seed, cfg.nl_order, cfg.memory_depth, cfg.dynamic_strength)
    return x, simulate(spec, x)


def _nmse_lin(pred, target):
    return stats.power(pred - target) / stats.power(target)


def _db(v):
    return 10.0 * math.log10(v) if v > 0 else -math.inf


def _iters_to(trace, target_loss):
    for it, loss in zip(trace.eval_iterations, trace.loss_curve):
        if loss <= target_loss:
            return it
    return None


def _row(seed, experiment, preset, target, hidden, trace, tr_nmse, ho_nmse, macs, it_target=None):
    flops = 6 * trace.extra.get("network_macs", trace.mac_per_inference) * trace.samples_processed
    return {
        "seed": seed, "experiment": experiment, "preset": preset, "target": target,
        "hidden": hidden, "train_rows": trace.train_samples_used, "params": trace.param_count,
        "macs": macs, "iters": trace.iterations,
        "iters_to_target": "" if it_target is None else it_target,
        "samples_processed": trace.samples_processed, "train_flops": flops,
        "train_nmse_db": tr_nmse, "nmse_db": ho_nmse, "evm_db": "", "aclr_dbc": "",
    }


def run_seed(seed, cfg: CompareConfig):
    """All four comparisons for one seed; returns ``(result_dict, sweep_rows)``."""
    x, y = make_record(seed, cfg)
    xs, ys = x.samples, y.samples
    guard = max(DEFAULT_GUARD, cfg.memory_depth, ARVTDNN_FEATURES.delay_taps)
    train_rows, hold = split_rows(xs.size, guard, cfg.holdout_fraction, seed)
    tr_sorted = np.sort(train_rows)
    p_train = stats.power(ys[tr_sorted])
    thr = 10.0 ** (cfg.nmse_target_db / 10.0)
    base = TrainConfig(step_size=cfg.step_size, max_iters=cfg.max_iters, batch_size=cfg.batch_size,
                       seed=seed)
    rows = []

    # matched architecture sweep: same features, d versus h target
    F = build_features(xs, ARVTDNN_FEATURES)
    static_m = fit_static(xs[tr_sorted], ys[tr_sorted], cfg.static_order)
    g = eval_odd_poly(static_m.coefficients, xs)
    targets = {"d": xs, "h": g}
    min_hidden = {}
    iters = {}
    sweep_nmse = {}
    for tname, offset in targets.items():
        min_hidden[tname] = None
        for hidden in cfg.hidden_grid:
            model, trace = train(F[tr_sorted], (ys - offset)[tr_sorted],
                                 dataclasses.replace(base, hidden=hidden))
            pred = offset + model.predict(F)
            tr_db = _db(_nmse_lin(pred[tr_sorted], ys[tr_sorted]))
            ho_db = _db(_nmse_lin(pred[hold], ys[hold]))
            it_t = _iters_to(trace, thr * p_train)
            sweep_nmse[(tname, hidden)] = ho_db
            if ho_db <= cfg.nmse_target_db and min_hidden[tname] is None:
                min_hidden[tname] = hidden
            if hidden == cfg.matched_hidden:
                iters[tname] = it_t
            rows.append(_row(seed, "hidden_sweep", f"matched-{ARVTDNN_FEATURES.n_features}f",
                             tname, hidden, trace, tr_db, ho_db, trace.mac_per_inference, it_t))
    if cfg.matched_hidden not in cfg.hidden_grid:
        for tname, offset in targets.items():
            _, trace = train(F[tr_sorted], (ys - offset)[tr_sorted],
                             dataclasses.replace(base, hidden=cfg.matched_hidden))
            iters[tname] = _iters_to(trace, thr * p_train)

    # preset pipelines against training-set size
    curve = {"full": [], "residual": []}
    gaps = {}
    n_train = train_rows.size
    for frac in cfg.size_fractions:
        k = max(64, int(round(frac * n_train)))
        sub = np.sort(train_rows[:k])
        m_full, t_full = full_learning(xs, ys, ARVTDNN, base, sub, features=F)
        pf = xs + m_full.predict(F)
        st, m_res, t_res = residual_learning(xs, ys, cfg.static_order, SRTDNN, base, sub)
        pr = eval_odd_poly(st.coefficients, xs) + m_res.predict(build_features(xs, SRTDNN.features))
        for name, pred, trace, preset in (("full", pf, t_full, ARVTDNN), ("residual", pr, t_res, SRTDNN)):
            tr_lin = _nmse_lin(pred[sub], ys[sub])
            ho_lin = _nmse_lin(pred[hold], ys[hold])
            curve[name].append((int(sub.size), _db(ho_lin)))
            if frac == cfg.size_fractions[-1]:
                gaps[name] = {"train_lin": tr_lin, "holdout_lin": ho_lin,
                              "gap_lin": abs(ho_lin - tr_lin), "gap_db": _db(ho_lin) - _db(tr_lin)}
            rows.append(_row(seed, "size_sweep", preset.name, "d" if name == "full" else "h",
                             preset.hidden, trace, _db(tr_lin), _db(ho_lin), trace.mac_per_inference))
    result = {
        "seed": int(seed),
        "min_hidden": min_hidden,
        "iters_to_target": iters,
        "gap": gaps,
        "size_curve": curve,
        "static_order": static_m.order,
        "record_power": p_train,
        "dynamic_floor_db": _db(_nmse_lin(g[hold], ys[hold])),
    }
    return result, rows


def _inf(v):
    return math.inf if v is None else v


def summarize(results, cfg: CompareConfig):
    """Pass rates and the seed-averaged sample-efficiency ratio."""
    n = len(results)
    a = [_inf(r["min_hidden"]["h"]) < _inf(r["min_hidden"]["d"]) for r in results]
    b = [_inf(r["iters_to_target"]["h"]) < _inf(r["iters_to_target"]["d"]) for r in results]
    c = [r["gap"]["residual"]["gap_lin"] < r["gap"]["full"]["gap_lin"] for r in results]
    c_db = [abs(r["gap"]["residual"]["gap_db"]) < abs(r["gap"]["full"]["gap_db"]) for r in results]
    sizes = [s for s, _ in results[0]["size_curve"]["full"]]
    mean_full = np.mean([[v for _, v in r["size_curve"]["full"]] for r in results], axis=0)
    mean_res = np.mean([[v for _, v in r["size_curve"]["residual"]] for r in results], axis=0)
    i_best = int(np.argmin(mean_full))
    best = float(mean_full[i_best])
    reach = [i for i, v in enumerate(mean_res) if v <= best]
    ratio = sizes[reach[0]] / sizes[i_best] if reach else math.inf
    per_seed = []
    for r in results:
        fv = [v for _, v in r["size_curve"]["full"]]
        rv = [v for _, v in r["size_curve"]["residual"]]
        ib = int(np.argmin(fv))
        hit = [i for i, v in enumerate(rv) if v <= fv[ib]]
        per_seed.append(sizes[hit[0]] / sizes[ib] if hit else math.inf)
    return {
        "n_seeds": n,
        "param_efficiency_rate": sum(a) / n,
        "convergence_rate": sum(b) / n,
        "generalization_rate": sum(c) / n,
        "generalization_rate_db": sum(c_db) / n,
        "sample_ratio": ratio,
        "sample_ratio_per_seed": per_seed,
        "full_best_nmse_db": best,
        "train_sizes": sizes,
        "mean_full_curve_db": mean_full.tolist(),
        "mean_residual_curve_db": mean_res.tolist(),
        "pass": {
            "param_efficiency": sum(a) / n >= 0.9,
            "convergence": sum(b) / n >= 0.9,
            "generalization": sum(c) / n >= 0.8,
            "sample_efficiency": ratio <= 0.7,
        },
    }


def _run(args):
    seed, cfg = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return run_seed(seed, cfg)


def run_comparison(cfg: CompareConfig = None):
    """Run every seed (in parallel if ``cfg.jobs > 1``); output order follows ``cfg.seeds``."""
    cfg = cfg or CompareConfig()
    work = [(s, cfg) for s in cfg.seeds]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            out = list(ex.map(_run, work))
    else:
        out = [_run(w) for w in work]
    results = [r for r, _ in out]
    rows = [row for _, rs in out for row in rs]
    return summarize(results, cfg), results, rows


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(SWEEP_COLUMNS), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
