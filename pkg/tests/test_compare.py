import math

import numpy as np
import pytest

from nldecomp.learner.compare import CompareConfig, run_seed, split_rows, summarize, write_sweep_csv, SWEEP_COLUMNS


def test_split_rows_partition():
    tr, ho = split_rows(1000, 16, 0.2, 3)
    assert tr.size + ho.size == 984 and ho.size == 197
    assert np.array_equal(np.sort(np.concatenate([tr, ho])), np.arange(16, 1000))
    assert np.all(np.diff(ho) > 0)
    tr2, ho2 = split_rows(1000, 16, 0.2, 3)
    assert np.array_equal(tr, tr2) and np.array_equal(ho, ho2)
    assert not np.array_equal(ho, split_rows(1000, 16, 0.2, 4)[1])


def test_config_round_trip():
    cfg = CompareConfig(seeds=(1, 2), hidden_grid=(4, 8))
    back = CompareConfig.from_dict(cfg.to_dict())
    assert back == cfg


def test_config_rejects_unknown():
    with pytest.raises(KeyError):
        CompareConfig.from_dict({"seeds": [0], "hiden": 3})


def _fake(seed, mh, it, gap_r, gap_f, full, res):
    sizes = [100, 200, 400]
    return {
        "seed": seed,
        "min_hidden": mh,
        "iters_to_target": it,
        "gap": {"residual": {"gap_lin": gap_r, "gap_db": 0.1}, "full": {"gap_lin": gap_f, "gap_db": 0.2}},
        "size_curve": {"full": list(zip(sizes, full)), "residual": list(zip(sizes, res))},
    }


def test_summarize_rates_and_ratio():
    results = [
        _fake(0, {"h": 5, "d": 20}, {"h": 10, "d": 50}, 1e-4, 2e-4, [-30, -34, -36], [-37, -38, -39]),
        _fake(1, {"h": None, "d": 20}, {"h": 10, "d": None}, 3e-4, 2e-4, [-30, -34, -36], [-35, -37, -38]),
    ]
    out = summarize(results, CompareConfig())
    assert out["param_efficiency_rate"] == 0.5
    assert out["convergence_rate"] == 1.0
    assert out["generalization_rate"] == 0.5
    # mean full curve is best at 400 rows (-36); mean residual reaches it at 100 rows (-36)
    assert out["sample_ratio"] == pytest.approx(0.25)
    assert out["sample_ratio_per_seed"] == [0.25, 0.5]
    assert out["pass"]["sample_efficiency"] and not out["pass"]["param_efficiency"]


def test_summarize_unreached_ratio_is_infinite():
    r = _fake(0, {"h": 5, "d": 5}, {"h": 1, "d": 1}, 1, 1, [-30, -34, -36], [-20, -21, -22])
    out = summarize([r], CompareConfig())
    assert math.isinf(out["sample_ratio"]) and not out["pass"]["sample_efficiency"]


def test_run_seed_small(tmp_path):
    cfg = CompareConfig(seeds=(0,), length=4096, hidden_grid=(5, 20), matched_hidden=20,
                        max_iters=300, size_fractions=(0.5, 1.0))
    with pytest.warns(RuntimeWarning):
        res, rows = run_seed(0, cfg)
    assert set(res["min_hidden"]) == {"d", "h"}
    assert len(res["size_curve"]["full"]) == 2
    assert len(rows) == 2 * 2 + 2 * 2
    write_sweep_csv(rows, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS) and len(lines) == len(rows) + 1
