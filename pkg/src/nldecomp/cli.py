"""Command-line front end.

Every command writes ``manifest.json`` next to its outputs; the manifest holds
the fully resolved configuration, and ``nldecomp rerun manifest.json``
reproduces the run byte for byte.

Exit codes: 0 success, 1 invariant violation under ``--strict``, 2 usage or
configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .decomp import decompose, verify_identities
from .errors import BadBandwidth, BadOrder, ConfigError, NLDecompError
from .indicators import REPORT_FIELDS, NonRealizableWarning, dob_ensemble, full_report, windowed_reports
from .lipschitz import holder_sanity, lipschitz_dominance, ms_lipschitz, write_bucket_csv
from .signals import generate_filtered_noise, generate_multicarrier, load_signal, save_signal
from .synth import make_system, simulate

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

GLOBAL_DEFAULTS = {"seed": None, "format": "json", "strict": False, "tol": 1e-9}

COMMAND_DEFAULTS = {
    "simulate": {"kind": "MemoryPolynomial", "order": 5, "depth": 3, "strength": 0.3,
                 "length": 65536, "excitation": "noise", "bandwidth": 1.0,
                 "active_fraction": 0.25, "backoff_db": 0.0},
    "diagnose": {"x": None, "y": None, "order": None, "align": False, "center": False,
                 "depth": 0, "window": None, "export": False},
    "lipschitz": {"x": None, "y": None, "order": None, "align": False, "depth": 0,
                  "pairs": 100_000, "buckets": 10},
    "learn": {"x": None, "y": None, "mode": "residual", "hidden": None, "static_order": 7,
              "step": 0.05, "iters": 10_000, "batch": 128, "holdout": 0.2},
    "compare": {"seeds": "0-19", "jobs": 1, "strength": 0.05, "length": 32768, "iters": 6000,
                "step": 0.05, "target_db": -35.0},
    "dpd": {"modeler": "Residual", "length": 32768, "active_fraction": 0.25, "backoff_db": 6.0,
            "iters": 10_000, "step": 0.05, "train_fraction": 1.0},
    "dob-selftest": {"trials": 1_000_000, "dim": 8, "complex": True},
}

KINDS = ("MemoryPolynomial", "MemorylessPoly", "Hammerstein", "Wiener", "memory-poly",
         "memoryless", "hammerstein", "wiener")


# output file -> shipped JSON schema
OUTPUT_SCHEMAS = {
    "system.json": "system",
    "report.json": "report",
    "lipschitz.json": "lipschitz",
    "model.json": "model",
    "dpd.json": "dpd",
    "dob.json": "dob",
    "manifest.json": "manifest",
}


def schema_name(command, filename):
    """Schema governing one JSON output of ``command``, or None for non-JSON files."""
    if filename == "summary.json":
        return "learn_summary" if command == "learn" else "compare_summary"
    return OUTPUT_SCHEMAS.get(filename)


def load_schema(name):
    """One of the JSON schemas shipped in ``nldecomp/schemas``."""
    text = resources.files("nldecomp").joinpath("schemas", f"{name}.json").read_text()
    return json.loads(text)


# --- small helpers ------------------------------------------------------------


def _dump(obj, path):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for v in r])


def parse_seeds(text):
    """"0-19" or "1,2,5" or a JSON list."""
    if isinstance(text, (list, tuple)):
        return tuple(int(s) for s in text)
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ConfigError("empty seed list")
    return tuple(out)


def resolve_config(command, file_cfg, cli_cfg, env=None):
    """Defaults < config file < explicit flags; unknown keys are rejected."""
    env = os.environ if env is None else env
    known = {**GLOBAL_DEFAULTS, **COMMAND_DEFAULTS[command]}
    for source in (file_cfg, cli_cfg):
        unknown = set(source) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg = {**known, **file_cfg, **cli_cfg}
    if cfg["seed"] is None:
        env_seed = env.get("NLDECOMP_SEED")
        try:
            cfg["seed"] = int(env_seed) if env_seed not in (None, "") else 0
        except ValueError:
            raise ConfigError(f"NLDECOMP_SEED must be an integer, got {env_seed!r}") from None
    if cfg["format"] not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    return cfg


# --- commands -------------------------------------------------------------------


def cmd_simulate(cfg, out):
    spec = make_system(cfg["kind"], cfg["seed"], cfg["order"], cfg["depth"], cfg["strength"])
    if cfg["excitation"] == "noise":
        x = generate_filtered_noise(cfg["seed"], cfg["length"], cfg["bandwidth"])
    elif cfg["excitation"] == "multicarrier":
        x = generate_multicarrier(cfg["seed"], cfg["length"], cfg["active_fraction"])
    else:
        raise ConfigError(f"unknown excitation {cfg['excitation']!r}")
    x = x.replace(x.samples * 10.0 ** (-cfg["backoff_db"] / 20.0))
    y = simulate(spec, x)
    save_signal(x, out / "x.bin")
    save_signal(y, out / "y.bin")
    (out / "system.json").write_text(spec.to_json() + "\n")
    print(f"simulated {spec.kind.value} seed={cfg['seed']}: {len(x)} samples -> {out}")
    return EXIT_OK, ["x.bin", "y.bin", "system.json"]


def _decompose(cfg):
    if not cfg["x"] or not cfg["y"]:
        raise ConfigError("x and y signal paths are required")
    x, y = load_signal(cfg["x"]), load_signal(cfg["y"])
    kw = {"align": cfg["align"], "memory_depth": cfg["depth"]}
    if "center" in cfg:
        kw["center"] = cfg["center"]
    return decompose(x, y, cfg["order"], **kw)


def cmd_diagnose(cfg, out):
    res = _decompose(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonRealizableWarning)
        rep = full_report(res)
    ident = verify_identities(res, cfg["tol"])
    data = rep.to_dict()
    data["identities"] = ident.to_dict()
    data["static_model"] = res.static_model.to_dict()
    files = []
    if cfg["format"] == "json":
        _dump(data, out / "report.json")
        files.append("report.json")
    else:
        d = rep.to_dict()
        _write_csv(out / "report.csv", list(REPORT_FIELDS), [[d[k] for k in REPORT_FIELDS]])
        files.append("report.csv")
    if cfg["window"]:
        wr = windowed_reports(res, int(cfg["window"]))
        rows = []
        for i, r in enumerate(wr):
            d = r.to_dict()
            rows.append([i] + [d[k] for k in REPORT_FIELDS])
        _write_csv(out / "windows.csv", ["window"] + list(REPORT_FIELDS), rows)
        files.append("windows.csv")
    if cfg["export"]:
        res.export(out / "decomposition")
        files.append("decomposition/manifest.json")
    mfi = "undefined" if rep.degenerate_distortion else f"{rep.mfi:.6f}"
    print(f"theta={rep.theta:.6e} alpha={rep.alpha:.6e} theta+2alpha={rep.theta_plus_2alpha:.6e}")
    print(f"mfi={mfi} var_d={rep.var_d:.6e} var_h={rep.var_h:.6e} epsilon_norm={rep.epsilon_norm}")
    print(f"identities {'hold' if ident.passed else 'FAIL'}; static order {res.static_model.order}")
    for w in rep.warnings:
        print(w)
    violated = (not ident.passed) or bool(caught) or any(w.startswith("PowerDominance") for w in rep.warnings)
    if rep.var_h >= rep.var_d and not rep.degenerate_distortion:
        violated = True
    return (EXIT_VIOLATION if (violated and cfg["strict"]) else EXIT_OK), files


def cmd_lipschitz(cfg, out):
    res = _decompose(cfg)
    dom = lipschitz_dominance(res, cfg["pairs"], cfg["seed"])
    x = res.on_support("x")
    ests = {k: ms_lipschitz(res.on_support(k), x, cfg["pairs"], cfg["seed"]).to_dict()
            for k in ("d", "h", "g")}
    data = {"dominance": dom.to_dict(), "estimates": ests}
    files = ["lipschitz.json"]
    _dump(data, out / "lipschitz.json")
    if x.size >= 10_000:
        rows, mx = holder_sanity(res.on_support("d"), x, np.linspace(0, 1, cfg["buckets"] + 1),
                                 seed=cfg["seed"])
        write_bucket_csv(rows, out / "buckets.csv")
        files.append("buckets.csv")
    print(f"L_d={dom.l_d:.6f} L_h={dom.l_h:.6f} dominant={dom.dominant}"
          + (" (degenerate)" if dom.degenerate else ""))
    bad = not dom.dominant and not dom.degenerate
    return (EXIT_VIOLATION if (bad and cfg["strict"]) else EXIT_OK), files


def cmd_learn(cfg, out):
    from .learner.compare import split_rows
    from .learner.metrics import nmse_db
    from .learner.mlp import TrainConfig
    from .learner.pipelines import (ARVTDNN, SRTDNN, full_learning, predict_full, predict_residual,
                                    residual_learning)

    if not cfg["x"] or not cfg["y"]:
        raise ConfigError("x and y signal paths are required")
    x, y = load_signal(cfg["x"]), load_signal(cfg["y"])
    mode = cfg["mode"]
    if mode not in ("full", "residual"):
        raise ConfigError("mode must be full or residual")
    preset = ARVTDNN if mode == "full" else SRTDNN
    if cfg["hidden"]:
        preset = preset.with_hidden(cfg["hidden"])
    tc = TrainConfig(seed=cfg["seed"], step_size=cfg["step"], max_iters=cfg["iters"],
                     batch_size=cfg["batch"])
    guard = max(16, preset.features.delay_taps)
    tr, ho = split_rows(len(x), guard, cfg["holdout"], cfg["seed"])
    tr = np.sort(tr)
    if mode == "full":
        model, trace = full_learning(x, y, preset, tc, tr)
        pred = predict_full(model, x).samples
        static = None
    else:
        static, model, trace = residual_learning(x, y, cfg["static_order"], preset, tc, tr)
        pred = predict_residual(static, model, x).samples
    ys = y.samples
    metrics = {"train_nmse_db": nmse_db(pred[tr], ys[tr]),
               "holdout_nmse_db": nmse_db(pred[ho], ys[ho]) if ho.size else None}
    model_doc = model.to_dict()
    if static is not None:
        model_doc["static_model"] = static.to_dict()
    _dump(model_doc, out / "model.json")
    summary = {"mode": mode, "preset": preset.to_dict(), "trace": trace.to_dict(), "metrics": metrics,
               "param_count": trace.param_count, "mac_per_inference": trace.mac_per_inference}
    _dump(summary, out / "summary.json")
    _write_csv(out / "sweep.csv", ["seed", "preset", "params", "macs", "iters", "nmse_db", "evm_db", "aclr_dbc"],
               [[cfg["seed"], preset.name, trace.param_count, trace.mac_per_inference, trace.iterations,
                 metrics["holdout_nmse_db"], None, None]])
    print(f"{preset.name}: params={trace.param_count} macs={trace.mac_per_inference} "
          f"iters={trace.iterations} train NMSE={metrics['train_nmse_db']:.2f} dB "
          f"holdout NMSE={metrics['holdout_nmse_db']:.2f} dB")
    return EXIT_OK, ["model.json", "summary.json", "sweep.csv"]


def cmd_compare(cfg, out):
    from .learner.compare import CompareConfig, run_comparison, write_sweep_csv

    cc = CompareConfig(seeds=parse_seeds(cfg["seeds"]), jobs=int(cfg["jobs"]),
                       dynamic_strength=cfg["strength"], length=cfg["length"],
                       max_iters=cfg["iters"], step_size=cfg["step"], nmse_target_db=cfg["target_db"])
    summary, results, rows = run_comparison(cc)
    write_sweep_csv(rows, out / "sweep.csv")
    _dump({"summary": summary, "per_seed": results, "compare_config": cc.to_dict()},
          out / "summary.json")
    for k, v in summary["pass"].items():
        print(f"{k}: {'PASS' if v else 'FAIL'}")
    failed = not all(summary["pass"].values())
    return (EXIT_VIOLATION if (failed and cfg["strict"]) else EXIT_OK), ["sweep.csv", "summary.json"]


def cmd_dpd(cfg, out):
    from .learner.dpd import DpdConfig, indirect_dpd, reference_drive, reference_pa
    from .learner.mlp import TrainConfig

    x = reference_drive(cfg["seed"], cfg["length"], cfg["active_fraction"], cfg["backoff_db"])
    dc = DpdConfig(train=TrainConfig(seed=cfg["seed"], step_size=cfg["step"], max_iters=cfg["iters"]),
                   train_fraction=cfg["train_fraction"])
    res = indirect_dpd(x, reference_pa(cfg["seed"]), cfg["modeler"], dc)
    m = res.metrics()
    _dump({"metrics": m, "predistorter": res.predistorter.to_dict()}, out / "dpd.json")
    print(f"{m['modeler']}: ACLR {m['aclr_before_dbc']:.2f} -> {m['aclr_after_dbc']:.2f} dBc, "
          f"EVM {m['evm_before_db']:.2f} -> {m['evm_after_db']:.2f} dB, MACs {m['mac_per_inference']}")
    return EXIT_OK, ["dpd.json"]


def cmd_dob_selftest(cfg, out):
    stats = dob_ensemble(cfg["trials"], cfg["dim"], cfg["seed"], cfg["complex"])
    _dump(stats, out / "dob.json")
    print(f"min slack weak={stats['min_slack_weak']:.3e} strong={stats['min_slack_strong']:.3e} "
          f"violations={stats['violations_weak'] + stats['violations_strong']} "
          f"extremal={stats['extremal_slack_weak']:.3e}")
    return (EXIT_VIOLATION if (not stats["passed"] and cfg["strict"]) else EXIT_OK), ["dob.json"]


COMMANDS = {
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
    "lipschitz": cmd_lipschitz,
    "learn": cmd_learn,
    "compare": cmd_compare,
    "dpd": cmd_dpd,
    "dob-selftest": cmd_dob_selftest,
}


# --- argument parsing -------------------------------------------------------------


def _bool(v):
    return v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes")


def build_parser():
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--seed", type=int, help="global seed (falls back to $NLDECOMP_SEED, then 0)")
    common.add_argument("--out", "-o", default=".", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), help="report format")
    common.add_argument("--strict", action="store_true", help="exit 1 on invariant violations")
    common.add_argument("--tol", type=float, help="identity tolerance (relative)")
    common.add_argument("--config", help="JSON file of parameters; flags override it")

    p = argparse.ArgumentParser(prog="nldecomp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"nldecomp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], argument_default=S, help="generate x/y records")
    s.add_argument("--kind", choices=KINDS)
    s.add_argument("--order", type=int)
    s.add_argument("--depth", type=int)
    s.add_argument("--strength", type=float)
    s.add_argument("-n", "--length", type=int)
    s.add_argument("--excitation", choices=("noise", "multicarrier"))
    s.add_argument("--bandwidth", type=float, help="noise bandwidth fraction")
    s.add_argument("--active-fraction", dest="active_fraction", type=float)
    s.add_argument("--backoff-db", dest="backoff_db", type=float)

    for name, hlp in (("diagnose", "indicator report"), ("lipschitz", "Lipschitz dominance")):
        s = sub.add_parser(name, parents=[common], argument_default=S, help=hlp)
        s.add_argument("x")
        s.add_argument("y")
        s.add_argument("--order", type=int, help="static order (default: holdout selection)")
        s.add_argument("--align", action="store_true")
        s.add_argument("--depth", type=int, help="memory depth, sets the statistics guard")
        if name == "diagnose":
            s.add_argument("--center", action="store_true")
            s.add_argument("--window", type=int, help="also write per-window reports")
            s.add_argument("--export", action="store_true", help="write the six component signals")
        else:
            s.add_argument("--pairs", type=int)
            s.add_argument("--buckets", type=int)

    s = sub.add_parser("learn", parents=[common], argument_default=S, help="train a behavioral model")
    s.add_argument("x")
    s.add_argument("y")
    s.add_argument("--mode", choices=("full", "residual"))
    s.add_argument("--hidden", type=int)
    s.add_argument("--static-order", dest="static_order", type=int)
    s.add_argument("--step", type=float)
    s.add_argument("--iters", type=int)
    s.add_argument("--batch", type=int)
    s.add_argument("--holdout", type=float)

    s = sub.add_parser("compare", parents=[common], argument_default=S, help="learning-complexity ensembles")
    s.add_argument("--seeds", help='e.g. "0-19" or "1,4,9"')
    s.add_argument("--jobs", type=int, help="parallel worker processes")
    s.add_argument("--strength", type=float)
    s.add_argument("-n", "--length", type=int)
    s.add_argument("--iters", type=int)
    s.add_argument("--step", type=float)
    s.add_argument("--target-db", dest="target_db", type=float)

    s = sub.add_parser("dpd", parents=[common], argument_default=S, help="indirect-learning predistortion")
    s.add_argument("--modeler", choices=("Full", "Residual", "full", "residual"))
    s.add_argument("-n", "--length", type=int)
    s.add_argument("--active-fraction", dest="active_fraction", type=float)
    s.add_argument("--backoff-db", dest="backoff_db", type=float)
    s.add_argument("--iters", type=int)
    s.add_argument("--step", type=float)
    s.add_argument("--train-fraction", dest="train_fraction", type=float)

    s = sub.add_parser("dob-selftest", parents=[common], argument_default=S, help="DOB bound ensemble")
    s.add_argument("--trials", type=int)
    s.add_argument("--dim", type=int)
    s.add_argument("--real", dest="complex", action="store_false")

    s = sub.add_parser("rerun", help="repeat a run from its manifest")
    s.add_argument("manifest")
    s.add_argument("--out", "-o", help="output directory (default: the manifest's directory)")
    return p


def run(command, cfg, out):
    """Execute one resolved command and write its manifest; returns the exit code."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    code, files = COMMANDS[command](cfg, out)
    manifest = {"tool": "nldecomp", "version": __version__, "command": command,
                "config": cfg, "outputs": sorted(files)}
    _dump(manifest, out / "manifest.json")
    return code


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def main(argv=None):
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    try:
        if command == "rerun":
            man = _load_json(args["manifest"])
            if man.get("command") not in COMMANDS:
                raise ConfigError("manifest names no known command")
            out = args.get("out") or Path(args["manifest"]).parent
            cfg = resolve_config(man["command"], man.get("config", {}), {})
            return run(man["command"], cfg, out)
        out = args.pop("out", ".")
        file_cfg = _load_json(args.pop("config")) if "config" in args else {}
        cfg = resolve_config(command, file_cfg, args)
        if "complex" in cfg:
            cfg["complex"] = _bool(cfg["complex"])
        return run(command, cfg, out)
    except (ConfigError, BadOrder, BadBandwidth, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NLDecompError, ArithmeticError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # bad parameter values that slipped past argparse
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
