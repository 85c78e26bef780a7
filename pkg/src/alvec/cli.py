"""Experiment runner.

    alvec run <preset> [--seeds 1..5] [--policy label] [--out dir]
    alvec run --config cfg.json [--seeds ...] [--policy label] [--out dir]
    alvec compare <dir>
    alvec portrait --alpha A --beta B --gamma G --delta D --start P,Q [...]

Outputs are plain CSV/JSON files with deterministic bytes: identical preset,
seed and policy always reproduce identical files. The output directory comes
from --out, else the ALVEC_OUT environment variable, else ./alvec_out.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from statistics import fmean

from .autoscaler import ScalePolicyConfig
from .engine import Batch, HostSpec, SimConfig, SimulationError, VmSpec
from .lv import LVParams, PopulationState
from .metrics import build_report
from .presets import (
    EXPERIMENT_PRESETS,
    POLICY_LABELS,
    TRAJECTORY_PRESETS,
    build_simulation,
)
from .solver import Divergence, SolverError, integrate


class UsageError(ValueError):
    """Bad arguments or unknown preset; maps to exit code 2."""


def _parse_seeds(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part]


def _out_dir(arg: str | None) -> Path:
    path = Path(arg or os.environ.get("ALVEC_OUT") or "alvec_out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _short_hash(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, default=str).encode()
    ).hexdigest()[:12]


# ----------------------------------------------------------------- run command


def _trajectory_csv(preset) -> str:
    meta = {
        "alpha": preset.params.alpha,
        "beta": preset.params.beta,
        "gamma": preset.params.gamma,
        "delta": preset.params.delta,
        "prey": preset.start.prey,
        "predator": preset.start.predator,
        "horizon": preset.horizon,
        "step": preset.sample_step,
    }
    lines = [f"# config={_short_hash(meta)} preset={preset.name}", "t,prey,predator"]
    traj = integrate(
        preset.start, preset.params, t_end=preset.horizon, sample_step=preset.sample_step
    )
    for s in traj.samples:
        lines.append(f"{s.t!r},{s.prey!r},{s.predator!r}")
    return "\n".join(lines) + "\n"


def _config_from_json(path: str) -> SimConfig:
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise UsageError(f"config {path} must be a JSON object")
    sim_fields = set(SimConfig.__dataclass_fields__)
    kwargs = {}
    for key, value in raw.items():
        if key not in sim_fields:
            continue
        if key == "hosts":
            value = tuple(HostSpec(**h) for h in value)
        elif key == "vm_template":
            value = VmSpec(**value)
        elif key == "batches":
            value = tuple(Batch(*b) if isinstance(b, (list, tuple)) else Batch(**b) for b in value)
        elif key == "vm_mips_choices" and value is not None:
            value = tuple(value)
        kwargs[key] = value
    return SimConfig(**kwargs)


def _scale_from_json(path: str) -> ScalePolicyConfig:
    with open(path) as fh:
        raw = json.load(fh)
    fields = set(ScalePolicyConfig.__dataclass_fields__) - {"solver"}
    kwargs = {k: v for k, v in raw.items() if k in fields}
    return ScalePolicyConfig(**kwargs)


def _run_experiment(name: str, config, policies, seeds, out: Path, scale_cfg) -> list[Path]:
    written = []
    for seed in seeds:
        for label in policies:
            sim = build_simulation(config, label, seed=seed, scale_cfg=scale_cfg)
            trace = sim.run()
            report = build_report(trace)
            payload = {"preset": name, **report.to_dict()}
            path = out / f"{name}_{label}_seed{seed}.json"
            _write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")
            written.append(path)
    return written


def cmd_run(args) -> int:
    out = _out_dir(args.out)
    seeds = _parse_seeds(args.seeds) if args.seeds else None

    if args.config:
        config = _config_from_json(args.config)
        scale_cfg = _scale_from_json(args.config)
        name = Path(args.config).stem
        policies = [args.policy] if args.policy else ["timeshared"]
        for label in policies:
            if label not in POLICY_LABELS:
                raise UsageError(f"unknown policy {label!r}")
        files = _run_experiment(name, config, policies, seeds or [config.rng_seed], out, scale_cfg)
        for path in files:
            print(path)
        return 0

    if not args.preset:
        raise UsageError("a preset name or --config is required")

    if args.preset in TRAJECTORY_PRESETS:
        preset = TRAJECTORY_PRESETS[args.preset]
        path = out / f"{preset.name}_trajectory.csv"
        _write(path, _trajectory_csv(preset))
        print(path)
        return 0

    if args.preset in EXPERIMENT_PRESETS:
        preset = EXPERIMENT_PRESETS[args.preset]
        if args.policy:
            if args.policy not in POLICY_LABELS:
                raise UsageError(f"unknown policy {args.policy!r}")
            policies = [args.policy]
        else:
            policies = [preset.baseline, preset.lv_variant]
        files = _run_experiment(
            preset.name, preset.config, policies, seeds or list(preset.seeds), out, None
        )
        for path in files:
            print(path)
        if not args.policy:
            # single-policy runs have no baseline/variant pair to summarize
            summary = _compare_reports(_load_reports(out, preset.name))
            summary_path = out / f"{preset.name}_compare.json"
            _write(summary_path, json.dumps(summary, sort_keys=True, indent=2) + "\n")
            print(summary_path)
        return 0

    raise UsageError(
        f"unknown preset {args.preset!r}; choose from "
        f"{sorted(TRAJECTORY_PRESETS) + sorted(EXPERIMENT_PRESETS)}"
    )


# ------------------------------------------------------------- compare command


def _load_reports(directory: Path, preset: str | None = None) -> list[dict]:
    reports = []
    for path in sorted(directory.glob("*_seed*.json")):
        with open(path) as fh:
            data = json.load(fh)
        if preset is None or data.get("preset") == preset:
            data["_file"] = path.name
            reports.append(data)
    return reports


_COMPARED_METRICS = ("sla_violation_rate", "avg_completion_ms", "makespan_ms")


def _compare_reports(reports: list[dict]) -> dict:
    """Pair each baseline run with its _lv twin on (preset, seed) and count
    per-metric wins for the LV side (lower is better)."""
    baselines = {}
    variants = {}
    for rep in reports:
        key = (rep.get("preset"), rep["policy"], rep["seed"])
        if rep["policy"].endswith("_lv"):
            variants[key] = rep
        else:
            baselines[key] = rep
    pairs = []
    for (preset, policy, seed), base in sorted(baselines.items()):
        twin = variants.get((preset, policy + "_lv", seed))
        if twin is not None:
            pairs.append((base, twin))
    unmatched = [
        key for key in variants
        if (key[0], key[1][:-3], key[2]) not in baselines
    ]
    if not pairs and reports:
        raise UsageError("no baseline/lv pairs share a seed; pairing failed")
    metrics = {}
    for metric in _COMPARED_METRICS:
        wins = losses = ties = 0
        deltas = []
        for base, twin in pairs:
            b, v = base.get(metric), twin.get(metric)
            if b is None or v is None:
                continue
            deltas.append(v - b)
            if v < b:
                wins += 1
            elif v > b:
                losses += 1
            else:
                ties += 1
        metrics[metric] = {
            "lv_wins": wins,
            "lv_losses": losses,
            "ties": ties,
            "mean_delta": fmean(deltas) if deltas else None,
        }
    failures = [
        {"file": rep["_file"], "policy": rep["policy"], "seed": rep["seed"],
         "count": rep["alloc_failures"]}
        for rep in reports
        if rep.get("alloc_failures")
    ]
    return {
        "pairs": len(pairs),
        "unpaired_lv_runs": sorted(str(k) for k in unmatched),
        "metrics": metrics,
        "alloc_failure_runs": failures,
    }


def cmd_compare(args) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        raise UsageError(f"{args.dir} is not a directory")
    reports = _load_reports(directory)
    if not reports:
        raise UsageError(f"no report files found in {args.dir}")
    summary = _compare_reports(reports)
    for metric, row in summary["metrics"].items():
        delta = row["mean_delta"]
        delta_text = "n/a" if delta is None else f"{delta:+.4f}"
        print(
            f"{metric}: lv wins {row['lv_wins']}, losses {row['lv_losses']}, "
            f"ties {row['ties']}, mean delta {delta_text}"
        )
    if summary["alloc_failure_runs"]:
        print(f"allocation failures in {len(summary['alloc_failure_runs'])} run(s):")
        for row in summary["alloc_failure_runs"]:
            print(f"  {row['file']}: {row['count']}")
    else:
        print("allocation failures: none")
    path = directory / "compare.json"
    _write(path, json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(path)
    return 0


# ------------------------------------------------------------ portrait command


def cmd_portrait(args) -> int:
    out = _out_dir(args.out)
    params = LVParams(alpha=args.alpha, beta=args.beta, gamma=args.gamma, delta=args.delta)
    starts = []
    for text in args.start:
        p, q = (float(x) for x in text.split(","))
        starts.append(PopulationState(prey=p, predator=q))
    meta = {
        "alpha": params.alpha, "beta": params.beta,
        "gamma": params.gamma, "delta": params.delta,
        "starts": [(s.prey, s.predator) for s in starts],
        "horizon": args.horizon, "step": args.step,
    }
    lines = [
        f"# config={_short_hash(meta)} alpha={params.alpha!r} beta={params.beta!r} "
        f"gamma={params.gamma!r} delta={params.delta!r}",
        "series,t,prey,predator",
    ]
    warnings = []
    max_p = max(s.prey for s in starts)
    max_q = max(s.predator for s in starts)
    for idx, start in enumerate(starts):
        try:
            traj = integrate(start, params, t_end=args.horizon, sample_step=args.step)
        except Divergence as exc:
            warnings.append(f"# warning: start{idx} diverged: {exc}")
            continue
        for s in traj.samples:
            lines.append(f"start{idx},{s.t!r},{s.prey!r},{s.predator!r}")
        max_p = max(max_p, max(traj.prey_values))
        max_q = max(max_q, max(traj.predator_values))
    p_null = params.alpha / params.beta   # prey nullcline: Q = alpha/beta
    q_null = params.gamma / params.delta  # predator nullcline: P = gamma/delta
    for i in range(11):
        frac = i / 10
        lines.append(f"p_nullcline,{frac!r},{frac * max_p * 1.1!r},{p_null!r}")
    for i in range(11):
        frac = i / 10
        lines.append(f"q_nullcline,{frac!r},{q_null!r},{frac * max_q * 1.1!r}")
    lines.extend(warnings)
    path = out / "portrait.csv"
    _write(path, "\n".join(lines) + "\n")
    print(path)
    return 0


# ----------------------------------------------------------------- entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alvec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a preset or a JSON config")
    run_p.add_argument("preset", nargs="?", help="preset name")
    run_p.add_argument("--config", help="path to a flat JSON config")
    run_p.add_argument("--seeds", help="comma list or a..b range")
    run_p.add_argument("--policy", help="run a single policy label")
    run_p.add_argument("--out", help="output directory")
    run_p.set_defaults(func=cmd_run)

    cmp_p = sub.add_parser("compare", help="summarize report pairs in a directory")
    cmp_p.add_argument("dir")
    cmp_p.set_defaults(func=cmd_compare)

    por_p = sub.add_parser("portrait", help="emit phase-plane data")
    por_p.add_argument("--alpha", type=float, required=True)
    por_p.add_argument("--beta", type=float, required=True)
    por_p.add_argument("--gamma", type=float, required=True)
    por_p.add_argument("--delta", type=float, required=True)
    por_p.add_argument("--start", action="append", required=True,
                       help="P,Q start point; repeatable")
    por_p.add_argument("--horizon", type=float, default=2.0)
    por_p.add_argument("--step", type=float, default=0.1)
    por_p.add_argument("--out", help="output directory")
    por_p.set_defaults(func=cmd_portrait)
    return parser


def run_main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, SimulationError, OSError, ValueError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run_main())
