"""
Delay-mean sweep: full prepare -> train -> evaluate cycle for every HRS median of the grid and
every repetition seed (seed + r), to find the mean delay that best separates the classes.
"""
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import pandas as pd
import torch

from config import ExperimentConfig, config_hash, parse_config
from data.dataset import build_dataset
from failure_db import ensure_failure_db, insert_failure_record
from train import run_training

SWEEP_COLUMNS = ["hrs_median_ohm", "mean_delay_ms", "accuracy", "seed"]
SWEEP_FILE = "sweep.csv"
SUMMARY_FILE = "sweep_summary.json"


def with_hrs_median(cfg: ExperimentConfig, median_ohm: float) -> ExperimentConfig:
    device = dataclasses.replace(cfg.device, hrs=dataclasses.replace(cfg.device.hrs, median_ohm=float(median_ohm)))
    network = dataclasses.replace(cfg.network, branch_hrs_median_ohm=())
    return cfg.replace(device=device, network=network)


def sweep_jobs(cfg: ExperimentConfig):
    return [(float(m), cfg.seed + r) for m in cfg.sweep.hrs_median_ohm for r in range(cfg.sweep.repetitions)]


def run_point(cfg_dict, median_ohm, seed):
    """One sweep point; never raises, failures come back as a record."""
    torch.set_num_threads(1)
    try:
        cfg = with_hrs_median(parse_config(cfg_dict), median_ohm)
        dataset = build_dataset(cfg, seed)
        result = run_training(cfg, dataset, seed)
        return {"ok": True, "hrs_median_ohm": median_ohm, "seed": seed,
                "mean_delay_ms": result.summary["delay_ms"]["mean_ms"],
                "accuracy": result.summary["quantized_accuracy"]}
    except Exception as e:
        print(f"[sweep error] median={median_ohm:.3g} seed={seed} -> {e}")
        sys.stdout.flush()
        return {"ok": False, "hrs_median_ohm": median_ohm, "seed": seed,
                "category": getattr(e, "category", "error"), "reason": f"{type(e).__name__}: {e}"}


def summarize(df: pd.DataFrame, failures, grid) -> dict:
    points = []
    for m in grid:
        sub = df[df["hrs_median_ohm"] == m]
        points.append({
            "hrs_median_ohm": float(m),
            "n_runs": int(len(sub)),
            "mean_delay_ms": float(sub["mean_delay_ms"].mean()) if len(sub) else None,
            "accuracy_mean": float(sub["accuracy"].mean()) if len(sub) else None,
            "accuracy_std": float(sub["accuracy"].std(ddof=0)) if len(sub) else None,
        })
    scored = [p for p in points if p["accuracy_mean"] is not None]
    best = max(scored, key=lambda p: p["accuracy_mean"]) if scored else None
    return {"points": points, "best": best, "failures": failures,
            "grid_note": "log-spaced HRS medians; grid is a configuration default"}


def run_sweep(cfg: ExperimentConfig, out_dir=None):
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    ensure_failure_db(out_dir)
    jobs = sweep_jobs(cfg)
    cfg_dict, cfg_id = cfg.to_dict(), config_hash(cfg)
    print(f"[sweep] {len(cfg.sweep.hrs_median_ohm)} points x {cfg.sweep.repetitions} repetitions, {cfg.sweep.workers} worker(s)")
    sys.stdout.flush()

    args = ([cfg_dict] * len(jobs), [m for m, _ in jobs], [s for _, s in jobs])
    if cfg.sweep.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.sweep.workers) as pool:
            # map yields in submission order, so rows come out in grid order
            results = list(pool.map(run_point, *args))
    else:
        results = [run_point(*a) for a in zip(*args)]

    rows, failures = [], []
    for res in results:
        if res["ok"]:
            rows.append({k: res[k] for k in SWEEP_COLUMNS})
        else:
            failures.append({k: res[k] for k in ("hrs_median_ohm", "seed", "category", "reason")})
            insert_failure_record(out_dir, cfg_id, res["hrs_median_ohm"], res["seed"], res["category"], res["reason"])

    df = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    df.to_csv(os.path.join(out_dir, SWEEP_FILE), index=False, float_format="%.17g")
    summary = summarize(df, failures, [float(m) for m in cfg.sweep.hrs_median_ohm])
    summary["config_hash"] = cfg_id
    with open(os.path.join(out_dir, SUMMARY_FILE), "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")

    best = summary["best"]
    if best:
        print(f"[sweep] best mean delay {best['mean_delay_ms']:.2f} ms (median {best['hrs_median_ohm']:.3g} ohm), "
              f"accuracy {best['accuracy_mean']:.4f}")
    print(f"[sweep] {len(rows)} rows, {len(failures)} failed point(s)")
    sys.stdout.flush()
    return df, summary
