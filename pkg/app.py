"""
Command line: prepare | train | eval | report | sweep

    python app.py prepare --config exp.json --seed 7 --out runs/a
    python app.py train   --config exp.json --seed 7 --out runs/a
    python app.py report  --out runs/a
    python app.py sweep   --config exp.json --device-config device.json --out runs/s

Exit codes follow errors.py (0 ok, 2 config, 3 parse, 4 io, 5 numerical, 6 domain/scale, 7 evaluation, 1 other).
"""
import argparse
import dataclasses
import os
import sys
import traceback

import torch

from config import config_hash, load_config, load_device_config, parse_config, save_config
from data.dataset import build_dataset, load_dataset, save_dataset
from delay_sweep import run_sweep
from errors import DendramError
from logger import log_audit, log_epoch_metrics, log_training_result
from model_weight_loader import MODEL_FILE, build_model_record, load_model, load_model_record, save_model
from predict import evaluate
from src.report_formatter import format_report
from train import run_training

DATASET_DIR = "dataset"
METRICS_FILE = "metrics.csv"
EVAL_FILE = "eval.json"
CONFIG_COPY = "config.json"
COMMANDS = ("prepare", "train", "eval", "report", "sweep")


def cmd_prepare(cfg, out_dir):
    ws = build_dataset(cfg)
    manifest = save_dataset(ws, os.path.join(out_dir, DATASET_DIR))
    print(f"[prepare] {manifest['n_windows']} windows, hash {manifest['content_hash']}")
    return manifest


def cmd_train(cfg, out_dir):
    ws = load_dataset(os.path.join(out_dir, DATASET_DIR))
    result = run_training(cfg, ws)
    save_model(build_model_record(result, config_hash(cfg)), os.path.join(out_dir, MODEL_FILE))
    log_epoch_metrics(os.path.join(out_dir, METRICS_FILE), result.metrics)
    log_training_result(out_dir, result.summary)
    save_config(cfg, os.path.join(out_dir, CONFIG_COPY))
    return result


def cmd_eval(cfg, out_dir, model_path=None):
    model = load_model(model_path or os.path.join(out_dir, MODEL_FILE))
    ws = load_dataset(os.path.join(out_dir, DATASET_DIR))
    split = ws.test() if ws.is_test.any() else ws.train()
    res = evaluate(model.network, model.effective_weights, split, model.decision_threshold,
                   cfg.training.surrogate_slope)
    out = res.to_dict()
    out["split"] = "test" if ws.is_test.any() else "train"
    log_training_result(out_dir, out, EVAL_FILE)
    print(f"[eval] balanced accuracy {res.accuracy:.4f} on {out['n_windows']} {out['split']} windows")
    return res


def cmd_report(cfg, out_dir, model_path=None):
    text = format_report(load_model_record(model_path or os.path.join(out_dir, MODEL_FILE)))
    print(text)
    return text


def cmd_sweep(cfg, out_dir):
    return run_sweep(cfg, out_dir)


HANDLERS = {"prepare": cmd_prepare, "train": cmd_train, "eval": cmd_eval, "report": cmd_report, "sweep": cmd_sweep}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="experiment config (JSON); defaults apply when omitted")
    common.add_argument("--seed", type=int, default=None, help="global seed, overrides the config")
    common.add_argument("--out", default=None, help="output directory, overrides the config")
    common.add_argument("--device-config", default=None, help="device section (JSON), replaces config.device")

    parser = argparse.ArgumentParser(prog="dendram", description="RRAM dendritic network experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("eval", "report"):
            p.add_argument("--model", default=None, help=f"model file (default <out>/{MODEL_FILE})")
    return parser


def resolve_config(args):
    cfg = load_config(args.config)
    data = cfg.to_dict()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out:
        data["output_dir"] = args.out
    if args.device_config:
        data["device"] = dataclasses.asdict(load_device_config(args.device_config))
    return parse_config(data)


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = args.out or "./persistent"
    try:
        cfg = resolve_config(args)
        out_dir = cfg.output_dir
        os.makedirs(out_dir, exist_ok=True)
        torch.set_num_threads(1)
        print(f"[{args.command}] out={out_dir} seed={cfg.seed}")
        sys.stdout.flush()
        handler = HANDLERS[args.command]
        if args.command in ("eval", "report"):
            handler(cfg, out_dir, args.model)
        else:
            handler(cfg, out_dir)
        log_audit(out_dir, args.command, "ok")
        return 0
    except DendramError as e:
        print(f"[error] {e.category}: {e}")
        sys.stdout.flush()
        log_audit(out_dir, args.command, "error", f"{e.category}: {e}")
        return e.exit_code
    except Exception as e:
        print(f"[error] internal: {e}")
        traceback.print_exc()
        log_audit(out_dir, args.command, "error", f"internal: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
