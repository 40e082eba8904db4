import csv
import datetime
import json
import os
import sys

import pandas as pd
import pytz

METRIC_COLUMNS = ["phase", "epoch", "loss", "accuracy", "reprogram_count"]
AUDIT_FILE = "audit.csv"
SUMMARY_FILE = "summary.json"


def now_local():
    return datetime.datetime.now(pytz.timezone(os.environ.get("DENDRAM_TZ", "UTC")))


def log_dir(out_dir):
    path = os.path.join(out_dir, "logs")
    os.makedirs(path, exist_ok=True)
    return path


def log_audit(out_dir, command, status, reason=""):
    row = {
        "timestamp": now_local().isoformat(),
        "command": str(command or "unknown"),
        "status": str(status),
        "reason": str(reason),
    }
    try:
        with open(os.path.join(log_dir(out_dir), AUDIT_FILE), "a", newline="", encoding="utf-8") as f:
            w = csv.DictWriter(f, fieldnames=row.keys())
            if f.tell() == 0:
                w.writeheader()
            w.writerow(row)
    except (OSError, pytz.UnknownTimeZoneError) as e:
        print(f"[audit error] {e}")
        sys.stdout.flush()


def log_epoch_metrics(path, rows):
    df = pd.DataFrame(rows, columns=METRIC_COLUMNS)
    df.to_csv(path, index=False, float_format="%.17g")
    return path


def log_training_result(out_dir, summary, filename=SUMMARY_FILE):
    path = os.path.join(out_dir, filename)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return path
