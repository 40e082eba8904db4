# Sweep failure ledger: one row per (sweep point, repetition) that raised.

import os
import sqlite3

DB_NAME = "sweep_failures.db"


def db_path(out_dir):
    return os.path.join(out_dir, "logs", DB_NAME)


def ensure_failure_db(out_dir):
    path = db_path(out_dir)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with sqlite3.connect(path) as conn:
        conn.execute("""
        CREATE TABLE IF NOT EXISTS sweep_failures (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            config_hash TEXT,
            hrs_median_ohm REAL,
            seed INTEGER,
            category TEXT,
            reason TEXT,
            UNIQUE (config_hash, hrs_median_ohm, seed)
        )
        """)
    return path


def insert_failure_record(out_dir, config_hash, hrs_median_ohm, seed, category, reason):
    with sqlite3.connect(ensure_failure_db(out_dir)) as conn:
        conn.execute("""
            INSERT OR REPLACE INTO sweep_failures (config_hash, hrs_median_ohm, seed, category, reason)
            VALUES (?, ?, ?, ?, ?)
        """, (config_hash, float(hrs_median_ohm), int(seed), category, reason))


def load_failures(out_dir, config_hash=None):
    path = db_path(out_dir)
    if not os.path.exists(path):
        return []
    query = "SELECT config_hash, hrs_median_ohm, seed, category, reason FROM sweep_failures"
    args = ()
    if config_hash is not None:
        query += " WHERE config_hash = ?"
        args = (config_hash,)
    with sqlite3.connect(path) as conn:
        rows = conn.execute(query + " ORDER BY hrs_median_ohm, seed", args).fetchall()
    keys = ("config_hash", "hrs_median_ohm", "seed", "category", "reason")
    return [dict(zip(keys, r)) for r in rows]


def group_failures_by_category(out_dir):
    path = db_path(out_dir)
    if not os.path.exists(path):
        return []
    with sqlite3.connect(path) as conn:
        rows = conn.execute("""
            SELECT category, COUNT(*) as count
            FROM sweep_failures
            GROUP BY category
            ORDER BY count DESC, category
        """).fetchall()
    return [{"category": r[0], "count": r[1]} for r in rows]
