import math

import numpy as np

from model.rram import HrsDistribution, footprint_bits

REFERENCE_FOOTPRINT_BITS = 256
REFERENCE_SYNAPSES = (2, 64)
# recurrent baselines of the same comparison row, in kilobits
BASELINE_FOOTPRINTS_KB = {"recurrent SNN A": 73, "recurrent SNN B": 64}


def _fmt_float(value, spec=".3f", default="-"):
    try:
        v = float(value)
        return default if math.isnan(v) else format(v, spec)
    except (TypeError, ValueError):
        return default


def report_data(record) -> dict:
    n_syn = len(record["level_index"])
    n_levels = int(record["n_levels"])
    delays_ms = np.asarray(record["synapses"]["delay_resistance_ohm"], dtype=float) * float(record["capacitance_f"]) * 1e3
    branch_hrs = []
    for br in record["branches"]:
        if br.get("hrs_median_ohm"):
            dist = HrsDistribution(br["hrs_median_ohm"], br.get("hrs_sigma_log") or 0.0)
            branch_hrs.append({"median_ohm": dist.median_ohm, "mean_ohm": dist.mean_ohm})
    return {
        "synapses": n_syn,
        "branches": len(record["branches"]),
        "levels": n_levels,
        "footprint_bits": footprint_bits(n_syn, n_levels),
        "delay_min_ms": float(delays_ms.min()),
        "delay_mean_ms": float(delays_ms.mean()),
        "delay_max_ms": float(delays_ms.max()),
        "branch_hrs": branch_hrs,
        "decision_threshold": int(record["decision_threshold"]),
        "accuracy": record.get("accuracy"),
    }


def _footprint_note(d) -> str:
    bits = (d["levels"] - 1).bit_length()
    head = f"  note: {d['synapses']} synapses x {bits} bit = {d['footprint_bits']} b; "
    per_syn, rest = divmod(REFERENCE_FOOTPRINT_BITS, d["synapses"])
    if rest or per_syn < 1:
        return head + f"the {REFERENCE_FOOTPRINT_BITS} b reference does not split into whole bits over {d['synapses']} synapses"
    return head + (f"the {REFERENCE_FOOTPRINT_BITS} b reference matches {per_syn} bit/synapse ({2 ** per_syn} levels), "
                   f"not {d['levels']} levels")


def format_report(record) -> str:
    d = report_data(record)
    ref_syn = REFERENCE_SYNAPSES[0] * REFERENCE_SYNAPSES[1]
    lines = [
        "[report] dendritic RRAM network",
        f"synapses:        {d['synapses']} ({d['branches']} branches)   reference: {ref_syn} "
        f"({REFERENCE_SYNAPSES[0]} x {REFERENCE_SYNAPSES[1]})",
        f"weight levels:   {d['levels']} ({(d['levels'] - 1).bit_length()} bit/synapse)",
        f"footprint:       {d['footprint_bits']} b   reference: {REFERENCE_FOOTPRINT_BITS} b",
    ]
    if d["footprint_bits"] != REFERENCE_FOOTPRINT_BITS:
        lines.append(_footprint_note(d))
    lines.append("baselines:       " + ", ".join(f"{k} {v} kb" for k, v in BASELINE_FOOTPRINTS_KB.items()))
    lines.append(f"delays (ms):     min {_fmt_float(d['delay_min_ms'])}  mean {_fmt_float(d['delay_mean_ms'])}  "
                 f"max {_fmt_float(d['delay_max_ms'])}")
    for i, h in enumerate(d["branch_hrs"]):
        lines.append(f"branch {i} HRS:    median {h['median_ohm']:.3g} ohm, mean {h['mean_ohm']:.3g} ohm")
    lines.append(f"decision threshold: {d['decision_threshold']} spike(s)   accuracy: {_fmt_float(d['accuracy'], '.4f')}")
    return "\n".join(lines)
