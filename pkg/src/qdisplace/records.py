"""Line-delimited, self-describing output records.

Each record is one JSON object on one line.  Key order is fixed by the
builder functions and floats are written with 17 significant digits so
identical runs produce identical bytes.  Complex numbers become
``[re, im]`` pairs.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from qdisplace.bases import BasisFamily, basis_sign_table, gram_deviation
from qdisplace.cloning import ObstructionReport
from qdisplace.displacement import CorrectionVerdict, ProtocolTrace
from qdisplace.swapping import PairingEntry, PairingVerdict, SwapOutcome


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x} in record")
    if x == 0.0:
        x = 0.0  # drop negative zero
    return format(x, ".17g")


def _encode(obj: Any) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{format_float(obj.real)},{format_float(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__} in a record")


def dumps(record: dict) -> str:
    return _encode(record)


def loads(line: str) -> dict:
    return json.loads(line)


def _matrix(u: np.ndarray) -> list:
    u = np.asarray(u)
    if np.all(np.abs(u.imag) == 0):
        return [[float(v) for v in row] for row in u.real]
    return [[complex(v) for v in row] for row in u]


def _amps(a: np.ndarray) -> list:
    return [complex(v) for v in a]


def trace_record(trace: ProtocolTrace, trial: int | None = None) -> dict:
    cfg = trace.config
    return {
        "record": "displace-trace",
        "variant": cfg.variant,
        "trial": trial,
        "seed": trace.seed,
        "channel": f"{cfg.channel_family.value}:{cfg.channel_label}",
        "outcome": str(trace.outcome),
        "probability": trace.probability,
        "classical_message": trace.classical_message,
        "correction": _matrix(trace.correction),
        "final_labels": list(trace.final.labels),
        "final": _amps(trace.final.amplitudes),
        "fidelity": trace.fidelity,
        "verification": {"input": _amps(np.array(trace.input.amplitudes))},
    }


def basis_record(family: BasisFamily) -> dict:
    return {
        "record": "basis",
        "family": family.value,
        "labels": list(family.default_labels),
        "dims": list(family.dims),
        "rows": basis_sign_table(family),
        "gram_deviation": gram_deviation(family),
    }


def correction_verdict_record(v: CorrectionVerdict) -> dict:
    return {
        "record": "correction-verdict",
        "label": str(v.label),
        "status": v.status,
        "diff": None if v.diff is None else _matrix(v.diff),
    }


def _terms(terms) -> list:
    return [[str(p), c] for p, c in terms]


def pairing_entry_record(e: PairingEntry, variant: str) -> dict:
    return {"record": "pairing-entry", "variant": variant, "measured": str(e.measured_label), "terms": _terms(e.terms)}


def pairing_verdict_record(v: PairingVerdict) -> dict:
    return {
        "record": "pairing-verdict",
        "measured": str(v.measured_label),
        "status": v.status,
        "claimed": _terms(v.claimed),
        "derived": _terms(v.derived),
    }


def swap_outcome_record(o: SwapOutcome, variant: str, seed: int | None) -> dict:
    return {
        "record": "swap-outcome",
        "variant": variant,
        "seed": seed,
        "outcome": str(o.outcome),
        "probability": o.probability,
        "residual_label": str(o.residual_label),
        "residual_fidelity": o.residual_fidelity,
        "predicted_fidelity": o.predicted_fidelity,
        "residual": _amps(o.residual.amplitudes),
    }


def obstruction_record(task: str, report: ObstructionReport) -> dict:
    return {
        "record": "noclone",
        "task": task,
        "overlap_s": report.overlap_s,
        "encoded_overlap": report.encoded_overlap,
        "required": report.required,
        "deficit": report.deficit,
        "linear_extension_fidelity": report.linear_extension_fidelity,
    }
