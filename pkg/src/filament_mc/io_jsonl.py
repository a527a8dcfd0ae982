"""Record serialization: JSONL per-sample records, CSV summaries.

Floats are emitted through Python's shortest-roundtrip repr (the json
default), so re-ingesting an emitted file reproduces bitwise-identical
downstream estimates.
"""

import csv
import json

import numpy as np

from .gibbs import EnsembleRecord

__all__ = ["write_records", "read_records", "record_to_dict",
           "write_gibbs_csv", "write_spectrum_csv", "write_summary_csv"]


def record_to_dict(rec):
    return {
        "sample_index": rec.sample_index,
        "H": rec.H,
        "H_tilde": rec.H_tilde,
        "diff_spectral": rec.diff_spectral,
        "diff_closed_form": rec.diff_closed_form,
        "displacement": list(map(float, rec.displacement)),
        "displacement_norm": rec.displacement_norm,
        "bound_D": rec.bound_D,
        "shells": list(map(float, rec.shells)),
    }


def record_from_dict(d):
    return EnsembleRecord(
        sample_index=int(d["sample_index"]),
        H=float(d["H"]),
        H_tilde=float(d["H_tilde"]),
        diff_spectral=float(d["diff_spectral"]),
        diff_closed_form=float(d["diff_closed_form"]),
        displacement=np.array(d["displacement"], dtype=float),
        displacement_norm=float(d["displacement_norm"]),
        bound_D=float(d["bound_D"]),
        shells=np.array(d["shells"], dtype=float),
    )


def write_records(stream, records):
    for rec in records:
        stream.write(json.dumps(record_to_dict(rec)) + "\n")


def read_records(path):
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(record_from_dict(json.loads(line)))
    return out


def write_summary_csv(stream, records):
    """Mean/SE summary of the energy observables."""
    w = csv.writer(stream)
    w.writerow(["observable", "mean", "standard_error", "n"])
    n = len(records)
    for name in ("H", "H_tilde", "diff_spectral", "diff_closed_form", "displacement_norm"):
        vals = np.array([getattr(r, name) for r in records])
        se = vals.std(ddof=1) / np.sqrt(n) if n > 1 else float("nan")
        w.writerow([name, repr(float(vals.mean())), repr(float(se)), n])


def write_gibbs_csv(stream, estimates):
    w = csv.writer(stream)
    w.writerow(["beta", "Z", "log_Z", "standard_error",
                "effective_sample_size", "flag_heavy_tail"])
    for e in estimates:
        w.writerow([repr(e.beta), repr(e.Z), repr(e.log_Z), repr(e.standard_error),
                    repr(e.effective_sample_size), int(e.flag_heavy_tail)])


def write_spectrum_csv(stream, q, E):
    w = csv.writer(stream)
    w.writerow(["q", "E"])
    for qi, ei in zip(q, E):
        w.writerow([repr(float(qi)), repr(float(ei))])
