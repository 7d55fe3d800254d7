"""JSON and CSV readers/writers for records, steady states and run reports.

JSON floats are written with Python's shortest round-trip representation,
so every value reads back bit-for-bit. Complex scalars are ``{"re", "im"}``
objects; complex matrices are flat row-major lists with real and
imaginary parts interleaved. CSV values use 17 significant digits and
1-based site labels.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .records import EvolutionRecord

__all__ = [
    "complex_to_json",
    "complex_from_json",
    "matrix_to_json",
    "matrix_from_json",
    "record_to_dict",
    "record_from_dict",
    "write_json",
    "read_json",
    "write_record_json",
    "read_record_json",
    "write_populations_csv",
    "read_populations_csv",
    "write_g2_csv",
    "read_g2_csv",
    "steady_state_to_dict",
    "steady_state_from_dict",
]


def complex_to_json(value) -> dict:
    value = complex(value)
    return {"re": value.real, "im": value.imag}


def complex_from_json(obj) -> complex:
    return complex(obj["re"], obj["im"])


def matrix_to_json(mat) -> list:
    mat = np.asarray(mat, dtype=complex).reshape(-1)
    return np.column_stack([mat.real, mat.imag]).reshape(-1).tolist()


def matrix_from_json(flat, dim: int) -> np.ndarray:
    arr = np.asarray(flat, dtype=float)
    if arr.size != 2 * dim * dim:
        raise ValueError(f"expected {2 * dim * dim} numbers for a {dim}x{dim} matrix, got {arr.size}")
    return (arr[0::2] + 1j * arr[1::2]).reshape(dim, dim)


def record_to_dict(record: EvolutionRecord) -> dict:
    out = {
        "order": record.order,
        "num_sites": record.num_sites,
        "statistics": record.statistics,
        "z": record.z.tolist(),
        "states": [matrix_to_json(s) for s in record.states],
    }
    if record.stderr is not None:
        out["stderr"] = [matrix_to_json(s) for s in record.stderr]
    if record.meta:
        out["meta"] = record.meta
    return out


def record_from_dict(data: dict) -> EvolutionRecord:
    n = int(data["num_sites"])
    dim = n if data["order"] == "single" else n * n
    states = np.array([matrix_from_json(s, dim) for s in data["states"]]).reshape(-1, dim, dim)
    stderr = None
    if "stderr" in data:
        stderr = np.array([matrix_from_json(s, dim) for s in data["stderr"]]).reshape(-1, dim, dim)
    return EvolutionRecord(data["z"], states, data["order"], n, data.get("statistics"),
                           stderr=stderr, meta=data.get("meta", {}))


def write_json(path, payload) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, allow_nan=False)
        fh.write("\n")
    return path


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_record_json(path, record: EvolutionRecord) -> Path:
    return write_json(path, record_to_dict(record))


def read_record_json(path) -> EvolutionRecord:
    return record_from_dict(read_json(path))


def _fmt(x) -> str:
    return "%.17g" % x


def write_populations_csv(path, record: EvolutionRecord) -> Path:
    pops = record.populations()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "site", "value"])
        for z, row in zip(record.z, pops):
            for site, value in enumerate(row, start=1):
                w.writerow([_fmt(z), site, _fmt(value)])
    return Path(path)


def read_populations_csv(path):
    """Returns ``(z, populations)`` with populations of shape (Z, N)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    zs = sorted({float(r["z"]) for r in rows})
    n = max(int(r["site"]) for r in rows)
    out = np.zeros((len(zs), n))
    index = {z: k for k, z in enumerate(zs)}
    for r in rows:
        out[index[float(r["z"])], int(r["site"]) - 1] = float(r["value"])
    return np.array(zs), out


def write_g2_csv(path, record: EvolutionRecord) -> Path:
    g2 = record.g2()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "p", "q", "value"])
        for z, mat in zip(record.z, g2):
            for p in range(mat.shape[0]):
                for q in range(mat.shape[1]):
                    w.writerow([_fmt(z), p + 1, q + 1, _fmt(mat[p, q])])
    return Path(path)


def read_g2_csv(path):
    """Returns ``(z, g2)`` with g2 of shape (Z, N, N)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    zs = sorted({float(r["z"]) for r in rows})
    n = max(int(r["p"]) for r in rows)
    out = np.zeros((len(zs), n, n))
    index = {z: k for k, z in enumerate(zs)}
    for r in rows:
        out[index[float(r["z"])], int(r["p"]) - 1, int(r["q"]) - 1] = float(r["value"])
    return np.array(zs), out


def steady_state_to_dict(ss, num_sites: int, decomposition=None) -> dict:
    out = {
        "sector": ss.sector,
        "num_sites": num_sites,
        "null_space_dimension": ss.null_dimension,
        "sector_null_dimension": ss.sector_null_dimension,
        "residual": ss.residual,
        "rho": matrix_to_json(ss.rho),
    }
    if ss.sector != "single":
        out["g2"] = np.real(np.diagonal(ss.rho)).reshape(num_sites, num_sites).tolist()
    else:
        out["populations"] = np.real(np.diagonal(ss.rho)).tolist()
    if decomposition is not None:
        out["decomposition"] = {
            "mix_weight": decomposition.mix_weight,
            "sep": [
                {"sites": [p + 1, q + 1], "weight": decomposition.sep_weights[(p, q)],
                 "coherence": complex_to_json(decomposition.sep_coherences[(p, q)])}
                for (p, q) in sorted(decomposition.sep_weights)
            ],
            "residual": decomposition.residual,
        }
    return out


def steady_state_from_dict(data: dict):
    """Returns ``(rho, payload)``; ``rho`` is the decoded density matrix."""
    n = int(data["num_sites"])
    dim = n if data["sector"] == "single" else n * n
    return matrix_from_json(data["rho"], dim), data
