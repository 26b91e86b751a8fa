"""Deterministic JSON, CSV and binary serialization of spectra and matrices."""

from __future__ import annotations

import csv
import io
import json
import math
import struct

import numpy as np

SCHEMA = 1


def fmt(x: float) -> str:
    """Fixed 17-significant-digit formatting used by every text output."""
    x = float(x)
    if x == 0:
        return "0"
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(x, ".17g")


class _Num(float):
    # marks floats that the JSON writer should format with fmt()
    pass


def _prep(obj):
    if isinstance(obj, dict):
        return {str(k): _prep(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prep(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return bool(obj) if isinstance(obj, np.bool_) else obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Num(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, _Num):
        s = fmt(obj)
        # JSON has no inf/nan literals
        return json.dumps(s) if s in ("nan", "inf", "-inf") else s
    return json.dumps(obj)


def dumps(obj, indent: int = 2) -> str:
    """JSON text with keys in insertion order and floats at 17 digits."""
    return _dump(_prep(obj), indent, 0) + "\n"


def eigen_record(value: complex, mult: int, block) -> dict:
    return {"re": value.real, "im": value.imag, "mult": int(mult), "block": block}


def spectrum_records(ms) -> list:
    out = []
    for e in ms:
        block = list(e.blocks) if e.blocks else None
        out.append(eigen_record(e.value, e.multiplicity, block))
    return out


def match_record(report) -> dict:
    return {
        "ok": report.ok,
        "tol": report.tol,
        "max_distance": report.max_distance,
        "matched": len(report.matched),
        "missing_theoretical": [{"re": v.real, "im": v.imag} for v in report.missing_theoretical],
        "spurious_computed": [{"re": v.real, "im": v.imag} for v in report.spurious_computed],
    }


def spectrum_report(spec, space: dict, computed, theoretical, match) -> dict:
    return {
        "schema": SCHEMA,
        "map": spec.describe(),
        "space": space,
        "computed": spectrum_records(computed),
        "theoretical": spectrum_records(theoretical) if theoretical is not None else [],
        "match": match_record(match) if match is not None else None,
    }


def write_csv(path_or_buf, header, rows):
    """CSV with a leading ``# schema=1`` line; floats formatted by :func:`fmt`."""
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    text = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)
    return text


def spectrum_csv_rows(computed, theoretical):
    rows = []
    for source, ms in (("computed", computed), ("theoretical", theoretical)):
        if ms is None:
            continue
        for e in ms:
            block = ";".join(str(b) for b in e.blocks) if e.blocks else ""
            rows.append((source, e.value.real, e.value.imag, abs(e.value), e.multiplicity, block))
    return ["source", "re", "im", "abs", "mult", "block"], rows


def write_matrix_bin(path, A):
    """Dense little-endian layout: two u64 dims, then (re, im) f64 pairs row-major."""
    A = np.asarray(A, dtype=complex)
    rows, cols = A.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(np.ascontiguousarray(A).astype("<c16").tobytes())


def read_matrix_bin(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16:
        raise ValueError("truncated matrix header")
    rows, cols = struct.unpack("<QQ", data[:16])
    if len(data) != 16 + 16 * rows * cols:
        raise ValueError(f"matrix payload size {len(data) - 16} does not match {rows}x{cols}")
    return np.frombuffer(data[16:], dtype="<c16").reshape(rows, cols).astype(complex)


def write_matrix_csv(path, A):
    A = np.asarray(A, dtype=complex)
    rows = [(i, j, A[i, j].real, A[i, j].imag) for i, j in zip(*np.nonzero(A))]
    return write_csv(path, ["row", "col", "re", "im"], rows)
