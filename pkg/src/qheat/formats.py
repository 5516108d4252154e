"""JSON exchange formats for matrices, channels, realizations and reports."""

from __future__ import annotations

import json
import math
import os
import tempfile
from enum import Enum

import numpy as np

from .channels import KrausChannel
from .errors import FormatError
from .operators import DensityMatrix, HermitianOperator, Isometry, Units
from .realizations import DenseRealization, HeatReport


def encode_matrix(m) -> dict:
    """{dim, entries} for square matrices, {rows, cols, entries} or {length, entries} otherwise.

    Entries are row-major [re, im] pairs.
    """
    a = np.asarray(getattr(m, "entries", m), dtype=complex)
    if a.ndim == 1:
        return {"length": a.size, "entries": [[float(z.real), float(z.imag)] for z in a]}
    entries = [[float(z.real), float(z.imag)] for z in a.ravel()]
    if a.shape[0] == a.shape[1]:
        return {"dim": a.shape[0], "entries": entries}
    return {"rows": a.shape[0], "cols": a.shape[1], "entries": entries}


def _complex_entries(raw) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"matrix entries are not numeric: {exc}") from exc
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0] + 1j * arr[:, 1]
    if arr.ndim == 1:
        return arr.astype(complex)
    raise FormatError("matrix entries must be a list of [re, im] pairs or reals")


def decode_matrix(obj) -> np.ndarray:
    """Inverse of encode_matrix; nested lists of reals are also accepted."""
    if isinstance(obj, list):
        try:
            return np.asarray(obj, dtype=float).astype(complex)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad nested matrix: {exc}") from exc
    if not isinstance(obj, dict) or "entries" not in obj:
        raise FormatError("matrix object needs an 'entries' field")
    flat = _complex_entries(obj["entries"])
    if "length" in obj:
        if flat.size != int(obj["length"]):
            raise FormatError(f"expected {obj['length']} vector entries, found {flat.size}")
        return flat
    if "dim" in obj:
        shape = (int(obj["dim"]),) * 2
    elif "rows" in obj and "cols" in obj:
        shape = (int(obj["rows"]), int(obj["cols"]))
    else:
        raise FormatError("matrix object needs 'dim' or 'rows'/'cols'")
    if flat.size != shape[0] * shape[1]:
        raise FormatError(f"expected {shape[0] * shape[1]} entries, found {flat.size}")
    return flat.reshape(shape)


def decode_hermitian(obj, units=Units.ENERGY) -> HermitianOperator:
    return HermitianOperator(decode_matrix(obj), units)


def decode_state(obj) -> DensityMatrix:
    return DensityMatrix(decode_matrix(obj))


def encode_channel(ch: KrausChannel) -> dict:
    return {"dim_in": ch.dim_in, "dim_out": ch.dim_out, "minimal": ch.minimal,
            "kraus": [encode_matrix(k) for k in ch.kraus_ops]}


def decode_channel(obj) -> KrausChannel:
    try:
        ops = np.array([decode_matrix(k) for k in obj["kraus"]])
        shape = (int(obj["dim_out"]), int(obj["dim_in"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"channel object is missing fields: {exc}") from exc
    if ops.ndim != 3 or ops.shape[1:] != shape:
        raise FormatError(f"Kraus operators have shape {ops.shape[1:]}, header says {shape}")
    return KrausChannel(ops, minimal=bool(obj.get("minimal", False)))


def encode_realization(r: DenseRealization) -> dict:
    out = {"dim_A": r.dim_A, "beta": r.beta, "bath_h": encode_matrix(r.bath_h),
           "isometry": encode_matrix(r.v)}
    if r.bath_h_out is not None:
        out["bath_h_out"] = encode_matrix(r.bath_h_out)
    return out


def decode_realization(obj) -> DenseRealization:
    try:
        h_out = obj.get("bath_h_out")
        return DenseRealization(
            int(obj["dim_A"]),
            decode_hermitian(obj["bath_h"]),
            float(obj["beta"]),
            Isometry(decode_matrix(obj["isometry"])),
            None if h_out is None else decode_hermitian(h_out),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"realization bundle is missing fields: {exc}") from exc


def encode_report(rep: HeatReport) -> dict:
    return {"hto": encode_matrix(rep.hto), "hto_eigenvalues": np.linalg.eigvalsh(rep.hto.entries),
            "j_of_beta_q": rep.j_of_beta_q, "bath_log_partition": rep.bath_log_partition,
            "kraus": encode_channel(rep.channel)}


def plain(obj):
    """Convert numpy values, enums and complex numbers into JSON-ready builtins."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if np.all(obj.imag == 0):
                return plain(obj.real.tolist())
            return encode_matrix(obj)
        return plain(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag] if obj.imag else obj.real
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _floatstr(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    enc = json.JSONEncoder(indent=2, sort_keys=True)
    chunks = json.encoder._make_iterencode(
        {}, enc.default, json.encoder.py_encode_basestring_ascii, "  ", _floatstr,
        enc.key_separator, enc.item_separator, True, False, True,
    )(plain(obj), 0)
    return "".join(chunks) + "\n"


def write_atomic(path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qheat-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from exc
