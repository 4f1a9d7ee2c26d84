"""JSON and CSV formats for systems, zero reports, pulse plans and trajectories.

Complex numbers are ``[re, im]`` pairs, matrices are row-major nested lists.
Reports are rendered with a fixed field order and 17 significant digits so
identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .errors import PreconditionError
from .model import PassiveSystem

SYSTEM_SCHEMA = "photonxfer-system/1"
PLAN_SCHEMA = "photonxfer-plan/1"
REPORT_SCHEMA = "photonxfer-report/1"


class FormatError(PreconditionError):
    """A file does not follow the expected layout; message names the field."""


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    if x == 0:
        return "0.0"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "inf" not in s and "nan" not in s:
        s += ".0"
    return s


def to_jsonable(obj: Any) -> Any:
    """Convert numpy arrays and complex scalars to lists and ``[re, im]`` pairs."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON text; floats carry 17 significant digits."""
    return _render(to_jsonable(obj), indent, 0) + "\n"


def _render(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {_render(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj) or _is_pair_list(obj):
            return "[" + ", ".join(_render(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _render(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if obj is None:
        return "null"
    return json.dumps(obj, ensure_ascii=False)


def _is_pair_list(obj: list) -> bool:
    # a vector of [re, im] pairs stays on one line
    return all(isinstance(v, list) and len(v) == 2 and all(isinstance(e, float) for e in v) for v in obj)


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_complex(value: Any, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise FormatError(f"{where}: expected a number or [re, im] pair, got {value!r}")


def parse_matrix(value: Any, rows: int, cols: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != rows:
        raise FormatError(f"{where}: expected {rows} rows, got {len(value) if isinstance(value, list) else type(value).__name__}")
    out = np.zeros((rows, cols), dtype=np.complex128)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != cols:
            raise FormatError(f"{where}[{i}]: expected {cols} entries")
        for j, entry in enumerate(row):
            out[i, j] = parse_complex(entry, f"{where}[{i}][{j}]")
    return out


def system_to_dict(sys: PassiveSystem) -> dict:
    return {
        "schema": SYSTEM_SCHEMA,
        "n": sys.n,
        "m": sys.m,
        "omega": sys.omega,
        "coupling": sys.coupling,
        "scattering": sys.scattering,
    }


def system_from_dict(doc: Any) -> PassiveSystem:
    if not isinstance(doc, dict):
        raise FormatError("system document must be a JSON object")
    schema = doc.get("schema")
    if schema != SYSTEM_SCHEMA:
        raise FormatError(f"field 'schema': expected {SYSTEM_SCHEMA!r}, got {schema!r}")
    for key in ("n", "m"):
        if not isinstance(doc.get(key), int) or isinstance(doc.get(key), bool) or doc[key] < 0:
            raise FormatError(f"field {key!r}: expected a nonnegative integer, got {doc.get(key)!r}")
    n, m = doc["n"], doc["m"]
    for key in ("omega", "coupling", "scattering"):
        if key not in doc:
            raise FormatError(f"field {key!r} is missing")
    omega = parse_matrix(doc["omega"], n, n, "omega")
    coupling = parse_matrix(doc["coupling"], m, n, "coupling") if m and n else np.zeros((m, n), complex)
    scattering = parse_matrix(doc["scattering"], m, m, "scattering")
    return PassiveSystem(omega, coupling, scattering)


def load_json(path: str | os.PathLike) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_system(path: str | os.PathLike) -> PassiveSystem:
    doc = load_json(path)
    try:
        return system_from_dict(doc)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_system(sys: PassiveSystem, path: str | os.PathLike) -> None:
    write_atomic(path, dumps(system_to_dict(sys)))


def zero_report(records) -> list[dict]:
    return [r.to_dict() for r in records]


def plan_to_dict(plan) -> dict:
    return {
        "schema": PLAN_SCHEMA,
        "construction": plan.construction,
        "channels": plan.channels,
        "channel": plan.channel,
        "zeros": list(plan.zeros),
        "coefficients": list(plan.coefficients),
        "rates": plan.rates,
        "amplitudes": plan.amplitudes,
        "truncation_window": [plan.window_start, 0.0],
        "l2_norm": plan.l2_norm,
        "predicted_target": plan.predicted_target,
        "raw_target": plan.raw_target,
        "notes": list(plan.notes),
    }


def samples_csv(times: np.ndarray, amps: np.ndarray, prefix: str = "ch") -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["t"]
    for j in range(amps.shape[1]):
        header += [f"{prefix}{j + 1}_re", f"{prefix}{j + 1}_im"]
    writer.writerow(header)
    for t, row in zip(times, amps):
        line = [_fmt_float(float(t))]
        for a in row:
            line += [_fmt_float(float(a.real)), _fmt_float(float(a.imag))]
        writer.writerow(line)
    return buf.getvalue()


def trajectory_csv(traj) -> str:
    """Columns ``t``, Re/Im of each ψ component, Re/Im of each η component."""
    stacked = np.hstack([traj.psi, traj.eta])
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["t"]
    for i in range(traj.psi.shape[1]):
        header += [f"psi{i + 1}_re", f"psi{i + 1}_im"]
    for j in range(traj.eta.shape[1]):
        header += [f"eta{j + 1}_re", f"eta{j + 1}_im"]
    writer.writerow(header)
    for t, row in zip(traj.times, stacked):
        line = [_fmt_float(float(t))]
        for a in row:
            line += [_fmt_float(float(a.real)), _fmt_float(float(a.imag))]
        writer.writerow(line)
    return buf.getvalue()


def scenario_config_from_dict(doc: Any) -> tuple[str, dict]:
    """``{"name": ..., "parameters": {...}}``; complex parameters as ``[re, im]``."""
    if not isinstance(doc, dict) or "name" not in doc:
        raise FormatError("scenario config must be an object with a 'name' field")
    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise FormatError("field 'parameters' must be an object")
    out = {}
    for key, value in params.items():
        if key == "x":
            if not isinstance(value, list):
                raise FormatError("parameters.x: expected a list")
            out[key] = [parse_complex(v, f"parameters.x[{i}]") for i, v in enumerate(value)]
        elif key == "channel":
            out[key] = int(value)
        elif key in ("A1", "A2", "C1", "C2"):
            out[key] = parse_complex(value, f"parameters.{key}")
        else:
            c = parse_complex(value, f"parameters.{key}")
            if c.imag != 0:
                raise FormatError(f"parameters.{key}: expected a real number")
            out[key] = c.real
    return str(doc["name"]), out
