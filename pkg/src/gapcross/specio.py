"""Potential files, atomic artifact writes and run manifests.

A potential file is TOML or JSON holding one table with a ``kind`` key;
see the README for the schema.  Nested potentials (``base``, ``left``,
``right``) are tables of the same form.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
import tempfile
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np
import tomli

from .potentials import (
    DislocationPotential,
    InterfacePotential,
    MuffinTinPotential,
    RotatedPotential,
    ShiftedPotential,
    StepPotential,
    TrigPotential1D,
    TrigPotential2D,
    make_step_potential,
)

__all__ = [
    "SpecError",
    "potential_from_dict",
    "potential_to_dict",
    "load_potential",
    "atomic_write",
    "write_csv",
    "write_json",
    "to_jsonable",
    "manifest",
    "pmap",
]


class SpecError(ValueError):
    """A potential description or config does not validate."""


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise SpecError(f"{where}: missing key '{key}'")
    return d[key]


def _number(x, where: str) -> float:
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(Fraction(x)) if isinstance(x, str) else float(x)
    except (TypeError, ValueError):
        raise SpecError(f"{where}: expected a number, got {x!r}") from None


def potential_from_dict(d: dict, where: str = "potential"):
    if not isinstance(d, dict):
        raise SpecError(f"{where}: expected a table")
    kind = _need(d, "kind", where)
    if kind == "step":
        levels = _need(d, "levels", where)
        try:
            V = make_step_potential([((_number(a, where), _number(b, where)), _number(v, where))
                                     for a, b, v in levels])
        except ValueError as e:
            raise SpecError(f"{where}: {e}") from None
    elif kind == "trig":
        dim = int(d.get("dim", 2 if "terms" in d else 1))
        c0 = _number(d.get("c0", 0.0), where)
        if dim == 1:
            V = TrigPotential1D(c0, tuple((int(m), _number(a, where)) for m, a in d.get("cos", [])),
                                tuple((int(m), _number(b, where)) for m, b in d.get("sin", [])))
        elif dim == 2:
            V = TrigPotential2D(c0, tuple((int(mx), int(my), _number(a, where), _number(p, where))
                                          for mx, my, a, p in d.get("terms", [])))
        else:
            raise SpecError(f"{where}: dim must be 1 or 2")
    elif kind == "muffin":
        try:
            V = MuffinTinPotential(_number(_need(d, "r", where), where),
                                   tuple(_number(c, where) for c in d.get("center", (0.5, 0.5))),
                                   _number(d.get("height", "inf"), where))
        except ValueError as e:
            raise SpecError(f"{where}: {e}") from None
    elif kind == "dislocation":
        base = potential_from_dict(_need(d, "base", where), where + ".base")
        try:
            V = DislocationPotential(base, _number(_need(d, "t", where), where))
        except ValueError as e:
            raise SpecError(f"{where}: {e}") from None
    elif kind == "rotation":
        base = potential_from_dict(_need(d, "base", where), where + ".base")
        if "tan" in d:
            theta = math.atan(_number(d["tan"], where))
        else:
            theta = _number(_need(d, "theta", where), where)
        try:
            V = RotatedPotential(base, theta)
        except ValueError as e:
            raise SpecError(f"{where}: {e}") from None
    elif kind == "interface":
        V = InterfacePotential(potential_from_dict(_need(d, "left", where), where + ".left"),
                               potential_from_dict(_need(d, "right", where), where + ".right"))
    else:
        raise SpecError(f"{where}: unknown kind {kind!r}")
    if "shift" in d:
        sh = [_number(s, where) for s in d["shift"]]
        V = ShiftedPotential(V, sh[0], sh[1] if len(sh) > 1 else 0.0)
    return V


def potential_to_dict(V) -> dict:
    if isinstance(V, ShiftedPotential):
        d = potential_to_dict(V.base)
        d["shift"] = [V.dx, V.dy] if V.ndim == 2 else [V.dx]
        return d
    if isinstance(V, StepPotential):
        b = list(V.breaks) + [1.0]
        return {"kind": "step", "levels": [[b[i], b[i + 1], v] for i, v in enumerate(V.levels)]}
    if isinstance(V, TrigPotential1D):
        return {"kind": "trig", "dim": 1, "c0": V.c0, "cos": [list(t) for t in V.cos_terms],
                "sin": [list(t) for t in V.sin_terms]}
    if isinstance(V, TrigPotential2D):
        return {"kind": "trig", "dim": 2, "c0": V.c0, "terms": [list(t) for t in V.terms]}
    if isinstance(V, MuffinTinPotential):
        return {"kind": "muffin", "r": V.r, "center": list(V.center),
                "height": "inf" if math.isinf(V.height) else V.height}
    if isinstance(V, DislocationPotential):
        return {"kind": "dislocation", "t": V.t, "base": potential_to_dict(V.base)}
    if isinstance(V, RotatedPotential):
        return {"kind": "rotation", "theta": V.theta, "base": potential_to_dict(V.base)}
    if isinstance(V, InterfacePotential):
        return {"kind": "interface", "left": potential_to_dict(V.left), "right": potential_to_dict(V.right)}
    raise SpecError(f"cannot serialise {type(V).__name__}")


def load_potential(path):
    p = Path(path)
    if not p.is_file():
        raise SpecError(f"potential file not found: {p}")
    text = p.read_text()
    try:
        d = json.loads(text) if p.suffix.lower() == ".json" else tomli.loads(text)
    except (json.JSONDecodeError, tomli.TOMLDecodeError) as e:
        raise SpecError(f"{p}: {e}") from None
    if "potential" in d and "kind" not in d:
        d = d["potential"]
    return potential_from_dict(d, str(p))


# -- artifacts -------------------------------------------------------------------

def atomic_write(path, data: str) -> Path:
    """Write through a temporary file in the target directory, then rename."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=f".{p.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(data)
        os.replace(tmp, p)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return p


def to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, Fraction):
        return str(x)
    return x


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> Path:
    columns = columns or (list(rows[0].keys()) if rows else [])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return atomic_write(path, buf.getvalue())


def manifest(command: str, config: dict, outputs: list, seed: int) -> dict:
    """Resolved configuration plus content hashes of every artifact."""
    hashes = {}
    for p in outputs:
        p = Path(p)
        if p.is_file():
            hashes[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    from . import __version__

    return {"command": command, "config": to_jsonable(config), "seed": seed, "outputs": hashes,
            "version": __version__, "python": platform.python_version(), "numpy": np.__version__}


def pmap(fn, items, jobs: int = 1) -> list:
    """Order-preserving map over worker processes; serial when jobs <= 1."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))
