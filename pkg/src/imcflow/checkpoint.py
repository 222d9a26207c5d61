"""Versioned binary checkpoints.

Byte layout::

    offset 0   8 bytes   magic b"IMCFCKPT"
    offset 8   uint32 LE format version
    offset 12  uint32 LE header length L
    offset 16  L bytes   UTF-8 JSON header
    then       float64 LE arrays, concatenated in header["fields"] order

The header holds the domain descriptor, the scenario text and its SHA-256,
the time (as a hex float, so it round-trips exactly), the step counter, run
constants and, per field, its name and shape.  Fields are ``g`` and ``h`` in
packed symmetric layout, plus ``F`` and ``s`` for gauge-fixed runs.
"""
from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import DomainSpec
from .errors import CheckpointError
from .fields import Sym2Field
from .flows import GaugeData, SpacelikeState

MAGIC = b"IMCFCKPT"
VERSION = 1
_PREFIX = struct.Struct("<8sII")


@dataclass
class Checkpoint:
    state: SpacelikeState
    step: int
    scenario_text: str = ""
    scenario_hash: str = ""
    gauge: GaugeData | None = None
    constants: dict = field(default_factory=dict)
    version: int = VERSION


def save_checkpoint(path, ck: Checkpoint) -> None:
    st = ck.state
    arrays = [("g", st.g.data), ("h", st.h.data)]
    if ck.gauge is not None:
        arrays += [("F", np.asarray(ck.gauge.F)), ("s", ck.gauge.s.data)]
    header = {
        "domain": st.dom.descriptor(),
        "scenario_hash": ck.scenario_hash,
        "scenario_text": ck.scenario_text,
        "t": float(st.t).hex(),
        "step": int(ck.step),
        "constants": {k: (float(v).hex() if isinstance(v, float) else v) for k, v in ck.constants.items()},
        "fields": [{"name": name, "shape": list(a.shape)} for name, a in arrays],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, len(blob)))
        fh.write(blob)
        for _, a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    os.replace(tmp, path)


def _unhex(v):
    if isinstance(v, str):
        try:
            return float.fromhex(v)
        except ValueError:
            return v
    return v


def load_checkpoint(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if len(raw) < _PREFIX.size:
        raise CheckpointError("file too short for a checkpoint")
    magic, version, hlen = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    try:
        header = json.loads(raw[_PREFIX.size:_PREFIX.size + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from None
    offset = _PREFIX.size + hlen
    arrays = {}
    for spec in header["fields"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(raw):
            raise CheckpointError(f"truncated checkpoint while reading {spec['name']}")
        arrays[spec["name"]] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset = end
    if offset != len(raw):
        raise CheckpointError("trailing bytes after the last field")
    dom = DomainSpec.from_descriptor(header["domain"])
    n = dom.n
    st = SpacelikeState(Sym2Field(arrays["g"], n), Sym2Field(arrays["h"], n),
                        float.fromhex(header["t"]), dom)
    gauge = None
    if "F" in arrays:
        gauge = GaugeData(s=Sym2Field(arrays["s"], n), F=arrays["F"])
    constants = {k: _unhex(v) for k, v in header.get("constants", {}).items()}
    return Checkpoint(st, int(header["step"]), header.get("scenario_text", ""),
                      header.get("scenario_hash", ""), gauge, constants, version)
