"""Text and binary formats for states, density fields and reports.

State files are delimited text.  The first line is ``#`` followed by a JSON
header (labels, truncation data, units, and whatever run configuration the
caller passes); every further line is ``n l m real imag`` with floats in
``%.17g``, which round-trips float64 exactly.

Density files are raw little-endian float64 in row-major order over the
active grid axes, with a JSON sidecar at ``<path>.json`` describing the
shape, axis order and grid.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .geometry import ActionAngleLabels
from .observables import DensityField, GridSpec
from .state import CoherentState

__all__ = [
    "STATE_FORMAT",
    "DENSITY_FORMAT",
    "UNITS_NOTE",
    "FormatError",
    "format_float",
    "dumps_json",
    "write_state",
    "read_state",
    "write_density",
    "read_density",
]

STATE_FORMAT = "hcoherent-state/1"
DENSITY_FORMAT = "hcoherent-density/1"
UNITS_NOTE = "atomic units: hbar = m_e = e = a0 = 1; energies in hartree, lengths in bohr"


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def format_float(x: float) -> str:
    return "%.17g" % x


def dumps_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace variation."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _state_header(state: CoherentState, config: dict | None) -> dict:
    return {
        "format": STATE_FORMAT,
        "labels": state.labels.as_dict(),
        "epsilon": state.epsilon,
        "tail_bound": state.tail_bound,
        "n_lo": state.n_lo,
        "n_hi": state.n_hi,
        "count": len(state),
        "units": UNITS_NOTE,
        "columns": ["n", "l", "m", "real", "imag"],
        "config": config or {},
    }


def write_state(state: CoherentState, path, config: dict | None = None) -> Path:
    path = Path(path)
    lines = ["# " + dumps_json(_state_header(state, config))]
    for (n, l, m), v in zip(state.keys.tolist(), state.values.tolist()):
        lines.append(f"{n} {l} {m} {format_float(v.real)} {format_float(v.imag)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_state(path) -> CoherentState:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise FormatError(f"{path}: missing header line")
        try:
            header = json.loads(first[2:])
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: bad header ({exc})") from None
        if header.get("format") != STATE_FORMAT:
            raise FormatError(f"{path}: not a state file ({header.get('format')!r})")
        keys, vals = [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 5:
                raise FormatError(f"{path}:{lineno}: expected 5 fields")
            keys.append([int(p) for p in parts[:3]])
            vals.append(complex(float(parts[3]), float(parts[4])))
    if len(vals) != header["count"]:
        raise FormatError(f"{path}: header says {header['count']} rows, found {len(vals)}")
    keys_arr = np.array(keys, dtype=np.int64).reshape(-1, 3)
    return CoherentState(
        keys_arr,
        np.array(vals, dtype=complex),
        int(header["n_lo"]),
        int(header["n_hi"]),
        float(header["tail_bound"]),
        ActionAngleLabels(**header["labels"]),
        float(header["epsilon"]),
    )


def write_density(field: DensityField, path, config: dict | None = None) -> Path:
    """Write ``field.values`` as raw ``<f8`` plus a ``.json`` sidecar."""
    path = Path(path)
    grid = field.grid
    header = {
        "format": DENSITY_FORMAT,
        "dtype": "<f8",
        "order": "row-major",
        "axes": ["xyz"[i] for i in grid.active_axes],
        "shape": list(field.values.shape),
        "grid": grid.to_dict(),
        "coordinates": "cell centres: lo + (k + 1/2) (hi - lo) / samples",
        "peak_location": [float(c) for c in field.peak_location],
        "total_mass_in_box": field.total_mass_in_box,
        "units": UNITS_NOTE,
        "config": config or {},
    }
    path.write_bytes(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    Path(str(path) + ".json").write_text(dumps_json(header) + "\n")
    return path


def read_density(path):
    """Return ``(values, header)``."""
    path = os.fspath(path)
    with open(path + ".json") as fh:
        header = json.load(fh)
    if header.get("format") != DENSITY_FORMAT:
        raise FormatError(f"{path}: not a density file")
    values = np.fromfile(path, dtype="<f8")
    shape = tuple(header["shape"])
    if values.size != int(np.prod(shape)):
        raise FormatError(f"{path}: {values.size} values for shape {shape}")
    header["grid"] = GridSpec.from_dict(header["grid"])
    return values.reshape(shape), header
