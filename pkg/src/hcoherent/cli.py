"""Command-line interface: ``hcoherent <command> [options]``.

Commands
--------
state     build a coherent state and write its amplitudes
evolve    propagate a state in time, compare with relabelling
density   sample |psi|^2 on a slice or a cube
orbit     sample the classical orbit matching the labels
elements  convert labels to orbital elements or back
verify    run the numerical verification suites

Angles are radians unless ``--degrees`` is given.  ``--config FILE`` reads a
JSON object whose keys are option names (``eps``, ``samples``, ...); its
values override the command line.  A ``thresholds`` key overrides entries of
the verification thresholds.  Relative output paths are placed under
``$HCOHERENT_OUTPUT_DIR`` when that variable is set.

Exit status: 0 on success, 1 when a verification threshold is exceeded,
2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .fileio import dumps_json, format_float, read_state, write_density, write_state
from .geometry import (
    ActionAngleLabels,
    DegenerateOrbit,
    InconsistentElements,
    elements_from_labels,
    kepler_frequency,
    labels_from_elements,
    mean_anomaly,
    orbit_elements,
    classical_position,
)
from .observables import GridSpec, density_grid
from .specfun import QuantumNumberError
from .state import DEFAULT_EPSILON, ResourceLimit, build_state, distance, evolve_labels, evolve_quantum, fidelity
from .verify import SUITES, THRESHOLDS, run_suite

OUTPUT_DIR_ENV = "HCOHERENT_OUTPUT_DIR"
_ANGLE_KEYS = ("alpha", "beta", "gamma", "delta", "theta", "inclination", "node", "periapsis")


class UsageError(Exception):
    pass


def _add_labels(p, required_rho=True):
    p.add_argument("--rho", type=float, required=required_rho, help="radial action (dimensionless)")
    for name in ("alpha", "beta", "gamma", "delta", "theta"):
        p.add_argument(f"--{name}", type=float, default=0.0)


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="hcoherent", description="Hydrogen coherent states")
    top.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file overriding options")
    common.add_argument("--degrees", action="store_true", help="read angles in degrees")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", parents=[common], help="build and export a state")
    _add_labels(p)
    p.add_argument("--eps", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--nmax", type=int, default=512)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="state.txt")

    p = sub.add_parser("evolve", parents=[common], help="time evolution and fidelity report")
    _add_labels(p, required_rho=False)
    p.add_argument("--state", help="start from an exported state instead of labels")
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--eps", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--out", help="write the evolved state here")

    p = sub.add_parser("density", parents=[common], help="|psi|^2 on a grid")
    p.add_argument("--state", required=True)
    p.add_argument("--slice", help="fixed plane such as z=0; omit for a cube")
    p.add_argument("--extent", type=float, required=True, help="half-width of the box (bohr)")
    p.add_argument("--samples", type=int, default=128)
    p.add_argument("--out", default="density.bin")

    p = sub.add_parser("orbit", parents=[common], help="sample the classical orbit")
    _add_labels(p)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--periods", type=float, default=1.0)
    p.add_argument("--out", default="orbit.txt")

    p = sub.add_parser("elements", parents=[common], help="labels <-> orbital elements")
    _add_labels(p)
    p.add_argument("--to-labels", action="store_true", help="read elements, print labels")
    p.add_argument("--eccentricity", type=float, default=0.0)
    p.add_argument("--inclination", type=float, default=0.0)
    p.add_argument("--node", type=float, default=0.0)
    p.add_argument("--periapsis", type=float, default=0.0)

    p = sub.add_parser("verify", parents=[common], help="verification suites")
    p.add_argument("suite", choices=sorted(SUITES) + ["all"])
    p.add_argument("--nmax", type=int, default=THRESHOLDS["subspace_nmax"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="also write the report here")
    return top


def _resolve(args: argparse.Namespace) -> dict:
    """Apply the config file and degree conversion; return the resolved config."""
    cfg = {k: v for k, v in vars(args).items() if k not in ("config",)}
    thresholds = dict(THRESHOLDS)
    if args.config:
        try:
            extra = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(extra, dict):
            raise UsageError("config must be a JSON object")
        for key, value in extra.items():
            if key == "thresholds":
                unknown = set(value) - set(THRESHOLDS)
                if unknown:
                    raise UsageError(f"unknown thresholds: {sorted(unknown)}")
                thresholds.update(value)
            elif key in cfg and key != "command":
                cfg[key] = value
            else:
                raise UsageError(f"option {key!r} not valid for {args.command}")
    if cfg.get("degrees"):
        for key in _ANGLE_KEYS:
            if cfg.get(key) is not None:
                cfg[key] = math.radians(cfg[key])
        cfg["degrees"] = False  # resolved values are radians
    if args.command == "verify":
        cfg["thresholds"] = thresholds
    return cfg


def _out_path(name) -> Path:
    path = Path(name)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _labels(cfg) -> ActionAngleLabels:
    return ActionAngleLabels(**{k: cfg[k] for k in ("rho", "alpha", "beta", "gamma", "delta", "theta")})


def _emit(obj) -> None:
    sys.stdout.write(dumps_json(obj) + "\n")


def _cmd_state(cfg) -> int:
    st = build_state(_labels(cfg), cfg["eps"], n_max=cfg["nmax"], workers=cfg["workers"])
    path = write_state(st, _out_path(cfg["out"]), config=cfg)
    _emit({"out": str(path), "count": len(st), "norm_squared": st.norm_squared(),
           "tail_bound": st.tail_bound, "n_lo": st.n_lo, "n_hi": st.n_hi})
    return 0


def _cmd_evolve(cfg) -> int:
    if cfg["state"]:
        start = read_state(cfg["state"])
        labels = start.labels
    else:
        if cfg["rho"] is None:
            raise UsageError("evolve needs --rho or --state")
        labels = _labels(cfg)
        start = build_state(labels, cfg["eps"])
    quantum = evolve_quantum(start, cfg["time"])
    relabel = build_state(evolve_labels(labels, cfg["time"]), start.epsilon)
    report = {
        "time": cfg["time"],
        "labels": labels.as_dict(),
        "evolved_labels": relabel.labels.as_dict(),
        "distance_quantum_vs_labels": distance(quantum, relabel),
        "fidelity_with_start": fidelity(start, quantum),
    }
    if cfg["out"]:
        report["out"] = str(write_state(quantum, _out_path(cfg["out"]), config=cfg))
    _emit(report)
    return 0


def _parse_slice(text):
    axis, sep, offset = text.partition("=")
    if not sep or axis not in ("x", "y", "z"):
        raise UsageError(f"--slice wants AXIS=OFFSET, got {text!r}")
    try:
        return axis, float(offset)
    except ValueError:
        raise UsageError(f"bad slice offset {offset!r}") from None


def _cmd_density(cfg) -> int:
    st = read_state(cfg["state"])
    if cfg["slice"]:
        axis, offset = _parse_slice(cfg["slice"])
        grid = GridSpec.slice(axis, offset, cfg["extent"], cfg["samples"])
    else:
        grid = GridSpec.cube(cfg["extent"], cfg["samples"])
    field = density_grid(st, grid)
    path = write_density(field, _out_path(cfg["out"]), config=cfg)
    _emit({"out": str(path), "header": str(path) + ".json", "shape": list(field.values.shape),
           "peak_location": [float(c) for c in field.peak_location], "total_mass_in_box": field.total_mass_in_box})
    return 0


def _cmd_orbit(cfg) -> int:
    labels = _labels(cfg)
    el = elements_from_labels(labels)
    omega = kepler_frequency(labels.rho)
    t = np.linspace(0.0, cfg["periods"] * 2 * math.pi / omega, cfg["samples"])
    pos = classical_position(el, mean_anomaly(labels) + omega * t)
    lines = ["# " + dumps_json({"columns": ["t", "x", "y", "z"], "config": cfg})]
    for ti, p in zip(t, pos):
        lines.append(" ".join(format_float(v) for v in (ti, *p)))
    path = _out_path(cfg["out"])
    path.write_text("\n".join(lines) + "\n")
    _emit({"out": str(path), "samples": len(t), "eccentricity": el.eccentricity})
    return 0


def _elements_dict(el):
    return {
        "J": [float(v) for v in el.j_vec],
        "K": [float(v) for v in el.k_vec],
        "eccentricity": el.eccentricity,
        "inclination": el.inclination,
        "node_longitude": el.node_longitude,
        "periapsis_argument": el.periapsis_argument,
        "semi_major": el.semi_major,
        "rho": el.rho,
    }


def _cmd_elements(cfg) -> int:
    if cfg["to_labels"]:
        el = orbit_elements(cfg["rho"], cfg["eccentricity"], cfg["inclination"], cfg["node"], cfg["periapsis"])
        _emit({"labels": labels_from_elements(el, cfg["theta"]).as_dict(), "elements": _elements_dict(el)})
    else:
        labels = _labels(cfg)
        _emit({"labels": labels.as_dict(), "elements": _elements_dict(elements_from_labels(labels))})
    return 0


def _cmd_verify(cfg) -> int:
    reports = run_suite(cfg["suite"], cfg["thresholds"], n_max=cfg["nmax"], seed=cfg["seed"])
    out = {"config": cfg, "passed": all(r.passed for r in reports), "suites": [r.to_dict() for r in reports]}
    if cfg["out"]:
        _out_path(cfg["out"]).write_text(dumps_json(out) + "\n")
    _emit(out)
    return 0 if out["passed"] else 1


_COMMANDS = {
    "state": _cmd_state,
    "evolve": _cmd_evolve,
    "density": _cmd_density,
    "orbit": _cmd_orbit,
    "elements": _cmd_elements,
    "verify": _cmd_verify,
}


def run(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.command](cfg)
    except (UsageError, ValueError, QuantumNumberError, DegenerateOrbit,
            InconsistentElements, ResourceLimit, OSError, KeyError) as exc:
        print(f"hcoherent {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
