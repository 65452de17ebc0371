"""Hydrogen-atom coherent states labelled by classical action-angle variables."""

from .geometry import (
    ActionAngleLabels,
    OrbitalElements,
    classical_position,
    elements_from_labels,
    labels_from_elements,
    orbit_elements,
    packet_position,
)
from .observables import GridSpec, density_grid, energy_expectation, radial_moments, wavefunction_at
from .specfun import HalfInteger, clebsch_gordan, wigner_d_top
from .state import CoherentState, build_state, evolve_labels, evolve_quantum, fidelity
from .su2 import SpinLabels, su2_build, su2_evolve

__version__ = "0.1.0"

__all__ = [
    "ActionAngleLabels",
    "OrbitalElements",
    "CoherentState",
    "GridSpec",
    "HalfInteger",
    "SpinLabels",
    "build_state",
    "classical_position",
    "clebsch_gordan",
    "density_grid",
    "elements_from_labels",
    "energy_expectation",
    "evolve_labels",
    "evolve_quantum",
    "fidelity",
    "labels_from_elements",
    "orbit_elements",
    "packet_position",
    "radial_moments",
    "su2_build",
    "su2_evolve",
    "wavefunction_at",
    "wigner_d_top",
]
