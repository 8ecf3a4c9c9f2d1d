"""Ordered placement of passive devices on M modes, plus ideal photon counters."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence, Union

import numpy as np

from .fock import (
    NORM_TOL_EXACT,
    BeamSplitter,
    PhaseShifter,
    StateVector,
    apply_beamsplitter,
    apply_phase,
)

UNKNOWN = "unknown"


@dataclass(frozen=True)
class Placed:
    """A coupler placed on an ordered pair of modes. ``tag`` marks roles such as the unknown slot."""

    device: BeamSplitter
    modes: tuple[int, int]
    tag: str | None = None


@dataclass(frozen=True)
class TaggedPhase:
    shifter: PhaseShifter
    tag: str | None = None

    @property
    def modes(self) -> tuple[int]:
        return (self.shifter.mode,)


Element = Union[Placed, TaggedPhase]


@dataclass(frozen=True)
class Circuit:
    """``detectors[k]`` is the label of the counter on output mode ``k``; ``None`` means ignored."""

    n_modes: int
    elements: tuple[Element, ...] = ()
    detectors: tuple[str | None, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        for el in self.elements:
            for m in el.modes:
                if not 0 <= m < self.n_modes:
                    raise IndexError(f"element {el} references mode {m} outside {self.n_modes} modes")
            if len(set(el.modes)) != len(el.modes):
                raise ValueError(f"element {el} uses identical modes")
        dets = self.detectors if self.detectors is not None else (None,) * self.n_modes
        dets = tuple(dets)
        if len(dets) != self.n_modes:
            raise ValueError("one detector label (or None) per output mode is required")
        named = [d for d in dets if d is not None]
        if len(set(named)) != len(named):
            raise ValueError(f"detector labels must be unique, got {dets}")
        object.__setattr__(self, "detectors", dets)

    def add(self, device: BeamSplitter, modes: tuple[int, int], tag: str | None = None) -> "Circuit":
        return replace(self, elements=self.elements + (Placed(device, tuple(modes), tag),))

    def add_phase(self, mode: int, phase: float, tag: str | None = None) -> "Circuit":
        return replace(self, elements=self.elements + (TaggedPhase(PhaseShifter(mode, phase), tag),))

    def with_detectors(self, labels: Sequence[str | None]) -> "Circuit":
        return replace(self, detectors=tuple(labels))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(d for d in self.detectors if d is not None)

    def untagged(self, tag: str = UNKNOWN) -> tuple[Element, ...]:
        return tuple(el for el in self.elements if el.tag != tag)


@dataclass(frozen=True)
class DetectionDistribution:
    """Click probability per detector label; ``ignored`` is the mass on unlabeled modes."""

    probabilities: dict[str, float]
    ignored: float = 0.0

    def __getitem__(self, label: str) -> float:
        return self.probabilities[label]

    def total(self) -> float:
        return sum(self.probabilities.values()) + self.ignored

    def max_abs_diff(self, other: "DetectionDistribution") -> float:
        keys = set(self.probabilities) | set(other.probabilities)
        diffs = [abs(self.probabilities.get(k, 0.0) - other.probabilities.get(k, 0.0)) for k in keys]
        diffs.append(abs(self.ignored - other.ignored))
        return max(diffs)


def element_matrix(el: Element, n_modes: int) -> np.ndarray:
    u = np.eye(n_modes, dtype=complex)
    if isinstance(el, Placed):
        i, j = el.modes
        u[np.ix_([i, j], [i, j])] = el.device.matrix
    else:
        m = el.shifter.mode
        u[m, m] = np.exp(1j * el.shifter.phase)
    return u


def single_photon_unitary(circuit: Circuit) -> np.ndarray:
    """One-photon transfer matrix: column ``k`` holds output amplitudes for a photon entering mode ``k``."""
    u = np.eye(circuit.n_modes, dtype=complex)
    for el in circuit.elements:
        u = element_matrix(el, circuit.n_modes) @ u
    return u


def evolve(circuit: Circuit, state: StateVector) -> StateVector:
    if state.n_modes != circuit.n_modes:
        raise ValueError(f"state has {state.n_modes} modes, circuit has {circuit.n_modes}")
    for el in circuit.elements:
        if isinstance(el, Placed):
            state = apply_beamsplitter(state, el.device, el.modes)
        else:
            state = apply_phase(state, el.shifter)
    return state


def _is_single_photon(state: StateVector) -> bool:
    return all(sum(occ) == 1 for occ, _ in state.items())


def distribution_from_populations(circuit: Circuit, populations: Iterable[float]) -> DetectionDistribution:
    probs: dict[str, float] = {}
    ignored = 0.0
    for label, p in zip(circuit.detectors, populations):
        if label is None:
            ignored += float(p)
        else:
            probs[label] = float(p)
    return DetectionDistribution(probs, ignored)


def detection_probabilities(circuit: Circuit, state: StateVector, method: str = "fock") -> DetectionDistribution:
    """Per-label click probabilities for a one-photon input.

    ``method="fock"`` evolves the full state; ``"unitary"`` uses the one-photon transfer matrix.
    """
    if state.n_modes != circuit.n_modes:
        raise ValueError(f"state has {state.n_modes} modes, circuit has {circuit.n_modes}")
    if not _is_single_photon(state):
        raise ValueError("detection_probabilities supports exactly one photon per input")
    if method == "fock":
        pops = evolve(circuit, state).mode_populations()
    elif method == "unitary":
        vec = np.zeros(circuit.n_modes, dtype=complex)
        for occ, amp in state.items():
            vec[occ.index(1)] = amp
        pops = np.abs(single_photon_unitary(circuit) @ vec) ** 2
    else:
        raise ValueError(f"unknown method {method!r}")
    return distribution_from_populations(circuit, pops)


def is_unitary(u: np.ndarray, tol: float = NORM_TOL_EXACT) -> bool:
    return bool(np.abs(u @ u.conj().T - np.eye(len(u))).max() <= tol)


def inverse(circuit: Circuit) -> Circuit:
    """Reverse element order and take adjoints; detectors are dropped."""
    elements = []
    for el in reversed(circuit.elements):
        if isinstance(el, Placed):
            elements.append(Placed(el.device.adjoint(), el.modes, el.tag))
        else:
            elements.append(TaggedPhase(PhaseShifter(el.shifter.mode, -el.shifter.phase), el.tag))
    return Circuit(circuit.n_modes, tuple(elements))


def prefix_until(circuit: Circuit, tag: str = UNKNOWN) -> Circuit:
    """Sub-circuit of the elements before the first element carrying ``tag``."""
    for k, el in enumerate(circuit.elements):
        if el.tag == tag:
            return Circuit(circuit.n_modes, circuit.elements[:k])
    return Circuit(circuit.n_modes, circuit.elements)
