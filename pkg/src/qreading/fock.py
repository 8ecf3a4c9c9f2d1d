"""Multi-mode photon-number states and their evolution under passive optics.

States are stored sparsely as ``{occupation tuple: amplitude}``. A passive
two-mode device with mode matrix ``A`` maps creation operators as
``a_k^dag -> sum_l A[l, k] a_l^dag``, so on the one-photon sector the device
acts exactly as ``A``. Evolution expands the transformed creation-operator
polynomials with exact binomial coefficients, which keeps every
fixed-photon-number sector free of truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

NORM_TOL_EXACT = 1e-12
NORM_TOL_USER = 1e-9

Occupation = tuple[int, ...]


def _check_occupation(occ: Iterable[int]) -> Occupation:
    occ = tuple(int(n) for n in occ)
    if any(n < 0 for n in occ):
        raise ValueError(f"negative photon count in {occ}")
    return occ


@dataclass(frozen=True)
class StateVector:
    """Pure state over the occupation basis of ``n_modes`` modes."""

    amplitudes: Mapping[Occupation, complex]
    n_modes: int
    tol: float = field(default=NORM_TOL_EXACT, compare=False, repr=False)

    def __post_init__(self):
        amps = {}
        for occ, amp in self.amplitudes.items():
            occ = _check_occupation(occ)
            if len(occ) != self.n_modes:
                raise ValueError(f"occupation {occ} does not have {self.n_modes} modes")
            amp = complex(amp)
            if amp != 0:
                amps[occ] = amps.get(occ, 0j) + amp
        object.__setattr__(self, "amplitudes", amps)
        norm = self.norm()
        if abs(norm - 1.0) > self.tol:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")

    @classmethod
    def basis(cls, occupation: Iterable[int]) -> "StateVector":
        occ = _check_occupation(occupation)
        return cls({occ: 1.0}, len(occ))

    @classmethod
    def vacuum(cls, n_modes: int) -> "StateVector":
        return cls.basis((0,) * n_modes)

    @classmethod
    def from_unnormalized(cls, amplitudes: Mapping[Occupation, complex], n_modes: int) -> "StateVector":
        total = sum(abs(a) ** 2 for a in amplitudes.values())
        if total == 0:
            raise ValueError("zero vector cannot be normalized")
        scale = 1.0 / math.sqrt(total)
        return cls({k: v * scale for k, v in amplitudes.items()}, n_modes)

    def norm(self) -> float:
        """Squared norm."""
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def __getitem__(self, occupation: Iterable[int]) -> complex:
        return self.amplitudes.get(tuple(occupation), 0j)

    def items(self):
        return self.amplitudes.items()

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        if other.n_modes != self.n_modes:
            raise ValueError("mode count mismatch")
        return sum(
            (a.conjugate() * other.amplitudes[k] for k, a in self.amplitudes.items() if k in other.amplitudes),
            0j,
        )

    def photon_number_distribution(self) -> dict[int, float]:
        dist: dict[int, float] = {}
        for occ, amp in self.amplitudes.items():
            n = sum(occ)
            dist[n] = dist.get(n, 0.0) + abs(amp) ** 2
        return dist

    def mode_populations(self) -> np.ndarray:
        """Mean photon number in each mode."""
        pops = np.zeros(self.n_modes)
        for occ, amp in self.amplitudes.items():
            pops += abs(amp) ** 2 * np.asarray(occ, dtype=float)
        return pops

    def tensor(self, other: "StateVector") -> "StateVector":
        amps = {a + b: x * y for a, x in self.items() for b, y in other.items()}
        return StateVector(amps, self.n_modes + other.n_modes, tol=max(self.tol, other.tol))


@dataclass(frozen=True)
class BeamSplitter:
    """Two-mode passive coupler with mode matrix ``diag(e^{i out}) [[r, -t], [t, r]] diag(e^{i in})``.

    ``r`` is the signed reflection amplitude and ``t >= 0`` the transmission
    amplitude, so the intensity reflectivity is ``R = r**2``.
    """

    r: float
    t: float
    phase_in: tuple[float, float] = (0.0, 0.0)
    phase_out: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not -1.0 - NORM_TOL_EXACT <= self.r <= 1.0 + NORM_TOL_EXACT:
            raise ValueError(f"reflection amplitude {self.r} outside [-1, 1]")
        if not -NORM_TOL_EXACT <= self.t <= 1.0 + NORM_TOL_EXACT:
            raise ValueError(f"transmission amplitude {self.t} outside [0, 1]")
        if abs(self.r**2 + self.t**2 - 1.0) > NORM_TOL_EXACT:
            raise ValueError(f"r^2 + t^2 = {self.r**2 + self.t**2} != 1")
        object.__setattr__(self, "phase_in", tuple(float(p) for p in self.phase_in))
        object.__setattr__(self, "phase_out", tuple(float(p) for p in self.phase_out))

    @classmethod
    def from_reflectivity(cls, reflectivity: float, sign: int = 1, **phases) -> "BeamSplitter":
        """Build from intensity reflectivity ``R``; ``sign`` picks the sign of ``r``."""
        if not -NORM_TOL_EXACT <= reflectivity <= 1.0 + NORM_TOL_EXACT:
            raise ValueError(f"reflectivity {reflectivity} outside [0, 1]")
        reflectivity = min(max(reflectivity, 0.0), 1.0)
        r = math.sqrt(reflectivity)
        t = math.sqrt(1.0 - reflectivity)
        return cls(sign * r, t, **phases)

    @classmethod
    def from_amplitude(cls, r: float, **phases) -> "BeamSplitter":
        r = min(max(float(r), -1.0), 1.0)
        return cls(r, math.sqrt(1.0 - r * r), **phases)

    @property
    def reflectivity(self) -> float:
        return self.r**2

    @property
    def transmittivity(self) -> float:
        return self.t**2

    @property
    def has_phases(self) -> bool:
        return any(p != 0.0 for p in self.phase_in + self.phase_out)

    @property
    def matrix(self) -> np.ndarray:
        a = np.array([[self.r, -self.t], [self.t, self.r]], dtype=complex)
        return np.diag(np.exp(1j * np.asarray(self.phase_out))) @ a @ np.diag(np.exp(1j * np.asarray(self.phase_in)))

    def adjoint(self) -> "BeamSplitter":
        # [[r, -t], [t, r]]^T = diag(1, -1) [[r, -t], [t, r]] diag(1, -1)
        p_in = (-self.phase_out[0], math.pi - self.phase_out[1])
        p_out = (-self.phase_in[0], math.pi - self.phase_in[1])
        return BeamSplitter(self.r, self.t, _wrap(p_in), _wrap(p_out))


def _wrap(phases: tuple[float, float]) -> tuple[float, float]:
    return tuple(math.remainder(p, 2 * math.pi) for p in phases)


@dataclass(frozen=True)
class PhaseShifter:
    """Multiplies the single-photon amplitude of ``mode`` by ``e^{i phase}``."""

    mode: int
    phase: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[np.exp(1j * self.phase)]])


@dataclass(frozen=True)
class Diagonalization:
    """``A = D diag(e^{i delta}, e^{-i delta}) D^dag`` for a real coupler."""

    delta: float
    change_of_basis: BeamSplitter

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * np.array([self.delta, -self.delta]))

    def reconstruct(self) -> np.ndarray:
        d = self.change_of_basis.matrix
        return d @ np.diag(self.eigenvalues) @ d.conj().T

    def to_physical(self, state: StateVector, modes: tuple[int, int] = (0, 1)) -> StateVector:
        """Map amplitudes given in the eigenmode basis into the lab basis."""
        return apply_unitary(state, self.change_of_basis.matrix, modes)

    def to_eigenbasis(self, state: StateVector, modes: tuple[int, int] = (0, 1)) -> StateVector:
        return apply_unitary(state, self.change_of_basis.matrix.conj().T, modes)


# Eigenvectors of every real rotation [[r, -t], [t, r]] are (1, -i)/sqrt2 and (1, i)/sqrt2.
EIGENBASIS = BeamSplitter(math.sqrt(0.5), math.sqrt(0.5), phase_in=(0.0, math.pi), phase_out=(0.0, -math.pi / 2))


def make_noon_superposition(n: int, alpha: complex, beta: complex) -> StateVector:
    """``alpha/sqrt2 (|0,n> + |n,0>) + beta |0,0>``."""
    if int(n) != n or n < 1:
        raise ValueError(f"NOON photon number must be a positive integer, got {n}")
    n = int(n)
    weight = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(weight - 1.0) > NORM_TOL_USER:
        raise ValueError(f"|alpha|^2 + |beta|^2 = {weight} != 1")
    amps = {(0, 0): beta, (n, 0): alpha / math.sqrt(2), (0, n): alpha / math.sqrt(2)}
    return StateVector(amps, 2, tol=NORM_TOL_USER)


def mean_photon_number(state: StateVector) -> float:
    return float(sum(abs(a) ** 2 * sum(occ) for occ, a in state.items()))


def _check_modes(state: StateVector, modes: tuple[int, ...]) -> tuple[int, ...]:
    modes = tuple(int(m) for m in modes)
    for m in modes:
        if not 0 <= m < state.n_modes:
            raise IndexError(f"mode {m} out of range for {state.n_modes}-mode state")
    if len(set(modes)) != len(modes):
        raise ValueError(f"mode indices must be distinct, got {modes}")
    return modes


def _expand_pair(n0: int, n1: int, u: np.ndarray) -> dict[tuple[int, int], complex]:
    """Coefficients of ``(u00 x + u10 y)^n0 (u01 x + u11 y)^n1`` in monomials ``x^p y^q``."""
    first = [math.comb(n0, k) * u[0, 0] ** k * u[1, 0] ** (n0 - k) for k in range(n0 + 1)]
    second = [math.comb(n1, k) * u[0, 1] ** k * u[1, 1] ** (n1 - k) for k in range(n1 + 1)]
    out: dict[tuple[int, int], complex] = {}
    for k0, c0 in enumerate(first):
        if c0 == 0:
            continue
        for k1, c1 in enumerate(second):
            if c1 == 0:
                continue
            p = k0 + k1
            key = (p, n0 + n1 - p)
            out[key] = out.get(key, 0j) + c0 * c1
    return out


def apply_unitary(state: StateVector, matrix: np.ndarray, modes: tuple[int, int]) -> StateVector:
    """Apply the Fock-space action of a 2x2 unitary mode matrix on ``modes``."""
    i, j = _check_modes(state, modes)
    u = np.asarray(matrix, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("expected a 2x2 mode matrix")
    out: dict[Occupation, complex] = {}
    cache: dict[tuple[int, int], list] = {}
    for occ, amp in state.items():
        n0, n1 = occ[i], occ[j]
        key = (n0, n1)
        if key not in cache:
            norm_in = math.sqrt(math.factorial(n0) * math.factorial(n1))
            cache[key] = [
                (p, q, c * math.sqrt(math.factorial(p) * math.factorial(q)) / norm_in)
                for (p, q), c in _expand_pair(n0, n1, u).items()
            ]
        for p, q, c in cache[key]:
            new = list(occ)
            new[i], new[j] = p, q
            new = tuple(new)
            out[new] = out.get(new, 0j) + amp * c
    return StateVector(out, state.n_modes, tol=max(state.tol, NORM_TOL_USER))


def apply_beamsplitter(state: StateVector, device: BeamSplitter, modes: tuple[int, int]) -> StateVector:
    return apply_unitary(state, device.matrix, modes)


def apply_phase(state: StateVector, shifter: PhaseShifter) -> StateVector:
    (m,) = _check_modes(state, (shifter.mode,))
    amps = {occ: amp * np.exp(1j * shifter.phase * occ[m]) for occ, amp in state.items()}
    return StateVector(amps, state.n_modes, tol=state.tol)


def diagonalize(device: BeamSplitter) -> Diagonalization:
    """Eigenphase ``delta`` in [0, pi] with ``cos(delta) = r`` and the eigenmode coupler."""
    if device.has_phases:
        raise ValueError("diagonalize expects a phase-free real coupler")
    delta = math.atan2(device.t, device.r)
    return Diagonalization(delta, EIGENBASIS)


def device_overlap(state: StateVector, device: BeamSplitter, modes: tuple[int, int] | None = None) -> complex:
    """``<psi| U |psi>`` with ``U`` acting on ``modes`` (defaults to a 2-mode state)."""
    if modes is None:
        if state.n_modes != 2:
            raise ValueError(f"expected a 2-mode state, got {state.n_modes} modes")
        modes = (0, 1)
    return state.inner(apply_beamsplitter(state, device, modes))


def diagonal_overlap(eigen_state: StateVector, delta: float, modes: tuple[int, int] = (0, 1)) -> complex:
    """Closed form ``sum |a_{n,m}|^2 e^{i delta (n - m)}`` for a state written in eigenmodes."""
    i, j = _check_modes(eigen_state, modes)
    return complex(sum(abs(a) ** 2 * np.exp(1j * delta * (occ[i] - occ[j])) for occ, a in eigen_state.items()))
