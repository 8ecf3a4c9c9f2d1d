import math

import numpy as np
import pytest

from qreading.acceptance import random_coupler
from qreading.circuits import (
    Circuit,
    detection_probabilities,
    evolve,
    inverse,
    is_unitary,
    prefix_until,
    single_photon_unitary,
)
from qreading.fock import BeamSplitter, StateVector
from qreading.setups import build_perfect

S = math.sqrt(0.5)
PHOTON_IN_LAST = StateVector.basis((0, 0, 1))


def _random_circuit(rng, n_modes=3, depth=6):
    c = Circuit(n_modes)
    for _ in range(depth):
        if rng.random() < 0.7:
            i, j = rng.choice(n_modes, 2, replace=False)
            c = c.add(random_coupler(rng), (int(i), int(j)))
        else:
            c = c.add_phase(int(rng.integers(n_modes)), rng.uniform(-math.pi, math.pi))
    return c.with_detectors(["a", "b", "c"][:n_modes])


def test_empty_circuit_is_identity():
    c = Circuit(3)
    assert np.allclose(single_photon_unitary(c), np.eye(3))
    assert evolve(c, PHOTON_IN_LAST) == PHOTON_IN_LAST


def test_embedded_fifty_fifty():
    c = Circuit(3).add(BeamSplitter(S, S), (1, 2))
    u = single_photon_unitary(c)
    assert is_unitary(u)
    assert u[0, 0] == 1 and u[0, 1] == 0
    out = evolve(c, PHOTON_IN_LAST)
    assert np.allclose(out.mode_populations(), [0, 0.5, 0.5])


def test_perfect_circuit_columns_match_closed_form():
    r_v = math.sqrt(0.3)
    pair = build_perfect(r_v)
    c = pair.circuits["U"]
    col = np.abs(single_photon_unitary(c)[:, 2]) ** 2
    labels = dict(zip(c.detectors, col))
    assert labels["U"] == pytest.approx(1 - r_v, abs=1e-12)
    assert labels["U'"] == pytest.approx(r_v, abs=1e-12)


def test_perfect_circuit_hypothesis_i_returns_photon():
    dist = build_perfect(0.4).simulate("I")
    assert dist["I"] == pytest.approx(1.0, abs=1e-12)
    assert dist["U"] < 1e-12 and dist["U'"] < 1e-12


def test_fock_and_unitary_paths_agree():
    rng = np.random.default_rng(1)
    for _ in range(200):
        c = _random_circuit(rng)
        k = int(rng.integers(3))
        amps = rng.normal(size=3) + 1j * rng.normal(size=3)
        state = StateVector.from_unnormalized({tuple(int(m == j) for m in range(3)): amps[j] for j in range(3)}, 3)
        a = detection_probabilities(c, state, "fock")
        b = detection_probabilities(c, state, "unitary")
        assert a.max_abs_diff(b) <= 1e-12
        assert a.total() == pytest.approx(1.0, abs=1e-12)
        assert detection_probabilities(c, StateVector.basis(tuple(int(m == k) for m in range(3)))).total() == \
            pytest.approx(1.0, abs=1e-12)


def test_interferometer_identity():
    rng = np.random.default_rng(2)
    for _ in range(100):
        b = random_coupler(rng)
        c = Circuit(2).add(b, (0, 1)).add(BeamSplitter(1.0, 0.0), (0, 1)).add(b.adjoint(), (0, 1))
        assert np.allclose(single_photon_unitary(c), np.eye(2), atol=1e-12)


def test_inverse_circuit():
    rng = np.random.default_rng(4)
    c = _random_circuit(rng)
    u = single_photon_unitary(c) @ single_photon_unitary(inverse(c))
    assert np.allclose(u, np.eye(3), atol=1e-12)


def test_prefix_until_tag():
    c = Circuit(2).add(BeamSplitter(S, S), (0, 1)).add(BeamSplitter(0.0, 1.0), (0, 1), tag="unknown")
    assert len(prefix_until(c).elements) == 1
    assert len(prefix_until(c, "missing").elements) == 2


def test_ignored_mode_mass():
    c = Circuit(2, detectors=(None, "x")).add(BeamSplitter(S, S), (0, 1))
    dist = detection_probabilities(c, StateVector.basis((1, 0)))
    assert dist.ignored == pytest.approx(0.5)
    assert dist.total() == pytest.approx(1.0)


def test_validation():
    with pytest.raises(IndexError):
        Circuit(2).add(BeamSplitter(S, S), (0, 2))
    with pytest.raises(ValueError):
        Circuit(2, detectors=("a", "a"))
    with pytest.raises(ValueError):
        Circuit(2, detectors=("a",))
    with pytest.raises(ValueError):
        detection_probabilities(Circuit(2), StateVector.basis((1, 1)))
    with pytest.raises(ValueError):
        detection_probabilities(Circuit(2), PHOTON_IN_LAST)
