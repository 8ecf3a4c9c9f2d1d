import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qreading.fock import (
    EIGENBASIS,
    BeamSplitter,
    PhaseShifter,
    StateVector,
    apply_beamsplitter,
    apply_phase,
    apply_unitary,
    device_overlap,
    diagonal_overlap,
    diagonalize,
    make_noon_superposition,
    mean_photon_number,
)
from qreading.acceptance import random_coupler, random_state

S = math.sqrt(0.5)
FIFTY = BeamSplitter(S, S)


def test_state_rejects_unnormalized_and_bad_occupations():
    with pytest.raises(ValueError):
        StateVector({(1, 0): 0.5}, 2)
    with pytest.raises(ValueError):
        StateVector({(1, -1): 1.0}, 2)
    with pytest.raises(ValueError):
        StateVector({(1, 0, 0): 1.0}, 2)


def test_state_drops_zero_amplitudes():
    s = StateVector({(1, 0): 1.0, (0, 1): 0.0}, 2)
    assert dict(s.items()) == {(1, 0): 1.0}


def test_noon_vacuum_case():
    s = make_noon_superposition(1, 0.0, 1.0)
    assert dict(s.items()) == {(0, 0): 1.0}


def test_noon_single_photon_expansion():
    s = make_noon_superposition(1, S, S)
    assert s[(0, 0)] == pytest.approx(S)
    assert s[(1, 0)] == pytest.approx(0.5)
    assert s[(0, 1)] == pytest.approx(0.5)


def test_noon_pure():
    s = make_noon_superposition(2, 1.0, 0.0)
    assert s[(2, 0)] == pytest.approx(S) and s[(0, 2)] == pytest.approx(S)
    assert s[(0, 0)] == 0


@pytest.mark.parametrize("n, alpha, beta", [(0, 1.0, 0.0), (2, 0.5, 0.5), (-1, 1.0, 0.0)])
def test_noon_rejects_bad_arguments(n, alpha, beta):
    with pytest.raises(ValueError):
        make_noon_superposition(n, alpha, beta)


@pytest.mark.parametrize("state, expected", [
    (StateVector.vacuum(2), 0.0),
    (StateVector({(1, 0): S, (0, 1): S}, 2), 1.0),
    (make_noon_superposition(2, math.sqrt(0.4 / 1.5), math.sqrt(1 - 0.4 / 1.5)), 0.8 / 1.5),
])
def test_mean_photon_number(state, expected):
    assert mean_photon_number(state) == pytest.approx(expected, abs=1e-12)


def test_pass_through_device_is_identity():
    rng = np.random.default_rng(0)
    state = random_state(rng, 2, 4)
    out = apply_beamsplitter(state, BeamSplitter(1.0, 0.0), (0, 1))
    assert abs(out.inner(state)) == pytest.approx(1.0, abs=1e-12)


def test_fifty_fifty_single_photon_split():
    out = apply_beamsplitter(StateVector.basis((1, 0)), FIFTY, (0, 1))
    assert abs(out[(1, 0)]) ** 2 == pytest.approx(0.5)
    assert abs(out[(0, 1)]) ** 2 == pytest.approx(0.5)


def test_hong_ou_mandel():
    out = apply_beamsplitter(StateVector.basis((1, 1)), FIFTY, (0, 1))
    assert abs(out[(1, 1)]) < 1e-15
    assert abs(out[(2, 0)]) ** 2 == pytest.approx(0.5, abs=1e-12)
    assert abs(out[(0, 2)]) ** 2 == pytest.approx(0.5, abs=1e-12)


def _dense_two_mode(u, cutoff):
    # reference: exponentiate the generator in the truncated space of a fixed photon number
    import scipy.linalg

    a = np.diag(np.sqrt(np.arange(1, cutoff + 1)), 1)
    eye = np.eye(cutoff + 1)
    a0, a1 = np.kron(a, eye), np.kron(eye, a)
    ops = [a0, a1]
    log_u = scipy.linalg.logm(u)
    gen = sum(log_u[i, j] * ops[i].conj().T @ ops[j] for i in range(2) for j in range(2))
    return scipy.linalg.expm(gen)


def test_binomial_expansion_matches_generator_exponential():
    rng = np.random.default_rng(5)
    for _ in range(5):
        dev = random_coupler(rng)
        u = dev.matrix
        cutoff = 3
        big = _dense_two_mode(u, cutoff)
        for n0, n1 in [(1, 0), (0, 1), (1, 1), (2, 1), (0, 3)]:
            out = apply_unitary(StateVector.basis((n0, n1)), u, (0, 1))
            vec = big[:, n0 * (cutoff + 1) + n1]
            for (m0, m1), amp in out.items():
                assert amp == pytest.approx(vec[m0 * (cutoff + 1) + m1], abs=1e-9)


@pytest.mark.parametrize("r, delta", [(1.0, 0.0), (0.0, math.pi / 2), (-1.0, math.pi), (0.5, math.pi / 3)])
def test_diagonalize_eigenphase(r, delta):
    d = diagonalize(BeamSplitter.from_amplitude(r))
    assert d.delta == pytest.approx(delta, abs=1e-12)


@given(st.floats(-1, 1))
def test_diagonalize_reconstructs(r):
    dev = BeamSplitter.from_amplitude(r)
    assert np.allclose(diagonalize(dev).reconstruct(), dev.matrix, atol=1e-12)


def test_diagonalize_rejects_phased_device():
    with pytest.raises(ValueError):
        diagonalize(BeamSplitter(S, S, phase_in=(0.1, 0.0)))


def test_eigenbasis_times_fifty_fifty_is_phase_shifter():
    # (1/sqrt2)[[1, 1], [i, -i]] composed with a 50/50 coupler whose second input carries a pi phase
    a_d = np.array([[1, 1], [1j, -1j]]) / math.sqrt(2)
    a_n = BeamSplitter(S, S, phase_in=(0.0, math.pi)).matrix
    assert np.allclose(a_d @ a_n, np.diag([1, 1j]), atol=1e-12)
    d = EIGENBASIS.matrix
    assert np.allclose(d.conj().T @ d, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("device", [BeamSplitter.from_amplitude(r) for r in (-1, -0.3, 0, 0.7, 1)])
def test_vacuum_overlap_is_one(device):
    assert device_overlap(StateVector.vacuum(2), device) == pytest.approx(1.0)


def test_noon_overlap_at_pi():
    diag = diagonalize(BeamSplitter(-1.0, 0.0))
    state = diag.to_physical(StateVector({(1, 0): S, (0, 1): S}, 2))
    assert device_overlap(state, BeamSplitter(-1.0, 0.0)) == pytest.approx(-1.0, abs=1e-12)


def test_planned_state_overlap():
    dev = BeamSplitter.from_amplitude(math.cos(2 * math.pi / 3))
    a2 = 0.4 / 1.5
    eig = make_noon_superposition(2, math.sqrt(a2), math.sqrt(1 - a2))
    phys = diagonalize(dev).to_physical(eig)
    assert device_overlap(phys, dev) == pytest.approx(0.6, abs=1e-12)


def test_device_overlap_matches_eigenbasis_sum():
    rng = np.random.default_rng(11)
    for _ in range(200):
        dev = BeamSplitter.from_amplitude(rng.uniform(-1, 1))
        diag = diagonalize(dev)
        eig = random_state(rng, 2, 6)
        direct = device_overlap(diag.to_physical(eig), dev)
        assert abs(direct - diagonal_overlap(eig, diag.delta)) < 1e-10


def test_to_eigenbasis_inverts_to_physical():
    rng = np.random.default_rng(3)
    diag = diagonalize(BeamSplitter.from_amplitude(0.2))
    eig = random_state(rng, 2, 4)
    back = diag.to_eigenbasis(diag.to_physical(eig))
    assert abs(back.inner(eig)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_passive_devices_conserve_photon_number_and_norm(seed):
    rng = np.random.default_rng(seed)
    state = random_state(rng, 3, 5)
    out = apply_beamsplitter(state, random_coupler(rng), (2, 0))
    out = apply_phase(out, PhaseShifter(1, rng.uniform(-3, 3)))
    before, after = state.photon_number_distribution(), out.photon_number_distribution()
    assert set(before) == set(after)
    for n in before:
        assert after[n] == pytest.approx(before[n], abs=1e-12)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)


def test_adjoint_matrix():
    dev = BeamSplitter(0.6, 0.8, phase_in=(0.3, -1.0), phase_out=(2.0, 0.4))
    assert np.allclose(dev.adjoint().matrix, dev.matrix.conj().T, atol=1e-12)


@pytest.mark.parametrize("r, t", [(0.5, 0.5), (1.2, 0.0), (0.6, -0.8)])
def test_beamsplitter_validation(r, t):
    with pytest.raises(ValueError):
        BeamSplitter(r, t)


def test_modes_must_be_distinct_and_in_range():
    state = StateVector.basis((1, 0, 0))
    with pytest.raises((ValueError, IndexError)):
        apply_beamsplitter(state, FIFTY, (0, 0))
    with pytest.raises((ValueError, IndexError)):
        apply_beamsplitter(state, FIFTY, (0, 3))
