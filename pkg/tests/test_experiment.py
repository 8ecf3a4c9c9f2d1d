import math

import numpy as np
import pytest

from qreading.experiment import (
    CountRecord,
    Noise,
    RunConfig,
    SetupRef,
    SweepRow,
    _sample_modes,
    deviation_report,
    frequencies,
    run_counts,
    sweep_reflectances,
    trial_probabilities,
)

PERFECT_HALF = SetupRef("perfect", r_v=math.sqrt(0.5))
NOISY = Noise(phase=math.pi / 200, splitting=0.01)


def test_noise_free_hypothesis_i_is_deterministic():
    rec = run_counts(RunConfig(PERFECT_HALF, "I", 5000, 3))
    assert rec.counts == {"U": 0, "U'": 0, "I": 5000}


def test_noise_free_concentration():
    rec = run_counts(RunConfig(PERFECT_HALF, "U", 100_000, 42))
    f = frequencies(rec)
    p = 1 - math.sqrt(0.5)
    assert abs(f["U"] - p) <= 4 * math.sqrt(p * (1 - p) / 1e5)
    assert abs(f["U"] - 0.2929) <= 0.006


@pytest.mark.parametrize("workers", [1, 2, 4])
def test_counts_independent_of_workers(workers):
    cfg = RunConfig(PERFECT_HALF, "U", 30_000, 7, NOISY)
    assert run_counts(cfg, workers=workers) == run_counts(cfg)


def test_seed_changes_counts():
    a = run_counts(RunConfig(PERFECT_HALF, "U", 20_000, 1))
    b = run_counts(RunConfig(PERFECT_HALF, "U", 20_000, 2))
    assert a != b


@pytest.mark.parametrize("seed", [0, 1, 12345])
def test_unambiguous_zero_error_counts(seed):
    ref = SetupRef("unambiguous", r_u=-0.5, q=0.6)
    assert run_counts(RunConfig(ref, "U", 20_000, seed))["I"] == 0
    assert run_counts(RunConfig(ref, "I", 20_000, seed))["U"] == 0


def test_noisy_leakage_is_small_but_present():
    rec = run_counts(RunConfig(PERFECT_HALF, "I", 100_000, 42, NOISY))
    leak = frequencies(rec)["U'"]
    assert 0 < leak <= 0.03


def test_polarization_blends_toward_incoherent():
    pair = PERFECT_HALF.build()
    c = pair.circuits["I"]
    rng = np.random.default_rng(0)
    coherent = trial_probabilities(c, Noise(), None, 1)[0]
    mixed = trial_probabilities(c, Noise(polarization=1.0), rng, 1)[0]
    assert coherent.sum() == pytest.approx(1.0) and mixed.sum() == pytest.approx(1.0)
    assert mixed[c.detectors.index("U'")] > 0.1


def test_dark_counts_add_clicks_to_forbidden_detectors():
    rec = run_counts(RunConfig(PERFECT_HALF, "I", 20_000, 5, Noise(dark_count=0.05)))
    assert rec["U"] > 0 and rec.total == 20_000


def test_sampling_never_picks_zero_probability_modes():
    probs = np.tile([0.0, 1.0, 0.0], (1000, 1))
    modes = _sample_modes(probs, np.random.default_rng(0))
    assert (modes == 1).all()


@pytest.mark.parametrize("counts, expected", [
    ({"U": 0, "U'": 0, "I": 100}, (0.0, 0.0, 1.0)),
    ({"U": 293, "U'": 707, "I": 0}, (0.293, 0.707, 0.0)),
    ({"U": 1, "U'": 1, "I": 2}, (0.25, 0.25, 0.5)),
])
def test_frequencies(counts, expected):
    f = frequencies(CountRecord(counts, sum(counts.values())))
    assert tuple(f[k] for k in ("U", "U'", "I")) == pytest.approx(expected)
    assert sum(f.frequencies.values()) == pytest.approx(1.0, abs=1e-12)


def test_frequencies_reject_empty():
    with pytest.raises(ValueError):
        frequencies(CountRecord({"U": 0, "I": 0}, 0))


@pytest.mark.parametrize("kwargs", [
    {"hypothesis": "X"}, {"trials": 0}, {"seed": -1},
])
def test_run_config_validation(kwargs):
    base = {"setup": PERFECT_HALF, "hypothesis": "U"}
    base.update(kwargs)
    with pytest.raises(ValueError):
        RunConfig(**base)


def test_noise_validation():
    with pytest.raises(ValueError):
        Noise(phase=-1)
    with pytest.raises(ValueError):
        Noise(polarization=2)


def test_sweep_theory_columns_and_determinism():
    base = RunConfig(SetupRef("perfect", r_v=1.0), "U", 20_000, 42)
    table = sweep_reflectances(base)
    assert len(table["U"]) == len(table["I"]) == 11
    for row in table["I"]:
        assert row.p == (0.0, 0.0, 1.0)
    for row in table["U"]:
        assert row.p[0] == pytest.approx(1 - math.sqrt(row.reflectance), abs=1e-12)
    assert sweep_reflectances(base) == table
    assert deviation_report(table["U"]).flagged == []


def test_sweep_skips_infeasible_rows(caplog):
    base = RunConfig(SetupRef("unambiguous", r_u=-1.0, q=0.5), "U", 1000, 1)
    table = sweep_reflectances(base)
    assert [r.reflectance for r in table["U"]] == [0.0, 0.1, 0.2]
    assert "skipping" in caplog.text


def test_sweep_rejects_out_of_range():
    with pytest.raises(ValueError):
        sweep_reflectances(RunConfig(SetupRef("perfect", r_v=1.0), "U", 10, 1), reflectances=(1.5,))


def test_deviation_report_on_measured_row():
    row = SweepRow("U", 0.1, ("U", "U'", "I"), (0.684, 0.316, 0.0), (0.680, 0.295, 0.025))
    rep = deviation_report([row])
    assert rep.max_deviation == pytest.approx(0.025)
    assert rep.z_scores == [None] and rep.flagged == []


def test_deviation_report_flags_outliers():
    row = SweepRow("U", 0.5, ("U", "I"), (0.5, 0.5), (0.6, 0.4), total=10_000)
    assert deviation_report([row]).flagged == [0]
