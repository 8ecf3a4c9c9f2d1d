"""Seeded Monte Carlo photon counting over the reading setups.

Each trial is one heralded photon. Noise is redrawn per trial: coupler
intensities get truncated-Gaussian errors, every coupler input and every
phase shifter gets Gaussian phase jitter, and a polarization-misalignment
fraction blends coherent click probabilities with the fully incoherent
(which-path) ones. The unknown device itself is left exact.

Trials are grouped in fixed-size blocks; block ``b`` draws from
``SeedSequence(seed, spawn_key=stream + (b,))``, so counts do not depend on
how blocks are scheduled across workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .circuits import UNKNOWN, Circuit, Placed
from .setups import HYPOTHESES, HypothesisPair, build, closed_form_probabilities
from .reading import PERFECT

log = logging.getLogger(__name__)

BLOCK_SIZE = 8192
DEFAULT_TRIALS = 100_000
DEFAULT_SEED = 42
ZERO_SNAP = 1e-14


@dataclass(frozen=True)
class Noise:
    phase: float = 0.0
    splitting: float = 0.0
    polarization: float = 0.0
    dark_count: float = 0.0

    def __post_init__(self):
        if self.phase < 0 or self.splitting < 0:
            raise ValueError("noise widths must be non-negative")
        for name in ("polarization", "dark_count"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def is_zero(self) -> bool:
        return self.phase == 0 and self.splitting == 0 and self.polarization == 0 and self.dark_count == 0


@dataclass(frozen=True)
class SetupRef:
    kind: str
    r_v: float | None = None
    r_u: float | None = None
    q: float = 0.0

    def build(self) -> HypothesisPair:
        return build(self.kind, r_v=self.r_v, r_u=self.r_u, q=self.q)


@dataclass(frozen=True)
class RunConfig:
    setup: SetupRef
    hypothesis: str
    trials: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED
    noise: Noise = field(default_factory=Noise)

    def __post_init__(self):
        if self.hypothesis not in HYPOTHESES:
            raise ValueError(f"hypothesis must be one of {HYPOTHESES}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class CountRecord:
    counts: dict[str, int]
    trials: int

    def __getitem__(self, label: str) -> int:
        return self.counts[label]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class FrequencyRecord:
    frequencies: dict[str, float]

    def __getitem__(self, label: str) -> float:
        return self.frequencies[label]


def frequencies(counts: CountRecord) -> FrequencyRecord:
    total = counts.total
    if total <= 0:
        raise ValueError("cannot normalise a record with zero total counts")
    return FrequencyRecord({k: c / total for k, c in counts.counts.items()})


def _truncated_normal(rng: np.random.Generator, mean: float, sigma: float, size: int) -> np.ndarray:
    """Normal(mean, sigma) conditioned on [0, 1], by inverse CDF."""
    lo = special.ndtr((0.0 - mean) / sigma)
    hi = special.ndtr((1.0 - mean) / sigma)
    u = rng.uniform(lo, hi, size)
    return np.clip(mean + sigma * special.ndtri(u), 0.0, 1.0)


def _batched_coupler(r: np.ndarray, t: np.ndarray, phase_in, phase_out) -> np.ndarray:
    a = np.empty(r.shape + (2, 2), dtype=complex)
    a[:, 0, 0], a[:, 0, 1], a[:, 1, 0], a[:, 1, 1] = r, -t, t, r
    a *= np.exp(1j * np.asarray(phase_in))[None, None, :]
    a *= np.exp(1j * np.asarray(phase_out))[None, :, None]
    return a


def _element_batch(el, n_modes: int, noise: Noise, rng: np.random.Generator | None, size: int) -> np.ndarray:
    """Per-trial mode matrix of one element, shape ``(size, n_modes, n_modes)``."""
    step = np.broadcast_to(np.eye(n_modes, dtype=complex), (size, n_modes, n_modes)).copy()
    if isinstance(el, Placed):
        dev = el.device
        if el.tag == UNKNOWN or rng is None:
            block = np.broadcast_to(dev.matrix, (size, 2, 2))
        else:
            refl = np.full(size, dev.reflectivity)
            if noise.splitting > 0:
                refl = _truncated_normal(rng, dev.reflectivity, noise.splitting, size)
            sign = -1.0 if dev.r < 0 else 1.0
            block = _batched_coupler(sign * np.sqrt(refl), np.sqrt(1.0 - refl), dev.phase_in, dev.phase_out)
            if noise.phase > 0:
                # jitter of the path entering the coupler's first port
                block[:, :, 0] *= np.exp(1j * rng.normal(0.0, noise.phase, size))[:, None]
        i, j = el.modes
        step[:, [i, i, j, j], [i, j, i, j]] = block.reshape(size, 4)
    else:
        phase = np.full(size, el.shifter.phase)
        if rng is not None and noise.phase > 0:
            phase = phase + rng.normal(0.0, noise.phase, size)
        k = el.shifter.mode
        step[:, k, k] = np.exp(1j * phase)
    return step


def trial_probabilities(circuit: Circuit, noise: Noise, rng: np.random.Generator | None, size: int,
                        input_mode: int = 2) -> np.ndarray:
    """Per-trial output-mode probabilities, shape ``(size, n_modes)``."""
    m = circuit.n_modes
    steps = [_element_batch(el, m, noise, rng, size) for el in circuit.elements]
    total = np.broadcast_to(np.eye(m, dtype=complex), (size, m, m)).copy()
    for step in steps:
        total = step @ total
    coherent = np.abs(total[:, :, input_mode]) ** 2
    if noise.polarization == 0:
        return coherent
    classical = np.broadcast_to(np.eye(m), (size, m, m)).copy()
    for step in steps:
        classical = (np.abs(step) ** 2) @ classical
    return (1.0 - noise.polarization) * coherent + noise.polarization * classical[:, :, input_mode]


def _sample_modes(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    probs = np.where(probs < ZERO_SNAP, 0.0, probs)
    probs = probs / probs.sum(axis=1, keepdims=True)
    cum = np.cumsum(probs, axis=1)
    u = rng.random(len(probs))
    idx = (u[:, None] >= cum).sum(axis=1)
    last = probs.shape[1] - 1 - np.argmax(probs[:, ::-1] > 0, axis=1)
    return np.minimum(idx, last)


def _block_counts(circuit: Circuit, noise: Noise, seed: int, stream: tuple[int, ...], block: int,
                  size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(stream) + (block,)))
    probs = trial_probabilities(circuit, noise, None if noise.is_zero else rng, size)
    modes = _sample_modes(probs, rng)
    if noise.dark_count > 0:
        labelled = np.array([k for k, d in enumerate(circuit.detectors) if d is not None])
        dark = rng.random(size) < noise.dark_count
        modes = np.where(dark, labelled[rng.integers(0, len(labelled), size)], modes)
    return np.bincount(modes, minlength=circuit.n_modes)


def run_counts(config: RunConfig, pair: HypothesisPair | None = None, *, workers: int = 1,
               stream: tuple[int, ...] = ()) -> CountRecord:
    pair = pair or config.setup.build()
    circuit = pair.circuits[config.hypothesis]
    n_blocks = math.ceil(config.trials / BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, config.trials - b * BLOCK_SIZE) for b in range(n_blocks)]

    def job(b):
        return _block_counts(circuit, config.noise, config.seed, stream, b, sizes[b])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_block = list(pool.map(job, range(n_blocks)))
    else:
        per_block = [job(b) for b in range(n_blocks)]
    by_mode = np.sum(per_block, axis=0)
    counts = {label: int(by_mode[k]) for k, label in enumerate(circuit.detectors) if label is not None}
    return CountRecord(counts, config.trials)


@dataclass(frozen=True)
class SweepRow:
    hypothesis: str
    reflectance: float
    labels: tuple[str, ...]
    p: tuple[float, ...]
    f: tuple[float, ...]
    total: int | None = None

    def as_dict(self) -> dict[str, float]:
        row = {"R_v": self.reflectance}
        for label, v in zip(self.labels, self.p):
            row[f"p_{column_name(label)}"] = v
        for label, v in zip(self.labels, self.f):
            row[f"f_{column_name(label)}"] = v
        return row


def column_name(label: str) -> str:
    return label.replace("'", "prime")


TABLE_REFLECTANCES = tuple(round(0.1 * k, 1) for k in range(11))


def setup_for_reflectance(base: SetupRef, reflectance: float) -> SetupRef:
    amp = math.sqrt(reflectance)
    if base.kind == PERFECT:
        return SetupRef(PERFECT, r_v=amp)
    return SetupRef(base.kind, r_u=-amp, q=base.q)


def sweep_reflectances(base: RunConfig, reflectances=TABLE_REFLECTANCES, trials: int | None = None,
                       seed: int | None = None, *, workers: int = 1,
                       hypotheses: tuple[str, ...] = HYPOTHESES) -> dict[str, list[SweepRow]]:
    """Theory and Monte Carlo columns per reflectance, keyed by hypothesis."""
    trials = base.trials if trials is None else trials
    seed = base.seed if seed is None else seed
    table: dict[str, list[SweepRow]] = {h: [] for h in hypotheses}
    for row_idx, refl in enumerate(reflectances):
        if not 0.0 <= refl <= 1.0:
            raise ValueError(f"reflectance {refl} outside [0, 1]")
        ref = setup_for_reflectance(base.setup, refl)
        try:
            pair = ref.build()
        except ValueError as exc:
            log.warning("skipping R_v=%s: %s", refl, exc)
            continue
        theory = closed_form_probabilities(pair.spec)
        for h in hypotheses:
            cfg = RunConfig(ref, h, trials, seed, base.noise)
            rec = run_counts(cfg, pair, workers=workers, stream=(HYPOTHESES.index(h), row_idx))
            labels = pair.circuits[h].labels
            freq = frequencies(rec) if rec.total else FrequencyRecord({k: math.nan for k in labels})
            table[h].append(SweepRow(h, refl, labels, tuple(theory[h][k] for k in labels),
                                     tuple(freq[k] for k in labels), rec.total))
    return table


@dataclass(frozen=True)
class DeviationReport:
    max_deviation: float
    deviations: list[tuple[float, ...]]
    z_scores: list[tuple[float, ...] | None]
    flagged: list[int]


def deviation_report(rows: list[SweepRow], z_limit: float = 4.0) -> DeviationReport:
    """Per-cell ``|f - p|`` and binomial z-scores; rows beyond ``z_limit`` sigma are flagged."""
    devs, zs, flagged = [], [], []
    for k, row in enumerate(rows):
        d = tuple(abs(f - p) for f, p in zip(row.f, row.p))
        devs.append(d)
        if not row.total:
            zs.append(None)
            continue
        z = []
        for dev, p in zip(d, row.p):
            sigma = math.sqrt(p * (1 - p) / row.total)
            z.append(dev / sigma if sigma > 0 else (0.0 if dev == 0 else math.inf))
        zs.append(tuple(z))
        if max(z) > z_limit:
            flagged.append(k)
    return DeviationReport(max((max(d) for d in devs), default=0.0), devs, zs, flagged)
