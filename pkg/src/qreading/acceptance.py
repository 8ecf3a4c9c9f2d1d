"""Exit checks for the package, shared by the test suite and ``qreading verify``."""

from __future__ import annotations

import io
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .fock import (
    BeamSplitter,
    PhaseShifter,
    StateVector,
    apply_beamsplitter,
    apply_phase,
    device_overlap,
    diagonalize,
    mean_photon_number,
)
from .reading import (
    brute_force_plan,
    error_probability,
    failure_probability,
    plan_ambiguous,
    plan_probe,
    plan_unambiguous,
    solve_tangent_root,
)
from .setups import (
    InfeasibleSetupError,
    build_ambiguous,
    build_perfect,
    build_unambiguous,
    verdict_probabilities,
)
from .experiment import Noise, RunConfig, SetupRef, TABLE_REFLECTANCES, sweep_reflectances

# printed theory columns (p_U|U, p_U'|U) of the device-U table
TABLE_U_PRINTED = {
    0.0: (1.000, 0.000), 0.1: (0.684, 0.316), 0.2: (0.553, 0.447), 0.3: (0.452, 0.548),
    0.4: (0.368, 0.633), 0.5: (0.293, 0.707), 0.6: (0.225, 0.775), 0.7: (0.163, 0.837),
    0.8: (0.106, 0.894), 0.9: (0.051, 0.949), 1.0: (0.000, 1.000),
}

R_U_GRID = tuple(-round(0.1 * k, 1) for k in range(11))
Q_GRID = tuple(round(0.1 * k, 1) for k in range(10))
DELTA_GRID = tuple(np.arange(0.3, math.pi, 0.4)) + (math.pi,)
TAU_GRID = Q_GRID
RANDOM_CASES = 1000
MAX_PHOTONS = 6


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    seconds: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: residual={self.residual:.3g} tol={self.tolerance:.3g} "
                f"time={self.seconds:.2f}s {self.detail}").rstrip()


def _timed(fn: Callable[[], tuple[bool, float, float, str]], name: str) -> CheckResult:
    t0 = time.perf_counter()
    passed, residual, tol, detail = fn()
    return CheckResult(name, passed, residual, tol, time.perf_counter() - t0, detail)


def random_state(rng: np.random.Generator, n_modes: int, max_photons: int = MAX_PHOTONS,
                 real: bool = False, density: float = 0.5) -> StateVector:
    """Random normalized state supported on occupations with at most ``max_photons`` in total."""
    occs = [occ for occ in np.ndindex(*(max_photons + 1,) * n_modes) if sum(occ) <= max_photons]
    keep = [occ for occ in occs if rng.random() < density] or [occs[rng.integers(len(occs))]]
    amps = rng.normal(size=len(keep))
    if not real:
        amps = amps + 1j * rng.normal(size=len(keep))
    return StateVector.from_unnormalized(dict(zip(keep, amps)), n_modes)


def random_coupler(rng: np.random.Generator, phases: bool = True) -> BeamSplitter:
    r = rng.uniform(-1, 1)
    kw = {}
    if phases:
        kw = {"phase_in": tuple(rng.uniform(-math.pi, math.pi, 2)), "phase_out": tuple(rng.uniform(-math.pi, math.pi, 2))}
    return BeamSplitter.from_amplitude(r, **kw)


def helstrom_error(a: StateVector, b: StateVector) -> float:
    """Minimum error for equal priors, from the trace norm of the dense density-matrix difference."""
    keys = sorted(set(dict(a.items())) | set(dict(b.items())))
    va = np.array([a[k] for k in keys])
    vb = np.array([b[k] for k in keys])
    diff = np.outer(va, va.conj()) - np.outer(vb, vb.conj())
    trace_norm = np.abs(np.linalg.eigvalsh(diff)).sum()
    return 0.5 * (1.0 - 0.5 * trace_norm)


def check_table_u() -> CheckResult:
    def run():
        exact, printed, zero = 0.0, 0.0, 0.0
        for rv in TABLE_REFLECTANCES:
            dist = build_perfect(math.sqrt(rv)).simulate("U")
            exact = max(exact, abs(dist["U"] - (1 - math.sqrt(rv))), abs(dist["U'"] - math.sqrt(rv)))
            pu, pup = TABLE_U_PRINTED[rv]
            printed = max(printed, abs(dist["U"] - pu), abs(dist["U'"] - pup))
            zero = max(zero, dist["I"])
        ok = exact <= 1e-12 and printed <= 1e-3 and zero <= 1e-12
        return ok, printed, 1e-3, f"closed-form={exact:.2g} p_I|U={zero:.2g}"
    res = _timed(run, "1 table U theory")
    return _with_runtime(res, 1.0)


def check_table_i() -> CheckResult:
    def run():
        worst = 0.0
        for rv in TABLE_REFLECTANCES:
            dist = build_perfect(math.sqrt(rv)).simulate("I")
            worst = max(worst, dist["U"], dist["U'"], abs(dist["I"] - 1.0))
        return worst <= 1e-12, worst, 1e-12, ""
    return _with_runtime(_timed(run, "2 table I theory"), 1.0)


def _with_runtime(res: CheckResult, limit: float) -> CheckResult:
    ok = res.passed and res.seconds < limit
    detail = f"{res.detail} (limit {limit:g}s)".strip()
    return CheckResult(res.name, ok, res.residual, res.tolerance, res.seconds, detail)


def check_setup_grid() -> CheckResult:
    def run():
        worst, zero, cells = 0.0, 0.0, 0
        for r_u in R_U_GRID:
            for q in Q_GRID:
                for builder in (build_ambiguous, build_unambiguous):
                    try:
                        pair = builder(r_u, q)
                    except InfeasibleSetupError:
                        continue
                    cells += 1
                    worst = max(worst, pair.max_deviation("fock"))
                    sim = {h: pair.simulate(h) for h in ("I", "U")}
                    zero = max(zero, sim["I"].ignored, sim["U"].ignored)
                    if builder is build_unambiguous:
                        zero = max(zero, sim["U"]["I"], sim["I"]["U"])
        ok = worst <= 1e-9 and zero <= 1e-12
        return ok, worst, 1e-9, f"cells={cells} zero-error={zero:.2g}"
    return _timed(run, "3 setup closed forms")


def check_oracle() -> CheckResult:
    def run():
        worst, below = 0.0, 0.0
        for delta in DELTA_GRID:
            for tau in TAU_GRID:
                plan = plan_probe(delta, tau)
                oracle = brute_force_plan(delta, tau, n_max=10)
                worst = max(worst, abs(plan.energy - oracle.energy))
                below = max(below, plan.energy - oracle.energy)
        return worst <= 1e-6 and below <= 1e-6, worst, 1e-6, f"plans={len(DELTA_GRID) * len(TAU_GRID)}"
    return _with_runtime(_timed(run, "4 probe oracle equivalence"), 60.0)


def check_root() -> CheckResult:
    def run():
        solve_tangent_root.cache_clear()
        t = solve_tangent_root()
        resid = abs(t - math.tan(t / 2))
        return resid <= 1e-12 and math.pi / 2 < t < math.pi, resid, 1e-12, f"t*={t:.10f}"
    return _timed(run, "5 transcendental root")


def check_zero_threshold() -> CheckResult:
    def run():
        plans_equal = all(plan_ambiguous(d, 0.0) == plan_unambiguous(d, 0.0) for d in DELTA_GRID)
        worst = 0.0
        for r_u in R_U_GRID:
            amb = build_ambiguous(r_u, 0.0, strict=(r_u == 0.0))
            perf = build_perfect(-r_u)
            for h in ("I", "U"):
                va = verdict_probabilities(amb.simulate(h))
                vp = verdict_probabilities(perf.simulate(h))
                worst = max(worst, *(abs(va.get(k, 0.0) - vp.get(k, 0.0)) for k in set(va) | set(vp)))
        return plans_equal and worst <= 1e-12, worst, 1e-12, f"plans_equal={plans_equal}"
    return _timed(run, "6 zero-threshold coincidence")


def _sweep_csv_bytes(table) -> bytes:
    from .records import write_sweep_csv

    with tempfile.TemporaryDirectory() as tmp:
        chunks = []
        for h, rows in sorted(table.items()):
            path = write_sweep_csv(rows, Path(tmp) / f"{h}.csv", decimals=None)
            chunks.append(path.read_bytes())
        return b"".join(chunks)


def check_concentration(trials: int = 100_000, seed: int = 42) -> CheckResult:
    def run():
        base = RunConfig(SetupRef("perfect", r_v=1.0), "U", trials, seed)
        table = sweep_reflectances(base)
        worst = 0.0
        for rows in table.values():
            for row in rows:
                for p, f in zip(row.p, row.f):
                    bound = 4 * math.sqrt(p * (1 - p) / row.total)
                    excess = abs(f - p) - bound
                    worst = max(worst, excess if bound == 0 else excess / bound)
        repeat = _sweep_csv_bytes(sweep_reflectances(base)) == _sweep_csv_bytes(table)
        return worst <= 0 and repeat, worst, 0.0, f"identical_repeat={repeat}"
    return _with_runtime(_timed(run, "7 Monte Carlo concentration"), 10.0)


def check_leakage(trials: int = 100_000, seed: int = 42) -> CheckResult:
    def run():
        noise = Noise(phase=math.pi / 200, splitting=0.01)
        table = sweep_reflectances(RunConfig(SetupRef("perfect", r_v=1.0), "U", trials, seed, noise))
        leak = [dict(zip(r.labels, r.f))["U'"] for r in table["I"]]
        forbidden = [dict(zip(r.labels, r.f))["U"] for r in table["I"]]
        forbidden += [dict(zip(r.labels, r.f))["I"] for r in table["U"]]
        for r_u, q in ((-0.5, 0.6), (-0.3, 0.3), (0.0, 0.2)):
            ref = SetupRef("unambiguous", r_u=r_u, q=q)
            pair = ref.build()
            from .experiment import frequencies, run_counts

            for h, label in (("U", "I"), ("I", "U")):
                rec = run_counts(RunConfig(ref, h, trials, seed, noise), pair)
                forbidden.append(frequencies(rec)[label])
        ok = min(leak) > 0 and max(leak) <= 0.03 and max(forbidden) <= 0.03
        return ok, max(leak), 0.03, f"leak range=({min(leak):.4f}, {max(leak):.4f}) forbidden max={max(forbidden):.4f}"
    return _timed(run, "8 measured-column plausibility")


def _suite_photon_number(rng) -> float:
    worst = 0.0
    for _ in range(RANDOM_CASES):
        n_modes = int(rng.integers(2, 4))
        state = random_state(rng, n_modes, MAX_PHOTONS)
        before = state.photon_number_distribution()
        if rng.random() < 0.7:
            i, j = rng.choice(n_modes, 2, replace=False)
            after = apply_beamsplitter(state, random_coupler(rng), (int(i), int(j)))
        else:
            after = apply_phase(state, PhaseShifter(int(rng.integers(n_modes)), rng.uniform(-math.pi, math.pi)))
        dist = after.photon_number_distribution()
        worst = max(worst, *(abs(before.get(n, 0) - dist.get(n, 0)) for n in set(before) | set(dist)))
    return worst


def _suite_unitarity(rng) -> float:
    worst = 0.0
    for _ in range(RANDOM_CASES):
        state = random_state(rng, 2, MAX_PHOTONS)
        after = apply_beamsplitter(state, random_coupler(rng), (0, 1))
        worst = max(worst, abs(after.norm() - 1.0))
    return worst


def _noon_reduction(state: StateVector) -> StateVector:
    weights: dict[int, float] = {}
    for (n, m), a in state.items():
        weights[abs(n - m)] = weights.get(abs(n - m), 0.0) + abs(a) ** 2
    amps = {}
    for l, w in weights.items():
        if l == 0:
            amps[(0, 0)] = math.sqrt(w)
        else:
            amps[(l, 0)] = amps[(0, l)] = math.sqrt(w / 2)
    return StateVector(amps, 2, tol=1e-9)


def _suite_noon_reduction(rng) -> float:
    """Returns the largest violation of the two inequalities (<= 0 means none)."""
    worst = -math.inf
    for _ in range(RANDOM_CASES):
        device = BeamSplitter.from_amplitude(rng.uniform(-1, 1))
        diag = diagonalize(device)
        eig = random_state(rng, 2, MAX_PHOTONS, real=True)
        reduced = _noon_reduction(eig)
        phys, phys_red = diag.to_physical(eig), diag.to_physical(reduced)
        e_gap = mean_photon_number(reduced) - mean_photon_number(eig)
        o_gap = abs(device_overlap(phys_red, device)) - abs(device_overlap(phys, device))
        worst = max(worst, e_gap, o_gap - 1e-10)
    return worst


def _suite_vacuum_ancilla(rng) -> float:
    worst = -math.inf
    for k in range(RANDOM_CASES):
        device = BeamSplitter.from_amplitude(rng.uniform(-1, 1))
        diag = diagonalize(device)
        if k % 2:
            eig = random_state(rng, 2, MAX_PHOTONS // 2).tensor(random_state(rng, 1, MAX_PHOTONS // 2))
        else:
            eig = random_state(rng, 3, MAX_PHOTONS)
        rows: dict[tuple[int, int], float] = {}
        for occ, a in eig.items():
            rows[occ[:2]] = rows.get(occ[:2], 0.0) + abs(a) ** 2
        stripped = StateVector({key + (0,): math.sqrt(w) for key, w in rows.items()}, 3, tol=1e-9)
        o_full = abs(device_overlap(diag.to_physical(eig), device, (0, 1)))
        o_strip = abs(device_overlap(diag.to_physical(stripped), device, (0, 1)))
        e_gap = mean_photon_number(stripped) - mean_photon_number(eig)
        worst = max(worst, abs(o_full - o_strip) - 1e-10, e_gap - 1e-12)
    return worst


def _suite_error_failure(rng) -> float:
    worst = 0.0
    for _ in range(RANDOM_CASES):
        state = random_state(rng, 2, MAX_PHOTONS)
        device = random_coupler(rng, phases=False)
        pf = failure_probability(state, device)
        direct = helstrom_error(state, apply_beamsplitter(state, device, (0, 1)))
        worst = max(worst, abs(error_probability(state, device) - 0.5 * (1 - math.sqrt(1 - pf**2))),
                    abs(direct - error_probability(state, device)))
    return worst


def check_structural(seed: int = 2024) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        res = {
            "photon-number": (_suite_photon_number(rng), 1e-12),
            "unitarity": (_suite_unitarity(rng), 1e-12),
            "noon-reduction": (_suite_noon_reduction(rng), 1e-12),
            "vacuum-ancilla": (_suite_vacuum_ancilla(rng), 0.0),
            "pe-pf-identity": (_suite_error_failure(rng), 1e-12),
        }
        ok = all(v <= tol for v, tol in res.values())
        detail = " ".join(f"{k}={v:.2g}" for k, (v, _) in res.items())
        return ok, max(v for v, _ in res.values()), 1e-12, f"cases={RANDOM_CASES}/suite {detail}"
    return _timed(run, "9 structural suites")


CHECKS = (
    check_table_u,
    check_table_i,
    check_setup_grid,
    check_oracle,
    check_root,
    check_zero_threshold,
    check_concentration,
    check_leakage,
    check_structural,
)


def run_all(stream: io.TextIOBase | None = None) -> list[CheckResult]:
    results = []
    for check in CHECKS:
        res = check()
        results.append(res)
        if stream is not None:
            print(res.line(), file=stream, flush=True)
    return results
