"""Figures of merit and minimum-energy probe planning for reading a beamsplitter.

The probe family is ``alpha/sqrt2 (|n,0> + |0,n>) + beta |0,0>`` written in the
eigenmodes of the coupler, whose overlap with its image is
``|alpha|^2 cos(delta n) + |beta|^2``. Both the ambiguous and the unambiguous
problem are reduced to a bound ``tau`` on that overlap.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .fock import BeamSplitter, StateVector, device_overlap, make_noon_superposition

AMBIGUOUS = "ambiguous"
UNAMBIGUOUS = "unambiguous"
PERFECT = "perfect"
MODES = (AMBIGUOUS, UNAMBIGUOUS, PERFECT)

ROOT_BRACKET = (math.pi / 2 + 1e-9, math.pi - 1e-9)
ROOT_MAX_ITER = 200
TIE_RTOL = 1e-12
FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class Plan:
    """Minimum-energy probe. ``weights`` maps photon number to NOON weight (0 = vacuum)."""

    mode: str = field(compare=False)
    q: float
    tau: float
    delta: float
    n: int
    alpha: float
    beta: float
    energy: float
    feasible: bool
    violated_bound: str | None = None
    weights: dict[int, float] | None = field(default=None, compare=False, repr=False)

    def state(self) -> StateVector:
        """Planned probe, expressed in the eigenmodes of the device."""
        if not self.feasible:
            raise ValueError(f"infeasible plan: {self.violated_bound}")
        return make_noon_superposition(self.n, self.alpha, self.beta)

    def overlap(self) -> float:
        return self.alpha**2 * math.cos(self.delta * self.n) + self.beta**2

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "q": self.q,
            "tau": self.tau,
            "delta": self.delta,
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "energy": self.energy,
            "feasible": self.feasible,
            "violated_bound": self.violated_bound,
        }


def failure_probability(state: StateVector, device: BeamSplitter, modes: tuple[int, int] | None = None) -> float:
    return min(abs(device_overlap(state, device, modes)), 1.0)


def error_probability(state: StateVector, device: BeamSplitter, modes: tuple[int, int] | None = None) -> float:
    """Helstrom error for equal priors between ``U|psi>`` and ``|psi>``."""
    return error_from_overlap(failure_probability(state, device, modes))


def error_from_overlap(overlap: float) -> float:
    return 0.5 * (1.0 - math.sqrt(max(0.0, 1.0 - overlap**2)))


def k_of_q(q: float) -> float:
    """Largest overlap compatible with error probability ``q``."""
    if not 0.0 <= q <= 0.5:
        raise ValueError(f"error threshold must lie in [0, 1/2], got {q}")
    return math.sqrt(4.0 * q * (1.0 - q))


def delta_from_amplitude(r: float) -> float:
    """Eigenphase of a real coupler with reflection amplitude ``r``."""
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"reflection amplitude {r} outside [-1, 1]")
    return math.acos(r)


def _tangent_gap(t: float) -> float:
    return t - math.tan(t / 2.0)


@functools.lru_cache(maxsize=None)
def solve_tangent_root() -> float:
    """Root of ``t = tan(t/2)`` in (pi/2, pi), by bisection."""
    lo, hi = ROOT_BRACKET
    f_lo = _tangent_gap(lo)
    for _ in range(ROOT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = _tangent_gap(mid)
        if f_mid == 0.0 or hi - lo <= 2 * math.ulp(mid):
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_xstar(delta: float) -> float:
    """Smallest positive ``x`` with ``delta x = tan(delta x / 2)``."""
    if not 0.0 < delta <= math.pi:
        raise ValueError(f"eigenphase must lie in (0, pi], got {delta}; a zero eigenphase cannot be discriminated")
    return solve_tangent_root() / delta


def noon_energy(delta: float, tau: float, n: int) -> float:
    """Mean photon number of the NOON-plus-vacuum probe with overlap ``tau``."""
    denom = 1.0 - math.cos(delta * n)
    if denom <= 0.0:
        return math.inf
    return (1.0 - tau) * n / denom


def candidate_photon_numbers(delta: float) -> list[int]:
    x = solve_xstar(delta)
    return sorted({n for n in (math.floor(x), math.ceil(x)) if n >= 1} or {1})


def plan_probe(delta: float, tau: float, mode: str = UNAMBIGUOUS, q: float | None = None) -> Plan:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"overlap threshold must lie in [0, 1], got {tau}")
    q = tau if q is None else q
    best = None
    for n in candidate_photon_numbers(delta):
        e = noon_energy(delta, tau, n)
        if best is None or e < best[1] * (1 - TIE_RTOL) - 1e-300:
            best = (n, e)
    n, energy = best
    bound = math.cos(delta * n)
    if tau < bound - FEASIBILITY_TOL:
        return Plan(
            mode, q, tau, delta, n, math.nan, math.nan, math.nan, False,
            violated_bound=f"threshold {tau:.6g} < cos(delta*n) = {bound:.6g} at n = {n}",
        )
    alpha2 = min((1.0 - tau) / (1.0 - bound), 1.0)
    alpha, beta = math.sqrt(alpha2), math.sqrt(1.0 - alpha2)
    return Plan(mode, q, tau, delta, n, alpha, beta, alpha2 * n, True, weights={0: beta**2, n: alpha2})


def plan_unambiguous(delta: float, q: float) -> Plan:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"failure threshold must lie in [0, 1], got {q}")
    return plan_probe(delta, q, UNAMBIGUOUS, q)


def plan_ambiguous(delta: float, q: float) -> Plan:
    return plan_probe(delta, k_of_q(q), AMBIGUOUS, q)


def _bisect_linear(f_lo, lo, hi, evaluate, iterations=80):
    """Vectorised bisection of ``evaluate`` on brackets with opposite-sign endpoint values."""
    lo, hi, f_lo = lo.copy(), hi.copy(), f_lo.copy()
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        f_mid = evaluate(mid)
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def brute_force_plan(delta: float, tau: float, n_max: int = 10, weight_grid: int = 101) -> Plan:
    """Exhaustive search over NOON superpositions with photon numbers up to ``n_max``.

    Supports of two and three NOON components (vacuum counts as ``n = 0``) are
    scanned on a weight grid; bracketed constraint crossings are refined by
    bisection so the returned probe meets ``overlap = tau`` to rounding.
    """
    ns = np.arange(n_max + 1)
    cos_n = np.cos(delta * ns)
    best_energy = math.inf
    best_weights: dict[int, float] = {}

    # pairs: w on component i, 1 - w on component j
    pairs = np.array(list(itertools.combinations(range(n_max + 1), 2)))
    ci, cj = cos_n[pairs[:, 0]][:, None], cos_n[pairs[:, 1]][:, None]
    grid = np.linspace(0.0, 1.0, weight_grid)[None, :]
    vals = grid * ci + (1 - grid) * cj - tau
    for p_idx, (i, j) in enumerate(pairs):
        row = vals[p_idx]
        hits = np.flatnonzero(row == 0.0)
        brackets = np.flatnonzero(np.sign(row[:-1]) * np.sign(row[1:]) < 0)
        roots = list(grid[0, hits])
        if len(brackets):
            lo, hi = grid[0, brackets], grid[0, brackets + 1]
            roots += list(_bisect_linear(row[brackets], lo, hi,
                                         lambda w: w * ci[p_idx, 0] + (1 - w) * cj[p_idx, 0] - tau))
        for w in roots:
            e = w * i + (1 - w) * j
            if e < best_energy:
                best_energy, best_weights = e, {int(i): float(w), int(j): float(1 - w)}

    # triples: w_k on a grid, remaining mass split between i and j by bisection
    triples = np.array(list(itertools.combinations(range(n_max + 1), 3)))
    wk = np.linspace(0.0, 1.0, weight_grid)[1:-1]
    ti, tj, tk = (cos_n[triples[:, c]][:, None] for c in range(3))
    rest = 1.0 - wk[None, :]

    def constraint(w):
        return w * ti + (rest - w) * tj + wk[None, :] * tk - tau

    lo = np.zeros((len(triples), len(wk)))
    hi = np.broadcast_to(rest, lo.shape).copy()
    f_lo, f_hi = constraint(lo), constraint(hi)
    ok = np.sign(f_lo) * np.sign(f_hi) <= 0
    w = _bisect_linear(f_lo, lo, hi, constraint)
    energy = w * triples[:, [0]] + (rest - w) * triples[:, [1]] + wk[None, :] * triples[:, [2]]
    energy = np.where(ok, energy, np.inf)
    idx = np.unravel_index(np.argmin(energy), energy.shape)
    if energy[idx] < best_energy - 1e-12:
        i, j, k = triples[idx[0]]
        best_energy = float(energy[idx])
        best_weights = {int(i): float(w[idx]), int(j): float(rest[0, idx[1]] - w[idx]), int(k): float(wk[idx[1]])}

    if not best_weights:
        return Plan(UNAMBIGUOUS, tau, tau, delta, 0, math.nan, math.nan, math.nan, False,
                    violated_bound="no NOON superposition reaches the threshold")
    nonvac = {n: wt for n, wt in best_weights.items() if n > 0 and wt > 0}
    n_main = max(nonvac, key=nonvac.get) if nonvac else 1
    alpha2 = sum(nonvac.values())
    return Plan(UNAMBIGUOUS, tau, tau, delta, n_main, math.sqrt(alpha2), math.sqrt(max(0.0, 1 - alpha2)),
                float(best_energy), True, weights=best_weights)
