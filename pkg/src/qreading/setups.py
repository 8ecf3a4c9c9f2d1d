"""Single-photon circuits for ambiguous, unambiguous and perfect reading of a coupler.

Modes are 0-based: mode 2 carries the input photon, couplers ``B``/``B^dag``
form an interferometer on modes (1, 2), and the unknown device sits on
modes (0, 1). Measurement couplers ``M`` (modes 0, 1) and ``N`` (modes 1, 2)
follow for the ambiguous and unambiguous schemes.

Coupler intensities come from closed-form reflectivity formulas. Their
amplitude signs (and whether a coupler enters as itself or as its adjoint)
are fixed by :func:`calibrate`, which scans the finite set of sign choices in
a fixed order and keeps the first that reproduces the analytic click table.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .circuits import UNKNOWN, Circuit, DetectionDistribution, detection_probabilities, evolve, prefix_until
from .fock import BeamSplitter, StateVector
from .reading import AMBIGUOUS, PERFECT, UNAMBIGUOUS, k_of_q

HYPOTHESES = ("I", "U")
INPUT = StateVector.basis((0, 0, 1))
CALIBRATION_TOL = 1e-9
SUM_RULE_TOL = 1e-12

DETECTORS = {
    PERFECT: ("U", "U'", "I"),
    UNAMBIGUOUS: ("U", "F", "I"),
    AMBIGUOUS: (None, "U", "I"),
}


class InfeasibleSetupError(ValueError):
    """The requested threshold cannot be met by the setup."""


@dataclass(frozen=True)
class CouplerSetting:
    """Intensity split plus the calibrated amplitude sign and orientation."""

    reflectivity: float
    transmittivity: float
    sign: int = 1
    adjoint: bool = False

    def __post_init__(self):
        for name in ("reflectivity", "transmittivity"):
            v = getattr(self, name)
            if not -SUM_RULE_TOL <= v <= 1 + SUM_RULE_TOL:
                raise ValueError(f"{name} {v} outside [0, 1]")
        if abs(self.reflectivity + self.transmittivity - 1.0) > SUM_RULE_TOL:
            raise ValueError(f"R + T = {self.reflectivity + self.transmittivity} != 1")

    def device(self) -> BeamSplitter:
        bs = BeamSplitter.from_reflectivity(self.reflectivity, sign=self.sign)
        return bs.adjoint() if self.adjoint else bs


@dataclass(frozen=True)
class SetupSpec:
    kind: str
    r_u: float
    q: float
    couplers: dict[str, CouplerSetting]
    r_v: float | None = None
    strict: bool = True

    def intensities(self) -> dict[str, float]:
        out = {}
        for name, c in self.couplers.items():
            out[f"R_{name}"] = c.reflectivity
            out[f"T_{name}"] = c.transmittivity
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "r_u": self.r_u,
            "r_v": self.r_v,
            "q": self.q,
            "couplers": {
                name: {"R": c.reflectivity, "T": c.transmittivity, "sign": c.sign, "adjoint": c.adjoint}
                for name, c in self.couplers.items()
            },
        }


@dataclass(frozen=True)
class HypothesisPair:
    spec: SetupSpec
    circuits: dict[str, Circuit]
    closed_form: dict[str, DetectionDistribution] = field(repr=False)

    def simulate(self, hypothesis: str, method: str = "fock") -> DetectionDistribution:
        return detection_probabilities(self.circuits[hypothesis], INPUT, method)

    def max_deviation(self, method: str = "fock") -> float:
        return max(self.simulate(h, method).max_abs_diff(self.closed_form[h]) for h in HYPOTHESES)

    def device_energy(self, hypothesis: str = "U") -> float:
        """Mean photon number entering the unknown slot."""
        circuit = self.circuits[hypothesis]
        slot = {m for el in circuit.elements if el.tag == UNKNOWN for m in el.modes}
        pops = evolve(prefix_until(circuit), INPUT).mode_populations()
        return float(sum(pops[m] for m in slot))


def closed_form_probabilities(spec: SetupSpec) -> dict[str, DetectionDistribution]:
    """Analytic click tables ``p(X | Y)`` for Y in {I, U}."""
    q = spec.q
    if spec.kind == PERFECT:
        rv = spec.r_v
        return {
            "I": DetectionDistribution({"U": 0.0, "U'": 0.0, "I": 1.0}),
            "U": DetectionDistribution({"U": 1.0 - rv, "U'": rv, "I": 0.0}),
        }
    if spec.kind == UNAMBIGUOUS:
        return {
            "I": DetectionDistribution({"U": 0.0, "F": q, "I": 1.0 - q}),
            "U": DetectionDistribution({"U": 1.0 - q, "F": q, "I": 0.0}),
        }
    if spec.kind == AMBIGUOUS:
        return {
            "I": DetectionDistribution({"U": q, "I": 1.0 - q}),
            "U": DetectionDistribution({"U": 1.0 - q, "I": q}),
        }
    raise ValueError(f"unknown setup kind {spec.kind!r}")


def unknown_device(spec: SetupSpec, hypothesis: str) -> Circuit:
    """Unknown slot as a 3-mode circuit fragment; ``I`` is a coupler with unit reflectivity."""
    c = Circuit(3)
    if hypothesis == "I":
        return c.add(BeamSplitter(1.0, 0.0), (0, 1), UNKNOWN)
    if hypothesis != "U":
        raise ValueError(f"hypothesis must be 'I' or 'U', got {hypothesis!r}")
    if spec.kind == PERFECT:
        # U = V dressed by pi/2 shifters on the interferometer arm; the ones on mode 0 are dropped
        v = BeamSplitter.from_amplitude(spec.r_v)
        return c.add_phase(1, math.pi / 2, UNKNOWN).add(v, (0, 1), UNKNOWN).add_phase(1, math.pi / 2, UNKNOWN)
    return c.add(BeamSplitter.from_amplitude(spec.r_u), (0, 1), UNKNOWN)


def build_circuit(spec: SetupSpec, hypothesis: str) -> Circuit:
    b = spec.couplers["B"].device()
    c = Circuit(3).add(b, (1, 2))
    c = Circuit(3, c.elements + unknown_device(spec, hypothesis).elements)
    c = c.add(b.adjoint(), (1, 2))
    if spec.kind in (AMBIGUOUS, UNAMBIGUOUS):
        c = c.add(spec.couplers["M"].device(), (0, 1)).add(spec.couplers["N"].device(), (1, 2))
    return c.with_detectors(DETECTORS[spec.kind])


def _pair(spec: SetupSpec) -> HypothesisPair:
    circuits = {h: build_circuit(spec, h) for h in HYPOTHESES}
    return HypothesisPair(spec, circuits, closed_form_probabilities(spec))


def calibrate(spec: SetupSpec) -> HypothesisPair:
    """Pick signs/orientations of ``M`` and ``N`` that reproduce the analytic table."""
    if spec.kind == PERFECT:
        pair = _pair(spec)
        if pair.max_deviation("unitary") > CALIBRATION_TOL:
            raise RuntimeError("perfect-reading circuit does not reproduce its closed form")
        return pair
    # orientation of N as drawn: N for unambiguous, N^dag for ambiguous
    n_first = spec.kind == AMBIGUOUS
    choices = [(1, False), (-1, False), (1, True), (-1, True)]
    n_choices = [(s, a if not n_first else not a) for s, a in choices]
    for (sm, am), (sn, an) in itertools.product(choices, n_choices):
        m, n = spec.couplers["M"], spec.couplers["N"]
        couplers = dict(spec.couplers)
        couplers["M"] = CouplerSetting(m.reflectivity, m.transmittivity, sm, am)
        couplers["N"] = CouplerSetting(n.reflectivity, n.transmittivity, sn, an)
        candidate = _pair(SetupSpec(spec.kind, spec.r_u, spec.q, couplers, spec.r_v, spec.strict))
        if candidate.max_deviation("unitary") <= CALIBRATION_TOL:
            return candidate
    raise RuntimeError(f"no sign convention reproduces the {spec.kind} table for r_u={spec.r_u}, q={spec.q}")


def _check_device_amplitude(r_u: float):
    if not -1.0 <= r_u <= 0.0:
        raise ValueError(f"device reflection amplitude must satisfy -1 <= r_u <= 0, got {r_u}")


def perfect_spec(r_v: float) -> SetupSpec:
    if not 0.0 <= r_v <= 1.0:
        raise ValueError(f"r_v must lie in [0, 1], got {r_v}")
    b = CouplerSetting(r_v / (1.0 + r_v), 1.0 / (1.0 + r_v))
    return SetupSpec(PERFECT, -r_v, 0.0, {"B": b}, r_v=r_v)


def unambiguous_spec(r_u: float, q: float, strict: bool = True) -> SetupSpec:
    _check_device_amplitude(r_u)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"failure threshold must lie in [0, 1], got {q}")
    if strict and q < abs(r_u):
        raise InfeasibleSetupError(f"unambiguous reading needs q >= sqrt(R_U) = {abs(r_u):.6g}, got q = {q:.6g}")
    b = CouplerSetting((q - r_u) / (1.0 - r_u), (1.0 - q) / (1.0 - r_u))
    m = CouplerSetting(
        (math.sqrt(1.0 + r_u) - math.sqrt(q * (q - r_u))) ** 2 / (1.0 + q) ** 2,
        (math.sqrt(q * (1.0 + r_u)) + math.sqrt(q - r_u)) ** 2 / (1.0 + q) ** 2,
    )
    n = CouplerSetting(1.0 - q, q)
    return SetupSpec(UNAMBIGUOUS, r_u, q, {"B": b, "M": m, "N": n}, strict=strict)


def ambiguous_spec(r_u: float, q: float, strict: bool = True) -> SetupSpec:
    _check_device_amplitude(r_u)
    if not 0.0 <= q < 0.5:
        raise InfeasibleSetupError(f"ambiguous reading needs 0 <= q < 1/2 (singular at q = 1/2), got q = {q}")
    k = k_of_q(q)
    if strict and k < abs(r_u):
        raise InfeasibleSetupError(f"ambiguous reading needs K(q) >= sqrt(R_U) = {abs(r_u):.6g}, got K(q) = {k:.6g}")
    d = (1.0 - 2.0 * q) ** 2
    b = CouplerSetting((k - r_u) / (1.0 - r_u), (1.0 - k) / (1.0 - r_u))
    m = CouplerSetting((1.0 - k) * (k - r_u) / d, (1.0 - k) * (1.0 + r_u) / d)
    n = CouplerSetting(1.0 - q, q)
    return SetupSpec(AMBIGUOUS, r_u, q, {"B": b, "M": m, "N": n}, strict=strict)


def build_perfect(r_v: float) -> HypothesisPair:
    return calibrate(perfect_spec(r_v))


def build_unambiguous(r_u: float, q: float, strict: bool = True) -> HypothesisPair:
    """``strict`` enforces ``q >= |r_u|``; the circuit itself only needs ``q >= r_u``."""
    return calibrate(unambiguous_spec(r_u, q, strict))


def build_ambiguous(r_u: float, q: float, strict: bool = True) -> HypothesisPair:
    """``strict`` enforces ``K(q) >= |r_u|``; the circuit itself only needs ``K(q) >= r_u``."""
    pair = calibrate(ambiguous_spec(r_u, q, strict))
    for h in HYPOTHESES:
        leaked = pair.simulate(h, "unitary").ignored
        if leaked > CALIBRATION_TOL:
            raise RuntimeError(f"unmeasured mode carries probability {leaked} under {h}")
    return pair


def build(kind: str, *, r_v: float | None = None, r_u: float | None = None, q: float = 0.0,
          strict: bool = True) -> HypothesisPair:
    if kind == PERFECT:
        if r_v is None:
            if r_u is None:
                raise ValueError("perfect setup needs r_v (or r_u = -r_v)")
            r_v = -r_u
        return build_perfect(r_v)
    if r_u is None:
        if r_v is None:
            raise ValueError(f"{kind} setup needs r_u (or r_v = -r_u)")
        r_u = -r_v
    if kind == UNAMBIGUOUS:
        return build_unambiguous(r_u, q, strict)
    if kind == AMBIGUOUS:
        return build_ambiguous(r_u, q, strict)
    raise ValueError(f"unknown setup kind {kind!r}")


def verdict(label: str) -> str:
    """Decision implied by a click: both U counters declare U."""
    return "U" if label in ("U", "U'") else label


def verdict_probabilities(dist: DetectionDistribution) -> dict[str, float]:
    out: dict[str, float] = {}
    for label, p in dist.probabilities.items():
        out[verdict(label)] = out.get(verdict(label), 0.0) + p
    return out
