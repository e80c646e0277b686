"""Weak cross-Kerr QND device that tells the two pair-emission cases apart.

A probe |sqrt2 alpha> on p1 is split onto arms p1/p2, each arm picks up a
cross-Kerr phase from the photons at one signal site (a1 or a2) followed by
an R(-theta) gate, and the arms are recombined on a 50:50 beam splitter.
Equal arm counts leave p2 in vacuum; the (|0,2> + |2,0>) case leaves
p2 in |+-i sqrt2 alpha sin(theta)>. A photon-number projection on p2 then
decides the case without touching the signal's photon numbers.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, pdtrc

from .elements import ElementKind, apply_map, build_element
from .fock_core import (
    HybridState,
    HybridTerm,
    ModeId,
    canonicalize,
    drop_probe,
    inner,
    make_coherent,
    map_terms,
    normalize,
)
from .source import PairCase, emit_two_pairs

PROBE_IN, PROBE_OUT = "p1", "p2"
TAIL_MASS = 1e-12


@dataclass(frozen=True)
class KerrParams:
    """Cross-Kerr phase per photon ``theta`` and probe amplitude ``alpha``.

    The device input is |sqrt2 * alpha>. ``beta`` describes the probe of the
    indirect number measurement; that stage is modeled as a direct projection,
    so ``beta`` is kept for the record only. With ``arm_swap`` set, probe arm
    p1 couples to a2 and arm p2 to a1, which pairs |0,2> with +i sin(theta).
    """

    theta: float
    alpha: complex = 1.0
    beta: complex | None = None
    arm_swap: bool = True

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite, got {self.theta}")
        if not cmath.isfinite(complex(self.alpha)):
            raise ValueError(f"alpha must be finite, got {self.alpha}")


@dataclass(frozen=True)
class QndOutcome:
    n: int
    probability: float
    post_state: HybridState
    decided_case: PairCase


def _arm_sites(params: KerrParams) -> dict[str, str]:
    return {"p1": "a2", "p2": "a1"} if params.arm_swap else {"p1": "a1", "p2": "a2"}


def first_stage(signal: HybridState, params: KerrParams) -> HybridState:
    """Couple the signal sites a1, a2 to the probe and recombine the probe arms."""
    probes = {ModeId("p1"), ModeId("p2")}
    for t in signal.terms:
        if any(m in probes for m, _ in t.fock) or any(m in probes for m, _ in t.coherent):
            raise ValueError("probe sites p1/p2 are already occupied")
    start = {ModeId("p1"): complex(math.sqrt(2) * params.alpha), ModeId("p2"): 0j}
    state = map_terms(signal, lambda t: HybridTerm(
        t.amplitude, t.fock, make_coherent({**dict(t.coherent), **start})))

    bs = build_element(ElementKind.BS50, ["p1", "p2"])
    state = apply_map(bs, state)

    arms = _arm_sites(params)

    def kerr(t: HybridTerm) -> HybridTerm:
        coh = dict(t.coherent)
        for probe, site in arms.items():
            m = ModeId(probe)
            coh[m] = coh[m] * cmath.exp(1j * t.site_count(site) * params.theta)
        return HybridTerm(t.amplitude, t.fock, make_coherent(coh))

    state = map_terms(state, kerr)
    for probe in ("p1", "p2"):
        state = apply_map(build_element(ElementKind.PHASE, [probe], phi=-params.theta), state)
    return apply_map(bs, state)


def number_amplitude(n: int, gamma: complex) -> complex:
    """<n|gamma> = exp(-|gamma|^2/2) gamma^n / sqrt(n!)."""
    if gamma == 0:
        return 1.0 + 0j if n == 0 else 0j
    r = abs(gamma)
    mag = math.exp(-0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1))
    return mag * cmath.exp(1j * n * cmath.phase(gamma))


def truncation(mean: float, tail: float = TAIL_MASS) -> int:
    """Smallest n whose Poisson(mean) tail mass P(N > n) is below ``tail``."""
    if mean <= 0:
        return 0
    n = int(mean)
    while pdtrc(n, mean) >= tail:
        n += 1
    return n


def _probe_labels(state: HybridState, probe: str) -> list[complex]:
    m = ModeId(probe)
    out = []
    for t in state.terms:
        coh = dict(t.coherent)
        if m not in coh:
            raise ValueError(f"no coherent label on {probe}")
        out.append(coh[m])
    return out


def _project(state: HybridState, probe: str, n: int) -> HybridState:
    m = ModeId(probe)
    return canonicalize(
        HybridTerm(t.amplitude * number_amplitude(n, dict(t.coherent)[m]), t.fock,
                   tuple((mm, g) for mm, g in t.coherent if mm != m))
        for t in state.terms)


def measure_probe_number(state: HybridState, probe: str = PROBE_OUT) -> list[QndOutcome]:
    """Every photon-number outcome on ``probe`` up to the truncation point.

    Outcome ``n`` carries P(n) = ||sum_b c_b <n|gamma_b> |rest_b>||^2 and the
    renormalized post-measurement state with the probe removed. Outcomes of
    exactly zero probability are omitted. n = 0 decides CROSS, n > 0 SAME.
    """
    labels = _probe_labels(state, probe)
    n_max = truncation(max(abs(g) ** 2 for g in labels)) if labels else 0
    total = inner(state, state).real
    out = []
    for n in range(n_max + 1):
        part = _project(state, probe, n)
        prob = inner(part, part).real / total
        if part.is_empty or prob <= 0:
            continue
        out.append(QndOutcome(n, prob, normalize(part), PairCase.CROSS if n == 0 else PairCase.SAME))
    return out


def sample_probe_number(outcomes: list[QndOutcome], rng: np.random.Generator,
                        size: int | None = None):
    """Draw outcomes (or just ``n`` values when ``size`` is given) from an enumeration."""
    probs = np.array([o.probability for o in outcomes])
    probs = probs / probs.sum()
    if size is None:
        return outcomes[rng.choice(len(outcomes), p=probs)]
    ns = np.array([o.n for o in outcomes])
    return ns[rng.choice(len(outcomes), p=probs, size=size)]


def feed_forward(state: HybridState, n: int) -> HybridState:
    """Phase shift exp(i n pi/2 * N_a1) that erases the outcome-dependent phase."""
    if n == 0:
        return state
    return apply_map(build_element(ElementKind.PHASE, ["a1"], phi=n * math.pi / 2), state)


def misid_probability(alpha: float, theta: float) -> float:
    """Probability that a SAME-case signal leaves p2 in vacuum."""
    return math.exp(-2 * abs(alpha) ** 2 * math.sin(theta) ** 2)


def mean_probe_number(alpha: float, theta: float) -> float:
    return 2 * abs(alpha) ** 2 * math.sin(theta) ** 2


def qnd_pipeline(signal: HybridState, params: KerrParams) -> list[QndOutcome]:
    """First stage, number projection on p2, feed-forward, then discard p1.

    The returned post states carry only the signal photons and are ready for
    the preparation network.
    """
    outcomes = measure_probe_number(first_stage(signal, params), PROBE_OUT)
    return [QndOutcome(o.n, o.probability, drop_probe(feed_forward(o.post_state, o.n), PROBE_IN),
                       o.decided_case)
            for o in outcomes]


def sweep_row(alpha: float, theta: float, shots: int, rng: np.random.Generator) -> dict:
    """One row of an (alpha, theta) sweep on the SAME-case signal."""
    outcomes = measure_probe_number(first_stage(emit_two_pairs(PairCase.SAME), KerrParams(theta, alpha)))
    p0 = next((o.probability for o in outcomes if o.n == 0), 0.0)
    if shots:
        mean_n = float(np.mean(sample_probe_number(outcomes, rng, size=shots)))
    else:
        mean_n = math.fsum(o.n * o.probability for o in outcomes)
    return {"alpha": alpha, "theta": theta, "p_misid_closed_form": misid_probability(alpha, theta),
            "p_misid_enumerated": p0, "mean_n": mean_n, "shots": shots}
