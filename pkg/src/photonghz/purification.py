"""Fourfold-coincidence detection, bit-flip correction and GHZ scoring.

Polarization-only qubit states are ordinary :class:`HybridState` values in
which qubit ``k`` is the photon on site ``E<k>``; the helpers
``polarization_state`` and ``polarization_amplitudes`` convert to and from
plain ``{"HVVH": amplitude}`` dictionaries.
"""

from __future__ import annotations

import csv
import functools
import io
import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .elements import ElementKind, apply_map, build_element
from .fock_core import (
    HybridState,
    HybridTerm,
    ModeId,
    canonicalize,
    fidelity_up_to_global_phase,
    inner,
    make_fock,
    normalize,
    state_from,
)
from .network import prepare
from .noise import NoiseSpec, PauliString
from .source import PairCase


# -- polarization-only states -----------------------------------------------------

def polarization_state(amplitudes: Mapping[str, complex], normalized: bool = True) -> HybridState:
    """Qubit state from ``{"HHHH": a, "VVVV": b}``; qubit k lives on site E<k>."""
    state = state_from(
        (amp, {ModeId(f"E{k}", p): 1 for k, p in enumerate(pols, start=1)})
        for pols, amp in amplitudes.items())
    return normalize(state) if normalized else state


def _pol_string(term: HybridTerm) -> str:
    pols = {}
    for m, n in term.fock:
        if n != 1 or m.site[0] != "E":
            raise ValueError(f"not a polarization qubit state: {m.key}x{n}")
        pols[int(m.site[1:])] = m.pol
    if sorted(pols) != list(range(1, len(pols) + 1)):
        raise ValueError(f"qubit positions {sorted(pols)} are not contiguous from 1")
    return "".join(pols[k] for k in sorted(pols))


def polarization_amplitudes(state: HybridState) -> dict[str, complex]:
    return {_pol_string(t): t.amplitude for t in state.terms}


def qubit_count(state: HybridState) -> int:
    counts = {len(_pol_string(t)) for t in state.terms}
    if len(counts) != 1:
        raise ValueError(f"inconsistent qubit counts {sorted(counts)}")
    return counts.pop()


def ghz_state(n: int = 4) -> HybridState:
    return polarization_state({"H" * n: 1, "V" * n: 1})


GHZ4 = ghz_state(4)
GHZ3 = ghz_state(3)


def ghz_fidelity(polstate: HybridState) -> float:
    """Overlap with (|H...H> + |V...V>)/sqrt2 on the state's qubit count."""
    return fidelity_up_to_global_phase(polstate, ghz_state(qubit_count(polstate)))


# -- detection patterns and the correction table ---------------------------------

@dataclass(frozen=True, order=True)
class FcdPattern:
    """Which detector (E_k or e_k) fired at each position."""

    rails: tuple[str, str, str, str]

    def __post_init__(self):
        if len(self.rails) != 4 or any(r not in ("E", "e") for r in self.rails):
            raise ValueError(f"invalid rails {self.rails!r}")

    @classmethod
    def parse(cls, text: str) -> "FcdPattern":
        rails = tuple(text[0::2])
        if text[1::2] != "1234":
            raise ValueError(f"invalid pattern {text!r}")
        return cls(rails)

    def __str__(self):
        return "".join(f"{r}{k}" for k, r in enumerate(self.rails, start=1))


ALL_PATTERNS = tuple(FcdPattern(r) for r in itertools.product("eE", repeat=4))


@dataclass(frozen=True)
class XMask:
    bits: tuple[bool, bool, bool, bool]

    def __post_init__(self):
        if len(self.bits) != 4:
            raise ValueError(f"mask needs 4 bits, got {len(self.bits)}")
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @classmethod
    def parse(cls, text: str) -> "XMask":
        if len(text) != 4 or set(text) - {"I", "X"}:
            raise ValueError(f"invalid mask {text!r}")
        return cls(tuple(c == "X" for c in text))

    def __str__(self):
        return "".join("X" if b else "I" for b in self.bits)


ALL_MASKS = tuple(XMask(b) for b in itertools.product((False, True), repeat=4))

# pattern: (same-case mask, cross-case mask), target GHZ4
_TABLE_ROWS = {
    "e1e2e3e4": ("IIII", "IXIX"),
    "E1E2E3E4": ("IIII", "IIXX"),
    "e1e2e3E4": ("IIIX", "IXII"),
    "E1E2E3e4": ("IIIX", "IIXI"),
    "e1e2E3e4": ("IIXI", "XIII"),
    "E1E2e3E4": ("IIXI", "IIIX"),
    "e1E2e3e4": ("IXII", "IIIX"),
    "E1e2E3E4": ("IXII", "XIII"),
    "E1e2e3e4": ("XIII", "IXII"),
    "e1E2E3E4": ("XIII", "IIXI"),
    "e1e2E3E4": ("IIXX", "IXXI"),
    "E1E2e3e4": ("IIXX", "IIII"),
    "e1E2e3E4": ("IXIX", "IIII"),
    "E1e2E3e4": ("IXIX", "IXXI"),
    "e1E2E3e4": ("IXXI", "IIXX"),
    "E1e2e3E4": ("IXXI", "IXIX"),
}

TABLE_CASES = (PairCase.SAME, PairCase.CROSS)


@dataclass(frozen=True)
class CorrectionTable:
    entries: Mapping[tuple[FcdPattern, PairCase], XMask]

    def __post_init__(self):
        missing = [(str(p), c.value) for p in ALL_PATTERNS for c in TABLE_CASES
                   if (p, c) not in self.entries]
        if missing:
            raise ValueError(f"correction table missing {missing}")

    def lookup(self, pattern: FcdPattern, case: PairCase) -> XMask:
        return self.entries[(pattern, PairCase(case))]

    def replace(self, pattern: FcdPattern, case: PairCase, mask: XMask) -> "CorrectionTable":
        return CorrectionTable({**self.entries, (pattern, PairCase(case)): mask})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pattern", "case", "mask"])
        for p in ALL_PATTERNS:
            for c in TABLE_CASES:
                w.writerow([str(p), c.value, str(self.lookup(p, c))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CorrectionTable":
        rows = csv.DictReader(io.StringIO(text))
        return cls({(FcdPattern.parse(r["pattern"]), PairCase(r["case"])): XMask.parse(r["mask"])
                    for r in rows})


def _build_table() -> CorrectionTable:
    entries = {}
    for text, (same, cross) in _TABLE_ROWS.items():
        p = FcdPattern.parse(text)
        entries[(p, PairCase.SAME)] = XMask.parse(same)
        entries[(p, PairCase.CROSS)] = XMask.parse(cross)
    return CorrectionTable(entries)


CORRECTION_TABLE = _build_table()


def lookup_correction(pattern: FcdPattern, case: PairCase | str,
                      table: CorrectionTable = CORRECTION_TABLE) -> XMask:
    case = PairCase(case)
    if case not in TABLE_CASES:
        raise ValueError(f"no correction column for case {case.value}")
    return table.lookup(pattern, case)


def apply_xmask(polstate: HybridState, mask: XMask) -> HybridState:
    """Swap H and V on the masked qubits."""
    def flip(t: HybridTerm) -> HybridTerm:
        pols = _pol_string(t)
        if len(pols) != len(mask.bits):
            raise ValueError(f"{len(pols)}-qubit state with a {len(mask.bits)}-bit mask")
        new = "".join(("V" if p == "H" else "H") if b else p for p, b in zip(pols, mask.bits))
        fock = make_fock((ModeId(f"E{k}", p), 1) for k, p in enumerate(new, start=1))
        return HybridTerm(t.amplitude, fock, t.coherent)

    return canonicalize(flip(t) for t in polstate.terms)


# -- detection -------------------------------------------------------------------

@dataclass(frozen=True)
class DetectionOutcome:
    pattern: FcdPattern
    probability: float
    collapsed: HybridState


def _split_term(term: HybridTerm) -> tuple[FcdPattern, str]:
    rails, pols = [None] * 4, [None] * 4
    for m, n in term.fock:
        if m.pol is None:
            continue
        k = int(m.site[1:]) - 1
        if m.site[0] not in "Ee" or n != 1 or rails[k] is not None:
            raise ValueError("fourfold detection needs exactly one photon per E/e position")
        rails[k], pols[k] = m.site[0], m.pol
    if None in rails:
        raise ValueError("fourfold detection needs exactly one photon per E/e position")
    return FcdPattern(tuple(rails)), "".join(pols)


def measure_fcd(state: HybridState) -> list[DetectionOutcome]:
    """All fourfold-coincidence outcomes with their probabilities.

    Probe labels shared by every term factor out and are dropped; the
    collapsed states are polarization-only.
    """
    groups: dict[FcdPattern, list[HybridTerm]] = {}
    for t in state.terms:
        pattern, pols = _split_term(t)
        fock = make_fock((ModeId(f"E{k}", p), 1) for k, p in enumerate(pols, start=1))
        groups.setdefault(pattern, []).append(HybridTerm(t.amplitude, fock, t.coherent))
    total = inner(state, state).real
    out = []
    for pattern in sorted(groups):
        part = canonicalize(groups[pattern])
        prob = inner(part, part).real / total
        if part.is_empty or prob <= 0:
            continue
        collapsed = _strip_probes(normalize(part))
        out.append(DetectionOutcome(pattern, prob, collapsed))
    return out


def _strip_probes(state: HybridState) -> HybridState:
    labels = {t.coherent for t in state.terms}
    if len(labels) > 1:
        raise ValueError("probe modes are entangled with the detected photons")
    return canonicalize(HybridTerm(t.amplitude, t.fock) for t in state.terms)


def sample_fcd(state: HybridState, rng: np.random.Generator) -> DetectionOutcome:
    outcomes = measure_fcd(state)
    probs = np.array([o.probability for o in outcomes])
    return outcomes[rng.choice(len(outcomes), p=probs / probs.sum())]


# -- purification ----------------------------------------------------------------

@dataclass(frozen=True)
class PurifiedOutcome:
    pattern: FcdPattern
    probability: float
    mask: XMask
    fidelity: float

    def to_dict(self) -> dict:
        return {"pattern": str(self.pattern), "probability": self.probability,
                "mask": str(self.mask), "fidelity": self.fidelity}


def correct_outcome(outcome: DetectionOutcome, case: PairCase,
                    table: CorrectionTable = CORRECTION_TABLE) -> PurifiedOutcome:
    mask = lookup_correction(outcome.pattern, case, table)
    fid = ghz_fidelity(apply_xmask(outcome.collapsed, mask))
    return PurifiedOutcome(outcome.pattern, outcome.probability, mask, fid)


@functools.lru_cache(maxsize=4096)
def _prepared(case: PairCase, error: PauliString) -> HybridState:
    return prepare(case, NoiseSpec(explicit=error)).state


def purify_outcomes(case: PairCase | str, error: PauliString,
                    correction_case: PairCase | str | None = None,
                    table: CorrectionTable = CORRECTION_TABLE) -> list[PurifiedOutcome]:
    """Enumerate every detection outcome of a noisy preparation and score it."""
    case = PairCase(case)
    correction_case = PairCase(correction_case or case)
    return [correct_outcome(o, correction_case, table) for o in measure_fcd(_prepared(case, error))]


def purify(case: PairCase | str, error: PauliString, rng: np.random.Generator,
           correction_case: PairCase | str | None = None,
           table: CorrectionTable = CORRECTION_TABLE) -> tuple[FcdPattern, float]:
    """Sample one detection outcome, correct it and return ``(pattern, fidelity)``."""
    outcomes = purify_outcomes(case, error, correction_case, table)
    probs = np.array([o.probability for o in outcomes])
    o = outcomes[rng.choice(len(outcomes), p=probs / probs.sum())]
    return o.pattern, o.fidelity


def correcting_masks(polstate: HybridState, tol: float = 1e-9) -> list[XMask]:
    """Brute force: every X mask that turns ``polstate`` into GHZ4, lowest index first."""
    return [m for m in ALL_MASKS if ghz_fidelity(apply_xmask(polstate, m)) >= 1 - tol]


def detection_trace_jsonl(outcomes: Iterable[PurifiedOutcome]) -> str:
    return "".join(json.dumps({"pattern": str(o.pattern), "probability": o.probability,
                               "fidelity": o.fidelity}) + "\n" for o in outcomes)


# -- three-photon extraction -----------------------------------------------------

@dataclass(frozen=True)
class ExtractionOutcome:
    outcome: str
    probability: float
    state: HybridState


def _drop_qubit(polstate: HybridState, position: int) -> dict[str, HybridState]:
    parts: dict[str, list[tuple[complex, str]]] = {"H": [], "V": []}
    for t in polstate.terms:
        pols = _pol_string(t)
        parts[pols[position - 1]].append((t.amplitude, pols[:position - 1] + pols[position:]))
    return {k: canonicalize(HybridTerm(a, make_fock((ModeId(f"E{i}", p), 1)
                                                    for i, p in enumerate(s, start=1)))
                            for a, s in v)
            for k, v in parts.items()}


def _phase_flip_first(state: HybridState) -> HybridState:
    return canonicalize(
        HybridTerm(t.amplitude * (-1 if _pol_string(t)[0] == "V" else 1), t.fock, t.coherent)
        for t in state.terms)


def three_photon_outcomes(polstate: HybridState, position: int = 4) -> list[ExtractionOutcome]:
    """Hadamard on ``position``, H/V detection, Z on the first remaining qubit after V."""
    n = qubit_count(polstate)
    if n != 4:
        raise ValueError(f"extraction needs a 4-qubit state, got {n}")
    if position not in range(1, 5):
        raise ValueError(f"position {position} outside 1..4")
    rotated = apply_map(build_element(ElementKind.HADAMARD, [f"E{position}"]), polstate)
    total = inner(rotated, rotated).real
    out = []
    for outcome, part in _drop_qubit(rotated, position).items():
        prob = inner(part, part).real / total
        if part.is_empty or prob <= 0:
            continue
        state = normalize(part)
        if outcome == "V":
            state = _phase_flip_first(state)
        out.append(ExtractionOutcome(outcome, prob, state))
    return out


def extract_three_photon(polstate: HybridState, position: int = 4,
                         rng: np.random.Generator | None = None) -> tuple[str, HybridState]:
    """Sampled three-photon extraction; without ``rng`` the most likely outcome is returned."""
    outcomes = three_photon_outcomes(polstate, position)
    if rng is None:
        o = max(outcomes, key=lambda o: o.probability)
    else:
        probs = np.array([o.probability for o in outcomes])
        o = outcomes[rng.choice(len(outcomes), p=probs / probs.sum())]
    return o.outcome, o.state
