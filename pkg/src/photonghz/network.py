"""Front end, fourfold postselection and HWP+PBS back end of the preparation setup."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .elements import ElementKind, ModeMap, apply_map, build_element, compose
from .fock_core import HybridState, HybridTerm, ModeId, inner, normalize
from .noise import NoiseSpec, PauliString, depolarize_sample
from .source import PairCase, emit_two_pairs

_R = 1 / math.sqrt(2)

# (input site, pol) -> two output sites receiving amplitude 1/sqrt2 each
_FRONT_END = {
    ("a1", "H"): ("D1", "D3"), ("a1", "V"): ("D1", "D2"),
    ("a2", "H"): ("d1", "d3"), ("a2", "V"): ("d1", "d2"),
    ("b1", "H"): ("D2", "D4"), ("b1", "V"): ("D3", "D4"),
    ("b2", "H"): ("d2", "d4"), ("b2", "V"): ("d3", "d4"),
}


@functools.lru_cache(maxsize=None)
def front_end_map() -> ModeMap:
    """Source arms a1, b1, a2, b2 onto the D/d detection rails."""
    return ModeMap.from_dict({
        ModeId(site, pol): tuple((ModeId(o, pol), _R) for o in outs)
        for (site, pol), outs in _FRONT_END.items()
    })


@functools.lru_cache(maxsize=None)
def back_end_map() -> ModeMap:
    """R90 half-wave plate on each D_k rail, then a PBS (D_k, d_k) -> (E_k, e_k).

    Net effect per position: d_H -> e_H, d_V -> E_V, D_H -> e_V, D_V -> E_H.
    """
    mm = ModeMap({})
    for k in range(1, 5):
        hwp = build_element(ElementKind.HWP_R90, [f"D{k}"])
        pbs = build_element(ElementKind.PBS, [f"D{k}", f"d{k}", f"E{k}", f"e{k}"])
        mm = compose(compose(pbs, hwp), mm)
    return mm


@dataclass(frozen=True)
class PreparationResult:
    probability: float
    state: HybridState | None
    case_used: PairCase | None = None
    syndrome: PauliString | None = None

    @property
    def succeeded(self) -> bool:
        return self.state is not None


def _one_per_position(term: HybridTerm, rails: str) -> bool:
    counts = [0] * 4
    for m, n in term.fock:
        if m.pol is None:
            continue
        if m.site[0] not in rails:
            return False
        counts[int(m.site[1]) - 1] += n
    return counts == [1, 1, 1, 1]


def postselect_coincidence(state: HybridState, case: PairCase | None = None,
                           rails: str = "Dd") -> PreparationResult:
    """Keep terms with exactly one photon in each position group {D_k, d_k}.

    Returns the kept squared norm as the success probability together with
    the renormalized state; an empty projection gives ``state=None``.
    """
    kept = HybridState(tuple(t for t in state.terms if _one_per_position(t, rails)))
    prob = inner(kept, kept).real
    if kept.is_empty or prob <= 0:
        return PreparationResult(0.0, None, case)
    return PreparationResult(min(prob, 1.0), normalize(kept), case)


def prepare(case: PairCase | str = PairCase.CROSS, noise: NoiseSpec | None = None,
            rng: np.random.Generator | None = None,
            source: HybridState | None = None) -> PreparationResult:
    """Source -> front end -> postselection -> optional noise -> back end.

    ``source`` overrides the emitted state, e.g. with the output of the QND stage.
    """
    case = PairCase(case)
    if source is None:
        source = emit_two_pairs(case)
    selected = postselect_coincidence(apply_map(front_end_map(), source), case)
    if not selected.succeeded:
        return selected
    state, syndrome = selected.state, None
    if noise is not None:
        syndrome, state = depolarize_sample(state, noise, rng)
    return PreparationResult(selected.probability, apply_map(back_end_map(), state), case, syndrome)
