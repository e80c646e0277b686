"""Double-pair emission from two down-conversion arm pairs."""

from __future__ import annotations

import enum
import math

from .fock_core import CreationPoly, HybridState, ModeId, normalize

ARM_PAIRS = (("a1", "b1"), ("a2", "b2"))


class PairCase(enum.Enum):
    CROSS = "cross"        # one pair on (a1, b1), one on (a2, b2)
    SAME = "same"          # both pairs on one arm pair, superposed over the two
    PHYSICAL = "physical"  # full second-order expansion of the pair polynomial


def singlet_poly(a_site: str, b_site: str) -> CreationPoly:
    """(a_H^dag b_V^dag - a_V^dag b_H^dag)/sqrt2."""
    if a_site == b_site:
        raise ValueError(f"singlet needs two distinct sites, got {a_site} twice")
    r = 1 / math.sqrt(2)
    return (CreationPoly.monomial([ModeId(a_site, "H"), ModeId(b_site, "V")], r)
            + CreationPoly.monomial([ModeId(a_site, "V"), ModeId(b_site, "H")], -r))


def emit_singlet(a_site: str, b_site: str) -> HybridState:
    return singlet_poly(a_site, b_site).on_vacuum()


def source_poly(case: PairCase) -> CreationPoly:
    """Unnormalized creation polynomial for a pair case."""
    s1, s2 = (singlet_poly(a, b) for a, b in ARM_PAIRS)
    case = PairCase(case)
    if case is PairCase.CROSS:
        return s1 * s2
    if case is PairCase.SAME:
        return s1 * s1 + s2 * s2
    return (s1 + s2) ** 2


def emit_two_pairs(case: PairCase | str) -> HybridState:
    """Normalized four-photon source state for ``case``.

    Double occupations keep their bosonic sqrt(2) factors, so the SAME
    polynomial has squared norm 6 before normalization.
    """
    return normalize(source_poly(PairCase(case)).on_vacuum())


def physical_case_weights() -> dict[PairCase, float]:
    """Squared-norm split of the PHYSICAL state into its CROSS and SAME parts.

    These weights come from bosonic statistics of the pair polynomial, not
    from any measured emission rate.
    """
    s1, s2 = (singlet_poly(a, b) for a, b in ARM_PAIRS)
    cross = _sq((s1 * s2 * 2).on_vacuum())
    same = _sq(source_poly(PairCase.SAME).on_vacuum())
    total = _sq(source_poly(PairCase.PHYSICAL).on_vacuum())
    return {PairCase.CROSS: cross / total, PairCase.SAME: same / total}


def _sq(state: HybridState) -> float:
    return sum(abs(t.amplitude) ** 2 for t in state.terms)
