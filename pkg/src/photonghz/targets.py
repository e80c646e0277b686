"""Reference kets for the preparation and purification stages.

Positional states assign photon ``k`` (k = 1..4) a polarization letter and a
rail letter; ``positional_state("HVVH", "DdDd")`` is the Fock term with one
photon in each of D1(H), d2(V), D3(V), d4(H).
"""

from __future__ import annotations

import math
from typing import Iterable

from .fock_core import HybridState, ModeId, normalize, state_from


def positional_state(terms: Iterable[tuple[complex, str, str]]) -> HybridState:
    """Normalized superposition of ``(amplitude, polarizations, rails)`` terms."""
    out = []
    for amp, pols, rails in terms:
        if len(pols) != len(rails):
            raise ValueError(f"{pols!r} and {rails!r} differ in length")
        occ = {ModeId(f"{r}{k}", p): 1 for k, (p, r) in enumerate(zip(pols, rails), start=1)}
        out.append((amp, occ))
    return normalize(state_from(out))


def flip(pols: str) -> str:
    return pols.translate(str.maketrans("HV", "VH"))


def _pattern_rails(pattern: str) -> str:
    # "e1E2E3e4" -> "eEEe"
    return pattern[0::2]


PHI0 = positional_state([
    (1, "HVVH", "DDDD"), (1, "VHHV", "DDDD"),
    (1, "HVVH", "dddd"), (1, "VHHV", "dddd"),
])

PSI0 = positional_state([
    (1, "HVVH", "DdDd"), (1, "HVVH", "dDdD"),
    (1, "VHHV", "ddDD"), (1, "VHHV", "DDdd"),
])

PHI = positional_state([
    (1, "HVVH", "eEEe"), (1, "VHHV", "eEEe"),
    (1, "HVVH", "EeeE"), (1, "VHHV", "EeeE"),
])

PSI = positional_state([
    (1, "HHVV", "eEEe"), (1, "VVHH", "eEEe"),
    (1, "HVHV", "EeeE"), (1, "VHVH", "EeeE"),
])

# polarization carried with the (d1 D2 d3 D4 + D1 d2 D3 d4) rails in the noisy family
NOISY_POLARIZATIONS = {
    1: "HVVH", 2: "HVHV", 3: "HHVV", 4: "HVVV",
    5: "HVHH", 6: "HHVH", 7: "HHHV", 8: "HHHH",
}

# back-end images: (first pair, first pattern, second pair, second pattern)
NOISY_IMAGES = {
    1: ("HHVV", "e1E2E3e4", "HVHV", "E1e2e3E4"),
    2: ("HHHH", "e1E2e3E4", "HVVH", "E1e2E3e4"),
    3: ("HVVH", "e1e2E3E4", "HHHH", "E1E2e3e4"),
    4: ("HHVH", "e1E2E3E4", "HVHH", "E1e2e3e4"),
    5: ("HHHV", "e1E2e3e4", "HVVV", "E1e2E3E4"),
    6: ("HVVV", "e1e2E3e4", "HHHV", "E1E2e3E4"),
    7: ("HVHH", "e1e2e3E4", "HHVH", "E1E2E3e4"),
    8: ("HVHV", "e1e2e3e4", "HHVV", "E1E2E3E4"),
}


def noisy_state(k: int, sign: int) -> HybridState:
    """Member ``k`` (1..8) with relative sign ``sign`` (+1 or -1) of the cross-case family."""
    p = NOISY_POLARIZATIONS[k]
    q = flip(p)
    return positional_state([
        (1, p, "dDdD"), (1, p, "DdDd"),
        (sign, q, "DDdd"), (sign, q, "ddDD"),
    ])


def noisy_image(k: int, sign: int) -> HybridState:
    a, pat_a, b, pat_b = NOISY_IMAGES[k]
    ra, rb = _pattern_rails(pat_a), _pattern_rails(pat_b)
    return positional_state([
        (1, a, ra), (1, flip(a), ra),
        (sign, b, rb), (sign, flip(b), rb),
    ])


def noisy_family() -> dict[tuple[int, int], HybridState]:
    return {(k, s): noisy_state(k, s) for k in range(1, 9) for s in (1, -1)}


POSTSELECTION_PROBABILITY = {"cross": 1 / 16, "same": 1 / 24}

# CROSS:SAME squared-norm ratio of the full second-order pair polynomial
PHYSICAL_CROSS_TO_SAME = 2 / 3

INV_SQRT2 = 1 / math.sqrt(2)
