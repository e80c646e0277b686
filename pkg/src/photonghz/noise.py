"""Pauli errors on polarization qubits and the cross-case noisy family."""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .fock_core import STATE_TOL, HybridState, HybridTerm, ModeId, fidelity_up_to_global_phase, make_fock, map_terms
from .targets import noisy_family

POSITIONS = (1, 2, 3, 4)
RAILS = ("D", "d", "E", "e")


class PauliOp(enum.Enum):
    I = "I"
    X = "X"
    Z = "Z"
    XZ = "XZ"  # X first, then Z

    @property
    def flips(self) -> bool:
        return self in (PauliOp.X, PauliOp.XZ)

    @property
    def phases(self) -> bool:
        return self in (PauliOp.Z, PauliOp.XZ)


@dataclass(frozen=True)
class PauliString:
    """One Pauli operator per photon position 1..4."""

    ops: tuple[PauliOp, PauliOp, PauliOp, PauliOp] = (PauliOp.I,) * 4

    def __post_init__(self):
        if len(self.ops) != 4:
            raise ValueError(f"need 4 Pauli operators, got {len(self.ops)}")
        object.__setattr__(self, "ops", tuple(PauliOp(o) for o in self.ops))

    @classmethod
    def from_map(cls, ops: Mapping[int, PauliOp | str]) -> "PauliString":
        out = [PauliOp.I] * 4
        for pos, op in ops.items():
            pos = int(pos)
            if pos not in POSITIONS:
                raise ValueError(f"position {pos} outside 1..4")
            out[pos - 1] = PauliOp(op)
        return cls(tuple(out))

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        return cls(tuple(PauliOp(t) for t in text.split("-")))

    def __str__(self):
        return "-".join(o.value for o in self.ops)

    def __getitem__(self, position: int) -> PauliOp:
        return self.ops[position - 1]

    @property
    def is_identity(self) -> bool:
        return all(o is PauliOp.I for o in self.ops)


IDENTITY = PauliString()


@dataclass(frozen=True)
class NoiseSpec:
    """Either an explicit Pauli string or i.i.d. depolarization on ``positions``.

    Position 1 is left out by default because the cross-case family only
    closes under errors on positions 2-4.
    """

    explicit: PauliString | None = None
    p: float = 0.0
    positions: tuple[int, ...] = (2, 3, 4)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"depolarization probability {self.p} outside [0, 1]")
        bad = [k for k in self.positions if k not in POSITIONS]
        if bad:
            raise ValueError(f"positions {bad} outside 1..4")

    @classmethod
    def of(cls, ops: Mapping[int, PauliOp | str]) -> "NoiseSpec":
        return cls(explicit=PauliString.from_map(ops))

    @classmethod
    def iid(cls, p: float, positions: Iterable[int] = (2, 3, 4)) -> "NoiseSpec":
        return cls(p=p, positions=tuple(sorted(set(positions))))


def _group_photon(term: HybridTerm, position: int) -> ModeId:
    hits = [(m, n) for m, n in term.fock
            if m.pol is not None and m.site[0] in RAILS and m.site[1:] == str(position)]
    if sum(n for _, n in hits) != 1:
        raise ValueError(f"position {position} must hold exactly one photon per term")
    return hits[0][0]


def apply_pauli(state: HybridState, position: int, op: PauliOp | str) -> HybridState:
    """Apply a Pauli error to the polarization of the photon at ``position``."""
    op = PauliOp(op)
    if position not in POSITIONS:
        raise ValueError(f"position {position} outside 1..4")

    def act(term: HybridTerm) -> HybridTerm:
        m = _group_photon(term, position)
        if op is PauliOp.I:
            return term
        new = ModeId(m.site, "V" if m.pol == "H" else "H") if op.flips else m
        amp = term.amplitude * (-1 if op.phases and new.pol == "V" else 1)
        fock = make_fock([(mm, n) for mm, n in term.fock if mm != m] + [(new, 1)])
        return HybridTerm(amp, fock, term.coherent)

    return map_terms(state, act)


def apply_pauli_string(state: HybridState, paulis: PauliString) -> HybridState:
    for k, op in enumerate(paulis.ops, start=1):
        if op is not PauliOp.I:
            state = apply_pauli(state, k, op)
    return state


_NON_IDENTITY = (PauliOp.X, PauliOp.Z, PauliOp.XZ)


def sample_pauli_string(spec: NoiseSpec, rng: np.random.Generator) -> PauliString:
    if spec.explicit is not None:
        return spec.explicit
    ops = [PauliOp.I] * 4
    for k in spec.positions:
        if rng.random() < spec.p:
            ops[k - 1] = _NON_IDENTITY[rng.integers(3)]
    return PauliString(tuple(ops))


def depolarize_sample(state: HybridState, spec: NoiseSpec,
                      rng: np.random.Generator | None = None) -> tuple[PauliString, HybridState]:
    """Draw a Pauli string from ``spec`` and apply it.

    Each listed position independently gets I with probability 1-p and X,
    Z or XZ with probability p/3 each. Explicit specs need no RNG.
    """
    if spec.explicit is None and rng is None:
        raise ValueError("sampled noise needs an rng")
    paulis = sample_pauli_string(spec, rng)
    return paulis, apply_pauli_string(state, paulis)


@functools.lru_cache(maxsize=None)
def _family():
    return tuple(noisy_family().items())


def classify_noisy(state: HybridState) -> tuple[int, int] | None:
    """Return ``(k, sign)`` if ``state`` is a member of the cross-case noisy family."""
    for key, ref in _family():
        if fidelity_up_to_global_phase(state, ref) > 1 - STATE_TOL:
            return key
    return None


def all_pauli_strings(positions: Iterable[int]) -> list[PauliString]:
    """Every string with arbitrary I/X/Z/XZ on ``positions`` and I elsewhere."""
    positions = sorted(positions)
    out = [{}]
    for k in positions:
        out = [dict(d, **{str(k): op}) for d in out for op in PauliOp]
    return [PauliString.from_map(d) for d in out]
