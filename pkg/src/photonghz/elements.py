"""Linear-optical elements as substitutions on creation operators.

A :class:`ModeMap` sends each input creation operator to a linear
combination of output creation operators. Modes outside the map's domain
are left alone. Applying a map to a Fock term expands the product of the
substituted operators exactly, with bosonic normalization, and applying
it to coherent probe labels transforms the amplitudes linearly.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .fock_core import (
    ALGEBRA_TOL,
    CreationPoly,
    HybridState,
    HybridTerm,
    PROBE_SITES,
    ModeId,
    canonicalize,
    make_coherent,
    site_modes,
)

_R = 1 / math.sqrt(2)

Column = tuple[tuple[ModeId, complex], ...]


class ElementKind(enum.Enum):
    BS50 = "BS50"
    PBS = "PBS"
    HWP_R90 = "HWP_R90"
    HADAMARD = "HADAMARD"
    PHASE = "PHASE"


@dataclass(frozen=True, eq=False)
class ModeMap:
    """Input mode -> list of ``(output mode, coefficient)``; identity elsewhere."""

    columns: Mapping[ModeId, Column]

    @classmethod
    def from_dict(cls, columns: Mapping[ModeId, Sequence[tuple[ModeId, complex]]]) -> "ModeMap":
        return cls({m: tuple((o, complex(c)) for o, c in col) for m, col in columns.items()})

    @property
    def domain(self) -> frozenset[ModeId]:
        return frozenset(self.columns)

    @property
    def outputs(self) -> frozenset[ModeId]:
        return frozenset(o for col in self.columns.values() for o, _ in col)

    def column(self, m: ModeId) -> Column:
        return self.columns.get(m, ((m, 1 + 0j),))

    def column_dict(self, m: ModeId) -> dict[ModeId, complex]:
        out: dict[ModeId, complex] = {}
        for o, c in self.column(m):
            out[o] = out.get(o, 0j) + c
        return out

    def is_isometry(self, tol: float = ALGEBRA_TOL) -> bool:
        cols = [self.column_dict(m) for m in self.columns]
        for i, u in enumerate(cols):
            for v in cols[i:]:
                s = sum(c.conjugate() * v.get(o, 0j) for o, c in u.items())
                target = 1.0 if u is v else 0.0
                if abs(s - target) > tol:
                    return False
        return True

    def __matmul__(self, other: "ModeMap") -> "ModeMap":
        return compose(self, other)


def compose(second: ModeMap, first: ModeMap) -> ModeMap:
    """The map ``second`` after ``first``."""
    cols = {}
    for m in first.domain | second.domain:
        acc: dict[ModeId, complex] = {}
        for k, c in first.column(m):
            for o, d in second.column(k):
                acc[o] = acc.get(o, 0j) + c * d
        cols[m] = tuple(sorted((o, z) for o, z in acc.items() if abs(z) > 0))
    return ModeMap(cols)


def _site_names(sites: Sequence[str]) -> list[str]:
    names = [s.site if isinstance(s, ModeId) else s for s in sites]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate sites in {names}")
    return names


def build_element(kind: ElementKind | str, sites: Sequence[str], phi: float = 0.0) -> ModeMap:
    """Construct an element on named sites.

    BS50 and PBS take ``(in1, in2)`` for in-place action or
    ``(in1, in2, out1, out2)``. HWP_R90, HADAMARD and PHASE take one site.
    The beam splitter convention is in1 -> (out1+out2)/sqrt2,
    in2 -> (out1-out2)/sqrt2, identical on both polarizations and on probes.
    The PBS transmits H (in1->out1, in2->out2) and reflects V
    (in1->out2, in2->out1).
    """
    kind = ElementKind(kind)
    names = _site_names(sites)
    two_port = kind in (ElementKind.BS50, ElementKind.PBS)
    if two_port and len(names) not in (2, 4):
        raise ValueError(f"{kind.value} takes 2 or 4 sites, got {len(names)}")
    if not two_port and len(names) != 1:
        raise ValueError(f"{kind.value} takes one site, got {len(names)}")

    if two_port:
        in1, in2 = names[:2]
        out1, out2 = names[2:] if len(names) == 4 else names[:2]
        ports = [in1, in2, out1, out2]
        probes = [s in PROBE_SITES for s in ports]
        if any(probes) and not all(probes):
            raise ValueError("cannot mix probe and photonic sites in one element")
        if kind is ElementKind.PBS and any(probes):
            raise ValueError("PBS acts on photonic sites only")
        pols = [None] if probes[0] else ["H", "V"]
        cols = {}
        for p in pols:
            i1, i2, o1, o2 = (ModeId(s, p) for s in ports)
            if kind is ElementKind.BS50:
                cols[i1] = ((o1, _R), (o2, _R))
                cols[i2] = ((o1, _R), (o2, -_R))
            elif p == "H":
                cols[i1] = ((o1, 1),)
                cols[i2] = ((o2, 1),)
            else:
                cols[i1] = ((o2, 1),)
                cols[i2] = ((o1, 1),)
        return ModeMap.from_dict(cols)

    (site,) = names
    if kind is ElementKind.PHASE:
        z = cmath.exp(1j * phi)
        return ModeMap.from_dict({m: ((m, z),) for m in site_modes(site)})
    h, v = site_modes(site) if len(site_modes(site)) == 2 else (None, None)
    if h is None:
        raise ValueError(f"{kind.value} needs a photonic site, got {site}")
    if kind is ElementKind.HWP_R90:
        return ModeMap.from_dict({h: ((v, 1),), v: ((h, 1),)})
    return ModeMap.from_dict({h: ((h, _R), (v, _R)), v: ((h, _R), (v, -_R))})


def _map_term(mm: ModeMap, term: HybridTerm, fresh_outputs: frozenset[ModeId]) -> list[HybridTerm]:
    for m, _ in term.fock:
        if m in fresh_outputs:
            raise ValueError(f"output mode {m.key} already occupied")
    poly = CreationPoly({(): 1 + 0j})
    denom = 1.0
    for m, n in term.fock:
        poly = poly * CreationPoly.linear(mm.column(m)) ** n
        denom *= math.factorial(n)

    coh: dict[ModeId, complex] = {}
    for m, g in term.coherent:
        if m in mm.columns:
            for o, c in mm.column(m):
                coh[o] = coh.get(o, 0j) + g * c
        else:
            if m in fresh_outputs and g != 0:
                raise ValueError(f"output probe {m.key} already carries a coherent label")
            coh[m] = coh.get(m, 0j) + g
    coherent = make_coherent(coh)

    scale = term.amplitude / math.sqrt(denom)
    return [HybridTerm(t.amplitude * scale, t.fock, coherent)
            for t in poly.on_vacuum().terms]


def apply_map(mm: ModeMap, state: HybridState) -> HybridState:
    """Apply an isometric mode map to every term of ``state``."""
    if not mm.is_isometry():
        raise ValueError("mode map is not an isometry")
    fresh = mm.outputs - mm.domain
    out: list[HybridTerm] = []
    for term in state.terms:
        out.extend(_map_term(mm, term, fresh))
    return canonicalize(out)


def apply_elements(state: HybridState, *maps: ModeMap) -> HybridState:
    for mm in maps:
        state = apply_map(mm, state)
    return state
