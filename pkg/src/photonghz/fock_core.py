"""Hybrid Fock/coherent state algebra over a fixed registry of optical modes.

A state is a superposition of terms. Each term carries a complex amplitude,
a Fock occupation over photonic (or probe) modes and, optionally, coherent
amplitudes on the probe sites ``p1..p4``. Fock parts are orthonormal; probe
parts overlap through the usual coherent-state formula.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

PHOTONIC_SITES = (
    "a1", "a2", "b1", "b2",
    "D1", "D2", "D3", "D4",
    "d1", "d2", "d3", "d4",
    "E1", "E2", "E3", "E4",
    "e1", "e2", "e3", "e4",
)
PROBE_SITES = ("p1", "p2", "p3", "p4")
SITES = PHOTONIC_SITES + PROBE_SITES
_SITE_RANK = {s: i for i, s in enumerate(SITES)}

STATE_TOL = 1e-9
ALGEBRA_TOL = 1e-12
# amplitudes at or below this are treated as exact cancellations
ZERO_TOL = 1e-14
_ROUND_SCALE = 1e9


@dataclass(frozen=True, order=True)
class ModeId:
    """One optical mode: a registry site plus polarization for photonic sites."""

    rank: int = field(init=False, repr=False)
    site: str
    pol: str | None = None

    def __post_init__(self):
        if self.site not in _SITE_RANK:
            raise ValueError(f"unknown site {self.site!r}")
        if self.site in PROBE_SITES:
            if self.pol is not None:
                raise ValueError(f"probe site {self.site} carries no polarization")
        elif self.pol not in ("H", "V"):
            raise ValueError(f"photonic site {self.site} needs polarization H or V, got {self.pol!r}")
        rank = 2 * _SITE_RANK[self.site] + (self.pol == "V")
        object.__setattr__(self, "rank", rank)

    @property
    def is_probe(self) -> bool:
        return self.pol is None

    @property
    def key(self) -> str:
        """Serialized name, e.g. ``D1H`` or ``p2``."""
        return self.site + (self.pol or "")

    @classmethod
    def parse(cls, key: str) -> "ModeId":
        if key in PROBE_SITES:
            return cls(key)
        return cls(key[:-1], key[-1])

    def __repr__(self):
        return f"ModeId({self.key})"


def mode(site: str, pol: str | None = None) -> ModeId:
    return ModeId(site, pol)


def site_modes(site: str) -> tuple[ModeId, ...]:
    """All modes living at a site (both polarizations, or the bare probe)."""
    if site in PROBE_SITES:
        return (ModeId(site),)
    return (ModeId(site, "H"), ModeId(site, "V"))


Fock = tuple  # tuple[tuple[ModeId, int], ...], sorted, no zeros
Coherent = tuple  # tuple[tuple[ModeId, complex], ...], sorted by mode


def make_fock(occ: Mapping[ModeId, int] | Iterable[tuple[ModeId, int]]) -> Fock:
    items = occ.items() if isinstance(occ, Mapping) else occ
    merged: dict[ModeId, int] = {}
    for m, n in items:
        if n < 0:
            raise ValueError(f"negative occupation {n} on {m.key}")
        merged[m] = merged.get(m, 0) + int(n)
    return tuple(sorted((m, n) for m, n in merged.items() if n))


def make_coherent(amp: Mapping[ModeId, complex] | Iterable[tuple[ModeId, complex]]) -> Coherent:
    items = amp.items() if isinstance(amp, Mapping) else amp
    out = {}
    for m, g in items:
        if not m.is_probe:
            raise ValueError(f"coherent label on non-probe mode {m.key}")
        out[m] = complex(g)
    return tuple(sorted(out.items()))


@dataclass(frozen=True)
class HybridTerm:
    amplitude: complex
    fock: Fock = ()
    coherent: Coherent = ()

    def occupation(self, m: ModeId) -> int:
        for mm, n in self.fock:
            if mm == m:
                return n
        return 0

    def site_count(self, site: str) -> int:
        return sum(n for m, n in self.fock if m.site == site)

    @property
    def photon_number(self) -> int:
        return sum(n for _, n in self.fock)


@dataclass(frozen=True)
class HybridState:
    """Immutable superposition of hybrid terms. Build through ``canonicalize``."""

    terms: tuple[HybridTerm, ...] = ()

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: "HybridState") -> "HybridState":
        return canonicalize(HybridState(self.terms + other.terms))

    def __sub__(self, other: "HybridState") -> "HybridState":
        return self + (-1) * other

    def __mul__(self, scalar: complex) -> "HybridState":
        return canonicalize(HybridState(tuple(
            HybridTerm(t.amplitude * scalar, t.fock, t.coherent) for t in self.terms)))

    __rmul__ = __mul__

    def __neg__(self) -> "HybridState":
        return self * -1

    def __truediv__(self, scalar: complex) -> "HybridState":
        return self * (1 / scalar)

    @property
    def is_empty(self) -> bool:
        return not self.terms

    def modes(self) -> set[ModeId]:
        out = set()
        for t in self.terms:
            out.update(m for m, _ in t.fock)
            out.update(m for m, _ in t.coherent)
        return out

    def to_dict(self) -> dict:
        return {
            "terms": [
                {
                    "re": t.amplitude.real,
                    "im": t.amplitude.imag,
                    "occ": {m.key: n for m, n in t.fock},
                    "coh": {m.key: {"re": g.real, "im": g.imag} for m, g in t.coherent},
                }
                for t in self.terms
            ]
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: Mapping) -> "HybridState":
        terms = []
        for t in data["terms"]:
            fock = make_fock((ModeId.parse(k), n) for k, n in t.get("occ", {}).items())
            coh = make_coherent(
                (ModeId.parse(k), complex(v["re"], v["im"])) for k, v in t.get("coh", {}).items())
            terms.append(HybridTerm(complex(t["re"], t["im"]), fock, coh))
        return canonicalize(cls(tuple(terms)))

    @classmethod
    def from_json(cls, text: str) -> "HybridState":
        return cls.from_dict(json.loads(text))


VACUUM = HybridState((HybridTerm(1 + 0j),))


@dataclass(frozen=True)
class EnsembleState:
    """Classical mixture of pure hybrid states."""

    branches: tuple[tuple[float, HybridState], ...]

    def __post_init__(self):
        total = 0.0
        for p, _ in self.branches:
            if not -STATE_TOL <= p <= 1 + STATE_TOL:
                raise ValueError(f"branch probability {p} outside [0, 1]")
            total += p
        if abs(total - 1) > STATE_TOL:
            raise ValueError(f"branch probabilities sum to {total}, expected 1")


def _rounded(z: complex) -> tuple[int, int]:
    return (int(round(z.real * _ROUND_SCALE)), int(round(z.imag * _ROUND_SCALE)))


def _merge_key(t: HybridTerm):
    return (t.fock, tuple((m, _rounded(g)) for m, g in t.coherent))


def _exact_key(t: HybridTerm):
    coh = tuple((g.real, g.imag) for _, g in t.coherent)
    return (coh, t.amplitude.real, t.amplitude.imag)


def canonicalize(state: HybridState | Iterable[HybridTerm]) -> HybridState:
    """Merge equal terms, drop cancellations and sort into canonical order.

    Terms merge when their Fock parts agree and their coherent amplitudes
    agree after rounding to 1e-9. The stored coherent amplitude is the
    smallest exact value in the group, and amplitude sums use ``math.fsum``
    so the result does not depend on input order.
    """
    terms = state.terms if isinstance(state, HybridState) else tuple(state)
    ordered = sorted(terms, key=lambda t: (_merge_key(t), _exact_key(t)))
    out = []
    i = 0
    while i < len(ordered):
        key = _merge_key(ordered[i])
        j = i
        while j < len(ordered) and _merge_key(ordered[j]) == key:
            j += 1
        group = ordered[i:j]
        amp = complex(math.fsum(t.amplitude.real for t in group),
                      math.fsum(t.amplitude.imag for t in group))
        if abs(amp) > ZERO_TOL:
            out.append(HybridTerm(amp, group[0].fock, group[0].coherent))
        i = j
    return HybridState(tuple(out))


def state_from(terms: Iterable[tuple[complex, Mapping[ModeId, int]]] |
               Iterable[tuple[complex, Mapping[ModeId, int], Mapping[ModeId, complex]]]) -> HybridState:
    """Build a canonical state from ``(amplitude, occupation[, coherent])`` tuples."""
    out = []
    for item in terms:
        amp, occ = item[0], item[1]
        coh = item[2] if len(item) > 2 else {}
        out.append(HybridTerm(complex(amp), make_fock(occ), make_coherent(coh)))
    return canonicalize(out)


def fock_state(occ: Mapping[str | ModeId, int], amplitude: complex = 1.0) -> HybridState:
    """Single Fock term; keys may be ModeId or serialized names like ``"D1H"``."""
    parsed = {(k if isinstance(k, ModeId) else ModeId.parse(k)): n for k, n in occ.items()}
    return state_from([(amplitude, parsed)])


def coherent_overlap(gamma: complex, delta: complex) -> complex:
    """<gamma|delta> written as exp(-|gamma-delta|^2/2 + i Im(conj(gamma) delta))."""
    return cmath.exp(complex(-0.5 * abs(gamma - delta) ** 2, (gamma.conjugate() * delta).imag))


def _coherent_inner(a: Coherent, b: Coherent) -> complex:
    if a == b:
        return 1.0 + 0j
    da, db = dict(a), dict(b)
    out = 1.0 + 0j
    for m in da.keys() | db.keys():
        out *= coherent_overlap(da.get(m, 0j), db.get(m, 0j))
    return out


def inner(a: HybridState, b: HybridState) -> complex:
    """Sesquilinear inner product <a|b>, antilinear in ``a``."""
    by_fock: dict[Fock, list[HybridTerm]] = {}
    for t in b.terms:
        by_fock.setdefault(t.fock, []).append(t)
    re, im = [], []
    for s in a.terms:
        for t in by_fock.get(s.fock, ()):
            z = s.amplitude.conjugate() * t.amplitude * _coherent_inner(s.coherent, t.coherent)
            re.append(z.real)
            im.append(z.imag)
    return complex(math.fsum(re), math.fsum(im))


def norm(state: HybridState) -> float:
    return math.sqrt(max(inner(state, state).real, 0.0))


def normalize(state: HybridState) -> HybridState:
    n = norm(state)
    if n == 0:
        raise ValueError("cannot normalize the zero state")
    return state * (1 / n)


def is_normalized(state: HybridState, tol: float = STATE_TOL) -> bool:
    return abs(norm(state) - 1) <= tol


def fidelity_up_to_global_phase(a: HybridState, b: HybridState) -> float:
    """|<a|b>|^2 for normalized states; insensitive to global phase."""
    for name, s in (("a", a), ("b", b)):
        if not is_normalized(s):
            raise ValueError(f"state {name} is not normalized (norm {norm(s)})")
    return min(abs(inner(a, b)) ** 2, 1.0)


def map_terms(state: HybridState, fn) -> HybridState:
    """Apply ``fn(term) -> HybridTerm | None`` to each term and canonicalize."""
    return canonicalize(t2 for t2 in (fn(t) for t in state.terms) if t2 is not None)


def drop_probe(state: HybridState, probe: str, tol: float = STATE_TOL) -> HybridState:
    """Remove a probe mode that factors out of the state.

    Raises if different terms carry different amplitudes on the probe, since
    discarding an entangled probe is not a pure-state operation.
    """
    m = ModeId(probe)
    values = [dict(t.coherent).get(m, 0j) for t in state.terms]
    if values and max(abs(v - values[0]) for v in values) > tol:
        raise ValueError(f"probe {probe} is entangled with the rest of the state")
    return map_terms(state, lambda t: HybridTerm(
        t.amplitude, t.fock, tuple((mm, g) for mm, g in t.coherent if mm != m)))


# -- creation-operator polynomials ------------------------------------------------

@dataclass(frozen=True)
class CreationPoly:
    """Polynomial in commuting creation operators, keyed by Fock occupation."""

    coeffs: Mapping[Fock, complex] = field(default_factory=dict)

    @classmethod
    def linear(cls, column: Sequence[tuple[ModeId, complex]]) -> "CreationPoly":
        return cls({((m, 1),): complex(c) for m, c in column})

    @classmethod
    def monomial(cls, modes: Sequence[ModeId], coeff: complex = 1.0) -> "CreationPoly":
        return cls({make_fock((m, 1) for m in modes): complex(coeff)})

    def __add__(self, other: "CreationPoly") -> "CreationPoly":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0j) + c
        return CreationPoly(out)

    def __mul__(self, other):
        if not isinstance(other, CreationPoly):
            return CreationPoly({k: c * other for k, c in self.coeffs.items()})
        out: dict[Fock, complex] = {}
        for k1, c1 in self.coeffs.items():
            for k2, c2 in other.coeffs.items():
                k = make_fock(k1 + k2)
                out[k] = out.get(k, 0j) + c1 * c2
        return CreationPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "CreationPoly":
        out = CreationPoly({(): 1 + 0j})
        for _ in range(n):
            out = out * self
        return out

    def on_vacuum(self, coherent: Coherent = ()) -> HybridState:
        """Act on the vacuum: prod (a_k^dag)^m_k |0> = sqrt(prod m_k!) |m>."""
        terms = []
        for occ, c in self.coeffs.items():
            weight = math.sqrt(math.prod(math.factorial(n) for _, n in occ))
            terms.append(HybridTerm(c * weight, occ, coherent))
        return canonicalize(terms)
