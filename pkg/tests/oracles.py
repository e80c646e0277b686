"""First-quantized oracle for bosonic linear optics.

N bosons are a symmetric tensor over the single-particle mode space. A
product of creation operators maps to the symmetrized tensor product of
unit vectors divided by sqrt(N!), a linear-optical element acts as U on
every tensor factor, and the Fock amplitude of occupation m is the tensor
entry at any index tuple realizing m times sqrt(N! / prod m_k!).

Nothing here imports the package under test.
"""

import itertools
import math
from collections import Counter

import numpy as np


class FirstQuantized:
    def __init__(self, modes):
        self.modes = list(modes)
        self.index = {m: i for i, m in enumerate(self.modes)}

    def dim(self):
        return len(self.modes)

    def product(self, ops):
        n = len(ops)
        t = np.zeros((self.dim(),) * n, complex)
        for perm in itertools.permutations(ops):
            t[tuple(self.index[o] for o in perm)] += 1
        return t / math.sqrt(math.factorial(n))

    def polynomial(self, monomials):
        """Sum of ``(coeff, [mode, ...])`` creation monomials applied to vacuum."""
        n = len(monomials[0][1])
        t = np.zeros((self.dim(),) * n, complex)
        for c, ops in monomials:
            t = t + c * self.product(ops)
        return t

    def unitary(self, columns):
        """Single-particle matrix from ``{input: [(output, coeff), ...]}``; identity elsewhere."""
        u = np.eye(self.dim(), dtype=complex)
        for src, outs in columns.items():
            j = self.index[src]
            u[:, j] = 0
            for dst, c in outs:
                u[self.index[dst], j] += c
        return u

    @staticmethod
    def evolve(t, u):
        for ax in range(t.ndim):
            t = np.moveaxis(np.tensordot(u, t, axes=([1], [ax])), 0, ax)
        return t

    def fock_amplitudes(self, t, tol=1e-14):
        """``{frozenset((mode, count), ...): amplitude}`` read off a symmetric tensor."""
        n = t.ndim
        out = {}
        for idx in itertools.combinations_with_replacement(range(self.dim()), n):
            amp = t[idx]
            if abs(amp) <= tol:
                continue
            occ = Counter(self.modes[i] for i in idx)
            weight = math.sqrt(math.factorial(n) / math.prod(math.factorial(v) for v in occ.values()))
            out[frozenset(occ.items())] = amp * weight
        return out

    def probability(self, t, keep):
        """Squared norm of index tuples whose mode list satisfies ``keep``."""
        p = np.abs(t) ** 2
        total = 0.0
        for idx in zip(*np.nonzero(p > 0)):
            if keep([self.modes[i] for i in idx]):
                total += p[idx]
        return total / p.sum()


def singlet(a, b):
    r = 1 / math.sqrt(2)
    return [(r, [a + "H", b + "V"]), (-r, [a + "V", b + "H"])]


def mul(p, q):
    return [(c1 * c2, m1 + m2) for c1, m1 in p for c2, m2 in q]


FRONT_END = {
    "a1H": ["D1H", "D3H"], "a1V": ["D1V", "D2V"],
    "a2H": ["d1H", "d3H"], "a2V": ["d1V", "d2V"],
    "b1H": ["D2H", "D4H"], "b1V": ["D3V", "D4V"],
    "b2H": ["d2H", "d4H"], "b2V": ["d3V", "d4V"],
}
SOURCE_MODES = [f"{s}{p}" for s in ("a1", "b1", "a2", "b2") for p in "HV"]
DETECTOR_MODES = [f"{r}{k}{p}" for r in "Dd" for k in range(1, 5) for p in "HV"]


def fourfold(modes):
    return all(m[0] in "Dd" for m in modes) and sorted(int(m[1]) for m in modes) == [1, 2, 3, 4]


def source_tensor(fq, case):
    s1, s2 = singlet("a1", "b1"), singlet("a2", "b2")
    if case == "cross":
        return fq.polynomial(mul(s1, s2))
    if case == "same":
        return fq.polynomial(mul(s1, s1)) + fq.polynomial(mul(s2, s2))
    return fq.polynomial(mul(s1 + s2, s1 + s2))


def postselection_probability(case):
    fq = FirstQuantized(SOURCE_MODES + DETECTOR_MODES)
    r = 1 / math.sqrt(2)
    u = fq.unitary({k: [(o, r) for o in v] for k, v in FRONT_END.items()})
    return fq.probability(fq.evolve(source_tensor(fq, case), u), fourfold)
