import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from photonghz.fock_core import HybridTerm, ModeId, canonicalize, make_coherent, make_fock  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


PHOTONIC = [ModeId(s, p) for s in ("a1", "a2", "b1", "b2") for p in "HV"]
PROBES = [ModeId("p1"), ModeId("p2")]


def random_state(rng: np.random.Generator, n_terms: int = 4, photons: int = 2,
                 modes=PHOTONIC, probes: bool = False):
    """Random unnormalized state with ``photons`` photons per term over ``modes``."""
    terms = []
    for _ in range(n_terms):
        picks = rng.choice(len(modes), size=photons)
        fock = make_fock((modes[i], 1) for i in picks)
        coh = ()
        if probes:
            coh = make_coherent({m: complex(*rng.normal(size=2)) for m in PROBES})
        terms.append(HybridTerm(complex(*rng.normal(size=2)), fock, coh))
    return canonicalize(terms)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
