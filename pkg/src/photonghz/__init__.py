"""Second-quantized simulation of four-photon GHZ preparation and purification."""

__version__ = "0.1.0"

from .fock_core import (  # noqa: E402
    HybridState,
    HybridTerm,
    ModeId,
    canonicalize,
    fidelity_up_to_global_phase,
    fock_state,
    inner,
    norm,
)
from .source import PairCase, emit_singlet, emit_two_pairs  # noqa: E402
from .network import prepare  # noqa: E402
from .noise import NoiseSpec, PauliOp, PauliString  # noqa: E402
from .purification import CORRECTION_TABLE, ghz_fidelity, measure_fcd, purify  # noqa: E402
from .kerr_qnd import KerrParams, first_stage, measure_probe_number  # noqa: E402
