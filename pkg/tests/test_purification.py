import itertools
import json
import math

import numpy as np
import pytest

from photonghz.fock_core import fidelity_up_to_global_phase, fock_state
from photonghz.network import prepare
from photonghz.noise import PauliString, all_pauli_strings
from photonghz.purification import (
    ALL_MASKS,
    ALL_PATTERNS,
    CORRECTION_TABLE,
    GHZ3,
    GHZ4,
    TABLE_CASES,
    CorrectionTable,
    FcdPattern,
    XMask,
    apply_xmask,
    correcting_masks,
    detection_trace_jsonl,
    extract_three_photon,
    ghz_fidelity,
    ghz_state,
    lookup_correction,
    measure_fcd,
    polarization_amplitudes,
    polarization_state,
    purify,
    purify_outcomes,
    qubit_count,
    three_photon_outcomes,
)
from photonghz.source import PairCase
from photonghz.targets import noisy_image

R = 1 / math.sqrt(2)


class TestPolarizationStates:
    def test_ghz(self):
        assert polarization_amplitudes(GHZ4) == pytest.approx({"HHHH": R, "VVVV": R})
        assert qubit_count(GHZ3) == 3

    def test_fidelity(self):
        assert ghz_fidelity(GHZ4) == pytest.approx(1.0)
        assert ghz_fidelity(polarization_state({"HHHH": 1})) == pytest.approx(0.5)
        assert ghz_fidelity(polarization_state({"HHHH": 1, "VVVV": -1})) == pytest.approx(0.0, abs=1e-15)

    def test_rejects_non_qubit_states(self):
        with pytest.raises(ValueError):
            qubit_count(fock_state({"E1H": 2}))


class TestPatternsAndMasks:
    def test_pattern_round_trip(self):
        assert str(FcdPattern.parse("e1E2E3e4")) == "e1E2E3e4"
        assert len(ALL_PATTERNS) == 16

    @pytest.mark.parametrize("bad", ["e1E2E3", "x1E2E3e4", "e1E3E2e4"])
    def test_bad_patterns(self, bad):
        with pytest.raises(ValueError):
            FcdPattern.parse(bad)

    def test_mask_round_trip(self):
        assert str(XMask.parse("IXIX")) == "IXIX"
        with pytest.raises(ValueError):
            XMask.parse("IZII")

    def test_apply_xmask(self):
        s = polarization_state({"HVVH": 1, "VHHV": 1})
        assert apply_xmask(s, XMask.parse("IXXI")) == GHZ4

    def test_apply_xmask_involution(self):
        s = polarization_state({"HVHH": 1, "VHVV": -1j})
        for m in ALL_MASKS:
            assert apply_xmask(apply_xmask(s, m), m) == s


class TestTable:
    @pytest.mark.parametrize("pattern,case,mask", [
        ("e1e2e3e4", "same", "IIII"), ("e1e2e3e4", "cross", "IXIX"),
        ("E1E2E3E4", "cross", "IIXX"), ("e1E2E3e4", "same", "IXXI"),
        ("e1E2E3e4", "cross", "IIXX"), ("E1e2e3E4", "cross", "IXIX"),
    ])
    def test_lookup(self, pattern, case, mask):
        assert str(lookup_correction(FcdPattern.parse(pattern), case)) == mask

    def test_total(self):
        for p, c in itertools.product(ALL_PATTERNS, TABLE_CASES):
            CORRECTION_TABLE.lookup(p, c)

    def test_physical_not_tabulated(self):
        with pytest.raises((KeyError, ValueError)):
            lookup_correction(ALL_PATTERNS[0], PairCase.PHYSICAL)

    def test_csv_round_trip(self):
        text = CORRECTION_TABLE.to_csv()
        assert text.splitlines()[0] == "pattern,case,mask"
        assert len(text.splitlines()) == 33
        assert CorrectionTable.from_csv(text) == CORRECTION_TABLE

    def test_replace(self):
        p = FcdPattern.parse("e1e2e3e4")
        t = CORRECTION_TABLE.replace(p, PairCase.SAME, XMask.parse("XXXX"))
        assert str(t.lookup(p, PairCase.SAME)) == "XXXX"
        assert str(CORRECTION_TABLE.lookup(p, PairCase.SAME)) == "IIII"

    def test_brute_force_agrees_for_cross_images(self):
        for k, sign in itertools.product(range(1, 9), (1, -1)):
            for o in measure_fcd(noisy_image(k, sign)):
                masks = correcting_masks(o.collapsed)
                assert CORRECTION_TABLE.lookup(o.pattern, PairCase.CROSS) in masks


class TestDetection:
    def test_same_case_outcomes(self):
        outcomes = measure_fcd(prepare(PairCase.SAME).state)
        assert {str(o.pattern) for o in outcomes} == {"e1E2E3e4", "E1e2e3E4"}
        assert [o.probability for o in outcomes] == pytest.approx([0.5, 0.5])
        by = {str(o.pattern): o.collapsed for o in outcomes}
        assert fidelity_up_to_global_phase(by["e1E2E3e4"], polarization_state({"HVVH": 1, "VHHV": 1})) == pytest.approx(1.0)

    def test_cross_case_outcomes(self):
        by = {str(o.pattern): o.collapsed for o in measure_fcd(prepare(PairCase.CROSS).state)}
        assert fidelity_up_to_global_phase(by["e1E2E3e4"], polarization_state({"HHVV": 1, "VVHH": 1})) == pytest.approx(1.0)
        assert fidelity_up_to_global_phase(by["E1e2e3E4"], polarization_state({"HVHV": 1, "VHVH": 1})) == pytest.approx(1.0)

    def test_psi_6_minus(self):
        outcomes = measure_fcd(noisy_image(6, -1))
        assert {str(o.pattern) for o in outcomes} == {"e1e2E3e4", "E1E2e3E4"}
        for o in outcomes:
            assert ghz_fidelity(apply_xmask(o.collapsed, lookup_correction(o.pattern, "cross"))) == pytest.approx(1.0)

    def test_needs_fourfold(self):
        with pytest.raises(ValueError):
            measure_fcd(fock_state({"E1H": 1, "E2H": 1}))


class TestPurify:
    @pytest.mark.parametrize("case", ["cross", "same"])
    def test_noiseless(self, case):
        outs = purify_outcomes(case, PauliString())
        assert sum(o.probability for o in outs) == pytest.approx(1.0)
        assert all(o.fidelity == pytest.approx(1.0, abs=1e-9) for o in outs)

    def test_sampled(self, rng):
        pattern, fid = purify("cross", PauliString.parse("I-X-Z-XZ"), rng)
        assert pattern in ALL_PATTERNS
        assert fid == pytest.approx(1.0, abs=1e-9)

    def test_wrong_case_correction_degrades(self):
        outs = purify_outcomes("same", PauliString(), correction_case="cross")
        assert min(o.fidelity for o in outs) < 1 - 1e-3

    def test_sign_invariance(self):
        for err in all_pauli_strings((2,)):
            for o in purify_outcomes("cross", err):
                assert o.fidelity == pytest.approx(1.0, abs=1e-9)

    def test_trace_jsonl(self):
        lines = detection_trace_jsonl(purify_outcomes("same", PauliString())).splitlines()
        assert len(lines) == 2
        assert set(json.loads(lines[0])) == {"pattern", "probability", "fidelity"}

    def test_to_dict(self):
        d = purify_outcomes("cross", PauliString())[0].to_dict()
        assert set(d) == {"pattern", "probability", "mask", "fidelity"}


class TestThreePhoton:
    @pytest.mark.parametrize("position", [1, 2, 3, 4])
    def test_both_outcomes(self, position):
        outs = three_photon_outcomes(GHZ4, position)
        assert {o.outcome for o in outs} == {"H", "V"}
        assert [o.probability for o in outs] == pytest.approx([0.5, 0.5])
        for o in outs:
            assert fidelity_up_to_global_phase(o.state, GHZ3) == pytest.approx(1.0, abs=1e-12)

    def test_sampled(self):
        rng = np.random.default_rng(1)
        seen = set()
        for _ in range(20):
            outcome, state = extract_three_photon(GHZ4, rng=rng)
            seen.add(outcome)
            assert ghz_fidelity(state) == pytest.approx(1.0)
        assert seen == {"H", "V"}

    def test_wrong_size(self):
        with pytest.raises(ValueError):
            three_photon_outcomes(ghz_state(3))
        with pytest.raises(ValueError):
            three_photon_outcomes(GHZ4, position=5)
