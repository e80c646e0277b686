"""Scenario runs, the verification suite and report emission."""

from __future__ import annotations

import csv
import functools
import io
import json
import math
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from . import __version__
from .elements import ElementKind, apply_map, build_element
from .fock_core import ModeId, fidelity_up_to_global_phase, fock_state, inner, normalize
from .kerr_qnd import (
    KerrParams,
    first_stage,
    measure_probe_number,
    misid_probability,
    qnd_pipeline,
    sample_probe_number,
)
from .network import back_end_map, front_end_map, postselect_coincidence, prepare
from .noise import NoiseSpec, PauliString, all_pauli_strings, apply_pauli_string, sample_pauli_string
from .purification import (
    ALL_PATTERNS,
    CORRECTION_TABLE,
    GHZ3,
    GHZ4,
    TABLE_CASES,
    CorrectionTable,
    DetectionOutcome,
    apply_xmask,
    correcting_masks,
    ghz_fidelity,
    lookup_correction,
    measure_fcd,
    three_photon_outcomes,
)
from .source import PairCase, emit_two_pairs, physical_case_weights
from .targets import PHI, PHI0, POSTSELECTION_PROBABILITY, PSI, PSI0, noisy_family, noisy_image

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

RNG_NAME = "numpy.random.Philox"
RECORD_COLUMNS = ("shot", "case_true", "case_decided", "syndrome", "pattern", "n", "fidelity")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# -- scenario --------------------------------------------------------------------

@dataclass(frozen=True)
class OutputSpec:
    path: str
    format: str = "json"


@dataclass(frozen=True)
class Scenario:
    case_weights: Mapping[PairCase, float]
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    kerr: KerrParams | None = None
    shots: int = 1
    seed: int = 0
    outputs: tuple[OutputSpec, ...] = ()
    case_label: str = "cross"

    def __post_init__(self):
        if self.shots < 1:
            raise ConfigError("shots", f"must be >= 1, got {self.shots}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        total = math.fsum(self.case_weights.values())
        if abs(total - 1) > 1e-9:
            raise ConfigError("case", f"weights sum to {total}, expected 1")

    @property
    def case_known(self) -> bool:
        return self.kerr is not None or len([w for w in self.case_weights.values() if w > 0]) == 1

    @property
    def default_case(self) -> PairCase:
        # highest configured weight, cross on ties
        return max(TABLE_CASES[::-1], key=lambda c: self.case_weights.get(c, 0.0))

    def echo(self) -> dict:
        out: dict[str, Any] = {
            "case": self.case_label,
            "case_weights": {c.value: self.case_weights.get(c, 0.0) for c in TABLE_CASES},
            "shots": self.shots,
            "seed": self.seed,
        }
        if self.noise.explicit is not None:
            out["noise"] = {"explicit": str(self.noise.explicit)}
        else:
            out["noise"] = {"p": self.noise.p, "positions": list(self.noise.positions)}
        if self.kerr is not None:
            k = self.kerr
            out["kerr"] = {"alpha": _num(k.alpha), "theta": k.theta,
                           "beta": None if k.beta is None else _num(k.beta), "arm_swap": k.arm_swap}
        out["outputs"] = [{"path": o.path, "format": o.format} for o in self.outputs]
        return out


def _num(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else {"re": z.real, "im": z.imag}


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


def _as_float(value, path: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), path, "must be a number")
    return float(value)


def _parse_case(value) -> tuple[dict[PairCase, float], str]:
    if isinstance(value, str):
        try:
            case = PairCase(value)
        except ValueError:
            raise ConfigError("case", f"unknown case {value!r}") from None
        if case is PairCase.PHYSICAL:
            return dict(physical_case_weights()), "physical"
        return {case: 1.0}, case.value
    _require(isinstance(value, Mapping), "case", "must be a case name or a table of weights")
    weights = {}
    for key, w in value.items():
        _require(key in ("cross", "same"), f"case.{key}", "only cross and same can be weighted")
        w = _as_float(w, f"case.{key}")
        _require(w >= 0, f"case.{key}", "weight must be nonnegative")
        weights[PairCase(key)] = w
    return weights, "mixed"


def _parse_noise(value) -> NoiseSpec:
    if value is None:
        return NoiseSpec()
    _require(isinstance(value, Mapping), "noise", "must be a table")
    if "explicit" in value:
        _require(set(value) == {"explicit"}, "noise", "explicit noise takes no other keys")
        ops = value["explicit"]
        _require(isinstance(ops, Mapping), "noise.explicit", "must map positions to Pauli names")
        try:
            return NoiseSpec(explicit=PauliString.from_map(ops))
        except ValueError as exc:
            raise ConfigError("noise.explicit", str(exc)) from None
    unknown = set(value) - {"p", "positions"}
    _require(not unknown, "noise", f"unknown keys {sorted(unknown)}")
    p = _as_float(value.get("p", 0.0), "noise.p")
    _require(0 <= p <= 1, "noise.p", f"must be in [0, 1], got {p}")
    positions = value.get("positions", [2, 3, 4])
    _require(isinstance(positions, list) and all(isinstance(k, int) and 1 <= k <= 4 for k in positions),
             "noise.positions", "must be a list of positions in 1..4")
    return NoiseSpec.iid(p, positions)


def _parse_kerr(value) -> KerrParams | None:
    if value is None:
        return None
    _require(isinstance(value, Mapping), "kerr", "must be a table")
    unknown = set(value) - {"alpha", "theta", "beta", "arm_swap"}
    _require(not unknown, "kerr", f"unknown keys {sorted(unknown)}")
    _require("theta" in value, "kerr.theta", "is required")
    theta = _as_float(value["theta"], "kerr.theta")
    alpha = _as_float(value.get("alpha", 1.0), "kerr.alpha")
    _require(alpha >= 0, "kerr.alpha", "must be nonnegative")
    beta = value.get("beta")
    beta = None if beta is None else _as_float(beta, "kerr.beta")
    arm_swap = value.get("arm_swap", True)
    _require(isinstance(arm_swap, bool), "kerr.arm_swap", "must be a boolean")
    return KerrParams(theta=theta, alpha=alpha, beta=beta, arm_swap=arm_swap)


def scenario_from_dict(data: Mapping, seed: int | None = None, shots: int | None = None) -> Scenario:
    """Validate a config mapping; ``seed`` and ``shots`` override the file."""
    known = {"case", "noise", "kerr", "shots", "seed", "outputs"}
    unknown = set(data) - known
    _require(not unknown, "<root>", f"unknown keys {sorted(unknown)}")
    weights, label = _parse_case(data.get("case", "cross"))
    shots = data.get("shots", 1) if shots is None else shots
    _require(isinstance(shots, int) and not isinstance(shots, bool), "shots", "must be an integer")
    seed = data.get("seed", 0) if seed is None else seed
    _require(isinstance(seed, int) and not isinstance(seed, bool), "seed", "must be an integer")
    outputs = []
    for i, o in enumerate(data.get("outputs", [])):
        _require(isinstance(o, Mapping) and "path" in o, f"outputs[{i}]", "needs a path")
        fmt = o.get("format", "json")
        _require(fmt in ("json", "csv"), f"outputs[{i}].format", f"must be json or csv, got {fmt!r}")
        outputs.append(OutputSpec(str(o["path"]), fmt))
    return Scenario(case_weights=weights, noise=_parse_noise(data.get("noise")),
                    kerr=_parse_kerr(data.get("kerr")), shots=shots, seed=seed,
                    outputs=tuple(outputs), case_label=label)


def load_scenario(path: str | Path, **overrides) -> Scenario:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from None
    return scenario_from_dict(data, **overrides)


# -- runs ------------------------------------------------------------------------

def shot_rng(seed: int, shot: int) -> np.random.Generator:
    """Independent Philox stream for one shot, keyed by (seed, shot index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(shot,))))


@functools.lru_cache(maxsize=None)
def _qnd_outcomes(case: PairCase, kerr: KerrParams):
    return tuple(qnd_pipeline(emit_two_pairs(case), kerr))


@functools.lru_cache(maxsize=None)
def _selected(case: PairCase, kerr: KerrParams | None, n: int | None):
    source = emit_two_pairs(case)
    if kerr is not None:
        source = next(o.post_state for o in _qnd_outcomes(case, kerr) if o.n == n)
    return postselect_coincidence(apply_map(front_end_map(), source), case).state


@functools.lru_cache(maxsize=None)
def _detections(case: PairCase, kerr: KerrParams | None, n: int | None,
                syndrome: PauliString) -> tuple[DetectionOutcome, ...]:
    noisy = apply_pauli_string(_selected(case, kerr, n), syndrome)
    return tuple(measure_fcd(apply_map(back_end_map(), noisy)))


def _choose(rng: np.random.Generator, probs) -> int:
    p = np.asarray(probs, dtype=float)
    return int(rng.choice(len(p), p=p / p.sum()))


def run_shot(scenario: Scenario, shot: int) -> dict:
    rng = shot_rng(scenario.seed, shot)
    cases = [c for c in TABLE_CASES if scenario.case_weights.get(c, 0) > 0]
    case_true = cases[_choose(rng, [scenario.case_weights[c] for c in cases])]
    n = None
    if scenario.kerr is not None:
        o = sample_probe_number(list(_qnd_outcomes(case_true, scenario.kerr)), rng)
        n, decided = o.n, o.decided_case
    else:
        decided = case_true if len(cases) == 1 else scenario.default_case
    syndrome = sample_pauli_string(scenario.noise, rng)
    outcomes = _detections(case_true, scenario.kerr, n, syndrome)
    det = outcomes[_choose(rng, [o.probability for o in outcomes])]
    fid = ghz_fidelity(apply_xmask(det.collapsed, lookup_correction(det.pattern, decided)))
    return {"shot": shot, "case_true": case_true.value, "case_decided": decided.value,
            "syndrome": str(syndrome), "pattern": str(det.pattern), "n": n, "fidelity": fid}


def compute_aggregates(records: list[dict]) -> dict:
    confusion: dict[str, dict[str, int]] = {}
    for r in records:
        row = confusion.setdefault(r["case_true"], {})
        row[r["case_decided"]] = row.get(r["case_decided"], 0) + 1
    return {
        "shots": len(records),
        "mean_fidelity": math.fsum(r["fidelity"] for r in records) / len(records),
        "pattern_histogram": dict(sorted(Counter(r["pattern"] for r in records).items())),
        "syndrome_histogram": dict(sorted(Counter(r["syndrome"] for r in records).items())),
        "confusion": {k: dict(sorted(v.items())) for k, v in sorted(confusion.items())},
    }


@dataclass
class RunReport:
    records: list[dict]
    aggregates: dict
    config: dict
    seed: int
    case_known: bool
    weights_source: str
    version: str = __version__
    rng: str = RNG_NAME

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "seed": self.seed,
            "rng": {"name": self.rng, "numpy": np.__version__,
                    "substream": "SeedSequence(seed, spawn_key=(shot,))"},
            "case_known": self.case_known,
            "weights_source": self.weights_source,
            "config": self.config,
            "aggregates": self.aggregates,
            "records": self.records,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=RECORD_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.records:
            w.writerow({k: ("" if r[k] is None else r[k]) for k in RECORD_COLUMNS})
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown format {fmt!r}")


def run_scenario(scenario: Scenario, workers: int = 1) -> RunReport:
    """Run every shot; results do not depend on ``workers``."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(functools.partial(run_shot, scenario), range(scenario.shots)))
    else:
        records = [run_shot(scenario, i) for i in range(scenario.shots)]
    return RunReport(
        records=records,
        aggregates=compute_aggregates(records),
        config=scenario.echo(),
        seed=scenario.seed,
        case_known=scenario.case_known,
        weights_source="bosonic-construction" if scenario.case_label == "physical" else "configured",
    )


def write_outputs(report: RunReport, outputs) -> None:
    for o in outputs:
        Path(o.path).write_text(report.render(o.format))


# -- verification suite ----------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass(frozen=True)
class VerificationSummary:
    checks: tuple[CheckResult, ...]
    seed: int

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "ok": self.ok,
                "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks]}


def _check_postselected():
    worst = 1.0
    for case, target in ((PairCase.CROSS, PSI0), (PairCase.SAME, PHI0)):
        sel = postselect_coincidence(apply_map(front_end_map(), emit_two_pairs(case)))
        worst = min(worst, fidelity_up_to_global_phase(sel.state, target))
    return worst >= 1 - 1e-9, f"min fidelity {worst:.15f}"


def _check_prepared():
    worst = min(fidelity_up_to_global_phase(prepare(PairCase.CROSS).state, PSI),
                fidelity_up_to_global_phase(prepare(PairCase.SAME).state, PHI))
    return worst >= 1 - 1e-9, f"min fidelity {worst:.15f}"


def _check_probabilities():
    errs = {c: abs(prepare(c).probability - POSTSELECTION_PROBABILITY[c]) for c in ("cross", "same")}
    return max(errs.values()) < 1e-12, ", ".join(f"{c} err {e:.1e}" for c, e in errs.items())


def _check_family_orthogonal():
    fam = list(noisy_family().values())
    worst = max(abs(inner(a, b)) for i, a in enumerate(fam) for b in fam[i + 1:])
    return worst < 1e-12, f"max |overlap| {worst:.1e} over {len(fam) * (len(fam) - 1) // 2} pairs"


def _check_family_images():
    worst = min(fidelity_up_to_global_phase(apply_map(back_end_map(), s), noisy_image(k, sign))
                for (k, sign), s in noisy_family().items())
    return worst >= 1 - 1e-9, f"min fidelity {worst:.15f} over 16 states"


_CLOSURE_POSITIONS = {PairCase.CROSS: (2, 3, 4), PairCase.SAME: (1, 2, 3, 4)}


def _closure_outcomes():
    for case, positions in _CLOSURE_POSITIONS.items():
        for err in all_pauli_strings(positions):
            state = prepare(case, NoiseSpec(explicit=err)).state
            for o in measure_fcd(state):
                yield case, err, o


def _check_table(table: CorrectionTable):
    reached, worst = set(), 1.0
    for case, _, o in _closure_outcomes():
        reached.add((o.pattern, case))
        worst = min(worst, ghz_fidelity(apply_xmask(o.collapsed, table.lookup(o.pattern, case))))
    full = len(reached) == len(ALL_PATTERNS) * len(TABLE_CASES)
    return full and worst >= 1 - 1e-9, f"{len(reached)}/32 entries reached, min fidelity {worst:.15f}"


def _check_bruteforce(table: CorrectionTable):
    conflicts = 0
    for case, _, o in _closure_outcomes():
        if table.lookup(o.pattern, case) not in correcting_masks(o.collapsed):
            conflicts += 1
    return conflicts == 0, f"{conflicts} outcomes where the table mask is not a correcting mask"


def _check_qnd_amplitudes():
    params = KerrParams(theta=0.01, alpha=1.0)
    root2 = math.sqrt(2)
    s11 = first_stage(fock_state({"a1H": 1, "a2H": 1}), params)
    errs = [abs(dict(s11.terms[0].coherent)[m] - v) for m, v in _probe_pair(root2, 0)]
    same = first_stage(normalize(fock_state({"a1H": 2}) + fock_state({"a2H": 2})), params)
    for t in same.terms:
        sign = 1 if t.site_count("a2") == 2 else -1
        expected = _probe_pair(root2 * math.cos(0.01), sign * 1j * root2 * math.sin(0.01))
        errs += [abs(dict(t.coherent)[m] - v) for m, v in expected]
    return max(errs) < 1e-12, f"max amplitude error {max(errs):.1e}"


def _probe_pair(g1, g2):
    return ((ModeId("p1"), g1), (ModeId("p2"), g2))


def _check_qnd_statistics(seed: int):
    alpha, theta = 2.0, 0.3
    outcomes = measure_probe_number(first_stage(emit_two_pairs(PairCase.SAME), KerrParams(theta, alpha)))
    p0 = outcomes[0].probability if outcomes[0].n == 0 else 0.0
    err = abs(p0 - misid_probability(alpha, theta))
    shots = 100_000
    ns = sample_probe_number(outcomes, np.random.Generator(np.random.Philox(seed)), size=shots)
    counts = np.bincount(ns)
    mu = 2 * alpha ** 2 * math.sin(theta) ** 2
    bad = 0
    for n in range(len(counts)):
        expected = shots * math.exp(-mu) * mu ** n / math.factorial(n)
        if expected >= 50 and abs(counts[n] - expected) > 3 * math.sqrt(expected * (1 - expected / shots)):
            bad += 1
    return err < 1e-9 and bad == 0, f"P(0) err {err:.1e}, {bad} bins outside 3 sigma"


def _check_hom():
    bs = build_element(ElementKind.BS50, ["a1", "a2"])
    out = apply_map(bs, fock_state({"a1H": 1, "a2H": 1}))
    coinc = sum(abs(t.amplitude) ** 2 for t in out.terms if t.site_count("a1") == 1)
    return coinc < 1e-12, f"coincidence probability {coinc:.1e}"


def _check_three_photon():
    fids = [fidelity_up_to_global_phase(o.state, GHZ3) for o in three_photon_outcomes(GHZ4, 4)]
    return len(fids) == 2 and min(fids) >= 1 - 1e-9, f"fidelities {[round(f, 12) for f in fids]}"


def verify_suite(table: CorrectionTable = CORRECTION_TABLE, seed: int = 0) -> VerificationSummary:
    checks: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
        ("postselected states", _check_postselected),
        ("prepared states", _check_prepared),
        ("postselection probabilities", _check_probabilities),
        ("noisy family orthogonality", _check_family_orthogonal),
        ("noisy family back-end images", _check_family_images),
        ("correction table round trip", lambda: _check_table(table)),
        ("brute-force mask agreement", lambda: _check_bruteforce(table)),
        ("qnd probe amplitudes", _check_qnd_amplitudes),
        ("qnd number statistics", lambda: _check_qnd_statistics(seed)),
        ("hong-ou-mandel", _check_hom),
        ("three-photon extraction", _check_three_photon),
    ]
    results = []
    for name, fn in checks:
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail))
    return VerificationSummary(tuple(results), seed)
