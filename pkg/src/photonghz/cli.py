"""Command-line entry point: ``photonghz {verify,prepare,purify-sweep,qnd-sweep,sample,table}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .harness import (
    ConfigError,
    load_scenario,
    run_scenario,
    scenario_from_dict,
    verify_suite,
    write_outputs,
)
from .kerr_qnd import sweep_row
from .network import prepare
from .noise import all_pauli_strings
from .purification import CORRECTION_TABLE, purify_outcomes
from .source import PairCase

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG = 0, 1, 2

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _rows_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(path, f"invalid TOML: {exc}") from None


def _floats(text: str, name: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(name, f"expected comma-separated numbers, got {text!r}") from None


def cmd_verify(args) -> int:
    summary = verify_suite(seed=args.seed or 0)
    for c in summary.checks:
        print(c.line())
    if args.out:
        Path(args.out).write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK if summary.ok else EXIT_VERIFY


def cmd_prepare(args) -> int:
    cfg = _load_config(args.config)
    case = args.case or cfg.get("case", "cross")
    try:
        case = PairCase(case)
    except ValueError:
        raise ConfigError("case", f"unknown case {case!r}") from None
    result = prepare(case)
    if args.format == "csv":
        rows = [{"re": t.amplitude.real, "im": t.amplitude.imag,
                 "occ": " ".join(f"{m.key}:{n}" for m, n in t.fock)} for t in result.state.terms]
        _emit(_rows_csv(rows, ("re", "im", "occ")), args.out)
    else:
        _emit(json.dumps({"case": case.value, "probability": result.probability,
                          "state": result.state.to_dict()}, indent=2), args.out)
    return EXIT_OK


def cmd_purify_sweep(args) -> int:
    cfg = _load_config(args.config)
    cases = [args.case] if args.case else [cfg.get("case", "cross")] if "case" in cfg else ["cross", "same"]
    rows = []
    for name in cases:
        try:
            case = PairCase(name)
        except ValueError:
            raise ConfigError("case", f"unknown case {name!r}") from None
        if case is PairCase.PHYSICAL:
            raise ConfigError("case", "purify-sweep needs cross or same")
        positions = (2, 3, 4) if case is PairCase.CROSS else (1, 2, 3, 4)
        for err in all_pauli_strings(positions):
            for o in purify_outcomes(case, err):
                rows.append({"case": case.value, "syndrome": str(err), **o.to_dict()})
    if args.format == "csv":
        _emit(_rows_csv(rows, ("case", "syndrome", "pattern", "probability", "mask", "fidelity")), args.out)
    else:
        _emit("".join(json.dumps(r) + "\n" for r in rows), args.out)
    return EXIT_OK


def cmd_qnd_sweep(args) -> int:
    cfg = _load_config(args.config).get("qnd_sweep", {})
    alphas = _floats(args.alphas, "alphas") if args.alphas else cfg.get("alphas", [1.0, 10.0, 100.0, 500.0])
    thetas = _floats(args.thetas, "thetas") if args.thetas else cfg.get("thetas", [0.01, 0.1, 0.3])
    shots = args.shots if args.shots is not None else cfg.get("shots", 10_000)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    rows = []
    for i, (a, t) in enumerate((a, t) for a in alphas for t in thetas):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(i,))))
        rows.append(sweep_row(float(a), float(t), int(shots), rng))
    cols = ("alpha", "theta", "p_misid_closed_form", "p_misid_enumerated", "mean_n", "shots")
    if args.format == "json":
        _emit(json.dumps(rows, indent=2), args.out)
    else:
        _emit(_rows_csv(rows, cols), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.config:
        scenario = load_scenario(args.config, seed=args.seed, shots=args.shots)
    else:
        scenario = scenario_from_dict({"case": "cross"}, seed=args.seed, shots=args.shots)
    report = run_scenario(scenario, workers=args.workers)
    if args.out:
        Path(args.out).write_text(report.render(args.format))
    elif not scenario.outputs:
        _emit(report.render(args.format), None)
    write_outputs(report, scenario.outputs)
    agg = report.aggregates
    print(f"shots={agg['shots']} mean_fidelity={agg['mean_fidelity']:.12f}", file=sys.stderr)
    return EXIT_OK


def cmd_table(args) -> int:
    _emit(CORRECTION_TABLE.to_csv(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML scenario file")
    common.add_argument("--seed", type=int, help="64-bit RNG seed")
    common.add_argument("--shots", type=int, help="number of shots")
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("--format", choices=("json", "csv"), help="default json (csv for qnd-sweep)")

    parser = argparse.ArgumentParser(prog="photonghz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run every derivation check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("prepare", parents=[common], help="noiseless preparation of one case")
    p.add_argument("--case", choices=[c.value for c in PairCase])
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("purify-sweep", parents=[common], help="enumerate all correctable syndromes")
    p.add_argument("--case", choices=("cross", "same"))
    p.set_defaults(func=cmd_purify_sweep)

    p = sub.add_parser("qnd-sweep", parents=[common], help="misidentification over an (alpha, theta) grid")
    p.add_argument("--alphas", help="comma-separated probe amplitudes")
    p.add_argument("--thetas", help="comma-separated Kerr phases")
    p.set_defaults(func=cmd_qnd_sweep, default_format="csv")

    p = sub.add_parser("sample", parents=[common], help="Monte Carlo run of a scenario")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("table", parents=[common], help="export the correction table as CSV")
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # resolved here: parent-parser actions are shared, so per-subcommand defaults would leak
    args.format = args.format or getattr(args, "default_format", "json")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
