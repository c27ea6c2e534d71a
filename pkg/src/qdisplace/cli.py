"""``qdisplace`` command line.

Exit codes: 0 all checks pass, 1 printed-table mismatch under ``--strict``,
2 invalid arguments, 3 internal check failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Sequence, TextIO

import numpy as np

from qdisplace import records
from qdisplace.bases import ALL_LABELS, BasisFamily, BasisLabel, format_basis_dump, gram_deviation
from qdisplace.cloning import (
    CloneTask,
    equal_superposition,
    linear_extension_deficit,
    overlap_obstruction,
    state_pair_with_overlap,
)
from qdisplace.displacement import (
    VARIANTS,
    QuquartState,
    compare_correction_tables,
    derive_correction_oracle,
    fidelity_tolerance,
    paper_correction_table,
    run_trials,
    variant_config,
)
from qdisplace.errors import QDisplaceError
from qdisplace.swapping import (
    SWAP_VARIANTS,
    build_swap_total,
    compare_pairing_tables,
    derive_pairing_table,
    expansion_matrix,
    format_pairing_table,
    measure_swap,
    paper_pairing_table,
    swap_variant_config,
)

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
GRAM_TOL = 1e-12
DEFICIT_TOL = 1e-12
FREQ_SIGMAS = 5.0
FREQ_MIN_TRIALS = 16 * 100


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def parse_input(text: str) -> QuquartState | None:
    """``random`` or eight comma/space separated reals (re, im pairs); normalised."""
    if text.strip().lower() == "random":
        return None
    parts = text.replace(",", " ").split()
    if len(parts) != 8:
        raise UsageError("--input needs 'random' or 8 reals (re im for each of 4 amplitudes)")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"--input: not a number in {text!r}") from None
    amps = [complex(vals[2 * i], vals[2 * i + 1]) for i in range(4)]
    try:
        return QuquartState.normalized(amps)
    except ValueError as exc:
        raise UsageError(f"--input: {exc}") from None


def _emit(out: TextIO, machine: bool, record: dict, human: str | None) -> None:
    if machine:
        out.write(records.dumps(record) + "\n")
    elif human is not None:
        out.write(human + "\n")


def _fmt(x: float) -> str:
    return records.format_float(x)


def cmd_bases(args, out: TextIO) -> int:
    try:
        family = BasisFamily.parse(args.family)
    except QDisplaceError as exc:
        raise UsageError(str(exc)) from None
    dev = gram_deviation(family)
    _emit(out, args.machine, records.basis_record(family), format_basis_dump(family))
    if not args.machine:
        out.write(f"max Gram deviation: {_fmt(dev)}\n")
    if args.figures:
        from qdisplace.plotting import plot_basis_signs

        plot_basis_signs(family, Path(args.figures) / f"basis_{family.value}.png")
    return EXIT_OK if dev < GRAM_TOL else EXIT_INTERNAL


def frequency_check(counts: Sequence[int]) -> tuple[bool, float]:
    """All counts within ``FREQ_SIGMAS`` binomial sigmas of uniform; returns worst z."""
    n = sum(counts)
    p = 1 / 16
    sigma = np.sqrt(n * p * (1 - p))
    worst = max(abs(c - n * p) / sigma for c in counts)
    return bool(worst <= FREQ_SIGMAS), float(worst)


def cmd_displace(args, out: TextIO) -> int:
    try:
        config = variant_config(args.variant, BasisLabel.parse(args.channel))
    except QDisplaceError as exc:
        raise UsageError(str(exc)) from None
    state = parse_input(args.input)
    tol = fidelity_tolerance()
    traces = run_trials(config, args.seed, args.trials, state)
    if not args.machine:
        out.write(f"# variant {config.variant}: {config.diagram}\n")
        out.write(f"# channel {config.channel_family.value} {config.channel_label} on {list(config.channel_labels)}; "
                  f"measure {config.measure_family.value} on {list(config.measured_labels)}; "
                  f"Clara holds {list(config.correction_targets)}\n")
        out.write("trial  seed  outcome  message  probability  fidelity\n")
    for t, tr in enumerate(traces):
        human = f"{t}  {tr.seed}  {tr.outcome}  {tr.classical_message}  {_fmt(tr.probability)}  {_fmt(tr.fidelity)}"
        _emit(out, args.machine, records.trace_record(tr, t), human)
    code = EXIT_OK
    worst_fid = min(tr.fidelity for tr in traces)
    if worst_fid < 1 - tol:
        code = EXIT_INTERNAL
    counts = [0] * 16
    for tr in traces:
        counts[tr.outcome.code] += 1
    freq_ok, z = (True, 0.0)
    if args.trials >= FREQ_MIN_TRIALS:
        freq_ok, z = frequency_check(counts)
        if not freq_ok:
            code = EXIT_INTERNAL
    summary = {
        "record": "displace-summary",
        "variant": config.variant,
        "seed": args.seed,
        "trials": args.trials,
        "min_fidelity": worst_fid,
        "counts": counts,
        "max_abs_z": z,
        "frequency_checked": args.trials >= FREQ_MIN_TRIALS,
        "passed": code == EXIT_OK,
    }
    human = (f"min fidelity {_fmt(worst_fid)}; counts {counts}; max |z| {_fmt(z)}; "
             f"{'PASS' if code == EXIT_OK else 'FAIL'}")
    _emit(out, args.machine, summary, human)
    if args.figures:
        from qdisplace.plotting import plot_outcome_histogram

        plot_outcome_histogram(counts, Path(args.figures) / f"displace_{config.variant}_outcomes.png")
    return code


def _parse_forced(text: str | None) -> list[BasisLabel] | None:
    if text is None:
        return None
    if text.strip().lower() == "all":
        return list(ALL_LABELS)
    try:
        return [BasisLabel.parse(text)]
    except QDisplaceError as exc:
        raise UsageError(str(exc)) from None


def cmd_swap(args, out: TextIO) -> int:
    try:
        cfg = swap_variant_config(args.variant)
    except QDisplaceError as exc:
        raise UsageError(str(exc)) from None
    forced = _parse_forced(args.forced_outcome)
    if forced is None and args.seed is None:
        raise UsageError("swap needs --seed or --forced-outcome")
    total = build_swap_total(cfg)
    entries = derive_pairing_table(total, cfg)
    if not args.machine:
        out.write(f"# swap variant {cfg.variant}: {cfg.diagram}\n")
        out.write(f"# measure {cfg.measure_family.value} on {list(cfg.measured_labels)}; "
                  f"retained {list(cfg.retained_labels)} expanded in {cfg.residual_family.value}\n")
        out.write(format_pairing_table(entries) + "\n")
    else:
        for e in entries:
            out.write(records.dumps(records.pairing_entry_record(e, cfg.variant)) + "\n")
    if forced is None:
        outcomes = [measure_swap(total, args.seed, cfg, entries=entries)]
    else:
        outcomes = [measure_swap(total, cfg=cfg, forced_outcome=m, entries=entries) for m in forced]
    tol = fidelity_tolerance()
    if not args.machine:
        out.write("outcome  probability  residual  residual_fidelity  matches_table\n")
    all_ok = True
    for o in outcomes:
        ok = o.predicted_fidelity >= 1 - tol
        all_ok &= ok
        row = entries[o.outcome.code]
        residual = " ".join(f"{c:+g}*{p}" for p, c in row.terms) if len(row.terms) > 1 else (
            f"{'+' if row.terms[0][1] > 0 else '-'}{row.terms[0][0]}")
        human = f"{o.outcome}  {_fmt(o.probability)}  {residual}  {_fmt(o.residual_fidelity)}  {'yes' if ok else 'NO'}"
        _emit(out, args.machine, records.swap_outcome_record(o, cfg.variant, args.seed), human)
    if args.figures:
        from qdisplace.plotting import plot_pairing_matrix

        plot_pairing_matrix(expansion_matrix(total, cfg), Path(args.figures) / f"swap_{cfg.variant}_pairing.png",
                            title=f"swap variant {cfg.variant} expansion")
    return EXIT_OK if all_ok else EXIT_INTERNAL


def verify_paper_report() -> tuple[list[str], list[dict], bool]:
    """Human lines, machine records and whether any printed entry disagrees."""
    corr = compare_correction_tables(derive_correction_oracle(variant_config("iv")), paper_correction_table())
    pair = compare_pairing_tables(derive_pairing_table(), paper_pairing_table())
    lines, recs = [], []
    for v in corr.verdicts:
        lines.append(f"correction U_{v.label}: {v.status}")
        recs.append(records.correction_verdict_record(v))
    for v in pair.verdicts:
        claimed = " ".join(f"{c:+g}*{p}" for p, c in v.claimed)
        derived = " ".join(f"{c:+g}*{p}" for p, c in v.derived)
        lines.append(f"pairing {v.measured_label}(1234): {v.status} (printed {claimed}; derived {derived})")
        recs.append(records.pairing_verdict_record(v))
    for w in pair.warnings:
        lines.append(f"WARNING: {w}")
        recs.append({"record": "warning", "message": w})
    mismatch = bool(corr.mismatches or pair.mismatches)
    return lines, recs, mismatch


def cmd_verify_paper(args, out: TextIO) -> int:
    lines, recs, mismatch = verify_paper_report()
    if args.machine:
        for r in recs:
            out.write(records.dumps(r) + "\n")
    else:
        out.write("\n".join(lines) + "\n")
    summary = {"record": "verify-summary", "strict": bool(args.strict), "mismatch": mismatch}
    _emit(out, args.machine, summary, f"mismatches found: {'yes' if mismatch else 'no'}")
    return EXIT_MISMATCH if (args.strict and mismatch) else EXIT_OK


def cmd_noclone(args, out: TextIO) -> int:
    try:
        tasks = list(CloneTask) if args.task.lower() == "all" else [CloneTask.parse(args.task)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    overlaps = args.overlap if args.overlap else [0.0, 0.5, 1.0]
    for s in overlaps:
        if not 0.0 <= s <= 1.0:
            raise UsageError(f"overlap {s} outside [0, 1]")
    ok = True
    points = []
    if not args.machine:
        out.write("task  s  s_enc  required  deficit  linear_extension_fidelity\n")
    for task in tasks:
        for s in overlaps:
            psi, phi = state_pair_with_overlap(task, s)
            rep = overlap_obstruction(psi, phi, task)
            ok &= abs(rep.deficit - abs(s - s * s)) <= DEFICIT_TOL
            points.append((rep.overlap_s, rep.deficit))
            human = (f"{task.value}  {_fmt(rep.overlap_s)}  {_fmt(rep.encoded_overlap)}  {_fmt(rep.required)}  "
                     f"{_fmt(rep.deficit)}  {_fmt(rep.linear_extension_fidelity)}")
            _emit(out, args.machine, records.obstruction_record(task.value, rep), human)
        demo = equal_superposition(task)
        fid = linear_extension_deficit(task, demo, strict=True)
        ok &= fid < 1 - 1e-6
        _emit(out, args.machine,
              {"record": "noclone-superposition", "task": task.value, "linear_extension_fidelity": fid},
              f"{task.value}  equal superposition: linear-extension fidelity {_fmt(fid)} (< 1)")
    if args.figures:
        from qdisplace.plotting import plot_deficit_curve

        plot_deficit_curve(points, Path(args.figures) / "noclone_deficit.png")
    return EXIT_OK if ok else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdisplace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--machine", action="store_true", help="line-delimited JSON records")
        sp.add_argument("--figures", metavar="DIR", help="write PNG figures into DIR")

    sp = sub.add_parser("bases", help="dump a basis family and its Gram deviation")
    sp.add_argument("--family", required=True, help=", ".join(f.value for f in BasisFamily))
    common(sp)
    sp.set_defaults(func=cmd_bases)

    sp = sub.add_parser("displace", help="run seeded displacement trials")
    sp.add_argument("--variant", default="iv", help=", ".join(VARIANTS))
    sp.add_argument("--seed", type=_seed, required=True)
    sp.add_argument("--trials", type=_positive, default=1)
    sp.add_argument("--input", default="random", help="'random' or 8 reals")
    sp.add_argument("--channel", default="X_1", help="channel basis label (default X_1)")
    common(sp)
    sp.set_defaults(func=cmd_displace)

    sp = sub.add_parser("swap", help="derive the swap pairing table and collapse")
    sp.add_argument("--variant", default="i", help=", ".join(SWAP_VARIANTS))
    sp.add_argument("--seed", type=_seed)
    sp.add_argument("--forced-outcome", help="a label such as W_1, or 'all'")
    common(sp)
    sp.set_defaults(func=cmd_swap)

    sp = sub.add_parser("noclone", help="cloning obstruction report")
    sp.add_argument("--task", default="all", help="all, " + ", ".join(t.value for t in CloneTask))
    sp.add_argument("--overlap", type=float, nargs="*", help="overlaps s in [0, 1]")
    common(sp)
    sp.set_defaults(func=cmd_noclone)

    sp = sub.add_parser("verify-paper", help="diff derived tables against the printed ones")
    sp.add_argument("--strict", action="store_true", help="exit 1 on any mismatch")
    sp.add_argument("--machine", action="store_true")
    sp.set_defaults(func=cmd_verify_paper)
    return p


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    func: Callable = args.func
    try:
        return func(args, out)
    except UsageError as exc:
        print(f"qdisplace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QDisplaceError, AssertionError, ArithmeticError) as exc:
        print(f"qdisplace: internal check failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        # bad QDISPLACE_TOLERANCE and similar configuration errors
        print(f"qdisplace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
