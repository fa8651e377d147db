"""Command-line interface.

Subcommands: ingest, split, synth, evaluate, simulate, report.
Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .backends import RemoteBackend, evaluate, fit_baseline_backend
from .dataset import export_dataset, ingest, split, synthesize
from .errors import (
    BackendMalformedOutput,
    BackendUnavailable,
    EdgeShieldError,
    IoFailure,
)
from .flows import class_proportions
from .simulation import (
    aggregate,
    emit_report,
    events_from_jsonl,
    events_to_jsonl,
    load_scenario,
    run_scenario,
)
from .taxonomy import NUM_CLASSES, Origin, load_taxonomy


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_taxonomy_flag(parser):
    parser.add_argument(
        "--strict-paper-taxonomy",
        action="store_true",
        help="use the label tables exactly as published (keeps the id-5 collision)",
    )


def _taxonomy(args):
    return load_taxonomy(strict_printed=args.strict_paper_taxonomy)


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _backend_from_spec(args, training=None):
    spec = args.backend
    if spec == "baseline":
        if training is None:
            training = _training_dataset(args)
        return fit_baseline_backend(training, seed=args.train_seed)
    if spec.startswith("remote:"):
        return RemoteBackend(spec[len("remote:"):], timeout=args.timeout, retries=args.retries)
    raise UsageError(f"unknown backend {spec!r} (expected baseline or remote:<host:port>)")


def _training_dataset(args):
    if getattr(args, "train", None):
        dataset, _ = ingest(args.train, format=args.format, taxonomy=_taxonomy(args))
        return dataset
    spec = {label: 1.0 / NUM_CLASSES for label in range(1, NUM_CLASSES + 1)}
    return synthesize(spec, args.train_synth, args.train_seed)


def _preset_proportions(name: str, taxonomy) -> dict[int, float]:
    if name == "uniform":
        return {label: 1.0 / NUM_CLASSES for label in range(1, NUM_CLASSES + 1)}
    origin = {"toniot": Origin.TON_IOT, "iot23": Origin.IOT23}.get(name)
    if origin is None:
        raise UsageError(f"unknown preset {name!r}")
    return taxonomy.proportions(origin, normalize=True)


# --- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    dataset, report = ingest(
        args.input,
        format=args.format,
        delimiter=args.delimiter,
        taxonomy=_taxonomy(args),
        max_malformed_fraction=args.max_malformed,
    )
    print(f"rows: {report.total_rows}  accepted: {report.accepted}  malformed: {report.malformed_count}")
    for row, message in report.malformed[:10]:
        print(f"  row {row}: {message}")
    if dataset.records:
        proportions = class_proportions(dataset.records)
        for label in sorted(proportions):
            print(f"  label {label:>2}: {proportions[label]:.3f}%")
    if args.output:
        export_dataset(dataset, args.output, format=args.output_format, delimiter=args.delimiter)
        print(f"wrote {len(dataset)} records to {args.output}")
    return 0


def cmd_split(args) -> int:
    dataset, _ = ingest(args.input, format=args.format, taxonomy=_taxonomy(args))
    assignment = split(dataset, args.seed)
    out_dir = Path(args.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir}: {exc}") from exc
    for name, indices in (
        ("train", assignment.train_idx),
        ("val", assignment.val_idx),
        ("test", assignment.test_idx),
    ):
        path = out_dir / f"{args.prefix}-{name}.csv"
        export_dataset(dataset.subset(indices), path)
        print(f"{name}: {len(indices)} records -> {path}")
    mode = "stratified" if assignment.stratified else "global"
    print(f"mode: {mode}  seed: {args.seed}")
    return 0


def cmd_synth(args) -> int:
    taxonomy = load_taxonomy()
    if args.proportions:
        raw = json.loads(args.proportions)
        spec = {int(label): float(p) for label, p in raw.items()}
    else:
        spec = _preset_proportions(args.preset, taxonomy)
    dataset = synthesize(spec, args.n, args.seed, taxonomy=taxonomy)
    export_dataset(dataset, args.output, format=args.format)
    print(f"wrote {len(dataset)} synthetic records to {args.output} (seed {args.seed})")
    return 0


def cmd_evaluate(args) -> int:
    taxonomy = _taxonomy(args)
    test, _ = ingest(args.test, format=args.format, taxonomy=taxonomy)
    backend = _backend_from_spec(args)
    energy = None
    if args.energy_file:
        try:
            lines = Path(args.energy_file).read_text(encoding="utf-8").split()
        except OSError as exc:
            raise IoFailure(f"cannot read {args.energy_file}: {exc}") from exc
        energy = [float(v) for v in lines]
    cm, report = evaluate(test, backend, energy_samples=energy)
    text = report.to_kv_text()
    print(text, end="")
    print(f"confusion_total={cm.total()}")
    if args.report_out:
        _write_text(args.report_out, text)
    return 0


def cmd_simulate(args) -> int:
    from dataclasses import replace

    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.strict_paper_taxonomy:
        cfg = replace(cfg, strict_printed_taxonomy=True)
    model = cfg.backend.kind
    if args.backend:
        if args.backend == "baseline":
            cfg = replace(cfg, backend=replace(cfg.backend, kind="baseline", address=""))
        elif args.backend.startswith("remote:"):
            cfg = replace(
                cfg,
                backend=replace(
                    cfg.backend, kind="remote", address=args.backend[len("remote:"):]
                ),
            )
        else:
            raise UsageError(
                f"unknown backend {args.backend!r} (expected baseline or remote:<host:port>)"
            )
        model = args.backend
    cfg.validate()
    events, snapshot = run_scenario(cfg)
    if args.events_out:
        try:
            with open(args.events_out, "w", encoding="utf-8") as sink:
                events_to_jsonl(events, sink)
        except OSError as exc:
            raise IoFailure(f"cannot write {args.events_out}: {exc}") from exc
        print(f"wrote {len(events)} events to {args.events_out}")
    report = emit_report(snapshot, args.report_format, model=model)
    if args.report_out:
        _write_text(args.report_out, report)
        print(f"wrote report to {args.report_out}")
    else:
        print(report, end="")
    return 0


def cmd_report(args) -> int:
    try:
        with open(args.events, "r", encoding="utf-8") as stream:
            events = events_from_jsonl(stream)
    except OSError as exc:
        raise IoFailure(f"cannot read {args.events}: {exc}") from exc
    snapshot = aggregate(events)
    text = emit_report(snapshot, args.format, model=args.model)
    if args.out:
        _write_text(args.out, text)
    else:
        print(text, end="")
    return 0


# --- wiring -------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="edgeshield", description=__doc__)
    parser.add_argument("--version", action="version", version=f"edgeshield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read and validate a labeled flow file")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["delimited", "json-lines"], default="delimited")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--max-malformed", type=float, default=0.01)
    p.add_argument("--output", help="re-export the validated dataset here")
    p.add_argument("--output-format", choices=["delimited", "json-lines"], default="delimited")
    _add_taxonomy_flag(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="deterministic 60/20/20 split")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["delimited", "json-lines"], default="delimited")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--prefix", default="flows")
    _add_taxonomy_flag(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--preset", choices=["uniform", "toniot", "iot23"], default="uniform")
    group.add_argument("--proportions", help='JSON map of label id to fraction, e.g. \'{"3": 0.7, "10": 0.3}\'')
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=["delimited", "json-lines"], default="delimited")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("evaluate", help="run a backend over a labeled test set")
    p.add_argument("--test", required=True)
    p.add_argument("--format", choices=["delimited", "json-lines"], default="delimited")
    p.add_argument("--backend", default="baseline", help="baseline or remote:<host:port>")
    p.add_argument("--train", help="training dataset for the baseline backend")
    p.add_argument("--train-synth", type=int, default=4200,
                   help="size of the synthetic training set when --train is absent")
    p.add_argument("--train-seed", type=int, default=11)
    p.add_argument("--timeout", type=float, default=5.0)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--energy-file", help="whitespace-separated energy samples in joules")
    p.add_argument("--report-out")
    _add_taxonomy_flag(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="run an edge-cloud scenario")
    p.add_argument("--scenario", required=True, help="scenario config (JSON)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--backend", help="override the scenario backend: baseline or remote:<host:port>")
    p.add_argument("--events-out", help="telemetry JSON-lines output path")
    p.add_argument("--report-out")
    p.add_argument("--report-format", choices=["json", "text"], default="json")
    _add_taxonomy_flag(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="aggregate a telemetry event file into a report")
    p.add_argument("--events", required=True)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--model", default="")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (BackendUnavailable, BackendMalformedOutput) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except EdgeShieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: bad JSON input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
