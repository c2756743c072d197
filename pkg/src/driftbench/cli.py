"""Command-line entry point.

Exit codes: 0 on success (timed-out runs are results, not failures), 1 on an
internal invariant violation, 2 on configuration or input errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import config as cfg
from . import data, report
from .harness import run_suite, write_event_log
from .metrics import InstrumentationError

log = logging.getLogger("driftbench")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="driftbench", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark suite and write a report")
    run.add_argument("--config", action="append", required=True, metavar="PATH")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
    run.add_argument("--out", metavar="PATH")
    run.add_argument("--format", choices=report.FORMATS, default="markdown")
    run.add_argument("--repetitions", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--timeout-seconds", type=float)
    run.add_argument("--parallel-processes", type=int, default=1)

    gen = sub.add_parser("generate", help="write a synthetic stream and its .drifts sidecar")
    gen.add_argument("--preset", required=True, choices=data.PRESETS)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n-samples", type=int)
    gen.add_argument("--out", required=True, metavar="PATH")

    rep = sub.add_parser("report", help="re-render a JSON report")
    rep.add_argument("input", metavar="JSON")
    rep.add_argument("--format", choices=report.FORMATS, default="markdown")
    rep.add_argument("--out", metavar="PATH")

    sub.add_parser("list-detectors", help="list approaches and their configuration keys")
    return ap


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    overrides = list(args.overrides)
    if args.repetitions is not None:
        overrides.append(f"repetitions={args.repetitions}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.timeout_seconds is not None:
        overrides.append(f"timeout_seconds={args.timeout_seconds}")

    configs, texts = [], []
    for path in args.config:
        raw, built = cfg.load(path, overrides)
        configs.extend(built)
        texts.append(f"# {path}\n{cfg.render(raw)}")
    records = run_suite(configs, parallel_processes=args.parallel_processes)
    rows = report.build_report(records)
    _write(report.emit(rows, args.format, "".join(texts)), args.out)
    if args.out:
        base = Path(args.out)
        for rec in records:
            name = f"{base.stem}.{rec.config.dataset.name}.{rec.config.approach.value}.events"
            write_event_log(rec, base.with_name(name))
    return 0


def _cmd_generate(args) -> int:
    params = data.preset(args.preset, args.seed)
    if args.n_samples is not None:
        params.n_samples = args.n_samples
    stream, spec = data.generate_synthetic(params, name=args.preset)
    data.write_csv(stream, args.out, spec.drift_truth)
    return 0


def _cmd_report(args) -> int:
    rows, config_text = report.rows_from_json(Path(args.input).read_text())
    _write(report.emit(rows, args.format, config_text), args.out)
    return 0


def _cmd_list() -> int:
    for approach in cfg.Approach:
        keys = [f"detector.{k}={v[1]}" for k, v in cfg.DETECTOR_KEYS.items() if approach.value in v[2]]
        handling = cfg.DEFAULT_HANDLING[approach].value
        print(f"{approach.value:<10} handling={handling}" + ("  " + " ".join(keys) if keys else ""))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "report":
            return _cmd_report(args)
        return _cmd_list()
    except cfg.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (data.DataError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except InstrumentationError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
