"""Command-line entry point: analyze, profile, train, instrument, simulate, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .ir.interp import IRRuntimeError
from .ir.normalize import normalize_loops
from .ir.parser import IRError, parse_program


def _load_program(path: str):
    return normalize_loops(parse_program(Path(path).read_text()))


def _load_inputs(path: str) -> list[dict]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not all(isinstance(x, dict) for x in data):
        raise ValueError(f"{path}: expected a JSON object or a list of objects")
    return data


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(a) -> int:
    from .pipeline import static_artifacts

    program = _load_program(a.program)
    art = static_artifacts(program)
    lines = []
    for nid, an in art.analyses.items():
        d = an.to_json()
        d["footprint"] = art.footprints[nid].to_json()["expressions"]
        d["reuse"] = art.reuse[nid].klass.value
        d["srd"] = [e.to_json() for e in art.reuse[nid].evidence]
        lines.append(json.dumps(d, sort_keys=True, ensure_ascii=False) + "\n")
    _write("".join(lines), a.out)
    return 0


def cmd_profile(a) -> int:
    from .ir.interp import write_profile_csv
    from .pipeline import profile

    program = _load_program(a.program)
    records = profile(program, _load_inputs(a.inputs))
    if a.out:
        with open(a.out, "w", newline="") as fh:
            write_profile_csv(records, fh)
    else:
        write_profile_csv(records, sys.stdout)
    return 0


def cmd_train(a) -> int:
    from .ir.interp import read_profile_csv
    from .pipeline import profile, train

    program = _load_program(a.program)
    if a.profile:
        with open(a.profile, newline="") as fh:
            records = read_profile_csv(fh)
    elif a.inputs:
        records = profile(program, _load_inputs(a.inputs))
    else:
        raise ValueError("train needs --profile or --inputs")
    art = train(program, records, a.threshold, a.seed)
    art.models.dump(a.out)
    print(f"trained {len(art.models.nests)} nest models -> {a.out}", file=sys.stderr)
    return 0


def cmd_instrument(a) -> int:
    from .instrument import instrumented_text
    from .pipeline import instrument, static_artifacts
    from .predictors.models import ProgramModels

    program = _load_program(a.program)
    models = ProgramModels.load(a.models, program)
    art = static_artifacts(program, models)
    ip = instrument(art, a.min_footprint, a.min_time)
    _write(instrumented_text(ip), a.out)
    if a.table:
        Path(a.table).write_text(json.dumps(ip.table_json(), indent=1, sort_keys=True) + "\n")
    for w in ip.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_simulate(a) -> int:
    from .config import load_experiment
    from .sim.checks import check_all
    from .sim.engine import Engine

    exp = load_experiment(a.config)
    out = Path(a.out or f"{exp.name}-out")
    out.mkdir(parents=True, exist_ok=True)
    schedulers = a.scheduler or exp.schedulers
    seeds = a.seed if a.seed is not None else exp.seeds
    status = 0
    for seed in seeds:
        procs = exp.processes(seed)
        for name in schedulers:
            sched = exp.scheduler(name)
            res = Engine(exp.machine, procs, sched, seed=seed).run()
            stem = out / f"{name}-seed{seed}"
            res.trace.write_csv(stem.with_suffix(".csv"))
            res.trace.write_journal(stem.with_suffix(".journal"))
            line = f"{name} seed={seed} jobs={len(procs)} makespan={res.makespan}"
            if a.check and sched.consumes_beacons:
                bad = {k: len(v) for k, v in check_all(res.trace).items() if v}
                line += " checks=" + ("ok" if not bad else json.dumps(bad, sort_keys=True))
                status |= int(bool(bad))
            print(line)
    return status


def cmd_report(a) -> int:
    from .report import build_report
    from .sim.trace import Trace

    traces = {}
    for p in a.traces:
        t = Trace.read_journal(p) if p.endswith(".journal") else Trace.read_csv(p)
        traces[Path(p).stem if a.names is None else a.names[len(traces)]] = t
    baseline = Path(a.baseline).stem if a.baseline in a.traces else a.baseline
    rep, hist = build_report(traces, baseline, benchmark=a.benchmark, bin_width=a.bin_width)
    _write(rep.to_csv(), a.out)
    if a.histogram:
        Path(a.histogram).write_text(hist.to_csv())
        if a.gnuplot:
            Path(a.gnuplot).write_text(hist.gnuplot(a.histogram))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="beacons", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="loop classes, model parameters, footprints, reuse")
    p.add_argument("program")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("profile", help="run the interpreter and write per-nest profile CSV")
    p.add_argument("program")
    p.add_argument("--inputs", required=True, help="JSON file: an object or a list of input bindings")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_profile)

    p = sub.add_parser("train", help="fit timing and trip-count models")
    p.add_argument("program")
    p.add_argument("--profile", help="profile CSV from the profile subcommand")
    p.add_argument("--inputs", help="JSON inputs file to profile on the fly")
    p.add_argument("--threshold", type=int, default=5,
                   help="rows above which a decision tree is used (default 5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("instrument", help="place, hoist and filter beacons")
    p.add_argument("program")
    p.add_argument("--models", required=True)
    p.add_argument("--min-footprint", type=float, default=32768)
    p.add_argument("--min-time", type=float, default=10000)
    p.add_argument("--table", help="write the beacon table as JSON")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_instrument)

    p = sub.add_parser("simulate", help="run an experiment config; write trace CSV and journal")
    p.add_argument("config")
    p.add_argument("-o", "--out", help="output directory (default <name>-out)")
    p.add_argument("--scheduler", action="append", help="override the scheduler list")
    p.add_argument("--seed", type=int, action="append", help="override the seed list")
    p.add_argument("--check", action="store_true", help="check BES trace invariants; exit 1 on violations")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("report", help="normalized throughput and completion histogram")
    p.add_argument("traces", nargs="+", help="trace CSV or .journal files")
    p.add_argument("--baseline", required=True, help="trace file or name used as baseline")
    p.add_argument("--names", nargs="+", help="names for the traces (default: file stems)")
    p.add_argument("--benchmark", default="")
    p.add_argument("--bin-width", type=int)
    p.add_argument("--histogram", help="write the completion histogram CSV here")
    p.add_argument("--gnuplot", help="write a gnuplot script for the histogram")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, ValueError, KeyError, IRError, IRRuntimeError) as e:
        print(f"beacons {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
