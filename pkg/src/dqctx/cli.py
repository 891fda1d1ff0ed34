"""``dqctx`` command line.

    dqctx assess  --system S.dqx --data DIR [--out report.json]
    dqctx answer  --system S.dqx --data DIR --query Q.dl [--certain]
    dqctx rewrite --system S.dqx --query Q.dl [--unfold-cqps] [--trace]
                  [--magic [--bindings '#C=bf']]
    dqctx metrics --system S.dqx --data DIR --quality DIR [DIR ...]

The data directory holds one CSV per source relation and, optionally, one per
contextual relation.  Exit status is 0 on success, 2 for bad input and 3 when
an external source fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .context import read_quality
from .datalog.parser import parse_query
from .errors import DqctxError
from .dqx import load_system, load_source_data
from .lci import LciSpec, minimal_lci, quality_answers_certain
from .magic import adorn, magic_rewrite, relevant_rules
from .metrics import metric_report
from .qua import answer_with_context, qua_rewrite, substitute_nicknames
from .relmodel import format_value, load_facts, sorted_tuples
from .report import AssessmentReport, system_digest


def _color(code: str, text: str) -> str:
    if os.environ.get("DQCTX_COLOR", "1") == "0" or not sys.stderr.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _read_query(path: str):
    return parse_query(Path(path).read_text(encoding="utf-8"))


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.laps: dict[str, float] = {}
        self._t = time.perf_counter()

    def lap(self, name: str) -> None:
        now = time.perf_counter()
        self.laps[name] = (now - self._t) * 1000
        self._t = now

    def result(self):
        return self.laps if self.enabled else None


def _assess(system, d, clock):
    registry = system.registry()
    spec = LciSpec.of(system)
    lci = minimal_lci(spec, d, registry)
    clock.lap("lci")
    quality = read_quality(system, lci)
    metrics = metric_report(d, [quality], system, spec, registry, lci)
    clock.lap("metrics")
    return registry, lci, quality, metrics


def cmd_assess(args) -> int:
    clock = _Clock(args.timings)
    system = load_system(args.system, args.data)
    system.check_complete()
    d = load_source_data(system, args.data)
    clock.lap("load")
    registry, _, quality, metrics = _assess(system, d, clock)
    report = AssessmentReport(system_digest(system), quality, metrics, registry.log,
                              timings=clock.result())
    _write(report.to_json(), args.out)
    return 0


def cmd_answer(args) -> int:
    system = load_system(args.system, args.data)
    d = load_source_data(system, args.data)
    query = _read_query(args.query)
    registry = system.registry()
    if args.certain:
        rows = quality_answers_certain(query, LciSpec.of(system), d, registry)
    else:
        rows = answer_with_context(query, system, d, registry,
                                   True if args.unfold_cqps else None)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    for row in sorted_tuples(rows):
        writer.writerow([format_value(v) for v in row])
    if args.out:
        _, _, quality, metrics = _assess(system, d, _Clock(False))
        report = AssessmentReport(system_digest(system), quality, metrics, registry.log,
                                  answers=rows)
        _write(report.to_json(), args.out)
    return 0


def _parse_bindings(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        for part in item.split(","):
            name, sep, pattern = part.partition("=")
            if not sep or not name.strip().startswith("#") or set(pattern.strip()) - {"b", "f"}:
                raise DqctxError(f"bad binding {part!r}; expected e.g. '#C=bf'")
            out[name.strip()] = pattern.strip()
    return out


def cmd_rewrite(args) -> int:
    system = load_system(args.system)
    query = _read_query(args.query)
    if args.magic:
        bindings = {d.name: d.binding for d in system.external_predicates}
        bindings.update(_parse_bindings(args.bindings))
        q1 = substitute_nicknames(query, system)
        program = relevant_rules(system.derived_rules(), q1)
        adorned = adorn(program, q1, bindings)
        magic = magic_rewrite(adorned)
        print("% adorned")
        print(adorned)
        print()
        print("% magic")
        print(magic)
        return 0
    rewritten, trace = qua_rewrite(query, system, True if args.unfold_cqps else False)
    print(trace.render() if args.trace else rewritten)
    return 0


def cmd_metrics(args) -> int:
    system = load_system(args.system, args.data)
    d = load_source_data(system, args.data)
    qualities = [load_facts(q, system.source_schema) for q in args.quality]
    registry = system.registry()
    spec = LciSpec.of(system)
    lci = minimal_lci(spec, d, registry)
    metrics = metric_report(d, qualities, system, spec, registry, lci)
    _write(json.dumps(metrics.as_dict(), sort_keys=True, indent=2) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dqctx", description="Context-based data quality assessment.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assess", help="compute the quality instance and metrics")
    p.add_argument("--system", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.add_argument("--timings", action="store_true", help="include per-phase timings")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("answer", help="quality answers to a query")
    p.add_argument("--system", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--certain", action="store_true", help="certain answers over the minimal LCI")
    p.add_argument("--unfold-cqps", action="store_true",
                   help="also unfold quality predicates that call external sources")
    p.add_argument("--out", help="also write a JSON report here")
    p.set_defaults(func=cmd_answer)

    p = sub.add_parser("rewrite", help="print the rewritten query")
    p.add_argument("--system", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--unfold-cqps", action="store_true")
    p.add_argument("--trace", action="store_true", help="print every rewriting stage")
    p.add_argument("--magic", action="store_true", help="print adorned and magic programs")
    p.add_argument("--bindings", action="append", metavar="#E=bf")
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("metrics", help="metrics against given quality instances")
    p.add_argument("--system", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--quality", required=True, nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DqctxError as exc:
        label = _color("31", f"{type(exc).__name__}:")
        print(f"dqctx: {label} {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"dqctx: {_color('31', 'error:')} {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
