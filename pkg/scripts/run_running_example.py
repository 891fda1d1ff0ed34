"""Walk the running example end to end and print each intermediate result."""

from __future__ import annotations

from pathlib import Path

from dqctx.context import read_quality
from dqctx.datalog.parser import parse_query
from dqctx.dqx import load_source_data, load_system
from dqctx.lci import LciSpec, minimal_lci, quality_answers_certain
from dqctx.metrics import metric_report
from dqctx.qua import answer_with_context, qua_rewrite
from dqctx.relmodel import format_value, sorted_tuples

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "running_example"


def show(title, rows):
    print(f"{title}:")
    for r in sorted_tuples(rows):
        print("   ", ", ".join(format_value(v) for v in r))


def main() -> None:
    for data in ("data", "data_without_m"):
        print(f"== {data}")
        system = load_system(FIXTURE / "system.dqx", FIXTURE / data)
        d = load_source_data(system, FIXTURE / data)
        spec = LciSpec.of(system)
        lci = minimal_lci(spec, d)
        quality = read_quality(system, lci)
        show("quality TempNoon", quality["TempNoon"])

        query = parse_query((FIXTURE / "query.dl").read_text())
        rewritten, _ = qua_rewrite(query, system, unfold_cqps=False)
        print("rewritten query:", rewritten)
        show("answers by rewriting", answer_with_context(query, system, d))
        show("certain answers", quality_answers_certain(query, spec, d, lci=lci))

        m = metric_report(d, [quality], system, spec, lci=lci).as_dict()
        print("qm0 =", m["qm0"], " qm1 =", m["qm1"]["decimal"],
              " r =", m["jaccard_r"]["decimal"], " qm2 =", m["qm2"]["decimal"])
        print()


if __name__ == "__main__":
    main()
