"""Count external calls for the appendix query, with and without magic sets."""

from __future__ import annotations

from pathlib import Path

from dqctx.context import lift
from dqctx.datalog.engine import evaluate
from dqctx.datalog.parser import parse_query
from dqctx.dqx import load_source_data, load_system
from dqctx.magic import adorn, evaluate_magic, magic_rewrite, relevant_rules
from dqctx.qua import substitute_nicknames

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "appendix"


def main() -> None:
    system = load_system(FIXTURE / "system.dqx", FIXTURE / "data")
    d = load_source_data(system, FIXTURE / "data")
    edb = lift(system, d)
    q1 = substitute_nicknames(parse_query((FIXTURE / "query.dl").read_text()), system)
    program = relevant_rules(system.derived_rules(), q1)

    magic_reg = system.registry()
    magic = magic_rewrite(adorn(program, q1, magic_reg))
    evaluate_magic(magic, edb, magic_reg)

    plain_reg = system.registry()
    evaluate(program + list(q1.rules), edb, plain_reg)

    for label, reg in (("magic", magic_reg), ("plain", plain_reg)):
        calls = reg.log.uncached()
        print(f"{label:6} {len(calls):3} calls")
        for entry in calls:
            print("      ", entry)


if __name__ == "__main__":
    main()
