"""Regenerate fixtures/appendix/data/MNT.csv.

MNT pairs every measurement with each nurse on duty that day who used the
same kind of instrument.  Shifts are deliberately ignored, so every nurse
working a date shows up for all of that date's readings.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from dqctx.datalog import evaluate, parse_program
from dqctx.relmodel import Instance, RelationSignature, load_facts, write_facts

ROOT = Path(__file__).resolve().parent.parent

M = RelationSignature.of("M", ("patient", "str"), ("value", "num"), ("time", "time"),
                         ("date", "date"), ("instr", "str"))
S = RelationSignature.of("S", ("date", "date"), ("shift", "str"), ("nurse", "str"))
I = RelationSignature.of("I", ("nurse", "str"), ("date", "date"), ("instr", "str"),
                         ("type", "str"))
MNT = RelationSignature.of("MNT", ("patient", "str"), ("date", "date"), ("time", "time"),
                           ("nurse", "str"), ("instr", "str"), ("type", "str"))

RULES = "MNT(p, d, t, n, i, tp) :- M(p, v, t, d, i), S(d, s, n), I(n, d, i, tp)."


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--src", type=Path, default=ROOT / "fixtures/running_example/data")
    ap.add_argument("--out", type=Path, default=ROOT / "fixtures/appendix/data")
    args = ap.parse_args()

    edb = load_facts(args.src, [M, S, I])
    mnt = evaluate(parse_program(RULES), edb)["MNT"]
    write_facts(Instance({"MNT": mnt}, {"MNT": MNT}), args.out)
    print(f"wrote {len(mnt)} rows to {args.out / 'MNT.csv'}")


if __name__ == "__main__":
    main()
