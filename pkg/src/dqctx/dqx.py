"""Reader for ``.dqx`` system files.

A system file is split into sections by bracketed headers.  Every statement
ends with a period and uses the rule language of :mod:`dqctx.datalog`::

    [source]
    TempNoon(patient: str, value: num, time: time, date: date).

    [context]
    TempNoon'(patient: str, value: num, time: time, date: date).
    M(patient: str, value: num, time: time, date: date, instr: str).
    Morning(t) :- ... .            % auxiliary rule over the context
    closed S.
    open M.

    [external]
    external #C(nurse: str -> year: num) binding "bf" table "certs.csv".
    external #Q(x: str -> y: str) binding "bf" procedural "lookup".

    [mapping]
    copy TempNoon -> TempNoon'.     % or: open TempNoon -> TempNoon'.
    footprint TempNoon(p, v, t, d) :- M(p, v, t, d, i), i = "Therm.".

    [cqp]
    Oral(p, d, t) :- ... .

    [quality]
    TempNoon'_P(p, v, t, d) :- TempNoon'(p, v, t, d), Oral(p, d, t).

Contextual data is read from ``<relation>.csv`` files; a missing file means
the relation starts empty.  Table paths are relative to the system file.
Procedural resolvers are looked up by name in the ``procedures`` argument.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .context import (ContextRule, ContextualSystem, Copy, CqpDef, Footprint, OpenGav,
                      QualityView)
from .datalog.parser import TokenStream
from .datalog.syntax import Rel, Rule
from .errors import DslSyntaxError, SystemDefinitionError
from .extsrc import ExternalDecl, Procedural, TableBacked
from .relmodel import KINDS, Instance, RelationSignature, load_facts

SECTIONS = ("source", "context", "external", "mapping", "cqp", "quality")


@dataclass
class SystemFile:
    """Parsed but not yet assembled contents of a system file."""
    source: list[RelationSignature] = field(default_factory=list)
    context: list[RelationSignature] = field(default_factory=list)
    context_rules: list[Rule] = field(default_factory=list)
    closed: set[str] = field(default_factory=set)
    opened: set[str] = field(default_factory=set)
    externals: list[tuple[ExternalDecl, str, str]] = field(default_factory=list)
    mappings: list = field(default_factory=list)
    cqps: list[Rule] = field(default_factory=list)
    quality: list[Rule] = field(default_factory=list)


class _Reader:
    def __init__(self, text: str):
        self.ts = TokenStream(text)

    def run(self) -> SystemFile:
        out = SystemFile()
        section = None
        ts = self.ts
        while not ts.at("EOF"):
            if ts.accept("LBRACK"):
                tok = ts.expect("IDENT")
                if tok.text not in SECTIONS:
                    raise DslSyntaxError(f"unknown section [{tok.text}]", tok.line, tok.col)
                section = tok.text
                ts.expect("RBRACK")
                continue
            if section is None:
                raise ts.error("statement outside of any section")
            getattr(self, "_" + section)(out)
        return out

    # sections -------------------------------------------------------------

    def _source(self, out: SystemFile) -> None:
        out.source.append(self._declaration())

    def _context(self, out: SystemFile) -> None:
        ts = self.ts
        for word, target in (("closed", out.closed), ("open", out.opened)):
            if ts.at("IDENT", word) and ts.peek(1).kind == "IDENT":
                ts.next()
                target.add(ts.expect("IDENT").text)
                while ts.accept("COMMA"):
                    target.add(ts.expect("IDENT").text)
                ts.expect("DOT")
                return
        if self._is_declaration():
            out.context.append(self._declaration())
        else:
            out.context_rules.append(ts.rule())

    def _external(self, out: SystemFile) -> None:
        ts = self.ts
        ts.expect("IDENT", "external")
        name_tok = ts.expect("IDENT")
        if not name_tok.text.startswith("#"):
            raise DslSyntaxError("external predicates start with '#'", name_tok.line, name_tok.col)
        ts.expect("LPAREN")
        attrs, arrow_at = [], None
        while True:
            if ts.accept("MAPSTO"):
                if arrow_at is not None:
                    raise ts.error("more than one '->' in an external declaration")
                arrow_at = len(attrs)
            attrs.append(self._attribute())
            if ts.accept("RPAREN"):
                break
            if not ts.at("MAPSTO"):
                ts.expect("COMMA")
        binding = None
        kind = ref = None
        while not ts.at("DOT"):
            word = ts.expect("IDENT")
            value = ts.expect("STRING").text[1:-1]
            if word.text == "binding":
                binding = value
            elif word.text in ("table", "procedural"):
                kind, ref = word.text, value
            else:
                raise DslSyntaxError(f"unknown external option {word.text!r}", word.line, word.col)
        ts.expect("DOT")
        if binding is None:
            if arrow_at is None:
                raise DslSyntaxError(f"{name_tok.text} needs a binding or '->'",
                                     name_tok.line, name_tok.col)
            binding = "b" * arrow_at + "f" * (len(attrs) - arrow_at)
        elif arrow_at is not None and binding != "b" * arrow_at + "f" * (len(attrs) - arrow_at):
            raise DslSyntaxError(f"binding {binding!r} contradicts the '->' position",
                                 name_tok.line, name_tok.col)
        if kind is None:
            raise DslSyntaxError(f"{name_tok.text} needs a table or procedural resolver",
                                 name_tok.line, name_tok.col)
        sig = RelationSignature.of(name_tok.text, *attrs)
        out.externals.append((ExternalDecl(name_tok.text, sig, binding), kind, ref))

    def _mapping(self, out: SystemFile) -> None:
        ts = self.ts
        word = ts.expect("IDENT")
        if word.text in ("copy", "open"):
            source = ts.expect("IDENT").text
            ts.expect("MAPSTO")
            nickname = ts.expect("IDENT").text
            ts.expect("DOT")
            out.mappings.append((Copy if word.text == "copy" else OpenGav)(source, nickname))
        elif word.text == "footprint":
            out.mappings.append(ts.rule())
        else:
            raise DslSyntaxError(f"unknown mapping kind {word.text!r}", word.line, word.col)

    def _cqp(self, out: SystemFile) -> None:
        out.cqps.append(self.ts.rule())

    def _quality(self, out: SystemFile) -> None:
        out.quality.append(self.ts.rule())

    # pieces ---------------------------------------------------------------

    def _is_declaration(self) -> bool:
        ts = self.ts
        return (ts.peek().kind == "IDENT" and ts.peek(1).kind == "LPAREN"
                and ts.peek(2).kind == "IDENT" and ts.peek(3).kind == "COLON")

    def _attribute(self) -> tuple[str, str]:
        ts = self.ts
        name = ts.expect("IDENT").text
        ts.expect("COLON")
        kind = ts.expect("IDENT")
        if kind.text not in KINDS:
            raise DslSyntaxError(f"unknown kind {kind.text!r}", kind.line, kind.col)
        return name, kind.text

    def _declaration(self) -> RelationSignature:
        ts = self.ts
        name = ts.expect("IDENT").text
        ts.expect("LPAREN")
        attrs = [self._attribute()]
        while ts.accept("COMMA"):
            attrs.append(self._attribute())
        ts.expect("RPAREN")
        ts.expect("DOT")
        return RelationSignature.of(name, *attrs)


def parse_system_text(text: str) -> SystemFile:
    return _Reader(text).run()


def assemble(parsed: SystemFile, contextual_data: Instance | None = None,
             base_dir: Path | None = None,
             procedures: Mapping[str, Callable] | None = None) -> ContextualSystem:
    procedures = procedures or {}
    base_dir = base_dir or Path(".")
    nick = {m.source: m.nickname for m in parsed.mappings if isinstance(m, (Copy, OpenGav))}
    mappings = [m for m in parsed.mappings if isinstance(m, (Copy, OpenGav))]
    for rule in (m for m in parsed.mappings if isinstance(m, Rule)):
        head = rule.head
        if head.pred in nick:  # footprint written over the source name
            rule = Rule(Rel(nick[head.pred], head.terms), rule.body)
        mappings.append(Footprint(rule))
    mappings += [ContextRule(r) for r in parsed.context_rules]
    mappings += [CqpDef(r) for r in parsed.cqps]
    mappings += [QualityView(r) for r in parsed.quality]
    resolvers = {}
    for decl, kind, ref in parsed.externals:
        if kind == "table":
            resolvers[decl.name] = TableBacked(base_dir / ref)
        elif ref in procedures:
            resolvers[decl.name] = Procedural(procedures[ref])
        else:
            raise SystemDefinitionError(f"no procedure named {ref!r} for {decl.name}")
    return ContextualSystem(
        source_schema=parsed.source,
        contextual_schema=parsed.context,
        quality_predicates={r.head.pred for r in parsed.cqps},
        external_predicates=[d for d, _, _ in parsed.externals],
        mappings=mappings,
        contextual_data=contextual_data or Instance(),
        closed_context_relations=parsed.closed,
        open_context_relations=parsed.opened,
        resolvers=resolvers,
    )


def load_system(path: str | Path, data_dir: str | Path | None = None,
                procedures: Mapping[str, Callable] | None = None) -> ContextualSystem:
    """Read a system file; contextual CSVs come from ``data_dir`` if given."""
    path = Path(path)
    parsed = parse_system_text(path.read_text(encoding="utf-8"))
    data = None
    if data_dir is not None:
        data = load_facts(data_dir, parsed.context, optional=[s.name for s in parsed.context])
    return assemble(parsed, data, path.parent, procedures)


def load_source_data(system: ContextualSystem, data_dir: str | Path) -> Instance:
    return load_facts(data_dir, system.source_schema)
