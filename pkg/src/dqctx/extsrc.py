"""Binding-restricted external sources.

An external predicate ``#E`` is declared with a b/f pattern; ``b`` positions
are inputs that must be ground when the source is asked, ``f`` positions are
returned.  A source answers one input tuple at a time.  A single all-Null
output row is how a source says "undefined for this input"; it is logged but
never becomes a fact.
"""

from __future__ import annotations

import csv
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (BindingViolation, DuplicateSource, ResolverFailure, SchemaMismatch,
                     UnknownSource, ValueParseError)
from .relmodel import Instance, RelationSignature, format_value, parse_value, sorted_tuples


@dataclass(frozen=True)
class ExternalDecl:
    name: str
    signature: RelationSignature
    binding: str

    def __post_init__(self):
        if not self.name.startswith("#"):
            raise SchemaMismatch(f"external predicate {self.name} must start with '#'")
        if len(self.binding) != self.signature.arity or set(self.binding) - {"b", "f"}:
            raise SchemaMismatch(
                f"binding {self.binding!r} does not fit {self.name}/{self.signature.arity}")

    @property
    def inputs(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.binding) if c == "b")

    @property
    def outputs(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.binding) if c == "f")


def is_undefined(row: tuple) -> bool:
    return len(row) > 0 and all(v is None for v in row)


class TableBacked:
    """Answers by exact match of the input columns against a CSV table.

    The file uses the declaration's attribute names as header.  An input with
    no matching row gets the all-Null row back.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._rows = None

    def _load(self, decl: ExternalDecl) -> list[tuple]:
        if self._rows is None:
            sig = decl.signature
            try:
                with open(self.path, newline="", encoding="utf-8") as fh:
                    reader = csv.reader(fh)
                    header = [h.strip() for h in next(reader, [])]
                    if tuple(header) != sig.attribute_names:
                        raise SchemaMismatch(
                            f"{self.path}: header {header} does not match {decl.name}")
                    rows = []
                    for lineno, cells in enumerate(reader, start=2):
                        if not cells:
                            continue
                        if len(cells) != sig.arity:
                            raise ValueParseError(f"expected {sig.arity} cells",
                                                  decl.name, lineno, "*")
                        try:
                            rows.append(tuple(parse_value(c, a.kind)
                                              for c, a in zip(cells, sig.attributes)))
                        except ValueError as exc:
                            raise ValueParseError(str(exc), decl.name, lineno, "?") from None
            except OSError as exc:
                raise ResolverFailure(f"{decl.name}: cannot read {self.path}: {exc}") from None
            self._rows = rows
        return self._rows

    def __call__(self, decl: ExternalDecl, inputs: tuple) -> set[tuple]:
        out = {tuple(row[i] for i in decl.outputs)
               for row in self._load(decl)
               if tuple(row[i] for i in decl.inputs) == inputs}
        return out or {(None,) * len(decl.outputs)}


class Procedural:
    """Wraps a host callback ``f(inputs) -> iterable of output rows``."""

    def __init__(self, callback: Callable[[tuple], Iterable[tuple]]):
        self.callback = callback

    def __call__(self, decl: ExternalDecl, inputs: tuple) -> set[tuple]:
        rows = {tuple(r) for r in self.callback(inputs)}
        for r in rows:
            if len(r) != len(decl.outputs):
                raise ValueError(f"{decl.name} returned a row of width {len(r)}")
        return rows


@dataclass(frozen=True)
class CallEntry:
    seq: int
    source: str
    inputs: tuple
    outputs: tuple
    cached: bool

    def as_dict(self) -> dict:
        return {
            "seq": self.seq,
            "source": self.source,
            "inputs": [format_value(v) if v is not None else None for v in self.inputs],
            "outputs": [[format_value(v) if v is not None else None for v in row]
                        for row in self.outputs],
            "cached": self.cached,
        }

    def __str__(self) -> str:
        def cell(v):
            return "null" if v is None else format_value(v)
        ins = ",".join(cell(v) for v in self.inputs)
        outs = "|".join(",".join(cell(v) for v in row) for row in self.outputs)
        tag = " (cached)" if self.cached else ""
        return f"get{self.source}[{ins};{outs}]{tag}"


@dataclass
class CallLog:
    entries: list[CallEntry] = field(default_factory=list)

    def append(self, source: str, inputs: tuple, outputs: tuple, cached: bool) -> None:
        self.entries.append(CallEntry(len(self.entries) + 1, source, inputs, outputs, cached))

    def uncached(self) -> list[CallEntry]:
        return [e for e in self.entries if not e.cached]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


class Registry:
    """Named external sources plus a per-registry memo table and call log."""

    def __init__(self, memoize: bool = True):
        self.memoize = memoize
        self._decls: dict[str, ExternalDecl] = {}
        self._resolvers: dict[str, Callable] = {}
        self._cache: dict[tuple[str, tuple], tuple] = {}
        self.log = CallLog()
        self.resolver_calls: dict[str, int] = {}

    def register(self, decl: ExternalDecl, resolver) -> str:
        if decl.name in self._decls:
            raise DuplicateSource(f"external source {decl.name} already registered")
        self._decls[decl.name] = decl
        self._resolvers[decl.name] = resolver
        self.resolver_calls[decl.name] = 0
        return decl.name

    def __contains__(self, name: str) -> bool:
        return name in self._decls

    def decl(self, name: str) -> ExternalDecl:
        try:
            return self._decls[name]
        except KeyError:
            raise UnknownSource(f"no external source named {name}") from None

    @property
    def names(self) -> list[str]:
        return sorted(self._decls)

    def bindings(self) -> dict[str, str]:
        return {n: d.binding for n, d in self._decls.items()}

    def fresh(self) -> Registry:
        """Same sources, empty cache and log."""
        reg = Registry(self.memoize)
        for name in self._decls:
            reg.register(self._decls[name], self._resolvers[name])
        return reg

    def invoke(self, name: str, inputs: tuple) -> set[tuple]:
        decl = self.decl(name)
        inputs = tuple(inputs)
        if len(inputs) != len(decl.inputs):
            raise BindingViolation(
                f"{name} expects {len(decl.inputs)} inputs, got {len(inputs)}")
        if any(v is None for v in inputs):
            raise BindingViolation(f"{name} called with a non-ground input {inputs}")
        key = (name, inputs)
        if self.memoize and key in self._cache:
            rows = self._cache[key]
            self.log.append(name, inputs, rows, True)
            return set(rows)
        self.resolver_calls[name] += 1
        try:
            got = self._resolvers[name](decl, inputs)
        except (ResolverFailure, SchemaMismatch, ValueParseError) as exc:
            raise ResolverFailure(str(exc), self.log) from exc
        except Exception as exc:  # any callback failure aborts evaluation
            raise ResolverFailure(f"{name}{list(inputs)}: {exc}", self.log) from exc
        rows = tuple(sorted_tuples(got))
        if self.memoize:
            self._cache[key] = rows
        self.log.append(name, inputs, rows, False)
        return set(rows)


def derive_input_relation(rule, prefix: Instance, registry: Registry | None = None,
                          position: int | None = None) -> Instance:
    """``input(i1..in) <- a1, ..., aj`` for the external atom at ``position``.

    ``position`` indexes the body; by default the first external atom.  The
    prefix atoms are evaluated over ``prefix`` and projected onto the
    external atom's input terms.
    """
    from .datalog.engine import evaluate
    from .datalog.syntax import Rel, Rule, Var, is_external, base_name, normalize

    rule = normalize(rule)
    if position is None:
        position = next(i for i, a in enumerate(rule.body)
                        if isinstance(a, Rel) and is_external(base_name(a.pred)))
    atom = rule.body[position]
    name = base_name(atom.pred)
    if registry is not None:
        binding = registry.decl(name).binding
    else:
        binding = atom.pred.split("@", 1)[1]
    in_terms = [t for t, c in zip(atom.terms, binding) if c == "b"]
    head = Rel("input", in_terms)
    bound = {v for a in rule.body[:position] for v in a.variables()}
    if any(isinstance(t, Var) and t not in bound for t in in_terms):
        raise BindingViolation(f"input of {atom} not bound by the atoms before it")
    derived = evaluate([Rule(head, rule.body[:position])], prefix, registry)
    rows = derived.get("input")
    return Instance({"input": rows})
