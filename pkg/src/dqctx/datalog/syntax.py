"""Terms, atoms, rules and programs for non-recursive Datalog with built-ins."""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Union

from ..errors import DqctxError, RecursionDetected, SafetyViolation, SchemaMismatch
from ..relmodel import DateTag, Time, Value, format_num, kind_of

COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")
ORDERING = ("<", "<=", ">", ">=")


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: Value

    def __str__(self) -> str:
        return render_constant(self.value)


Term = Union[Var, Const]


def is_var(term) -> bool:
    return isinstance(term, Var)


@dataclass(frozen=True)
class Rel:
    pred: str
    terms: tuple

    def __init__(self, pred: str, terms: Iterable = ()):
        object.__setattr__(self, "pred", pred)
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def arity(self) -> int:
        return len(self.terms)

    def variables(self) -> list[Var]:
        return [t for t in self.terms if isinstance(t, Var)]

    def __str__(self) -> str:
        return f"{self.pred}({', '.join(map(str, self.terms))})"


@dataclass(frozen=True)
class Builtin:
    op: str
    left: object
    right: object

    def __post_init__(self):
        if self.op not in COMPARISONS:
            raise ValueError(f"unknown comparison {self.op!r}")

    def variables(self) -> list[Var]:
        return [t for t in (self.left, self.right) if isinstance(t, Var)]

    def constant_binding(self) -> tuple[Var, Const] | None:
        """``(x, c)`` when this is an equality ``x = c`` or ``c = x``."""
        if self.op != "=":
            return None
        if isinstance(self.left, Var) and isinstance(self.right, Const):
            return self.left, self.right
        if isinstance(self.right, Var) and isinstance(self.left, Const):
            return self.right, self.left
        return None

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Rule:
    head: Rel
    body: tuple = ()

    def __init__(self, head: Rel, body: Iterable = ()):
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "body", tuple(body))

    def rel_atoms(self) -> list[Rel]:
        return [a for a in self.body if isinstance(a, Rel)]

    def body_predicates(self) -> list[str]:
        return [a.pred for a in self.body if isinstance(a, Rel)]

    def variables(self) -> list[Var]:
        seen: dict[Var, None] = {}
        for atom in (self.head, *self.body):
            for v in atom.variables():
                seen.setdefault(v)
        return list(seen)

    def __str__(self) -> str:
        return render_rule(self)


def range_restricted(rule: Rule) -> set[Var]:
    bound: set[Var] = set()
    for atom in rule.body:
        if isinstance(atom, Rel):
            bound.update(atom.variables())
        else:
            cb = atom.constant_binding()
            if cb:
                bound.add(cb[0])
    return bound


def check_safety(rule: Rule) -> None:
    bound = range_restricted(rule)
    for v in rule.head.variables():
        if v not in bound:
            raise SafetyViolation(v.name, render_rule(rule))


def normalize(rule: Rule) -> Rule:
    """Put the body in evaluation order.

    Constant-binding equalities (``x = c``) move to the front.  Every other
    comparison moves right after the atom that binds its last variable, so
    it is checked as early as possible and never before its inputs exist.
    A comparison whose variables are never bound keeps its relative place
    at the end.
    """
    hoisted = [a for a in rule.body if isinstance(a, Builtin) and a.constant_binding()]
    rest = [a for a in rule.body if not (isinstance(a, Builtin) and a.constant_binding())]
    bound = {v for a in hoisted for v in a.variables()}
    out, pending = list(hoisted), []
    for atom in rest:
        if isinstance(atom, Builtin):
            (out if set(atom.variables()) <= bound else pending).append(atom)
            continue
        out.append(atom)
        bound.update(atom.variables())
        ready = [b for b in pending if set(b.variables()) <= bound]
        out.extend(ready)
        pending = [b for b in pending if b not in ready]
    out.extend(pending)
    body = tuple(out)
    return rule if body == rule.body else Rule(rule.head, body)


def is_external(pred: str) -> bool:
    return pred.startswith("#")


def base_name(pred: str) -> str:
    """Strip an adornment suffix: ``#C@bf`` -> ``#C``."""
    return pred.split("@", 1)[0]


@dataclass(frozen=True)
class Program:
    """A set of rules; extensional predicates are those used but never defined.

    External predicates (``#`` prefix) are neither extensional nor intensional.
    Construction checks safety and rejects recursion.
    """

    rules: tuple = ()
    edb: frozenset = field(default=None)

    def __init__(self, rules: Iterable[Rule] = (), edb: Iterable[str] | None = None):
        rules = tuple(rules)
        object.__setattr__(self, "rules", rules)
        defined = {r.head.pred for r in rules}
        if edb is None:
            edb = {p for r in rules for p in r.body_predicates()
                   if p not in defined and not is_external(base_name(p))}
        object.__setattr__(self, "edb", frozenset(edb))
        self.topological_order()
        arities: dict[str, int] = {}
        for r in rules:
            check_safety(r)
            for atom in (r.head, *r.rel_atoms()):
                if arities.setdefault(atom.pred, atom.arity) != atom.arity:
                    raise SchemaMismatch(
                        f"{atom.pred} used with arities {arities[atom.pred]} and {atom.arity}")

    @property
    def idb(self) -> frozenset:
        return frozenset(r.head.pred for r in self.rules)

    @property
    def externals(self) -> frozenset:
        return frozenset(p for r in self.rules for p in r.body_predicates()
                         if is_external(base_name(p)))

    def rules_for(self, pred: str) -> list[Rule]:
        return [r for r in self.rules if r.head.pred == pred]

    def dependencies(self) -> dict[str, set[str]]:
        deps: dict[str, set[str]] = {p: set() for p in self.idb}
        for r in self.rules:
            deps[r.head.pred].update(p for p in r.body_predicates() if p in deps)
        return deps

    def topological_order(self) -> list[str]:
        """Intensional predicates, dependencies first; ties broken by name."""
        deps = self.dependencies()
        order: list[str] = []
        state: dict[str, int] = {}

        def visit(p: str, path: list[str]) -> None:
            st = state.get(p, 0)
            if st == 2:
                return
            if st == 1:
                raise RecursionDetected(path[path.index(p):] + [p])
            state[p] = 1
            for q in sorted(deps[p]):
                visit(q, path + [p])
            state[p] = 2
            order.append(p)

        for p in sorted(deps):
            visit(p, [])
        return order

    def __add__(self, other: Program) -> Program:
        return Program(self.rules + other.rules)

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __str__(self) -> str:
        return render_program(self.rules)


@dataclass(frozen=True)
class Query:
    answer: str
    program: Program

    @property
    def rules(self) -> tuple:
        return self.program.rules

    def is_ucq(self) -> bool:
        """True when every rule defines the answer predicate directly."""
        return all(r.head.pred == self.answer for r in self.program.rules) and \
            self.answer not in {p for r in self.program.rules for p in r.body_predicates()}

    def __str__(self) -> str:
        return render_program(self.program.rules)


def answer_predicate(rules: Iterable[Rule]) -> str:
    """The unique defined predicate that no rule body uses."""
    rules = list(rules)
    used = {p for r in rules for p in r.body_predicates()}
    sinks = sorted({r.head.pred for r in rules} - used)
    if len(sinks) != 1:
        raise DqctxError(f"cannot determine the answer predicate (candidates: {sinks})")
    return sinks[0]


def make_query(rules: Iterable[Rule], answer: str | None = None) -> Query:
    rules = tuple(rules)
    return Query(answer or answer_predicate(rules), Program(rules))


# -- rendering ---------------------------------------------------------------

_BARE_STR = re.compile(r"^[A-Z][A-Za-z0-9_]*$")


def render_constant(value: Value) -> str:
    if isinstance(value, str):
        if _BARE_STR.match(value):
            return value
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, Decimal):
        return format_num(value)
    if isinstance(value, (Time, DateTag)):
        return str(value)
    if value is None:
        return "null"
    raise TypeError(f"cannot render {value!r} (kind {kind_of(value)})")


def render_rule(rule: Rule) -> str:
    if not rule.body:
        return f"{rule.head}."
    return f"{rule.head} :- {', '.join(map(str, rule.body))}."


def render_program(rules: Iterable[Rule]) -> str:
    return "\n".join(render_rule(r) for r in rules)


# -- substitution helpers ----------------------------------------------------

def substitute_term(term, mapping: dict):
    if isinstance(term, Var):
        return mapping.get(term, term)
    return term


def substitute_atom(atom, mapping: dict):
    if isinstance(atom, Rel):
        return Rel(atom.pred, (substitute_term(t, mapping) for t in atom.terms))
    return Builtin(atom.op, substitute_term(atom.left, mapping),
                   substitute_term(atom.right, mapping))


def substitute_rule(rule: Rule, mapping: dict) -> Rule:
    return Rule(substitute_atom(rule.head, mapping),
                (substitute_atom(a, mapping) for a in rule.body))


def constants_of(rules: Iterable[Rule]) -> set:
    out = set()
    for r in rules:
        for atom in (r.head, *r.body):
            terms = atom.terms if isinstance(atom, Rel) else (atom.left, atom.right)
            out.update(t.value for t in terms if isinstance(t, Const))
    return out
