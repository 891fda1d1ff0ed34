"""Bottom-up evaluation.

``evaluate`` walks the predicate dependency graph in topological order.  The
programs are non-recursive, so every stratum is one predicate whose inputs
are complete when it is reached; each rule is joined exactly once, which is
what semi-naive iteration collapses to here.  ``naive=True`` instead keeps
re-applying every rule to the whole database until nothing changes; it is
slower and kept only as a cross-check.

Inside a rule, atoms are joined left to right after constant equalities are
hoisted.  Comparisons never bind.  Null never joins and never satisfies a
comparison.  External atoms are resolved in batches: the distinct ground
inputs reached so far are sent to the source in sorted order.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable
from decimal import Decimal

from ..errors import BindingViolation, KindMismatch, UnboundBuiltin, UnknownSource
from ..extsrc import is_undefined
from ..relmodel import Instance, Time, kind_of, sorted_tuples
from .syntax import (ORDERING, Builtin, Const, Program, Rel, Rule, Var, base_name,
                     is_external, normalize, render_rule)


def compare(op: str, a, b) -> bool:
    if a is None or b is None:
        return False
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if not ((isinstance(a, Decimal) and isinstance(b, Decimal))
            or (isinstance(a, Time) and isinstance(b, Time))):
        return False
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def check_kinds(rules: Iterable[Rule], signatures=None) -> None:
    """Reject orderings over text or dates, as far as can be seen statically."""
    signatures = signatures or {}
    for rule in rules:
        kinds: dict[Var, str] = {}
        for atom in rule.rel_atoms():
            sig = signatures.get(atom.pred)
            if sig is None or sig.arity != atom.arity:
                continue
            for term, kind in zip(atom.terms, sig.kinds):
                if isinstance(term, Var):
                    kinds.setdefault(term, kind)
        for atom in rule.body:
            if not isinstance(atom, Builtin) or atom.op not in ORDERING:
                continue
            for term in (atom.left, atom.right):
                kind = (kind_of(term.value) if isinstance(term, Const) else kinds.get(term))
                if kind in ("str", "date"):
                    raise KindMismatch(
                        f"ordering comparison on {kind} in rule: {render_rule(rule)}")


class _RuleEvaluator:
    def __init__(self, rule: Rule, externals):
        self.rule = normalize(rule)
        self.externals = externals

    def run(self, db) -> set[tuple]:
        """All head tuples of the rule over ``db`` (a name -> rows mapping)."""
        rule = self.rule
        bindings: list[dict] = [{}]
        bound: set[Var] = set()
        for atom in rule.body:
            if not bindings:
                break
            if isinstance(atom, Builtin):
                bindings = self._builtin(atom, bindings, bound)
            elif is_external(base_name(atom.pred)):
                bindings = self._external(atom, bindings, bound)
            else:
                bindings = self._join(atom, db.get(atom.pred, ()), bindings, bound)
            bound.update(atom.variables())
        head = rule.head.terms
        return {tuple(b[t] if isinstance(t, Var) else t.value for t in head)
                for b in bindings}

    def _builtin(self, atom: Builtin, bindings, bound):
        cb = atom.constant_binding()
        if cb and cb[0] not in bound:
            var, const = cb
            return [_extend(b, var, const.value) for b in bindings]
        for v in atom.variables():
            if v not in bound:
                raise UnboundBuiltin(
                    f"variable {v} of '{atom}' is unbound in rule: {render_rule(self.rule)}")
        left, right = atom.left, atom.right
        out = []
        for b in bindings:
            a = b[left] if isinstance(left, Var) else left.value
            c = b[right] if isinstance(right, Var) else right.value
            if compare(atom.op, a, c):
                out.append(b)
        return out

    @staticmethod
    def _join(atom: Rel, rows, bindings, bound):
        key_pos, checks, new_pos = [], [], []
        first_seen: dict[Var, int] = {}
        for i, t in enumerate(atom.terms):
            if isinstance(t, Const) or t in bound:
                key_pos.append(i)
            elif t in first_seen:
                checks.append((first_seen[t], i))
            else:
                first_seen[t] = i
                new_pos.append((i, t))
        index = defaultdict(list)
        for row in rows:
            if any(row[i] is None for i in key_pos):
                continue
            if any(row[i] != row[j] or row[i] is None for i, j in checks):
                continue
            index[tuple(row[i] for i in key_pos)].append(row)
        terms = atom.terms
        out = []
        for b in bindings:
            key = tuple(b[terms[i]] if isinstance(terms[i], Var) else terms[i].value
                        for i in key_pos)
            if any(v is None for v in key):
                continue
            for row in index.get(key, ()):
                nb = dict(b)
                for i, v in new_pos:
                    nb[v] = row[i]
                out.append(nb)
        return out

    def _external(self, atom: Rel, bindings, bound):
        name = base_name(atom.pred)
        if self.externals is None or name not in self.externals:
            raise UnknownSource(f"no resolver registered for {name}")
        decl = self.externals.decl(name)
        if decl.signature.arity != atom.arity:
            raise BindingViolation(f"{atom} does not match {name}/{decl.signature.arity}")
        terms = atom.terms
        for i in decl.inputs:
            t = terms[i]
            if isinstance(t, Var) and t not in bound:
                raise BindingViolation(
                    f"input {t} of {atom} is free in rule: {render_rule(self.rule)}")

        def inputs_of(b):
            return tuple(b[terms[i]] if isinstance(terms[i], Var) else terms[i].value
                         for i in decl.inputs)

        wanted = {inputs_of(b) for b in bindings}
        answers = {}
        for inp in sorted_tuples(wanted):
            if any(v is None for v in inp):
                continue
            answers[inp] = [r for r in self.externals.invoke(name, inp)
                            if not is_undefined(r)]
        out = []
        for b in bindings:
            for row in answers.get(inputs_of(b), ()):
                nb = dict(b)
                ok = True
                for v, i in zip(row, decl.outputs):
                    t = terms[i]
                    if isinstance(t, Const) or t in nb:
                        have = t.value if isinstance(t, Const) else nb[t]
                        if v is None or have is None or v != have:
                            ok = False
                            break
                    else:
                        nb[t] = v
                if ok:
                    out.append(nb)
        return out


def _extend(b: dict, var: Var, value) -> dict:
    nb = dict(b)
    nb[var] = value
    return nb


def _as_program(program) -> Program:
    return program if isinstance(program, Program) else Program(program)


def evaluate(program, edb: Instance | None = None, externals=None,
             naive: bool = False) -> Instance:
    """Least model of ``program`` over ``edb``.

    The result contains every edb relation (with its signature) plus one
    relation per intensional predicate.  Extensional predicates absent from
    ``edb`` are treated as empty.  ``externals`` is a
    :class:`~dqctx.extsrc.Registry` and is only needed when the program
    mentions ``#`` predicates.
    """
    program = _as_program(program)
    edb = edb if edb is not None else Instance()
    check_kinds(program.rules, edb.signatures)
    db: dict[str, set] = {name: set(rows) for name, rows in edb.items()}
    for p in program.idb:
        db.setdefault(p, set())
    evaluators = {id(r): _RuleEvaluator(r, externals) for r in program.rules}
    if naive:
        changed = True
        while changed:
            changed = False
            for r in program.rules:
                new = evaluators[id(r)].run(db) - db[r.head.pred]
                if new:
                    db[r.head.pred] |= new
                    changed = True
    else:
        for pred in program.topological_order():
            for r in program.rules_for(pred):
                db[pred] |= evaluators[id(r)].run(db)
    return Instance(db, edb.signatures)


def answers(query, edb: Instance | None = None, externals=None, naive: bool = False) -> frozenset:
    """Extension of the query's answer predicate."""
    return evaluate(query.program, edb, externals, naive).get(query.answer)
