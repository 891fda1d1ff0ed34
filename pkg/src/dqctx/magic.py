"""Adornment and generalized supplementary magic sets.

Sideways information passing is fixed to left-to-right body order after
constant equalities are hoisted.  A variable is bound at an atom if it occurs
in an earlier relational atom, in a hoisted ``x = c``, or in a bound head
position; comparisons never bind.  Extensional atoms stay unadorned.  Adorned
occurrences are renamed ``pred@bf..``.

Every call site of a derived predicate gets its own adorned copy: the first
copy of ``p`` under ``bf`` is ``p@bf``, later ones ``p@bf_2``, ``p@bf_3``...
Sharing one copy between two call sites would let the magic predicate of
the second depend on the first, and through it on itself, turning a
non-recursive input into a recursive magic program.

Naming in the rewritten program: ``magic_<pred>_<adornment>`` for magic
predicates and ``sup_<k>_<i>`` for the supplementary relation after step
``i`` of adorned rule ``k``.  A run of consecutive comparisons counts as one
step.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from .datalog.engine import evaluate
from .datalog.syntax import (Builtin, Const, Program, Query, Rel, Rule, Var, base_name,
                             is_external, normalize, render_program)
from .datalog.unfold import unfold_rules
from .errors import BindingViolation
from .relmodel import Instance


def adorned_name(pred: str, adornment: str, copy: int = 1) -> str:
    return f"{pred}@{adornment}" if copy == 1 else f"{pred}@{adornment}_{copy}"


def _suffix(name: str) -> tuple[str, str]:
    pred, _, suffix = name.partition("@")
    return pred, suffix


def split_adorned(name: str) -> tuple[str, str | None]:
    """``p@bf_2`` -> ``("p", "bf")``; unadorned names give ``(name, None)``."""
    if "@" not in name:
        return name, None
    pred, suffix = _suffix(name)
    return pred, suffix.split("_", 1)[0]


def magic_name(pred: str, adornment: str) -> str:
    return f"magic_{pred}_{adornment}"


def _binding_of(name: str, bindings) -> str | None:
    if bindings is None:
        return None
    if hasattr(bindings, "decl"):
        return bindings.decl(name).binding if name in bindings else None
    return bindings.get(name)


@dataclass(frozen=True)
class AdornedProgram:
    answer: str
    query_adornment: str
    query_rules: tuple
    rules: tuple          # adorned (non-query) rules, in discovery order
    bindings: Mapping = field(default_factory=dict, compare=False)

    def adornments(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {}
        for r in self.query_rules + self.rules:
            for atom in (r.head, *r.rel_atoms()):
                pred, ad = split_adorned(atom.pred)
                if ad is not None:
                    out.setdefault(pred, set()).add(ad)
        return out

    def __str__(self) -> str:
        return render_program(self.query_rules + self.rules)


def _adorn_body(rule: Rule, bound: set[Var], idb: set[str], bindings,
                todo: list, copies: dict) -> Rule:
    body = []
    bound = set(bound)
    for atom in rule.body:
        if isinstance(atom, Builtin):
            cb = atom.constant_binding()
            if cb:
                bound.add(cb[0])
            body.append(atom)
            continue
        pattern = "".join("b" if isinstance(t, Const) or t in bound else "f"
                          for t in atom.terms)
        if is_external(atom.pred):
            required = _binding_of(atom.pred, bindings)
            if required is None:
                raise BindingViolation(f"no binding pattern declared for {atom.pred}")
            if len(required) != atom.arity:
                raise BindingViolation(f"binding {required!r} does not fit {atom}")
            for pos, (need, have) in enumerate(zip(required, pattern)):
                if need == "b" and have == "f":
                    raise BindingViolation(
                        f"argument {pos + 1} of {atom} must be bound, but "
                        f"{atom.terms[pos]} is free at that point")
            body.append(Rel(adorned_name(atom.pred, required), atom.terms))
        elif atom.pred in idb:
            n = copies[atom.pred, pattern] = copies.get((atom.pred, pattern), 0) + 1
            name = adorned_name(atom.pred, pattern, n)
            todo.append((atom.pred, pattern, name))
            body.append(Rel(name, atom.terms))
        else:
            body.append(atom)
        bound.update(atom.variables())
    return Rule(rule.head, body)


def adorn(program, query: Query, bindings=None) -> AdornedProgram:
    """Propagate bindings from the query through ``program``.

    ``program`` holds the rules for the predicates the query depends on; it
    may be a :class:`Program` or a list of rules.  ``bindings`` maps external
    predicate names to their b/f pattern (a registry works too).
    """
    rules = [normalize(r) for r in (program.rules if isinstance(program, Program) else program)]
    idb = {r.head.pred for r in rules}
    todo: list[tuple[str, str, str]] = []
    copies: dict[tuple[str, str], int] = {}

    query_rules = []
    q_ad = None
    for r in (normalize(r) for r in query.rules):
        ad = "".join("b" if isinstance(t, Const) else "f" for t in r.head.terms)
        q_ad = q_ad or ad
        query_rules.append(_adorn_body(r, set(), idb, bindings, todo, copies))

    adorned = []
    while todo:
        pred, ad, name = todo.pop(0)
        for r in rules:
            if r.head.pred != pred:
                continue
            bound = {t for t, c in zip(r.head.terms, ad) if c == "b" and isinstance(t, Var)}
            body_rule = _adorn_body(r, bound, idb, bindings, todo, copies)
            adorned.append(Rule(Rel(name, r.head.terms), body_rule.body))
    return AdornedProgram(query.answer, q_ad or "", tuple(query_rules), tuple(adorned),
                          dict(bindings.bindings() if hasattr(bindings, "bindings")
                               else (bindings or {})))


def check_input_guarded(rule: Rule, externals=None) -> bool:
    """Every input variable of an external atom must be bound beforehand.

    It counts as bound if it occurs in an earlier non-external atom, in an
    output position of an earlier external atom, or in a hoisted ``x = c``.
    Without a pattern from ``externals`` the adornment suffix of the atom
    (``#E@bf``) is used.
    """
    rule = normalize(rule)
    bound: set[Var] = set()
    for atom in rule.body:
        if isinstance(atom, Builtin):
            cb = atom.constant_binding()
            if cb:
                bound.add(cb[0])
            continue
        name, suffix = split_adorned(atom.pred)
        if not is_external(name):
            bound.update(atom.variables())
            continue
        pattern = _binding_of(name, externals) or suffix
        if pattern is None:
            return False
        for t, c in zip(atom.terms, pattern):
            if c == "b" and isinstance(t, Var) and t not in bound:
                return False
        bound.update(t for t, c in zip(atom.terms, pattern) if c == "f" and isinstance(t, Var))
    return True


# -- rewriting ------------------------------------------------------------------

@dataclass(frozen=True)
class MagicProgram:
    answer: str
    seeds: tuple
    rules: tuple          # everything, seeds first and query rules last

    @property
    def program(self) -> Program:
        return Program(self.rules)

    def __str__(self) -> str:
        return render_program(self.rules)

    def __len__(self) -> int:
        return len(self.rules)


def _steps(body) -> list[list]:
    steps: list[list] = []
    for atom in body:
        if isinstance(atom, Builtin) and steps and isinstance(steps[-1][0], Builtin):
            steps[-1].append(atom)
        else:
            steps.append([atom])
    return steps


def _vars(atoms) -> list[Var]:
    seen: dict[Var, None] = {}
    for a in atoms:
        for v in a.variables():
            seen.setdefault(v)
    return list(seen)


def _is_idb_occurrence(atom) -> bool:
    if not isinstance(atom, Rel):
        return False
    pred, ad = split_adorned(atom.pred)
    return ad is not None and not is_external(pred)


def _magic_atom(atom: Rel) -> Rel:
    pred, suffix = _suffix(atom.pred)
    _, ad = split_adorned(atom.pred)
    return Rel(magic_name(pred, suffix), [t for t, c in zip(atom.terms, ad) if c == "b"])


def _rewrite_rule(k: int, rule: Rule) -> list[Rule]:
    head = rule.head
    _, ad = split_adorned(head.pred)
    magic_p = _magic_atom(head)
    head_bound = [t for t, c in zip(head.terms, ad) if c == "b" and isinstance(t, Var)]
    steps = _steps(rule.body)
    order = list(dict.fromkeys(head_bound + _vars(rule.body)))

    sups, magic_rules = [], []
    prev = magic_p
    bound = set(head_bound)
    for i, step in enumerate(steps, start=1):
        for atom in step:
            if _is_idb_occurrence(atom):
                magic_rules.append(Rule(_magic_atom(atom), [prev]))
        bound.update(v for a in step for v in a.variables())
        needed = set(head.variables()) | set(_vars([a for s in steps[i:] for a in s]))
        args = [v for v in order if v in bound and v in needed]
        sup = Rel(f"sup_{k}_{i}", args)
        sups.append(Rule(sup, [prev, *step]))
        prev = sup
    return sups + [Rule(head, [prev])] + magic_rules


def _seeds(query_rules) -> list[Rule]:
    seeds = []
    for r in query_rules:
        for pos, atom in enumerate(r.body):
            if _is_idb_occurrence(atom):
                seeds.append(Rule(_magic_atom(atom), r.body[:pos]))
    return seeds


def _is_sup(pred: str) -> bool:
    return pred.startswith("sup_")


def simplify(rules: list[Rule], keep_order: bool = True) -> list[Rule]:
    """Inline supplementary relations that are a rule's only body atom.

    Runs to a fixpoint, then drops supplementary relations no longer used.
    """
    rules = list(rules)
    while True:
        defs: dict[str, list[Rule]] = {}
        for r in rules:
            defs.setdefault(r.head.pred, []).append(r)
        for idx, r in enumerate(rules):
            if (len(r.body) == 1 and isinstance(r.body[0], Rel) and _is_sup(r.body[0].pred)
                    and len(defs.get(r.body[0].pred, ())) == 1):
                rules[idx] = unfold_rules([r], defs[r.body[0].pred])[0]
                break
        else:
            break
    while True:
        used = {p for r in rules for p in r.body_predicates()}
        kept = [r for r in rules if not _is_sup(r.head.pred) or r.head.pred in used]
        if len(kept) == len(rules):
            return kept
        rules = kept


def magic_rewrite(adorned: AdornedProgram, inline: bool = True) -> MagicProgram:
    seeds = _seeds(adorned.query_rules)
    body = []
    for k, rule in enumerate(adorned.rules, start=1):
        body.extend(_rewrite_rule(k, rule))
    rules = seeds + body + list(adorned.query_rules)
    if inline:
        rules = simplify(rules)
    return MagicProgram(adorned.answer, tuple(seeds), tuple(rules))


def evaluate_magic(magic: MagicProgram, edb: Instance, externals=None) -> Instance:
    """Bottom-up evaluation of the rewritten program."""
    return evaluate(magic.program, edb, externals)


def magic_answers(program, query: Query, edb: Instance, externals=None,
                  bindings=None) -> frozenset:
    if bindings is None:
        bindings = externals
    mp = magic_rewrite(adorn(program, query, bindings))
    return evaluate_magic(mp, edb, externals).get(query.answer)


def relevant_rules(rules: Iterable[Rule], query: Query) -> list[Rule]:
    """The rules the query's answer can depend on."""
    rules = list(rules)
    need = {p for r in query.rules for p in r.body_predicates()}
    out, frontier = [], list(need)
    while frontier:
        p = frontier.pop()
        for r in rules:
            if r.head.pred == p and r not in out:
                out.append(r)
                for q in r.body_predicates():
                    if q not in need:
                        need.add(q)
                        frontier.append(q)
    return [r for r in rules if r in out]
