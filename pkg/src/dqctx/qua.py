"""Rewriting source queries into contextual ones, and answering them.

The rewrite runs in up to three stages:

``nickname-substitution``
    every source predicate ``R`` becomes its quality nickname ``R'_P``;
``view-unfold``
    ``R'_P`` is replaced by the bodies of its quality views;
``cqp-unfold``
    quality predicates and auxiliary context rules are unfolded as well.

The last stage is optional.  By default a quality predicate whose definition
calls an external source is left folded, so the source is only asked through
its own rule.
"""

from __future__ import annotations

from dataclasses import dataclass

from .context import ContextualSystem, ContextRule, CqpDef, QualityView, lift
from .datalog.engine import evaluate
from .datalog.syntax import Query, Rel, Rule, base_name, is_external, make_query
from .datalog.unfold import unfold_rules
from .errors import NonConjunctiveQuery, UnknownPredicate
from .relmodel import Instance

STAGES = ("nickname-substitution", "view-unfold", "cqp-unfold")


@dataclass(frozen=True)
class RewriteTrace:
    stages: tuple

    def final(self) -> Query:
        return self.stages[-1][1]

    def __getitem__(self, name: str) -> Query:
        for stage, q in self.stages:
            if stage == name:
                return q
        raise KeyError(name)

    def render(self) -> str:
        return "\n\n".join(f"% {stage}\n{q}" for stage, q in self.stages)


def known_predicates(system: ContextualSystem) -> set[str]:
    names = {s.name for s in system.source_schema} | {s.name for s in system.contextual_schema}
    names |= {d.name for d in system.external_predicates}
    names |= set(system.quality_predicates)
    names |= {r.head.pred for r in system.derived_rules()}
    return names


def _check_query(query: Query, system: ContextualSystem) -> None:
    if not query.is_ucq():
        raise NonConjunctiveQuery(
            f"only unions of conjunctive queries defining {query.answer} can be rewritten")
    known = known_predicates(system)
    for rule in query.rules:
        for p in rule.body_predicates():
            if base_name(p) not in known:
                raise UnknownPredicate(f"query uses unknown predicate {p}")


def substitute_nicknames(query: Query, system: ContextualSystem) -> Query:
    """``R`` -> ``R'_P`` throughout the query body."""
    names = {s.name: system.quality_name_of(s.name) for s in system.source_schema}

    def swap(atom):
        if isinstance(atom, Rel) and atom.pred in names:
            return Rel(names[atom.pred], atom.terms)
        return atom

    rules = [Rule(r.head, [swap(a) for a in r.body]) for r in query.rules]
    return make_query(rules, query.answer)


def _quality_atoms_last(rule: Rule, quality: frozenset) -> Rule:
    # contextual atoms and comparisons first, then quality predicates
    front = [a for a in rule.body if not (isinstance(a, Rel) and a.pred in quality)]
    back = [a for a in rule.body if isinstance(a, Rel) and a.pred in quality]
    return Rule(rule.head, front + back)


def qua_rewrite(query: Query, system: ContextualSystem,
                unfold_cqps: bool | None = None) -> tuple[Query, RewriteTrace]:
    """Rewrite ``query`` over the contextual schema.

    ``unfold_cqps``: None unfolds every quality predicate whose definition
    stays inside the context, True unfolds all of them (external atoms are
    left in place), False stops after the quality views.
    """
    _check_query(query, system)
    stages = []

    q1 = substitute_nicknames(query, system)
    stages.append((STAGES[0], q1))

    qnames = {system.quality_name_of(s.name) for s in system.source_schema}
    views = system.rules_of(QualityView)
    rules = unfold_rules(q1.rules, views, must_unfold=qnames)
    rules = [_quality_atoms_last(r, system.quality_predicates) for r in rules]
    q2 = make_query(rules, query.answer)
    stages.append((STAGES[1], q2))

    if unfold_cqps is not False:
        cqps = [r for r in system.rules_of(CqpDef)
                if unfold_cqps or not system.cqp_mentions_external(r.head.pred)]
        views = cqps + system.rules_of(ContextRule)
        q3 = make_query(unfold_rules(q2.rules, views), query.answer)
        stages.append((STAGES[2], q3))

    trace = RewriteTrace(tuple(stages))
    return trace.final(), trace


def support_rules(system: ContextualSystem) -> list[Rule]:
    """Definitions a rewritten query may still refer to."""
    return system.rules_of(ContextRule) + system.rules_of(CqpDef)


def answer_with_context(query: Query, system: ContextualSystem, d: Instance,
                        registry=None, unfold_cqps: bool | None = None,
                        contextual: Instance | None = None) -> frozenset:
    """Quality answers by rewriting, evaluated over the lifted contextual data.

    Contextual tuples implied by footprints (through their inverse rules)
    are derived alongside, so a relation such as ``M`` need not be shipped
    when the source data already determines it.
    """
    from .lci import inverse_rules

    rewritten, _ = qua_rewrite(query, system, unfold_cqps)
    if registry is None and system.external_predicates:
        registry = system.registry()
    if contextual is None:
        contextual = lift(system, d)
    program = (list(rewritten.rules) + support_rules(system)
               + inverse_rules(system.footprints))
    return evaluate(program, contextual, registry).get(query.answer)


def mentions_external(query: Query) -> bool:
    return any(is_external(base_name(p)) for r in query.rules for p in r.body_predicates())
