"""View unfolding for unions of conjunctive queries."""

from __future__ import annotations

from collections.abc import Iterable

from ..errors import MissingViewDefinition
from .syntax import Const, Query, Rel, Rule, Var, make_query, substitute_rule


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        if isinstance(ra, Const) and isinstance(rb, Const):
            return False
        # constants always end up as the representative
        if isinstance(rb, Const):
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def mgu(left: Iterable, right: Iterable, prefer: set[Var]) -> dict | None:
    """Most general unifier of two term lists, or None on a constant clash.

    Within a class of variables, one from ``prefer`` is kept as the
    representative so the outer rule's names survive.
    """
    uf = _UnionFind()
    pairs = list(zip(left, right))
    for a, b in pairs:
        if not uf.union(a, b):
            return None
    classes: dict = {}
    for t in [t for pair in pairs for t in pair]:
        classes.setdefault(uf.find(t), []).append(t)
    subst = {}
    for root, members in classes.items():
        if isinstance(root, Const):
            rep = root
        else:
            vars_ = [m for m in members if isinstance(m, Var)]
            preferred = [v for v in vars_ if v in prefer]
            rep = (preferred or vars_)[0]
        for m in members:
            if isinstance(m, Var) and m != rep:
                subst[m] = rep
    return subst


class _Unfolder:
    def __init__(self, views: list[Rule]):
        self.views: dict[str, list[Rule]] = {}
        for v in views:
            self.views.setdefault(v.head.pred, []).append(v)
        self.counter = 0

    def rename_apart(self, view: Rule, taken: set[str]) -> Rule:
        head_vars = set(view.head.variables())
        own = {v.name for v in view.variables()}
        mapping = {}
        for v in view.variables():
            if v in head_vars or v.name not in taken:
                continue
            self.counter += 1
            fresh = f"{v.name}_{self.counter}"
            while fresh in taken or fresh in own:
                self.counter += 1
                fresh = f"{v.name}_{self.counter}"
            mapping[v] = Var(fresh)
        # head variables are renamed too, so they cannot collide with the outer rule
        for v in head_vars:
            mapping[v] = Var(f"\0{v.name}")
        return substitute_rule(view, mapping)

    def step(self, rule: Rule) -> list[Rule] | None:
        """Unfold the first view atom of ``rule``; None when there is none."""
        for pos, atom in enumerate(rule.body):
            if isinstance(atom, Rel) and atom.pred in self.views:
                break
        else:
            return None
        outer_vars = set(rule.variables())
        taken = {v.name for v in outer_vars}
        out = []
        for view in self.views[atom.pred]:
            view = self.rename_apart(view, taken)
            subst = mgu(atom.terms, view.head.terms, outer_vars)
            if subst is None:
                continue
            body = rule.body[:pos] + view.body + rule.body[pos + 1:]
            unfolded = substitute_rule(Rule(rule.head, body), subst)
            # head variables of the view that unified only with each other
            leftovers = {v: Var(v.name[1:] + f"_{self._tick()}")
                         for v in unfolded.variables() if v.name.startswith("\0")}
            out.append(substitute_rule(unfolded, leftovers) if leftovers else unfolded)
        return out

    def _tick(self) -> int:
        self.counter += 1
        return self.counter

    def run(self, rules: Iterable[Rule]) -> list[Rule]:
        done, todo = [], list(rules)
        while todo:
            rule = todo.pop(0)
            expanded = self.step(rule)
            if expanded is None:
                done.append(rule)
            else:
                todo = expanded + todo
        return done


def unfold_rules(rules: Iterable[Rule], views: Iterable[Rule],
                 must_unfold: Iterable[str] = ()) -> list[Rule]:
    views = list(views)
    defined = {v.head.pred for v in views}
    rules = list(rules)
    used = {p for r in rules + views for p in r.body_predicates()}
    for pred in sorted(set(must_unfold)):
        if pred in used and pred not in defined:
            raise MissingViewDefinition(pred)
    return _Unfolder(views).run(rules)


def unfold(query: Query, views: Iterable[Rule], must_unfold: Iterable[str] = ()) -> Query:
    """Replace every view atom in ``query`` by the bodies of its defining rules.

    One output rule is produced per combination of view rules.  Variables of
    a view body that do not reach its head keep their names unless that
    would capture a variable already in the rule; then they get a numeric
    suffix from a counter local to this call.  Combinations whose head
    constants clash with the query are dropped.  Predicates listed in
    ``must_unfold`` that occur but have no definition raise
    :class:`MissingViewDefinition`.
    """
    rules = unfold_rules(query.rules, views, must_unfold)
    return make_query(rules, query.answer)
