"""Legal contextual instances.

An LCI extends the contextual data: it contains every lifted source tuple in
the nicknames, keeps closed relations exactly as given, grows open relations
freely, explains every nickname tuple through its footprint, and gives the
derived predicates (context rules, quality predicates, quality views) exactly
their rule-defined extensions.

Footprints are inverted into plain rules.  A footprint variable that is not
exported by its head has to be pinned by an equality with a constant; there
are no labelled nulls.  Under that restriction the least LCI is a least
model, and monotone queries are certain exactly on it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from decimal import Decimal

from .context import ContextualSystem, lift
from .datalog.engine import evaluate
from .datalog.syntax import Builtin, Const, Query, Rel, Rule, Var, constants_of
from .errors import DomainTooLarge, NonMonotoneQuery, UninvertibleView
from .qua import substitute_nicknames
from .relmodel import DateTag, Instance, Time, kind_of, value_sort_key

MAX_DOMAIN = 12
MAX_CANDIDATES = 16


def inverse_rules(footprints) -> list[Rule]:
    """One rule per contextual atom of each footprint body."""
    out = []
    for fp in footprints:
        rule = getattr(fp, "rule", fp)
        head = rule.head
        exported = set(head.variables())
        forced = {}
        for atom in rule.body:
            if isinstance(atom, Builtin) and atom.constant_binding():
                var, const = atom.constant_binding()
                forced.setdefault(var, const)
        known = exported | set(forced)
        builtins = [a for a in rule.body if isinstance(a, Builtin)]
        for b in builtins:
            loose = [v for v in b.variables() if v not in known]
            if loose:
                raise UninvertibleView(
                    f"footprint of {head.pred}: {loose[0]} in '{b}' cannot be recovered")
        for atom in rule.rel_atoms():
            if atom.pred == head.pred:
                continue  # R' <- R', ... says nothing new
            loose = [v for v in atom.variables() if v not in known]
            if loose:
                raise UninvertibleView(
                    f"footprint of {head.pred}: {loose[0]} in {atom} is neither exported "
                    "nor fixed to a constant")
            out.append(Rule(atom, [head, *builtins]))
    return out


@dataclass(frozen=True)
class LciSpec:
    system: ContextualSystem
    open_nicknames: frozenset
    partial_instance: Instance

    @classmethod
    def of(cls, system: ContextualSystem) -> LciSpec:
        return cls(system, system.open_nicknames, system.contextual_data)

    def base(self, d: Instance) -> Instance:
        """Partial instance plus the lifted source data."""
        return lift(self.system, d, self.partial_instance)

    def rules(self) -> list[Rule]:
        return inverse_rules(self.system.footprints) + self.system.derived_rules()


def minimal_lci(spec: LciSpec, d: Instance, registry=None) -> Instance:
    if registry is None and spec.system.external_predicates:
        registry = spec.system.registry()
    return evaluate(spec.rules(), spec.base(d), registry)


def _check_monotone(query: Query) -> None:
    if not query.is_ucq():
        raise NonMonotoneQuery("certain answers need a union of conjunctive queries")


def quality_answers_certain(query: Query, spec: LciSpec, d: Instance, registry=None,
                            lci: Instance | None = None) -> frozenset:
    """Answers of the nickname-substituted query on the minimal LCI."""
    _check_monotone(query)
    if lci is None:
        lci = minimal_lci(spec, d, registry)
    q = substitute_nicknames(query, spec.system)
    return evaluate(q.rules, lci).get(query.answer)


# -- bounded enumeration ----------------------------------------------------------

def _fresh(kind: str, taken: set, n: int) -> list:
    out, i = [], 0
    while len(out) < n:
        i += 1
        if kind == "str":
            v = f"_c{i}"
        elif kind == "num":
            v = Decimal(-i)
        elif kind == "time":
            v = Time(1440 - i)
        else:
            v = DateTag(f"_d{i}")
        if v not in taken:
            out.append(v)
    return out


def active_domain(spec: LciSpec, d: Instance) -> set:
    values = set()
    for inst in (d, spec.partial_instance):
        for rows in inst.values():
            for row in rows:
                values.update(v for v in row if v is not None)
    values.update(v for v in constants_of(spec.rules()) if v is not None)
    return values


def _candidates(spec: LciSpec, d: Instance, bound: int, base: Instance,
                max_candidates: int) -> list[tuple[str, tuple]]:
    adom = active_domain(spec, d)
    if len(adom) > bound:
        raise DomainTooLarge(f"active domain has {len(adom)} values, bound is {bound}")
    sigs = {s.name: s for s in spec.system.contextual_schema}
    open_rels = sorted(spec.system.open_relations() | set(spec.open_nicknames))
    by_kind: dict[str, list] = {}
    cands = []
    for name in open_rels:
        sig = sigs[name]
        cols = []
        for kind in sig.kinds:
            if kind not in by_kind:
                own = sorted((v for v in adom if kind_of(v) == kind), key=value_sort_key)
                by_kind[kind] = own + _fresh(kind, adom, bound - len(own))
            cols.append(by_kind[kind])
        for row in itertools.product(*cols):
            if row not in base.get(name):
                cands.append((name, row))
                if len(cands) > max_candidates:
                    raise DomainTooLarge(
                        f"more than {max_candidates} candidate tuples over open relations")
    return cands


def _footprints_hold(spec: LciSpec, inst: Instance) -> bool:
    checks = []
    for k, fp in enumerate(spec.system.footprints):
        head = fp.rule.head
        checks.append((head.pred, f"__fp{k}", Rule(Rel(f"__fp{k}", head.terms), fp.rule.body)))
    if not checks:
        return True
    model = evaluate([c[2] for c in checks], inst)
    return all(inst.get(pred) <= model.get(name) for pred, name, _ in checks)


def enumerate_lcis_bounded(spec: LciSpec, d: Instance, domain_bound: int,
                           max_candidates: int = MAX_CANDIDATES, registry=None) -> list[Instance]:
    """Every LCI whose open relations draw values from a domain of the given size.

    The domain of each attribute kind is the active domain of that kind,
    padded with fresh values up to ``domain_bound``.  Intended as a test
    oracle: the work is exponential in the number of candidate tuples.
    """
    if not 1 <= domain_bound <= MAX_DOMAIN:
        raise DomainTooLarge(f"domain bound must be between 1 and {MAX_DOMAIN}")
    if registry is None and spec.system.external_predicates:
        registry = spec.system.registry()
    base = spec.base(d)
    cands = _candidates(spec, d, domain_bound, base, max_candidates)
    derived = spec.system.derived_rules()
    found = []
    for mask in range(1 << len(cands)):
        extra: dict[str, set] = {}
        for bit, (name, row) in enumerate(cands):
            if mask >> bit & 1:
                extra.setdefault(name, set()).add(row)
        inst = base.replace({n: base.get(n) | rows for n, rows in extra.items()})
        if not _footprints_hold(spec, inst):
            continue
        found.append(evaluate(derived, inst, registry))
    found.sort(key=lambda i: repr(i.canonical()))
    return found


def certain_by_enumeration(query: Query, spec: LciSpec, d: Instance, domain_bound: int,
                           **kw) -> frozenset:
    """Intersection of Q' over all bounded LCIs."""
    _check_monotone(query)
    q = substitute_nicknames(query, spec.system)
    result = None
    for inst in enumerate_lcis_bounded(spec, d, domain_bound, **kw):
        ans = evaluate(q.rules, inst).get(query.answer)
        result = ans if result is None else result & ans
    return result if result is not None else frozenset()
