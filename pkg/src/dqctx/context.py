"""Contextual systems: source schema, contextual schema, mappings, quality views.

A source relation ``R`` is lifted into the context under a nickname ``R'``
(by default the name with a prime appended).  Its quality version is the
extension of ``R'_P``, defined by one or more quality views over contextual
relations and quality predicates.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from .datalog.engine import evaluate
from .datalog.syntax import Program, Rule, base_name, is_external
from .errors import SchemaMismatch, SystemDefinitionError
from .extsrc import ExternalDecl, Registry
from .relmodel import Instance, RelationSignature


def default_nickname(source: str) -> str:
    return source + "'"


def quality_name(nickname: str) -> str:
    return nickname + "_P"


def source_of_quality_name(name: str) -> str:
    """``TempNoon'_P`` -> ``TempNoon``."""
    if not name.endswith("_P"):
        raise SystemDefinitionError(f"quality view head {name} must end in '_P'")
    return name[:-2].rstrip("'")


# -- mappings ------------------------------------------------------------------

@dataclass(frozen=True)
class Copy:
    """``R'`` receives exactly ``R(D)``."""
    source: str
    nickname: str


@dataclass(frozen=True)
class OpenGav:
    """``R(D) ⊆ R'``; the nickname may hold more than the source shows."""
    source: str
    nickname: str


@dataclass(frozen=True)
class Footprint:
    """A nickname seen as a view over contextual relations."""
    rule: Rule

    @property
    def nickname(self) -> str:
        return self.rule.head.pred


@dataclass(frozen=True)
class QualityView:
    rule: Rule

    @property
    def source(self) -> str:
        return source_of_quality_name(self.rule.head.pred)


@dataclass(frozen=True)
class CqpDef:
    rule: Rule


@dataclass(frozen=True)
class ContextRule:
    """An auxiliary contextual predicate defined by a rule (not a quality predicate)."""
    rule: Rule


NicknameMapping = (Copy, OpenGav)
RuleMapping = (Footprint, QualityView, CqpDef, ContextRule)


@dataclass(frozen=True)
class ContextualSystem:
    source_schema: tuple[RelationSignature, ...] = ()
    contextual_schema: tuple[RelationSignature, ...] = ()
    quality_predicates: frozenset = frozenset()
    external_predicates: tuple[ExternalDecl, ...] = ()
    mappings: tuple = ()
    contextual_data: Instance = field(default_factory=Instance)
    closed_context_relations: frozenset = frozenset()
    open_context_relations: frozenset = frozenset()
    resolvers: Mapping = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for name in ("source_schema", "contextual_schema", "external_predicates", "mappings"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for name in ("quality_predicates", "closed_context_relations",
                     "open_context_relations"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        self._validate()
        sigs = {s.name: s for s in self.contextual_schema}
        data = self.contextual_data
        for name in data:
            if name not in sigs:
                raise SchemaMismatch(f"contextual data for undeclared relation {name}")
        object.__setattr__(self, "contextual_data", Instance(
            {n: data.get(n) for n in sigs}, sigs))

    # -- structure ----------------------------------------------------------

    def _validate(self) -> None:
        src = {s.name: s for s in self.source_schema}
        ctx = {s.name: s for s in self.contextual_schema}
        if len(src) != len(self.source_schema) or len(ctx) != len(self.contextual_schema):
            raise SystemDefinitionError("relation names must be unique within a schema")
        if set(src) & set(ctx):
            raise SystemDefinitionError(
                f"names shared by source and context: {sorted(set(src) & set(ctx))}")
        ext = {d.name for d in self.external_predicates}
        if len(ext) != len(self.external_predicates):
            raise SystemDefinitionError("duplicate external declaration")

        lifted: dict[str, object] = {}
        for m in self.mappings:
            if isinstance(m, NicknameMapping):
                if m.source not in src:
                    raise SystemDefinitionError(f"{m.source} is not a source relation")
                if m.source in lifted:
                    raise SystemDefinitionError(f"{m.source} has more than one nickname mapping")
                nick = ctx.get(m.nickname)
                if nick is None:
                    raise SystemDefinitionError(f"nickname {m.nickname} is not declared in the context")
                if not nick.same_shape(src[m.source]):
                    raise SchemaMismatch(f"nickname {m.nickname} does not match {m.source}")
                lifted[m.source] = m
            elif not isinstance(m, RuleMapping):
                raise SystemDefinitionError(f"unknown mapping {m!r}")

        bad = self.closed_context_relations - set(ctx)
        if bad:
            raise SystemDefinitionError(f"closed relations not in the context: {sorted(bad)}")
        both = self.closed_context_relations & self.open_context_relations
        if both:
            raise SystemDefinitionError(f"relations declared both open and closed: {sorted(both)}")

        context_heads = {m.rule.head.pred for m in self.mappings if isinstance(m, ContextRule)}
        cqp_heads = {m.rule.head.pred for m in self.mappings if isinstance(m, CqpDef)}
        if cqp_heads != set(self.quality_predicates):
            raise SystemDefinitionError(
                "quality predicates and CQP definitions disagree: "
                f"{sorted(cqp_heads ^ set(self.quality_predicates))}")
        c_names = set(ctx) | context_heads

        for m in self.mappings:
            if isinstance(m, ContextRule):
                self._check_body(m.rule, c_names | ext, "context rule")
                if m.rule.head.pred in ctx or m.rule.head.pred in src:
                    raise SystemDefinitionError(
                        f"context rule head {m.rule.head.pred} collides with a declared relation")
            elif isinstance(m, CqpDef):
                self._check_body(m.rule, c_names | ext, "CQP")
            elif isinstance(m, QualityView):
                if m.source not in src:
                    raise SystemDefinitionError(f"quality view {m.rule.head.pred} names no source")
                want = quality_name(self.nickname_of(m.source))
                if m.rule.head.pred != want:
                    raise SystemDefinitionError(
                        f"quality view for {m.source} must be named {want}")
                if m.rule.head.arity != src[m.source].arity:
                    raise SchemaMismatch(f"quality view {want} has the wrong arity")
                self._check_body(m.rule, c_names | set(self.quality_predicates), "quality view")
            elif isinstance(m, Footprint):
                if m.nickname not in {self.nickname_of(s) for s in src}:
                    raise SystemDefinitionError(
                        f"footprint head {m.nickname} is not a source nickname")
                self._check_body(m.rule, set(ctx), "footprint")
        # also catches recursion through context rules and CQPs
        Program(self.derived_rules())

    @staticmethod
    def _check_body(rule: Rule, allowed: set[str], what: str) -> None:
        for p in rule.body_predicates():
            if base_name(p) not in allowed:
                raise SystemDefinitionError(f"{what} {rule.head.pred} uses {p}, "
                                            "which is not allowed there")

    def check_complete(self) -> None:
        """Every source relation needs a quality view."""
        have = {m.source for m in self.mappings if isinstance(m, QualityView)}
        missing = sorted({s.name for s in self.source_schema} - have)
        if missing:
            raise SystemDefinitionError(f"no quality view for {', '.join(missing)}")

    # -- lookups ------------------------------------------------------------

    def source_signature(self, name: str) -> RelationSignature:
        for s in self.source_schema:
            if s.name == name:
                return s
        raise SchemaMismatch(f"unknown source relation {name}")

    def nickname_mapping(self, source: str):
        for m in self.mappings:
            if isinstance(m, NicknameMapping) and m.source == source:
                return m
        return None

    def nickname_of(self, source: str) -> str:
        m = self.nickname_mapping(source)
        return m.nickname if m else default_nickname(source)

    def quality_name_of(self, source: str) -> str:
        return quality_name(self.nickname_of(source))

    def rules_of(self, kind) -> list[Rule]:
        return [m.rule for m in self.mappings if isinstance(m, kind)]

    @property
    def footprints(self) -> list[Footprint]:
        return [m for m in self.mappings if isinstance(m, Footprint)]

    @property
    def open_nicknames(self) -> frozenset:
        return frozenset(m.nickname for m in self.mappings if isinstance(m, OpenGav))

    def derived_rules(self) -> list[Rule]:
        """Context rules, CQP definitions and quality views, in that order."""
        return (self.rules_of(ContextRule) + self.rules_of(CqpDef)
                + self.rules_of(QualityView))

    def cqp_mentions_external(self, pred: str) -> bool:
        return any(is_external(base_name(p))
                   for r in self.rules_of(CqpDef) if r.head.pred == pred
                   for p in r.body_predicates())

    def open_relations(self) -> frozenset:
        """Contextual relations an LCI may extend beyond the given data."""
        opened = set(self.open_nicknames) | set(self.open_context_relations)
        for fp in self.footprints:
            opened.update(fp.rule.body_predicates())
        return frozenset(opened - self.closed_context_relations)

    def registry(self) -> Registry:
        reg = Registry()
        for decl in self.external_predicates:
            resolver = self.resolvers.get(decl.name)
            if resolver is not None:
                reg.register(decl, resolver)
        return reg

    def with_mappings(self, extra: Iterable) -> ContextualSystem:
        quality = set(self.quality_predicates)
        extra = list(extra)
        quality.update(m.rule.head.pred for m in extra if isinstance(m, CqpDef))
        return ContextualSystem(self.source_schema, self.contextual_schema, quality,
                                self.external_predicates, self.mappings + tuple(extra),
                                self.contextual_data, self.closed_context_relations,
                                self.open_context_relations, self.resolvers)


def create_nickname_context(source_schema: Iterable[RelationSignature]) -> ContextualSystem:
    """One primed copy of every source relation, mapped exactly; nothing else."""
    source_schema = tuple(source_schema)
    nicks = tuple(s.renamed(default_nickname(s.name)) for s in source_schema)
    copies = tuple(Copy(s.name, n.name) for s, n in zip(source_schema, nicks))
    return ContextualSystem(source_schema, nicks, mappings=copies)


def lift(system: ContextualSystem, d: Instance, contextual: Instance | None = None) -> Instance:
    """Contextual data plus ``R'(D) := R(D)`` for every nickname mapping.

    ``contextual`` replaces the system's own contextual data when given.
    """
    base = system.contextual_data if contextual is None else contextual
    rels = {n: base.get(n) for n in set(base) | set(system.contextual_data)}
    for m in system.mappings:
        if not isinstance(m, NicknameMapping):
            continue
        sig = d.signature(m.source)
        if sig is not None and not sig.same_shape(system.source_signature(m.source)):
            raise SchemaMismatch(f"data for {m.source} does not match its declaration")
        rels[m.nickname] = rels.get(m.nickname, frozenset()) | d.get(m.source)
    return Instance(rels, system.contextual_data.signatures)


def read_quality(system: ContextualSystem, model: Instance) -> Instance:
    """The ``R'_P`` relations of an evaluated model, renamed back to ``R``."""
    return Instance({s.name: model.get(system.quality_name_of(s.name))
                     for s in system.source_schema},
                    {s.name: s for s in system.source_schema})


def quality_instance(system: ContextualSystem, contextual: Instance,
                     registry: Registry | None = None) -> Instance:
    """Evaluate context rules, CQPs and quality views; read off ``R'_P`` as ``R``."""
    if registry is None and system.external_predicates:
        registry = system.registry()
    return read_quality(system, evaluate(system.derived_rules(), contextual, registry))
