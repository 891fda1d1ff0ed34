"""Quality measures comparing an instance with its quality versions."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction

from .datalog.syntax import Rel, Rule, Var, make_query
from .errors import ContainmentViolation, EmptyBase
from .relmodel import Instance


def render_fraction(x: Fraction) -> dict:
    dec = (Decimal(x.numerator) / Decimal(x.denominator)).quantize(
        Decimal("0.0001"), rounding=ROUND_HALF_EVEN)
    return {"num": x.numerator, "den": x.denominator, "decimal": f"{dec:.4f}"}


def _size(d: Instance) -> int:
    n = d.size()
    if n == 0:
        raise EmptyBase("the instance under assessment is empty")
    return n


def qm0(d: Instance, quality: Instance) -> int:
    return sum(len(d.get(r) ^ quality.get(r)) for r in sorted(set(d) | set(quality)))


def _contained(d: Instance, q: Instance) -> None:
    for name in q:
        extra = q.get(name) - d.get(name)
        if extra:
            raise ContainmentViolation(
                f"quality version of {name} has {len(extra)} tuples not in the instance")


def qm1(d: Instance, qualities: list[Instance]) -> Fraction:
    if not qualities:
        raise ValueError("need at least one quality instance")
    n = _size(d)
    for q in qualities:
        _contained(d, q)
    return Fraction(n - max(q.size() for q in qualities), n)


def jaccard_r(d: Instance, qualities: list[Instance]) -> Fraction:
    if not qualities:
        raise ValueError("need at least one quality instance")
    n = _size(d)
    common = sum(len(frozenset.intersection(*(q.get(r) for q in qualities))) for r in d)
    return Fraction(common, n)


def qm2(d: Instance, system, spec=None, registry=None, lci=None) -> Fraction:
    """Share of tuples that are not quality answers to ``Ans_R(x) <- R(x)``."""
    from .lci import LciSpec, minimal_lci, quality_answers_certain

    n = _size(d)
    spec = spec or LciSpec.of(system)
    if lci is None:
        lci = minimal_lci(spec, d, registry)
    bad = 0
    for sig in system.source_schema:
        xs = [Var(f"x{i}") for i in range(sig.arity)]
        q = make_query([Rule(Rel(f"Ans_{sig.name}", xs), [Rel(sig.name, xs)])])
        bad += len(d.get(sig.name) - quality_answers_certain(q, spec, d, lci=lci))
    return Fraction(bad, n)


@dataclass
class MetricReport:
    qm0: int
    qm1: Fraction
    r: Fraction
    qm2: Fraction | None
    per_relation: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "qm0": self.qm0,
            "qm1": render_fraction(self.qm1),
            "jaccard_r": render_fraction(self.r),
            "qm2": render_fraction(self.qm2) if self.qm2 is not None else None,
            "per_relation": {
                name: {"size": s, "quality_size": q, "symmetric_difference": sd}
                for name, (s, q, sd) in sorted(self.per_relation.items())
            },
        }


def metric_report(d: Instance, qualities: list[Instance], system=None, spec=None,
                  registry=None, lci=None) -> MetricReport:
    """All measures at once.  ``qm0`` uses the first quality instance."""
    first = qualities[0]
    per = {name: (len(d.get(name)), len(first.get(name)), len(d.get(name) ^ first.get(name)))
           for name in d}
    m2 = qm2(d, system, spec, registry, lci) if system is not None else None
    return MetricReport(qm0(d, first), qm1(d, qualities), jaccard_r(d, qualities), m2, per)
