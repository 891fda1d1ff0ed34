"""Inverse footprint rules, the minimal LCI, certain answers and the bounded enumerator."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import build_system, random_lci_case
from dqctx.context import lift
from dqctx.datalog.engine import evaluate
from dqctx.datalog.parser import parse_query, parse_rule
from dqctx.errors import DomainTooLarge, NonMonotoneQuery, UninvertibleView
from dqctx.lci import (LciSpec, certain_by_enumeration, enumerate_lcis_bounded,
                       inverse_rules, minimal_lci, quality_answers_certain)
from dqctx.relmodel import Instance

OPEN_R = ("[source]\nR(a: str).\n[context]\nR'(a: str).\n[mapping]\nopen R -> R'.\n"
          "[quality]\nR'_P(x) :- R'(x).")
COPY_R = OPEN_R.replace("open R", "copy R")


def lci_spec(text, contextual=None):
    return LciSpec.of(build_system(text, contextual))


class TestInverseRules:
    def test_running_footprint(self, running):
        (rule,) = inverse_rules(running[0].footprints)
        assert str(rule) == ("M(p, v, t, d, i) :- TempNoon'(p, v, t, d), "
                             "11:30 <= t, t <= 12:30, i = \"Therm.\".")

    def test_identity_footprint_says_nothing(self):
        assert inverse_rules([parse_rule("R'(x) :- R'(x).")]) == []

    def test_one_rule_per_body_atom(self):
        rules = inverse_rules([parse_rule("R'(x, y) :- A(x), B(y, x).")])
        assert [str(r) for r in rules] == ["A(x) :- R'(x, y).", "B(y, x) :- R'(x, y)."]

    def test_unexported_variable(self):
        with pytest.raises(UninvertibleView):
            inverse_rules([parse_rule("R'(x) :- O(x, y).")])

    def test_unexported_variable_in_comparison(self):
        with pytest.raises(UninvertibleView):
            inverse_rules([parse_rule("R'(x) :- O(x), x < y.")])


class TestMinimalLci:
    def test_m_recovered_from_source(self, running_without_m):
        system, d = running_without_m
        lci = minimal_lci(LciSpec.of(system), d)
        assert system.contextual_data["M"] == frozenset()
        assert len(lci["M"]) == 5
        # every recovered reading was taken with the thermometer
        assert {row[4] for row in lci["M"]} == {"Therm."}

    def test_given_m_already_covers_source(self, running):
        system, d = running
        lci = minimal_lci(LciSpec.of(system), d)
        assert lci["M"] == system.contextual_data["M"]

    def test_m_is_exactly_the_inverse_image(self, running_without_m):
        system, d = running_without_m
        spec = LciSpec.of(system)
        only = evaluate(inverse_rules(system.footprints), lift(system, d))
        assert minimal_lci(spec, d)["M"] == only["M"]

    def test_empty_source(self, running, running_without_m):
        system, d = running
        empty = d.replace({"TempNoon": set()})
        lci = minimal_lci(LciSpec.of(system), empty)
        assert lci["TempNoon'"] == frozenset()
        # the quality view reads M, which is still there
        assert len(lci["TempNoon'_P"]) == 3

        system, d = running_without_m
        lci = minimal_lci(LciSpec.of(system), d.replace({"TempNoon": set()}))
        assert lci["M"] == frozenset() and lci["TempNoon'_P"] == frozenset()

    def test_closed_relations_untouched(self, running):
        system, d = running
        lci = minimal_lci(LciSpec.of(system), d)
        for name in system.closed_context_relations:
            assert lci[name] == system.contextual_data[name]


class TestCertainAnswers:
    def test_unsatisfiable_window(self, running):
        system, d = running
        q = parse_query("Ans(p) :- TempNoon(p, v, t, d), t < 0:00.")
        assert quality_answers_certain(q, LciSpec.of(system), d) == frozenset()

    def test_non_ucq_rejected(self, running):
        system, d = running
        q = parse_query("p(x) :- TempNoon(x, v, t, d).\nAns(x) :- p(x).")
        with pytest.raises(NonMonotoneQuery):
            quality_answers_certain(q, LciSpec.of(system), d)


class TestEnumerator:
    def test_open_nickname_two_lcis(self):
        spec = lci_spec(OPEN_R)
        d = Instance({"R": {("a",)}})
        lcis = enumerate_lcis_bounded(spec, d, 2)
        assert sorted(sorted(i["R'"]) for i in lcis) == [[("_c1",), ("a",)], [("a",)]]
        q = parse_query("Ans(x) :- R(x).")
        assert certain_by_enumeration(q, spec, d, 2) == {("a",)}

    def test_fully_closed_has_one_lci(self):
        spec = lci_spec(COPY_R)
        d = Instance({"R": {("a",), ("b",)}})
        (only,) = enumerate_lcis_bounded(spec, d, 3)
        assert only == minimal_lci(spec, d)

    def test_domain_bound_below_active_domain(self):
        spec = lci_spec(OPEN_R)
        with pytest.raises(DomainTooLarge):
            enumerate_lcis_bounded(spec, Instance({"R": {("a",), ("b",), ("c",)}}), 2)

    def test_bound_out_of_range(self):
        with pytest.raises(DomainTooLarge):
            enumerate_lcis_bounded(lci_spec(OPEN_R), Instance({"R": set()}), 13)

    def test_too_many_candidates(self):
        spec = lci_spec(OPEN_R.replace("R(a: str)", "R(a: str, b: str)")
                        .replace("R'(a: str)", "R'(a: str, b: str)")
                        .replace("R'_P(x) :- R'(x)", "R'_P(x, y) :- R'(x, y)"))
        with pytest.raises(DomainTooLarge):
            enumerate_lcis_bounded(spec, Instance({"R": set()}), 5)


# -- properties ------------------------------------------------------------------

seeds = st.integers(min_value=0, max_value=5_000)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_every_bounded_lci_is_legal_and_above_the_minimum(seed):
    system, d, _ = random_lci_case(seed)
    spec = LciSpec.of(system)
    least = minimal_lci(spec, d)
    lifted = lift(system, d)
    for inst in enumerate_lcis_bounded(spec, d, 4):
        for m in system.mappings:
            nick = getattr(m, "nickname", None)
            if nick and hasattr(m, "source"):
                assert lifted[nick] <= inst[nick]
        for name in system.closed_context_relations:
            assert inst[name] == system.contextual_data[name]
        assert least <= inst


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_certain_answers_match_enumeration(seed):
    system, d, text = random_lci_case(seed)
    spec = LciSpec.of(system)
    q = parse_query(text)
    assert quality_answers_certain(q, spec, d) == certain_by_enumeration(q, spec, d, 4)
