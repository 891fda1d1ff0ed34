"""External sources: registration, memoized invocation, call log, input relations."""

from __future__ import annotations

from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import APPENDIX
from dqctx.context import lift
from dqctx.datalog.engine import evaluate
from dqctx.datalog.parser import parse_query, parse_rule
from dqctx.errors import (BindingViolation, DuplicateSource, ResolverFailure, SchemaMismatch,
                          UnknownSource)
from dqctx.extsrc import (CallLog, ExternalDecl, Procedural, Registry, TableBacked,
                          derive_input_relation, is_undefined)
from dqctx.magic import adorn, magic_rewrite, relevant_rules
from dqctx.qua import substitute_nicknames
from dqctx.relmodel import Instance, RelationSignature

CERTS = RelationSignature.of("#C", ("nurse", "str"), ("year", "num"))
DECL = ExternalDecl("#C", CERTS, "bf")


def certs_registry(**kw) -> Registry:
    reg = Registry(**kw)
    reg.register(DECL, TableBacked(APPENDIX / "certs.csv"))
    return reg


class TestDeclaration:
    def test_inputs_and_outputs(self):
        assert DECL.inputs == (0,) and DECL.outputs == (1,)

    @pytest.mark.parametrize("name, binding", [("C", "bf"), ("#C", "b"), ("#C", "bx")])
    def test_rejects(self, name, binding):
        with pytest.raises(SchemaMismatch):
            ExternalDecl(name, CERTS, binding)


class TestRegistry:
    def test_duplicate(self):
        reg = certs_registry()
        with pytest.raises(DuplicateSource):
            reg.register(DECL, TableBacked(APPENDIX / "certs.csv"))

    def test_unknown(self):
        with pytest.raises(UnknownSource):
            Registry().invoke("#Z", ("x",))

    def test_table_lookup(self):
        assert certs_registry().invoke("#C", ("Susan",)) == {(Decimal(1996),)}

    def test_missing_row_is_undefined(self):
        reg = certs_registry()
        (row,) = reg.invoke("#C", ("Joan",))
        assert is_undefined(row)
        assert str(reg.log.entries[0]) == "get#C[Joan;null]"

    def test_second_call_is_cached(self):
        reg = certs_registry()
        reg.invoke("#C", ("Cathy",))
        reg.invoke("#C", ("Cathy",))
        assert [e.cached for e in reg.log] == [False, True]
        assert reg.resolver_calls["#C"] == 1
        assert len(reg.log.uncached()) == 1

    def test_no_memo(self):
        reg = certs_registry(memoize=False)
        reg.invoke("#C", ("Cathy",))
        reg.invoke("#C", ("Cathy",))
        assert reg.resolver_calls["#C"] == 2

    def test_all_free_table(self):
        decl = ExternalDecl("#C", CERTS, "ff")
        reg = Registry()
        reg.register(decl, TableBacked(APPENDIX / "certs.csv"))
        assert len(reg.invoke("#C", ())) == 7

    def test_non_ground_input(self):
        with pytest.raises(BindingViolation):
            certs_registry().invoke("#C", (None,))

    def test_wrong_input_width(self):
        with pytest.raises(BindingViolation):
            certs_registry().invoke("#C", ("a", "b"))

    def test_failure_carries_log(self):
        def boom(inputs):
            if inputs == ("bad",):
                raise RuntimeError("down")
            return [(Decimal(1),)]
        reg = Registry()
        reg.register(DECL, Procedural(boom))
        reg.invoke("#C", ("ok",))
        with pytest.raises(ResolverFailure) as err:
            reg.invoke("#C", ("bad",))
        assert err.value.exit_code == 3
        assert [e.inputs for e in err.value.call_log] == [("ok",)]

    def test_missing_table_file(self, tmp_path):
        reg = Registry()
        reg.register(DECL, TableBacked(tmp_path / "nope.csv"))
        with pytest.raises(ResolverFailure):
            reg.invoke("#C", ("x",))

    def test_procedural_may_return_several_rows(self):
        reg = Registry()
        reg.register(DECL, Procedural(lambda i: [(Decimal(1),), (Decimal(2),)]))
        assert len(reg.invoke("#C", ("x",))) == 2

    def test_fresh_forgets_cache(self):
        reg = certs_registry()
        reg.invoke("#C", ("Cathy",))
        again = reg.fresh()
        assert len(again.log) == 0 and again.names == ["#C"]

    def test_entry_as_dict(self):
        reg = certs_registry()
        reg.invoke("#C", ("Cathy",))
        assert reg.log.entries[0].as_dict() == {
            "seq": 1, "source": "#C", "inputs": ["Cathy"], "outputs": [["2009"]],
            "cached": False}


class TestEvaluationWithExternals:
    def test_undefined_rows_never_become_facts(self):
        rule = parse_rule("p(n, y) :- a(n), #C(n, y).")
        edb = Instance({"a": {("Joan",), ("Susan",)}})
        assert evaluate([rule], edb, certs_registry()).get("p") == {("Susan", Decimal(1996))}

    def test_inputs_asked_in_sorted_order(self):
        rule = parse_rule("p(n, y) :- a(n), #C(n, y).")
        reg = certs_registry()
        evaluate([rule], Instance({"a": {("Susan",), ("Cathy",), ("Joan",)}}), reg)
        assert [e.inputs[0] for e in reg.log] == ["Cathy", "Joan", "Susan"]


class TestInputRelation:
    def _sup_model(self, appendix):
        system, d = appendix
        q1 = substitute_nicknames(parse_query((APPENDIX / "query.dl").read_text()), system)
        magic = magic_rewrite(adorn(relevant_rules(system.derived_rules(), q1), q1,
                                    system.registry()))
        model = evaluate(magic.program, lift(system, d), system.registry())
        (rule,) = [r for r in magic.rules if r.head.pred == "Certified@bbb"]
        return rule, model

    def test_sep5_nurses(self, appendix):
        rule, model = self._sup_model(appendix)
        got = derive_input_relation(rule, model)
        assert got["input"] == {("Susan",), ("Cathy",), ("Joan",)}

    def test_empty_prefix(self):
        rule = parse_rule("p(n) :- a(n, m), #C@bf(n, y).")
        reg = certs_registry()
        assert derive_input_relation(rule, Instance(), reg)["input"] == frozenset()
        assert len(reg.log) == 0

    def test_duplicate_prefix_rows_collapse(self):
        rule = parse_rule("p(n) :- a(n, m), #C@bf(n, y).")
        prefix = Instance({"a": {("Cathy", "x"), ("Cathy", "y")}})
        assert derive_input_relation(rule, prefix)["input"] == {("Cathy",)}

    def test_unguarded(self):
        with pytest.raises(BindingViolation):
            derive_input_relation(parse_rule("p(n) :- #C@bf(n, y), a(n)."), Instance())


# -- properties ------------------------------------------------------------------

names = st.sampled_from(["Ann", "Cathy", "Joan", "Susan", "Zoe", "Helen"])


@settings(max_examples=100)
@given(st.lists(names, max_size=20))
def test_cache_never_changes_answers(calls):
    memo, plain = certs_registry(), certs_registry(memoize=False)
    for n in calls:
        assert memo.invoke("#C", (n,)) == plain.invoke("#C", (n,))
    assert memo.resolver_calls["#C"] == len(set(calls))


@settings(max_examples=100)
@given(st.lists(names, max_size=20))
def test_call_log_is_deterministic(calls):
    logs = []
    for _ in range(2):
        reg = certs_registry()
        for n in calls:
            reg.invoke("#C", (n,))
        logs.append([e.as_dict() for e in reg.log])
    assert logs[0] == logs[1]


@settings(max_examples=60, deadline=None)
@given(st.sets(st.tuples(names, st.sampled_from(["x", "y", None])), max_size=8))
def test_logged_inputs_are_ground(rows):
    rule = parse_rule("p(n, y) :- a(n, m), #C(n, y).")
    reg = certs_registry()
    evaluate([rule], Instance({"a": rows}), reg)
    for entry in reg.log:
        assert all(v is not None for v in entry.inputs)


def test_log_container():
    log = CallLog()
    log.append("#C", ("a",), ((None,),), False)
    assert len(log) == 1 and log.entries[0].seq == 1
