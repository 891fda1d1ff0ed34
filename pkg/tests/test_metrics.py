"""Quality measures."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import READINGS, CLEAN_READINGS, row
from dqctx.errors import ContainmentViolation, EmptyBase
from dqctx.metrics import jaccard_r, metric_report, qm0, qm1, qm2, render_fraction
from dqctx.relmodel import Instance

D = Instance({"TempNoon": READINGS})
Q = Instance({"TempNoon": CLEAN_READINGS})
SMALL = Instance({"TempNoon": {row("Tom Waits", "38.5", "11:45", "Sep/5"),
                               row("Tom Waits", "37.9", "12:15", "Sep/7")}})


class TestExamples:
    def test_qm0(self):
        assert qm0(D, Q) == 2
        assert qm0(D, D) == 0

    def test_qm1(self):
        assert qm1(D, [Q]) == Fraction(2, 5)

    def test_jaccard(self):
        assert jaccard_r(D, [Q]) == Fraction(3, 5)

    def test_qm1_takes_the_largest_quality_version(self):
        assert qm1(D, [SMALL, Q]) == Fraction(2, 5)
        assert qm1(D, [SMALL]) == Fraction(3, 5)

    def test_jaccard_uses_the_common_part(self):
        assert jaccard_r(D, [SMALL, Q]) == Fraction(2, 5)

    def test_qm2_running(self, running):
        system, d = running
        assert qm2(d, system) == Fraction(2, 5)

    def test_qm2_clean_source(self, running):
        system, _ = running
        clean = Instance({"TempNoon": CLEAN_READINGS}, {s.name: s for s in system.source_schema})
        assert qm2(clean, system) == 0

    def test_empty_base(self):
        with pytest.raises(EmptyBase):
            qm1(Instance({"TempNoon": set()}), [Instance()])

    def test_quality_must_be_contained(self):
        extra = Instance({"TempNoon": CLEAN_READINGS | {row("X", "1", "1:00", "Sep/9")}})
        with pytest.raises(ContainmentViolation):
            qm1(D, [extra])

    def test_rendering(self):
        assert render_fraction(Fraction(2, 5)) == {"num": 2, "den": 5, "decimal": "0.4000"}
        assert render_fraction(Fraction(1, 3))["decimal"] == "0.3333"
        # half-even at the fourth decimal
        assert render_fraction(Fraction(1, 16000))["decimal"] == "0.0001"
        assert render_fraction(Fraction(1, 32000))["decimal"] == "0.0000"

    def test_report_per_relation(self):
        rep = metric_report(D, [Q]).as_dict()
        assert rep["per_relation"] == {"TempNoon": {"size": 5, "quality_size": 3,
                                                    "symmetric_difference": 2}}
        assert rep["qm2"] is None


# -- properties --------------------------------------------------------------------

atoms = st.integers(min_value=0, max_value=9)
rels = st.frozensets(st.tuples(atoms, atoms), min_size=1, max_size=12)


@st.composite
def base_and_quality(draw, k=1):
    d = draw(rels)
    qs = [draw(st.frozensets(st.sampled_from(sorted(d)))) for _ in range(k)]
    return Instance({"R": d}), [Instance({"R": q}) for q in qs]


@given(base_and_quality())
def test_single_quality_identities(case):
    d, (q,) = case
    assert qm1(d, [q]) == 1 - jaccard_r(d, [q])
    assert qm0(d, q) == d.size() - q.size()
    assert 0 <= qm1(d, [q]) <= 1


@given(base_and_quality(k=3), st.randoms(use_true_random=False))
def test_order_of_quality_versions_is_irrelevant(case, rnd):
    d, qs = case
    shuffled = list(qs)
    rnd.shuffle(shuffled)
    assert qm1(d, qs) == qm1(d, shuffled)
    assert jaccard_r(d, qs) == jaccard_r(d, shuffled)


@given(base_and_quality(k=2))
def test_scale_free(case):
    # a disjoint copy of everything leaves the ratios unchanged
    d, qs = case

    def doubled(inst):
        return Instance({"R": inst["R"], "R2": inst["R"]})

    assert qm1(doubled(d), [doubled(q) for q in qs]) == qm1(d, qs)
    assert jaccard_r(doubled(d), [doubled(q) for q in qs]) == jaccard_r(d, qs)
