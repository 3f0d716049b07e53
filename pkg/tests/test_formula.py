"""Formula parsing, printing, and brute-force semantics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import nesykit as nk
from nesykit import formula as fm

from oracles import scan_models


def formulas(max_vars: int = 4):
    leaves = st.one_of(
        st.integers(0, max_vars - 1).map(nk.var),
        st.just(nk.true()),
        st.just(nk.false()),
    )

    def extend(children):
        return st.one_of(
            children.map(nk.not_),
            st.lists(children, min_size=1, max_size=3).map(lambda cs: nk.and_(*cs)),
            st.lists(children, min_size=1, max_size=3).map(lambda cs: nk.or_(*cs)),
            st.tuples(children, children).map(lambda ab: nk.implies(*ab)),
            st.tuples(children, children).map(lambda ab: nk.iff(*ab)),
        )

    return st.recursive(leaves, extend, max_leaves=12)


class TestParseDimacs:
    def test_single_clause_maps_to_or(self):
        f = nk.parse_dimacs("p cnf 2 1\n1 -2 0")
        assert f.kind == "or"
        assert f.var_count == 2
        assert f.children[0] == nk.var(0, 2)
        assert f.children[1].kind == "not"
        assert f.children[1].children[0].index == 1

    def test_two_unit_clauses_unsatisfiable(self):
        f = nk.parse_dimacs("p cnf 1 2\n1 0\n-1 0")
        assert f.kind == "and"
        assert len(f.children) == 2
        assert nk.enumerate_models(f).count == 0

    def test_wide_clause_has_seven_models(self):
        f = nk.parse_dimacs("p cnf 3 1\n1 2 3 0")
        assert nk.enumerate_models(f).count == 7

    def test_comments_and_clause_spanning_lines(self):
        f = nk.parse_dimacs("c header comment\np cnf 3 1\n1 2\n3 0\n")
        assert nk.enumerate_models(f).count == 7

    def test_malformed_header_reports_line(self):
        with pytest.raises(ValueError, match="line 2"):
            nk.parse_dimacs("c intro\np cnf x 1\n1 0")

    def test_literal_out_of_range_reports_line(self):
        with pytest.raises(ValueError, match="line 2.*out of range"):
            nk.parse_dimacs("p cnf 2 1\n1 3 0")

    def test_missing_terminating_zero_reports_line(self):
        with pytest.raises(ValueError, match="terminating 0"):
            nk.parse_dimacs("p cnf 2 1\n1 -2")

    def test_clause_count_mismatch(self):
        with pytest.raises(ValueError, match="declares 2 clauses"):
            nk.parse_dimacs("p cnf 2 2\n1 0")


class TestParseFormula:
    def test_implication_example(self):
        f = nk.parse_formula("(=> (and (var 0) (var 1)) (var 2))")
        assert f.kind == "=>"
        assert f.var_count == 3
        assert f.children[0].kind == "and"
        assert nk.enumerate_models(f).count == 7

    def test_tautology_over_one_var(self):
        f = nk.parse_formula("(or (var 0) (not (var 0)))")
        assert nk.enumerate_models(f).count == 2

    def test_iff_two_models_of_four(self):
        f = nk.parse_formula("(<=> (var 0) (var 1))")
        assert [a for a in nk.enumerate_models(f)] == [(0, 0), (1, 1)]

    def test_no_simplification(self):
        f = nk.parse_formula("(and (var 0) (var 0))")
        assert f.kind == "and" and len(f.children) == 2

    def test_unbalanced_parens(self):
        with pytest.raises(ValueError, match="unbalanced|missing"):
            nk.parse_formula("(and (var 0) (var 1)")

    def test_unknown_operator(self):
        with pytest.raises(ValueError, match="unknown operator"):
            nk.parse_formula("(xor (var 0) (var 1))")

    def test_bad_index(self):
        with pytest.raises(ValueError, match="bad variable index"):
            nk.parse_formula("(var -3)")

    def test_trailing_garbage(self):
        with pytest.raises(ValueError, match="trailing"):
            nk.parse_formula("(var 0) (var 1)")


class TestEvalFormula:
    def test_violating_assignment(self):
        f = nk.parse_formula("(=> (and (var 0) (var 1)) (var 2))")
        assert nk.eval_formula(f, (1, 1, 0)) is False

    def test_satisfying_assignment(self):
        f = nk.parse_formula("(=> (and (var 0) (var 1)) (var 2))")
        assert nk.eval_formula(f, (0, 1, 0)) is True

    def test_tautology_everywhere(self):
        f = nk.parse_formula("(or (var 0) (not (var 0)))")
        assert nk.eval_formula(f, (0,)) and nk.eval_formula(f, (1,))

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            nk.eval_formula(nk.var(0), (0, 1))


class TestEnumerateModels:
    def test_exactly_one_of_three(self):
        f = nk.parse_formula(
            "(and (or (var 0) (var 1) (var 2))"
            " (not (and (var 0) (var 1)))"
            " (not (and (var 0) (var 2)))"
            " (not (and (var 1) (var 2))))"
        )
        assert list(nk.enumerate_models(f)) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]

    def test_guard_rejects_large_var_count(self):
        f = nk.var(24)
        with pytest.raises(ValueError, match="24"):
            nk.enumerate_models(f)

    def test_matches_independent_scan_on_random_cnf(self):
        rng = np.random.default_rng(7)
        from oracles import random_cnf

        for _ in range(30):
            f = random_cnf(rng, 8, int(rng.integers(1, 12)))
            assert list(nk.enumerate_models(f)) == scan_models(f)


class TestInvariants:
    @settings(max_examples=150, deadline=None)
    @given(formulas())
    def test_model_counts_of_f_and_not_f_partition(self, f):
        total = nk.enumerate_models(f).count + nk.enumerate_models(nk.not_(f)).count
        assert total == 2**f.var_count

    @settings(max_examples=150, deadline=None)
    @given(formulas())
    def test_eval_agrees_with_model_membership(self, f):
        assert list(nk.enumerate_models(f)) == scan_models(f)

    @settings(max_examples=200, deadline=None)
    @given(formulas())
    def test_parse_print_round_trip(self, f):
        text = nk.format_formula(f)
        again = nk.parse_formula(text)
        assert again == nk.parse_formula(nk.format_formula(again))
        assert nk.format_formula(again) == text

    def test_model_set_count_validation(self):
        with pytest.raises(ValueError, match="count"):
            fm.ModelSet(((0,),), count=2)
