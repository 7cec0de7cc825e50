from fractions import Fraction
from pathlib import Path

import pytest
import sympy

import gvlam
from gvlam.parser import parse_term
from gvlam.quantale import SymbolicBound
from gvlam.theory import (ParamOpFamily, TheoryError, load_theory,
                          load_theory_text, subst_tokens)
from gvlam.vequation import ProofError, axiom_instantiate

DATA = Path(gvlam.__file__).parent / "data"

TIMED = load_theory(str(DATA / "timed.thy"))
PROB = load_theory(str(DATA / "prob.thy"))


def test_timed_theory_shape():
    assert TIMED.symmetric
    assert TIMED.quantale.kind == "metric"
    assert "X" in TIMED.signature.grounds
    assert set(TIMED.axioms) >= {"wait", "wait_zero", "wait_sum"}
    assert TIMED.signature.lookup("wait_3") is not None


def test_prob_theory_shape():
    assert "real" in PROB.signature.grounds
    assert set(PROB.axioms) >= {"diaconis", "gaussians", "magpair"}
    args, result = PROB.signature.lookup("replace_2_1_1")
    assert args and result is not None
    assert PROB.signature.lookup("iid_normal_4") is not None


def test_subst_tokens():
    assert subst_tokens("wait_n(x)", {"n": 3}) == "wait_3(x)"
    assert subst_tokens("replace_k_m_n(unit)", {"k": 2, "m": 1, "n": 1}) \
        == "replace_2_1_1(unit)"
    assert subst_tokens("other(x)", {"n": 3}) == "other(x)"


def test_param_op_family():
    fam = ParamOpFamily("wait", ("n",), ("X",), "X")
    assert fam.match("wait_7")
    assert not fam.match("wait")
    assert not fam.match("wait_x")
    assert not fam.match("wait_1_2")
    args, result = fam.sort("wait_7")
    assert args == (result,)
    fam2 = ParamOpFamily("iid_normal", ("k",), ("real", "real"), "!k real")
    _, res = fam2.sort("iid_normal_3")
    assert res.grade == 3


def test_wait_axiom_instances():
    inst = axiom_instantiate(TIMED, "wait", {"n": 3, "m": 7})
    assert inst.bound == Fraction(4)
    assert inst.lhs == parse_term("wait_3(x)")
    assert inst.rhs == parse_term("wait_7(x)")

    zero = axiom_instantiate(TIMED, "wait_zero", {})
    assert zero.bound == Fraction(0)
    assert zero.rhs == parse_term("x")

    summed = axiom_instantiate(TIMED, "wait_sum", {"n": 2, "m": 5})
    assert summed.lhs == parse_term("wait_2(wait_5(x))")
    assert summed.rhs == parse_term("wait_7(x)")
    assert summed.bound == Fraction(0)


def test_wait_axiom_rejects_bad_params():
    with pytest.raises(ProofError, match="missing"):
        axiom_instantiate(TIMED, "wait", {"n": 1})
    with pytest.raises(ProofError, match="natural"):
        axiom_instantiate(TIMED, "wait", {"n": 1, "m": -2})
    with pytest.raises(ProofError, match="unknown axiom"):
        axiom_instantiate(TIMED, "diaconis", {"k": 1, "m": 1, "n": 1})


def test_wait_candidates():
    fam = TIMED.axioms["wait"]
    cands = fam.candidates(TIMED, parse_term("wait_2(x)"),
                           parse_term("wait_9(x)"))
    assert cands == [{"n": 2, "m": 9}]
    assert fam.candidates(TIMED, parse_term("x"),
                          parse_term("wait_1(x)")) == []
    sums = TIMED.axioms["wait_sum"].candidates(
        TIMED, parse_term("wait_2(wait_3(x))"), parse_term("wait_5(x)"))
    assert sums == [{"n": 2, "m": 3}]


def test_diaconis_axiom():
    inst = axiom_instantiate(PROB, "diaconis", {"k": 2, "m": 1, "n": 1})
    assert inst.bound == Fraction(4)
    assert inst.lhs == parse_term("replace_2_1_1(unit)")
    assert inst.rhs == parse_term("no_replace_2_1_1(unit)")
    with pytest.raises(ProofError, match="k <= m \\+ n"):
        axiom_instantiate(PROB, "diaconis", {"k": 5, "m": 1, "n": 1})
    with pytest.raises(ProofError, match="draw"):
        axiom_instantiate(PROB, "diaconis", {"k": 0, "m": 1, "n": 1})
    with pytest.raises(ProofError, match="urn"):
        axiom_instantiate(PROB, "diaconis", {"k": 1, "m": 0, "n": 0})


def test_gaussians_axiom():
    inst = axiom_instantiate(PROB, "gaussians",
                             {"k": 1, "mu1": 0, "sigma1": 1,
                              "mu2": 1, "sigma2": 1})
    assert inst.bound == Fraction(1, 2)
    same = axiom_instantiate(PROB, "gaussians",
                             {"k": 3, "mu1": 2, "sigma1": 2,
                              "mu2": 2, "sigma2": 2})
    assert same.bound == Fraction(0)
    symbolic = axiom_instantiate(PROB, "gaussians",
                                 {"k": 3, "mu1": 0, "sigma1": 1,
                                  "mu2": 1, "sigma2": 1})
    assert isinstance(symbolic.bound, SymbolicBound)
    assert symbolic.bound.expr == sympy.sqrt(3) / 2
    with pytest.raises(ProofError, match="positive"):
        axiom_instantiate(PROB, "gaussians",
                          {"k": 1, "mu1": 0, "sigma1": 0,
                           "mu2": 0, "sigma2": 1})


def test_generic_axiom():
    inst = axiom_instantiate(PROB, "magpair", {"k": 2})
    assert inst.lhs == parse_term("mag1_2(unit)")
    assert inst.rhs == parse_term("mag2_2(unit)")
    assert inst.bound == Fraction(1)
    fam = PROB.axioms["magpair"]
    cands = fam.candidates(PROB, parse_term("mag1_3(unit)"),
                           parse_term("mag2_3(unit)"))
    assert cands == [{"k": 3}]
    assert fam.candidates(PROB, parse_term("unit"),
                          parse_term("unit")) == []


def test_load_theory_text_minimal():
    th = load_theory_text("""
        quantale metric
        semiring nat
        ground Y
        op f : Y -> Y  # trailing comment
        axiom idle : [y : Y] f(y) =[3/2] y
    """, where="inline")
    inst = axiom_instantiate(th, "idle", {})
    assert inst.bound == Fraction(3, 2)
    assert not th.symmetric


def test_load_theory_errors():
    with pytest.raises(TheoryError, match="quantale"):
        load_theory_text("semiring nat")
    with pytest.raises(TheoryError, match="bad:2"):
        load_theory_text("quantale metric\nfrobnicate yes\nsemiring nat",
                         where="bad")
    with pytest.raises(TheoryError, match="unknown builtin"):
        load_theory_text("quantale metric\nsemiring nat\nbuiltin nope")
    with pytest.raises(TheoryError, match="bad axiom"):
        load_theory_text("quantale metric\nsemiring nat\n"
                         "axiom broken : x = y")
    with pytest.raises(TheoryError, match="opfamily"):
        load_theory_text("quantale metric\nsemiring nat\n"
                         "opfamily bad : X -> X")
    with pytest.raises(TheoryError, match="argument"):
        load_theory_text("quantale metric\nsemiring nat\nground X\n"
                         "op k : -> X")


def test_bound_expression_validation():
    with pytest.raises(TheoryError, match="negative"):
        load_theory_text("quantale metric\nsemiring nat\nground X\n"
                         "axiom a : [x : X] x =[-1] x"
                         ).axioms["a"].instantiate(None, {})
    with pytest.raises(TheoryError, match="not rational"):
        load_theory_text("quantale metric\nsemiring nat\nground X\n"
                         "axiom a[n] : [x : X] x =[sqrt(n)] x"
                         ).axioms["a"].instantiate(None, {"n": 2})
