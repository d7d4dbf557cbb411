import random

import pytest
from hypothesis import given, settings

from em1real.kernel import (
    BOOL,
    NAT,
    STATE,
    Arrow,
    ChiApprox,
    DefRef,
    App,
    Lam,
    OracleX,
    PhiApprox,
    Prod,
    SkolemPhi,
    StateConst,
    Succ,
    TypeCheckError,
    Var,
    app,
    numeral,
)
from em1real.logic import (
    And,
    Atomic,
    BOTTOM,
    Exists,
    Forall,
    Imp,
    Judgement,
    approx_formula,
    check_formula,
    eval_closed_atomic,
    formula_alpha_eq,
    realizer_type,
    subst_formula,
)
from em1real.proofs import em1_statement
from em1real.states import EMPTY, Atom, State

from generators import S1, STATE_POOL, gen_formula, seeds


def atom(pred, *args):
    return Atomic(DefRef(pred), tuple(args))


def test_realizer_types(env):
    assert realizer_type(atom("eq", numeral(0), numeral(0))) == STATE
    assert realizer_type(Exists("y", atom("NEXT", numeral(2), Var("y")))) == Prod(NAT, STATE)
    em1 = em1_statement(env, "GEQ")
    assert realizer_type(em1.body) == Prod(BOOL, Prod(Prod(NAT, STATE), Arrow(NAT, STATE)))
    assert realizer_type(Imp(BOTTOM, BOTTOM)) == Arrow(STATE, STATE)
    assert realizer_type(And(BOTTOM, BOTTOM)) == Prod(STATE, STATE)


def test_approx_formula_examples():
    a = Atomic(Lam("z", NAT, App(OracleX("GEQ"), Var("z"))), (numeral(2),))
    out = approx_formula(a, S1)
    assert out.head == Lam("z", NAT, app(ChiApprox("GEQ"), StateConst(S1), Var("z")))
    pure = Forall("x", atom("NEXT", Var("x"), Succ(Var("x"))))
    assert approx_formula(pure, S1) == pure
    skolem = atom("NEXT", Var("a"), App(SkolemPhi("NEXT"), Var("a")))
    inst = approx_formula(subst_formula(skolem, "a", numeral(2)), EMPTY)
    assert inst == atom("NEXT", numeral(2), app(PhiApprox("NEXT"), StateConst(EMPTY), numeral(2)))


def test_eval_closed_atomic(env):
    assert eval_closed_atomic(env, atom("NEXT", numeral(2), numeral(3)))
    head = Lam("x", NAT, Lam("y", NAT, app(
        DefRef("imp"),
        app(DefRef("NEXT"), Var("x"), Var("y")),
        app(ChiApprox("NEXT"), StateConst(EMPTY), Var("x")),
    )))
    assert not eval_closed_atomic(env, Atomic(head, (numeral(2), numeral(3))))
    learned = State.of(Atom("NEXT", (2,), 3))
    head2 = Lam("x", NAT, Lam("y", NAT, app(
        DefRef("imp"),
        app(DefRef("NEXT"), Var("x"), Var("y")),
        app(ChiApprox("NEXT"), StateConst(learned), Var("x")),
    )))
    assert eval_closed_atomic(env, Atomic(head2, (numeral(2), numeral(3))))


def test_substitution_examples():
    a = Exists("y", atom("NEXT", Var("x"), Var("y")))
    assert subst_formula(a, "x", numeral(2)) == Exists("y", atom("NEXT", numeral(2), Var("y")))
    b = Forall("x", atom("NEXT", Var("x"), Var("x")))
    assert subst_formula(b, "x", numeral(5)) == b
    c = atom("NEXT", Var("x"), Succ(Var("x")))
    assert subst_formula(c, "x", Var("a")) == atom("NEXT", Var("a"), Succ(Var("a")))


def test_substitution_avoids_capture():
    a = Exists("y", atom("NEXT", Var("x"), Var("y")))
    out = subst_formula(a, "x", Var("y"))
    assert isinstance(out, Exists) and out.var != "y"
    assert out.body.args[0] == Var("y")


def test_alpha_equivalence():
    a = Forall("x", Exists("y", atom("NEXT", Var("x"), Var("y"))))
    b = Forall("u", Exists("v", atom("NEXT", Var("u"), Var("v"))))
    c = Forall("u", Exists("v", atom("NEXT", Var("v"), Var("u"))))
    assert formula_alpha_eq(a, b) and not formula_alpha_eq(a, c)


def test_check_formula_rejects_bad_atoms(env):
    check_formula(env, Forall("x", atom("NEXT", Var("x"), numeral(1))))
    check_formula(env, BOTTOM)
    with pytest.raises(TypeCheckError):
        check_formula(env, atom("NEXT", numeral(1)))
    with pytest.raises(TypeCheckError):
        check_formula(env, Atomic(Lam("x", NAT, StateConst(S1)), (numeral(1),)))
    with pytest.raises(TypeCheckError):
        check_formula(env, Atomic(app(ChiApprox("GEQ"), StateConst(S1)), (numeral(1),)))


def test_judgement_labels_distinct():
    with pytest.raises(ValueError):
        Judgement((("h", BOTTOM), ("h", BOTTOM)), BOTTOM)
    assert str(Judgement((("h", BOTTOM),), BOTTOM)) == "h : [false] |- [false]"


@settings(max_examples=60, deadline=None)
@given(seeds())
def test_realizer_type_is_invariant_under_approximation(seed):
    a = gen_formula(random.Random(seed), depth=3)
    a = Forall("a", a)
    for s in STATE_POOL[:3]:
        assert realizer_type(approx_formula(a, s)) == realizer_type(a)
