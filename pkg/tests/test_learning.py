import json

import pytest
from hypothesis import given, settings

from em1real import proofs as pf
from em1real.evaluation import Boolean, Numeral, StateVal, approximate, equal_learn, normalize
from em1real.kernel import (
    BOOL,
    NAT,
    STATE,
    AddClass,
    App,
    DefRef,
    FALSE,
    Join,
    Lam,
    OracleX,
    Pair,
    Proj0,
    Proj1,
    SkolemPhi,
    StateConst,
    Succ,
    Var,
    ZERO,
    app,
    numeral,
)
from em1real.learning import (
    CheckFailed,
    Fail,
    IterCapExceeded,
    Pass,
    PassUnverifiedImp,
    TypeMismatch,
    WiChain,
    check_converges,
    fixed_point,
    pi02_witness,
    realizes_at,
)
from em1real.logic import Atomic, Exists, Imp
from em1real.states import EMPTY, Atom, State
from em1real.syntax import parse_formula, parse_proof

from generators import S1, STATE_POOL, covering_chain, stable_index, terms
from oracles import p1_trace, p2_trace

NEXT23 = Atom("NEXT", (2,), 3)
EMPTY_T = StateConst(EMPTY)


def atom(pred, *args):
    return Atomic(DefRef(pred), tuple(numeral(a) for a in args))


def extracted(env, corpus, name):
    return pf.extract(env, parse_proof((corpus / name).read_text(), env))


# realizes_at


def test_empty_realizes_true_atom(env):
    for s in STATE_POOL:
        assert realizes_at(env, EMPTY_T, atom("NEXT", 2, 3), s) == Pass()


def test_empty_does_not_realize_false_atom(env):
    verdict = realizes_at(env, EMPTY_T, atom("NEXT", 2, 5), EMPTY)
    assert isinstance(verdict, Fail)
    assert str(verdict).startswith("fail at atomic in empty")


def test_nonempty_realizer_of_falsity_is_vacuous(env):
    t = app(AddClass("NEXT"), numeral(2), numeral(3))
    assert realizes_at(env, t, Atomic(FALSE, ()), EMPTY) == Pass()


def test_realizes_at_rejects_bad_input(env):
    with pytest.raises(TypeMismatch):
        realizes_at(env, Pair(ZERO, EMPTY_T), atom("NEXT", 2, 3), EMPTY)
    with pytest.raises(TypeMismatch):
        realizes_at(env, StateConst(S1), atom("NEXT", 2, 3), EMPTY)
    with pytest.raises(TypeMismatch):
        realizes_at(env, Var("u"), atom("NEXT", 2, 3), EMPTY)


def test_exists_and_forall_clauses(env):
    a = parse_formula("forall x. exists y. NEXT(x, y)", env)
    good = Lam("x", NAT, Pair(Succ(Var("x")), EMPTY_T))
    assert realizes_at(env, good, a, EMPTY, depth=6) == Pass()
    bad = Lam("x", NAT, Pair(Var("x"), EMPTY_T))
    verdict = realizes_at(env, bad, a, EMPTY, depth=6)
    assert isinstance(verdict, Fail) and verdict.path == "/forall[0]/exists[0]"


def test_implication_candidates(env):
    same = Imp(atom("NEXT", 2, 3), atom("NEXT", 2, 3))
    ident = Lam("h", STATE, Var("h"))
    assert realizes_at(env, ident, same, EMPTY) == PassUnverifiedImp(1)
    cands = {"imp": [EMPTY_T, app(AddClass("NEXT"), numeral(2), numeral(3))]}
    assert realizes_at(env, ident, same, EMPTY, imp_candidates=cands) == Pass()

    wrong = Imp(atom("NEXT", 2, 5), atom("NEXT", 2, 5))
    const = Lam("h", STATE, EMPTY_T)
    # the empty candidate fails the premise and is skipped, the other is vacuous
    verdict = realizes_at(env, const, wrong, EMPTY, imp_candidates=cands)
    assert isinstance(verdict, Fail) and verdict.path == "/imp[1]"


def test_em1_realizer_at_pool_states(env):
    for pred in ("GEQ", "NEXT"):
        t = pf.em1_term(env, pred)
        stmt = pf.em1_statement(env, pred)
        for s in STATE_POOL:
            assert realizes_at(env, t, stmt, s, depth=5) == Pass()


def test_verdict_strings():
    assert str(Pass()) == "pass"
    assert "1" in str(PassUnverifiedImp(1))


# check_converges


def test_convergence_examples(env):
    chain = WiChain([EMPTY, S1])
    report = check_converges(env, App(OracleX("GEQ"), numeral(2)), chain)
    assert (report.last_change_index, report.final_value) == (1, Boolean(True))
    report = check_converges(env, Succ(ZERO), chain)
    assert (report.last_change_index, report.final_value) == (0, Numeral(1))
    report = check_converges(env, App(SkolemPhi("GEQ"), numeral(5)), chain)
    assert (report.last_change_index, report.final_value) == (0, Numeral(0))


def test_chain_must_increase():
    with pytest.raises(ValueError):
        WiChain([S1, EMPTY])
    with pytest.raises(ValueError):
        WiChain([])


def test_convergence_rejects_learn_terms(env):
    from em1real.kernel import ChiApprox

    with pytest.raises(TypeMismatch):
        check_converges(env, app(ChiApprox("GEQ"), StateConst(S1), ZERO), WiChain([EMPTY]))


@settings(max_examples=40, deadline=None)
@given(terms(BOOL, mode="class", max_depth=3))
def test_convergence_on_covering_chains(env, t):
    chain = covering_chain(env, t)
    report = check_converges(env, t, WiChain(chain))
    assert report.last_change_index <= stable_index(env, t, chain)
    assert report.values[-1] == report.values[-2]


# fixed_point


def test_fixed_point_single_add(env):
    final, trace = fixed_point(env, app(AddClass("NEXT"), numeral(2), numeral(3)))
    assert final == State.of(NEXT23)
    assert trace.growing == 1 and len(trace.iterations) == 2 and trace.stable


def test_fixed_point_of_empty(env):
    for start in (EMPTY, S1):
        final, trace = fixed_point(env, EMPTY_T, start)
        assert final == start and len(trace.iterations) == 1


def test_fixed_point_join(env):
    t = Join(app(AddClass("NEXT"), numeral(2), numeral(3)), app(AddClass("GEQ"), numeral(4), numeral(7)))
    final, trace = fixed_point(env, t)
    assert NEXT23 in final.atoms and Atom("GEQ", (4,), 7) in final.atoms
    assert normalize(env, approximate(t, final)).value == StateVal(EMPTY)


def test_fixed_point_errors(env):
    with pytest.raises(TypeMismatch):
        fixed_point(env, ZERO)
    with pytest.raises(IterCapExceeded):
        fixed_point(env, app(AddClass("NEXT"), numeral(2), numeral(3)), iter_cap=1)


def test_trace_json_lines(env):
    _, trace = fixed_point(env, app(AddClass("NEXT"), numeral(2), numeral(3)))
    rows = [json.loads(line) for line in trace.to_json_lines().splitlines()]
    assert rows[0] == {"iter": 0, "state": [], "tau": [{"pred": "NEXT", "args": [2], "witness": 3}], "stable": False}
    assert rows[1]["stable"] and "warm_start" not in rows[1]
    _, warm = fixed_point(env, EMPTY_T, State.of(NEXT23))
    assert json.loads(warm.to_json_lines())["warm_start"] is True


@settings(max_examples=60, deadline=None)
@given(terms(STATE, mode="class"))
def test_fixed_point_soundness(env, t):
    for start in (EMPTY, S1):
        final, trace = fixed_point(env, t, start)
        assert start <= final
        assert normalize(env, approximate(t, final)).value == StateVal(EMPTY)
        assert trace.learned().union(start) == final


# pi02_witness


def test_p1_witness(env, corpus):
    t = extracted(env, corpus, "P1.proof")
    w, trace = pi02_witness(env, t, "NEXT", 5)
    assert w == 6 and len(trace.iterations) == 1 and trace.iterations[0].before == EMPTY


def test_p2_witness(env, corpus):
    t = extracted(env, corpus, "P2.proof")
    w, trace = pi02_witness(env, t, "NEXT", 5)
    assert w == 6
    assert [it.tau for it in trace.iterations] == [State.of(Atom("NEXT", (5,), 6)), EMPTY]


def test_identity_witness_for_geq(env):
    t = Lam("a", NAT, Pair(Var("a"), EMPTY_T))
    assert pi02_witness(env, t, "GEQ", 7)[0] == 7


def test_wrong_witness_is_reported(env):
    t = Lam("a", NAT, Pair(Var("a"), EMPTY_T))
    with pytest.raises(CheckFailed) as info:
        pi02_witness(env, t, "NEXT", 4)
    assert info.value.witness == 4


def test_witness_needs_pi02_type(env):
    with pytest.raises(TypeMismatch):
        pi02_witness(env, Lam("a", NAT, Var("a")), "NEXT", 1)


@pytest.mark.parametrize("name", ["P1.proof", "P2.proof", "P2_em1.proof"])
def test_witnesses_match_hand_traces(env, corpus, name):
    t = extracted(env, corpus, name)
    for n in range(0, 21, 4):
        w, trace = pi02_witness(env, t, "NEXT", n)
        expected, oracle = p1_trace(n) if name == "P1.proof" else p2_trace(n)
        assert w == expected
        if name != "P2_em1.proof":
            got = [({(a.pred, a.args): a.witness for a in it.before},
                    {(a.pred, a.args): a.witness for a in it.tau}) for it in trace.iterations]
            assert got == oracle


def test_warm_start_reuses_knowledge(env, corpus):
    t = extracted(env, corpus, "P2.proof")
    w, trace = pi02_witness(env, t, "NEXT", 5, start=State.of(Atom("NEXT", (5,), 6)))
    assert w == 6 and len(trace.iterations) == 1 and trace.warm_start


# realizability respects equality of components


@settings(max_examples=50, deadline=None)
@given(terms(NAT, mode="class", max_depth=3), terms(STATE, mode="class", max_depth=3))
def test_equal_realizers_get_equal_verdicts(env, n, u):
    a = Exists("y", Atomic(DefRef("NEXT"), (numeral(2), Var("y"))))
    t1 = Pair(n, u)
    t2 = Pair(app(DefRef("plus"), Proj0(t1), ZERO), Join(EMPTY_T, Proj1(t1)))
    for s in STATE_POOL:
        assert equal_learn(env, approximate(Proj0(t1), s), approximate(Proj0(t2), s))
        assert equal_learn(env, approximate(Proj1(t1), s), approximate(Proj1(t2), s))
        v1, v2 = realizes_at(env, t1, a, s), realizes_at(env, t2, a, s)
        assert type(v1) is type(v2)
