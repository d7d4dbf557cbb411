from concurrent.futures import ThreadPoolExecutor

import pytest
from hypothesis import given, strategies as st

from em1real.states import (
    EMPTY,
    Atom,
    AtomError,
    InconsistentState,
    State,
    StateInterner,
    add_step,
    atoms_consistent,
    chi_phi_lookup,
    cunion,
    mk_atom,
)

from generators import ATOM_POOL, S1, small_states
from oracles import add_model, cunion_model

GEQ23 = Atom("GEQ", (2,), 3)
GEQ25 = Atom("GEQ", (2,), 5)
GEQ47 = Atom("GEQ", (4,), 7)
NEXT23 = Atom("NEXT", (2,), 3)

STATES = small_states()


def as_dict(s: State):
    return {a.key: a.witness for a in s}


def test_pool_has_expected_size():
    # 6 atoms, one conflicting pair: 1 + 6 + 14 + 16 states of size 0..3
    assert len(STATES) == 37


def test_mk_atom(env):
    assert mk_atom(env, "NEXT", [2], 3) == NEXT23
    assert mk_atom(env, "GEQ", [2], 3) == GEQ23
    with pytest.raises(AtomError) as info:
        mk_atom(env, "NEXT", [2], 5)
    assert info.value.reason == "predicate-false"
    with pytest.raises(AtomError) as info:
        mk_atom(env, "NEXT", [2, 2], 5)
    assert info.value.reason == "arity-mismatch"
    with pytest.raises(AtomError) as info:
        mk_atom(env, "MISSING", [2], 5)
    assert info.value.reason == "unknown-predicate"


def test_atoms_consistent():
    assert not atoms_consistent(GEQ23, GEQ25)
    assert atoms_consistent(GEQ23, GEQ47)
    assert atoms_consistent(GEQ23, NEXT23)


def test_state_rejects_conflicts_and_is_canonical():
    with pytest.raises(InconsistentState):
        State.of(GEQ23, GEQ25)
    assert State.of(NEXT23, GEQ23) == State.of(GEQ23, NEXT23, GEQ23)
    assert str(State.of(NEXT23, GEQ23)) == "state{GEQ(2)=3, NEXT(2)=3}"
    assert str(EMPTY) == "empty"


def test_cunion_examples():
    assert cunion(State.of(GEQ23), State.of(GEQ25)) == State.of(GEQ23)
    assert cunion(State.of(GEQ25), State.of(GEQ23)) == State.of(GEQ25)
    assert cunion(State.of(GEQ23), State.of(NEXT23)) == State.of(GEQ23, NEXT23)
    for s in STATES:
        assert cunion(EMPTY, s) == s == cunion(s, EMPTY)


def test_cunion_matches_model():
    for a in STATES:
        for b in STATES:
            assert as_dict(cunion(a, b)) == cunion_model(as_dict(a), as_dict(b))


def test_add_step(env):
    assert add_step(env, S1, "GEQ", [2], 9) == EMPTY
    assert add_step(env, S1, "GEQ", [4], 7) == State.of(GEQ47)
    assert add_step(env, S1, "GEQ", [4], 1) == EMPTY
    with pytest.raises(AtomError):
        add_step(env, S1, "NOPE", [4], 1)
    with pytest.raises(AtomError):
        add_step(env, S1, "GEQ", [4, 4], 1)


@given(st.sampled_from(STATES), st.sampled_from(["GEQ", "NEXT"]), st.integers(0, 6), st.integers(0, 8))
def test_add_step_is_safe_and_matches_model(env, s, pred, n, m):
    out = add_step(env, s, pred, (n,), m)
    assert s.consistent_with(out) and s.disjoint_with(out)
    assert as_dict(out) == add_model(as_dict(s), pred, (n,), m)


def test_lookup():
    assert chi_phi_lookup(S1, "GEQ", [2]) == (True, 3)
    assert chi_phi_lookup(S1, "GEQ", [5]) == (False, 0)
    assert chi_phi_lookup(EMPTY, "NEXT", [0]) == (False, 0)


def test_subset_and_union():
    assert EMPTY <= S1 and S1 <= State.of(GEQ23, NEXT23)
    assert not State.of(GEQ25) <= S1
    with pytest.raises(InconsistentState):
        S1.union(State.of(GEQ25))


def test_interner_is_injective_under_concurrency():
    interner = StateInterner()
    assert interner.intern(EMPTY) == 0
    work = STATES * 8
    with ThreadPoolExecutor(max_workers=8) as pool:
        ids = list(pool.map(interner.intern, work))
    by_state = {}
    for s, i in zip(work, ids):
        assert by_state.setdefault(s, i) == i
        assert interner.state(i) == s
    assert len(set(ids)) == len(STATES)


def test_atom_pool_is_verified(env):
    for a in ATOM_POOL:
        assert mk_atom(env, a.pred, a.args, a.witness) == a
