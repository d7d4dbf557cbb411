"""Bounded realizability checking, convergence along chains of states, the
fixed-point learning loop and witness extraction for forall-exists theorems.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple

from em1real.evaluation import StateVal, Value, approximate, normalize
from em1real.kernel import (
    NAT,
    STATE,
    App,
    Arrow,
    Prod,
    DefEnv,
    Fragment,
    Proj0,
    Proj1,
    Term,
    TypeCheckError,
    classify,
    free_vars,
    has_state_empty,
    numeral,
    typecheck,
)
from em1real.logic import (
    And,
    Atomic,
    Exists,
    Forall,
    Formula,
    Imp,
    Or,
    approx_formula,
    eval_closed_atomic,
    formula_free_vars,
    realizer_type,
    subst_formula,
)
from em1real.states import EMPTY, State

DEFAULT_DEPTH = 10
DEFAULT_ITER_CAP = 10_000


class TypeMismatch(TypeCheckError):
    pass


class IterCapExceeded(Exception):
    pass


class CheckFailed(Exception):
    def __init__(self, witness: int, state: State, message: str):
        self.witness = witness
        self.state = state
        super().__init__(message)


# ---------------------------------------------------------------------------
# Verdicts


@dataclass(frozen=True)
class Pass:
    def __str__(self):
        return "pass"


@dataclass(frozen=True)
class PassUnverifiedImp:
    count: int

    def __str__(self):
        return f"pass ({self.count} implication(s) unverified: no candidates)"


@dataclass(frozen=True)
class Fail:
    path: str
    state: State
    detail: str

    def __str__(self):
        return f"fail at {self.path} in {self.state}: {self.detail}"


Verdict = Pass | PassUnverifiedImp | Fail


def _combine(verdicts) -> Verdict:
    unverified = 0
    for v in verdicts:
        if isinstance(v, Fail):
            return v
        if isinstance(v, PassUnverifiedImp):
            unverified += v.count
    return PassUnverifiedImp(unverified) if unverified else Pass()


def _value(env: DefEnv, t: Term, s: State) -> Value:
    return normalize(env, approximate(t, s)).value


class _Checker:
    def __init__(self, env: DefEnv, s: State, depth: int, candidates: Mapping[str, Sequence[Term]]):
        self.env = env
        self.s = s
        self.depth = depth
        self.candidates = candidates

    def run(self, t: Term, a: Formula, path: str, pos: str):
        """``path`` records instances for reports, ``pos`` is the instance-free
        position used to look up implication candidates."""
        env, s = self.env, self.s
        match a:
            case Atomic():
                out = _value(env, t, s)
                if out != StateVal(EMPTY):
                    yield Pass()
                    return
                if not eval_closed_atomic(env, approx_formula(a, s)):
                    yield Fail(path or "atomic", s, f"realizer returns empty but {a} is false at this state")
                    return
                yield Pass()
            case And(l, r):
                yield from self.run(Proj0(t), l, path + "/and0", pos + "/and0")
                yield from self.run(Proj1(t), r, path + "/and1", pos + "/and1")
            case Or(l, r):
                left = _value(self.env, Proj0(t), s).value
                if left:
                    yield from self.run(Proj0(Proj1(t)), l, path + "/or0", pos + "/or0")
                else:
                    yield from self.run(Proj1(Proj1(t)), r, path + "/or1", pos + "/or1")
            case Exists(x, b):
                n = _value(env, Proj0(t), s).value
                yield from self.run(Proj1(t), subst_formula(b, x, numeral(n)), f"{path}/exists[{n}]", pos + "/exists")
            case Forall(x, b):
                for n in range(self.depth + 1):
                    yield from self.run(App(t, numeral(n)), subst_formula(b, x, numeral(n)), f"{path}/forall[{n}]", pos + "/forall")
            case Imp(l, r):
                here = pos + "/imp"
                cands = self.candidates.get(here.lstrip("/"), ())
                if not cands:
                    yield PassUnverifiedImp(1)
                    return
                for i, u in enumerate(cands):
                    # a candidate that does not realize the premise makes the clause vacuous
                    if isinstance(_combine(self.run(u, l, "", here + "/premise")), Fail):
                        continue
                    yield from self.run(App(t, u), r, f"{path}/imp[{i}]", here)


def realizes_at(
    env: DefEnv,
    t: Term,
    a: Formula,
    s: State,
    depth: int = DEFAULT_DEPTH,
    imp_candidates: Optional[Mapping[str, Sequence[Term]]] = None,
) -> Verdict:
    """Check ``t`` realizes ``a`` at state ``s``: universal quantifiers are
    checked on instances 0..depth, implications on the supplied candidates.

    Candidate lists are keyed by the position of the implication, written as
    the connectives leading to it, e.g. ``"forall/imp"`` or ``"and1/imp"``.
    """
    if free_vars(t):
        raise TypeMismatch(f"realizer has free variables {sorted(free_vars(t))}", t)
    if formula_free_vars(a):
        raise TypeMismatch(f"formula has free variables {sorted(formula_free_vars(a))}")
    if not has_state_empty(t):
        raise TypeMismatch("realizer mentions a non-empty state", t)
    want, got = realizer_type(a), typecheck(env, {}, t)
    if want != got:
        raise TypeMismatch(f"realizer has type {got!r}, formula needs {want!r}", t)
    checker = _Checker(env, s, depth, imp_candidates or {})
    return _combine(checker.run(t, a, "", ""))


# ---------------------------------------------------------------------------
# Convergence along weakly increasing chains


class WiChain:
    """A finite chain of states, each contained in the next."""

    def __init__(self, states: Sequence[State]):
        states = list(states)
        if not states:
            raise ValueError("a chain needs at least one state")
        for i in range(1, len(states)):
            if not states[i - 1] <= states[i]:
                raise ValueError(f"chain is not weakly increasing at index {i}")
        self.states = tuple(states)

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]


@dataclass(frozen=True)
class ConvergenceReport:
    last_change_index: int
    final_value: Value
    values: Tuple[Value, ...]


def check_converges(env: DefEnv, t: Term, chain: WiChain) -> ConvergenceReport:
    frag = classify(t)
    if frag not in (Fragment.T, Fragment.T_S, Fragment.T_CLASS):
        raise TypeMismatch(f"expected a term of T_Class, found {frag.value}", t)
    if not has_state_empty(t):
        raise TypeMismatch("term mentions a non-empty state", t)
    values = tuple(_value(env, t, s) for s in chain)
    last = 0
    for i in range(1, len(values)):
        if values[i] != values[i - 1]:
            last = i
    return ConvergenceReport(last, values[-1], values)


# ---------------------------------------------------------------------------
# Fixed point


@dataclass(frozen=True)
class Iteration:
    index: int
    before: State
    tau: State
    after: State

    @property
    def stable(self) -> bool:
        return not self.tau


def _atoms_json(s: State) -> List[dict]:
    return [{"pred": a.pred, "args": list(a.args), "witness": a.witness} for a in s]


@dataclass
class LearnTrace:
    iterations: List[Iteration] = field(default_factory=list)
    warm_start: bool = False

    @property
    def stable(self) -> bool:
        return bool(self.iterations) and self.iterations[-1].stable

    @property
    def growing(self) -> int:
        return sum(1 for it in self.iterations if not it.stable)

    def learned(self) -> State:
        out = EMPTY
        for it in self.iterations:
            out = out.union(it.tau)
        return out

    def to_json_lines(self) -> str:
        lines = []
        for it in self.iterations:
            rec = {
                "iter": it.index,
                "state": _atoms_json(it.before),
                "tau": _atoms_json(it.tau),
                "stable": it.stable,
            }
            if self.warm_start:
                rec["warm_start"] = True
            lines.append(json.dumps(rec))
        return "".join(line + "\n" for line in lines)


def fixed_point(
    env: DefEnv, t: Term, start: State = EMPTY, iter_cap: int = DEFAULT_ITER_CAP
) -> Tuple[State, LearnTrace]:
    """Iterate ``S <- S u tau(S)`` with ``tau(S)`` the value of ``t[S]`` until
    ``tau(S)`` is empty."""
    if free_vars(t) or not has_state_empty(t):
        raise TypeMismatch("fixed_point needs a closed term of state empty", t)
    ty = typecheck(env, {}, t)
    if ty != STATE:
        raise TypeMismatch(f"fixed_point needs a term of type State, found {ty!r}", t)
    trace = LearnTrace(warm_start=start != EMPTY)
    s = start
    for k in range(iter_cap):
        tau = _value(env, t, s).value
        assert s.consistent_with(tau), f"tau({s}) = {tau} is inconsistent with the state"
        assert s.disjoint_with(tau), f"tau({s}) = {tau} overlaps the state"
        after = s.union(tau)
        trace.iterations.append(Iteration(k, s, tau, after))
        if not tau:
            return s, trace
        s = after
    raise IterCapExceeded(f"no fixed point after {iter_cap} iterations")


def pi02_witness(
    env: DefEnv,
    t: Term,
    pred: str,
    n: int,
    iter_cap: int = DEFAULT_ITER_CAP,
    start: State = EMPTY,
) -> Tuple[int, LearnTrace]:
    """Witness for ``exists y. pred(n, y)`` from a realizer ``t`` of
    ``forall x. exists y. pred(x, y)``: learn a fixed point of the state
    component of ``t n``, then read the first component there."""
    ty = typecheck(env, {}, t)
    if ty != Arrow(NAT, Prod(NAT, STATE)):
        raise TypeMismatch(f"expected a realizer of type N -> N * State, found {ty!r}", t)
    tn = App(t, numeral(n))
    final, trace = fixed_point(env, Proj1(tn), start, iter_cap)
    witness = _value(env, Proj0(tn), final).value
    if not env.holds(pred, (n, witness)):
        raise CheckFailed(witness, final, f"{pred}({n}, {witness}) is false at the fixed point {final}")
    return witness, trace
