"""Normalization of closed learning terms and the approximation map.

Reduction is weak (never under a lambda) and comes in two strategies:
``outermost`` (leftmost-outermost, the default, used for traces) and
``innermost`` (arguments first), the latter kept to test that normal forms
at atomic type do not depend on the order of reduction.

The state-dependent constants only fire once their state argument is a
state constant and their numeric arguments are numerals.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional, Union

from em1real.kernel import (
    APPROXIMATION_OF,
    ATOMIC_TYPES,
    CLASS_CONSTS,
    FALSE,
    LEARN_CONSTS,
    TRUE,
    AddApprox,
    App,
    Arrow,
    ChiApprox,
    DefEnv,
    DefRef,
    FalseC,
    If,
    Join,
    KernelError,
    Lam,
    Pair,
    PredConst,
    Prod,
    Proj0,
    Proj1,
    Rec,
    StateConst,
    Succ,
    Term,
    TrueC,
    TypeExpr,
    Var,
    Zero,
    app,
    as_numeral,
    free_vars,
    map_children,
    numeral,
    spine,
    subst,
    subterms,
    typecheck,
    BOOL,
    NAT,
    STATE,
)
from em1real.states import State, add_step, chi_phi_lookup, cunion

DEFAULT_STEP_CAP = 1_000_000
STRATEGIES = ("outermost", "innermost")


class EvalError(KernelError):
    pass


class StepBudgetExceeded(EvalError):
    """The step cap was hit. Reduction is terminating, so this is a bug or a cap set too low."""


class NotClosed(EvalError):
    pass


class WrongFragment(EvalError):
    pass


class NormalFormViolation(EvalError):
    pass


@dataclass(frozen=True)
class Numeral:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Boolean:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class StateVal:
    value: State

    def __str__(self):
        return str(self.value)


Value = Union[Numeral, Boolean, StateVal]


@dataclass(frozen=True)
class NormalForm:
    term: Term
    ty: TypeExpr
    value: Optional[Value]
    steps: int
    # (pred, args) pairs whose presence in the state was consulted
    queries: frozenset = field(default=frozenset())


def value_of(t: Term) -> Optional[Value]:
    if isinstance(t, TrueC):
        return Boolean(True)
    if isinstance(t, FalseC):
        return Boolean(False)
    if isinstance(t, StateConst):
        return StateVal(t.state)
    k = as_numeral(t)
    return None if k is None else Numeral(k)


def _const_arity(env: DefEnv, c: PredConst) -> int:
    k = env.pred_arity(c.pred)
    return k + 1 if isinstance(c, AddApprox) else k


class _Reducer:
    def __init__(self, env: DefEnv, step_cap: int, check_types: bool = False, allow_open: bool = False):
        self.env = env
        self.step_cap = step_cap
        self.check_types = check_types
        self.allow_open = allow_open
        self.steps = 0
        self.queries = set()

    # -- bookkeeping ------------------------------------------------------

    def fire(self, redex: Term, contractum: Term) -> Term:
        self.steps += 1
        if self.steps > self.step_cap:
            raise StepBudgetExceeded(f"step cap {self.step_cap} exceeded")
        if self.check_types:
            before = typecheck(self.env, {}, redex)
            after = typecheck(self.env, {}, contractum)
            if before != after:
                raise AssertionError(f"subject reduction broken: {redex!r} : {before!r} -> {after!r}")
        return contractum

    def unfold(self, d: DefRef) -> Term:
        if d.name not in self.env:
            raise EvalError(f"unknown definition {d.name!r}")
        return self.env[d.name].body

    def delta(self, c: PredConst, args: list) -> Optional[Term]:
        """Contract a saturated approximation constant, or None when stuck."""
        s = args[0]
        nums = [as_numeral(a) for a in args[1:]]
        if not isinstance(s, StateConst) or any(n is None for n in nums):
            return None
        if isinstance(c, AddApprox):
            key = tuple(nums[:-1])
            self.queries.add((c.pred, key))
            return StateConst(add_step(self.env, s.state, c.pred, key, nums[-1]))
        self.queries.add((c.pred, tuple(nums)))
        found, m = chi_phi_lookup(s.state, c.pred, nums)
        if isinstance(c, ChiApprox):
            return TRUE if found else FALSE
        return numeral(m)

    def class_const(self, c: PredConst):
        if not self.allow_open:
            raise WrongFragment(f"{type(c).__name__}({c.pred}) has no reduction rules; approximate first")

    def stuck_var(self, v: Var):
        if not self.allow_open:
            raise NotClosed(f"free variable {v.name!r}")

    # -- leftmost-outermost ---------------------------------------------

    def whnf(self, t: Term) -> Term:
        while True:
            match t:
                case App():
                    head, args = spine(t)
                    h = self.whnf(head)
                    if isinstance(h, App):
                        h, more = spine(h)
                        args = more + args
                    match h:
                        case Lam(name, _, body):
                            t = app(self.fire(App(h, args[0]), subst(body, name, args[0])), *args[1:])
                            continue
                        case DefRef():
                            t = app(self.fire(h, self.unfold(h)), *args)
                            continue
                        case PredConst() if isinstance(h, LEARN_CONSTS):
                            n = _const_arity(self.env, h)
                            if len(args) >= n:
                                vals = [self.nf(a) for a in args[:n]]
                                out = self.delta(h, vals)
                                if out is not None:
                                    t = app(self.fire(app(h, *vals), out), *args[n:])
                                    continue
                                if not self.allow_open:
                                    raise NormalFormViolation(f"stuck constant application {app(h, *vals)!r}")
                                return app(h, *vals, *args[n:])
                        case PredConst():
                            self.class_const(h)
                        case Var():
                            self.stuck_var(h)
                    return app(h, *args)
                case Proj0(u) | Proj1(u):
                    v = self.whnf(u)
                    if isinstance(v, Pair):
                        t = self.fire(type(t)(v), v.left if isinstance(t, Proj0) else v.right)
                        continue
                    return type(t)(v)
                case If(ty, c, a, b):
                    cv = self.whnf(c)
                    if isinstance(cv, (TrueC, FalseC)):
                        t = self.fire(If(ty, cv, a, b), a if isinstance(cv, TrueC) else b)
                        continue
                    return If(ty, cv, a, b)
                case Rec(ty, base, step, n):
                    nv = self.whnf(n)
                    if isinstance(nv, Zero):
                        t = self.fire(Rec(ty, base, step, nv), base)
                        continue
                    if isinstance(nv, Succ):
                        m = nv.term
                        t = self.fire(Rec(ty, base, step, nv), app(step, m, Rec(ty, base, step, m)))
                        continue
                    return Rec(ty, base, step, nv)
                case Join(l, r):
                    lv, rv = self.nf(l), self.nf(r)
                    if isinstance(lv, StateConst) and isinstance(rv, StateConst):
                        return self.fire(Join(lv, rv), StateConst(cunion(lv.state, rv.state)))
                    return Join(lv, rv)
                case DefRef(name):
                    if name in self.env and isinstance(self.env[name].ty, Arrow):
                        return t
                    t = self.fire(t, self.unfold(t))
                    continue
                case Var():
                    self.stuck_var(t)
                    return t
                case PredConst() if isinstance(t, CLASS_CONSTS):
                    self.class_const(t)
                    return t
            return t

    def nf(self, t: Term) -> Term:
        w = self.whnf(t)
        match w:
            case Lam() | DefRef():
                return w
            case App():
                h, args = spine(w)
                if not isinstance(h, (Var, PredConst, DefRef)):
                    h = map_children(h, self.nf)
                return app(h, *[self.nf(a) for a in args])
        return map_children(w, self.nf)

    # -- innermost --------------------------------------------------------

    def inner(self, t: Term) -> Term:
        match t:
            case Lam():
                return t
            case DefRef(name):
                if name in self.env and isinstance(self.env[name].ty, Arrow):
                    return t
                return self.inner(self.fire(t, self.unfold(t)))
            case App(f, a):
                return self.apply_inner(self.inner(f), self.inner(a))
            case Proj0(u) | Proj1(u):
                v = self.inner(u)
                if isinstance(v, Pair):
                    return self.fire(type(t)(v), v.left if isinstance(t, Proj0) else v.right)
                return type(t)(v)
            case If(ty, c, a, b):
                cv, av, bv = self.inner(c), self.inner(a), self.inner(b)
                if isinstance(cv, (TrueC, FalseC)):
                    return self.fire(If(ty, cv, av, bv), av if isinstance(cv, TrueC) else bv)
                return If(ty, cv, av, bv)
            case Rec(ty, base, step, n):
                return self.rec_inner(ty, self.inner(base), self.inner(step), self.inner(n))
            case Join(l, r):
                lv, rv = self.inner(l), self.inner(r)
                if isinstance(lv, StateConst) and isinstance(rv, StateConst):
                    return self.fire(Join(lv, rv), StateConst(cunion(lv.state, rv.state)))
                return Join(lv, rv)
            case Var():
                self.stuck_var(t)
                return t
            case PredConst() if isinstance(t, CLASS_CONSTS):
                self.class_const(t)
                return t
        return map_children(t, self.inner)

    def rec_inner(self, ty, base: Term, step: Term, n: Term) -> Term:
        redex = Rec(ty, base, step, n)
        if isinstance(n, Zero):
            return self.fire(redex, base)
        if isinstance(n, Succ):
            m = n.term
            prev = self.rec_inner(ty, base, step, m)
            self.fire(redex, app(step, m, Rec(ty, base, step, m)))
            return self.apply_inner(self.apply_inner(step, m), prev)
        return redex

    def apply_inner(self, f: Term, a: Term) -> Term:
        match f:
            case Lam(name, _, body):
                return self.inner(self.fire(App(f, a), subst(body, name, a)))
            case DefRef():
                return self.apply_inner(self.inner(self.fire(f, self.unfold(f))), a)
        t = App(f, a)
        h, args = spine(t)
        if isinstance(h, LEARN_CONSTS) and len(args) == _const_arity(self.env, h):
            out = self.delta(h, args)
            if out is not None:
                return self.fire(t, out)
            if not self.allow_open:
                raise NormalFormViolation(f"stuck constant application {t!r}")
        elif isinstance(h, CLASS_CONSTS):
            self.class_const(h)
        elif isinstance(h, Var):
            self.stuck_var(h)
        return t


def _check_shape(t: Term, ty: TypeExpr) -> None:
    """Closed normal forms at atomic or product type are values or pairs."""
    if ty in ATOMIC_TYPES:
        v = value_of(t)
        expected = {NAT: Numeral, BOOL: Boolean, STATE: StateVal}[ty]
        if not isinstance(v, expected):
            raise NormalFormViolation(f"normal form {t!r} of type {ty!r} is not a value")
    elif isinstance(ty, Prod):
        if not isinstance(t, Pair):
            raise NormalFormViolation(f"normal form {t!r} of product type is not a pair")
        _check_shape(t.left, ty.left)
        _check_shape(t.right, ty.right)


def _deep(fn, *args):
    limit = sys.getrecursionlimit()
    if limit < 20000:
        sys.setrecursionlimit(20000)
    return fn(*args)


def normalize(
    env: DefEnv,
    t: Term,
    strategy: str = "outermost",
    step_cap: int = DEFAULT_STEP_CAP,
    check_types: bool = False,
) -> NormalForm:
    """Normalize a closed learning term.

    ``check_types`` re-typechecks every redex against its contractum.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    fv = free_vars(t)
    if fv:
        raise NotClosed(f"free variables {sorted(fv)}")
    for u in subterms(t):
        if isinstance(u, CLASS_CONSTS):
            raise WrongFragment(f"{type(u).__name__}({u.pred}) has no reduction rules; approximate first")
    ty = typecheck(env, {}, t)
    r = _Reducer(env, step_cap, check_types)
    out = _deep(r.nf if strategy == "outermost" else r.inner, t)
    _check_shape(out, ty)
    return NormalForm(out, ty, value_of(out), r.steps, frozenset(r.queries))


def normalize_open(env: DefEnv, t: Term, step_cap: int = DEFAULT_STEP_CAP) -> Term:
    """Weak normal form of a possibly open term; free variables and ideal
    constants are treated as stuck. Used by the proof checker."""
    r = _Reducer(env, step_cap, allow_open=True)
    return _deep(r.nf, t)


def approximate(t: Term, s) -> Term:
    """``t[s]``: replace each ideal constant by its approximation at state ``s``."""
    sc = s if isinstance(s, StateConst) else StateConst(s)
    for u in subterms(t):
        if isinstance(u, LEARN_CONSTS):
            raise WrongFragment(f"term already contains {type(u).__name__}({u.pred})")
    return _approx(t, sc)


def _approx(t: Term, sc: StateConst) -> Term:
    if isinstance(t, CLASS_CONSTS):
        return App(APPROXIMATION_OF[type(t)](t.pred), sc)
    return map_children(t, lambda c: _approx(c, sc))


def eval_atomic(env: DefEnv, t: Term, strategy: str = "outermost") -> Value:
    nf = normalize(env, t, strategy)
    if nf.value is None:
        raise EvalError(f"term of type {nf.ty!r} is not atomic")
    return nf.value


def equal_learn(env: DefEnv, t1: Term, t2: Term) -> bool:
    """Provable equality of closed atomic terms, decided by comparing normal forms."""
    n1, n2 = normalize(env, t1), normalize(env, t2)
    if n1.ty != n2.ty:
        raise EvalError(f"comparing terms of types {n1.ty!r} and {n2.ty!r}")
    if n1.value is None:
        raise EvalError(f"equality is only decided at atomic type, not {n1.ty!r}")
    return n1.term == n2.term
