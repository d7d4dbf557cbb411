"""Types, terms and the type checker of the realizer calculus.

The calculus is Goedel's System T (naturals, booleans, products, arrows,
``if`` and primitive recursion) extended with a base type of knowledge
states and three families of constants over named predicates:

* ideal constants ``X[P]``, ``Phi[P]``, ``Add[P]`` (the oracle, the Skolem
  map and the constantly-empty learner) which have no reduction rules;
* their approximations ``chi[P]``, ``phi[P]``, ``add[P]`` which take a state
  as first argument and compute;
* the consistent union ``join``, shared by both families.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Dict, Iterator, Mapping, Optional, Tuple

if TYPE_CHECKING:
    from em1real.states import State


# ---------------------------------------------------------------------------
# Types


class TypeExpr:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Base(TypeExpr):
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Prod(TypeExpr):
    left: TypeExpr
    right: TypeExpr

    def __repr__(self):
        return f"({self.left!r} * {self.right!r})"


@dataclass(frozen=True, slots=True)
class Arrow(TypeExpr):
    dom: TypeExpr
    cod: TypeExpr

    def __repr__(self):
        return f"({self.dom!r} -> {self.cod!r})"


NAT = Base("N")
BOOL = Base("Bool")
STATE = Base("State")
ATOMIC_TYPES = (NAT, BOOL, STATE)


def arrows(*tys: TypeExpr) -> TypeExpr:
    """Right-nested arrow ``t1 -> t2 -> ... -> tn``."""
    out = tys[-1]
    for ty in reversed(tys[:-1]):
        out = Arrow(ty, out)
    return out


def nat_pred_type(arity: int) -> TypeExpr:
    return arrows(*([NAT] * arity), BOOL)


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()

    def __str__(self):
        from em1real.syntax import print_term

        return print_term(self)


@dataclass(frozen=True, slots=True, repr=False)
class Var(Term):
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Lam(Term):
    name: str
    ann: TypeExpr
    body: Term

    def __repr__(self):
        return f"Lam({self.name!r}, {self.ann!r}, {self.body!r})"


@dataclass(frozen=True, slots=True, repr=False)
class App(Term):
    fn: Term
    arg: Term

    def __repr__(self):
        return f"App({self.fn!r}, {self.arg!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Pair(Term):
    left: Term
    right: Term

    def __repr__(self):
        return f"Pair({self.left!r}, {self.right!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Proj0(Term):
    term: Term

    def __repr__(self):
        return f"Proj0({self.term!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Proj1(Term):
    term: Term

    def __repr__(self):
        return f"Proj1({self.term!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Zero(Term):
    def __repr__(self):
        return "Zero"


@dataclass(frozen=True, slots=True, repr=False)
class Succ(Term):
    term: Term

    def __repr__(self):
        k = as_numeral(self)
        return f"num({k})" if k is not None else f"Succ({self.term!r})"


@dataclass(frozen=True, slots=True, repr=False)
class TrueC(Term):
    def __repr__(self):
        return "TrueC"


@dataclass(frozen=True, slots=True, repr=False)
class FalseC(Term):
    def __repr__(self):
        return "FalseC"


@dataclass(frozen=True, slots=True, repr=False)
class If(Term):
    # ty may be None for unannotated surface syntax; typecheck synthesizes it
    ty: Optional[TypeExpr]
    cond: Term
    then: Term
    else_: Term

    def __repr__(self):
        return f"If({self.ty!r}, {self.cond!r}, {self.then!r}, {self.else_!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Rec(Term):
    ty: Optional[TypeExpr]
    base: Term
    step: Term
    n: Term

    def __repr__(self):
        return f"Rec({self.ty!r}, {self.base!r}, {self.step!r}, {self.n!r})"


@dataclass(frozen=True, slots=True, repr=False)
class StateConst(Term):
    # the canonical State value; value equality coincides with set equality
    state: "State"

    def __repr__(self):
        return f"StateConst({self.state!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Join(Term):
    left: Term
    right: Term

    def __repr__(self):
        return f"Join({self.left!r}, {self.right!r})"


@dataclass(frozen=True, slots=True, repr=False)
class PredConst(Term):
    pred: str

    def __repr__(self):
        return f"{type(self).__name__}({self.pred!r})"


class OracleX(PredConst):
    __slots__ = ()


class SkolemPhi(PredConst):
    __slots__ = ()


class AddClass(PredConst):
    __slots__ = ()


class ChiApprox(PredConst):
    __slots__ = ()


class PhiApprox(PredConst):
    __slots__ = ()


class AddApprox(PredConst):
    __slots__ = ()


@dataclass(frozen=True, slots=True, repr=False)
class DefRef(Term):
    name: str

    def __repr__(self):
        return f"DefRef({self.name!r})"


ZERO = Zero()
TRUE = TrueC()
FALSE = FalseC()

CLASS_CONSTS = (OracleX, SkolemPhi, AddClass)
LEARN_CONSTS = (ChiApprox, PhiApprox, AddApprox)
APPROXIMATION_OF = {OracleX: ChiApprox, SkolemPhi: PhiApprox, AddClass: AddApprox}


def numeral(k: int) -> Term:
    if k < 0:
        raise ValueError(f"negative numeral {k}")
    t: Term = ZERO
    for _ in range(k):
        t = Succ(t)
    return t


def as_numeral(t: Term) -> Optional[int]:
    k = 0
    while isinstance(t, Succ):
        t = t.term
        k += 1
    return k if isinstance(t, Zero) else None


def app(fn: Term, *args: Term) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def spine(t: Term) -> Tuple[Term, list]:
    """Split ``h a1 ... an`` into ``(h, [a1, ..., an])``."""
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def state_const(state=None) -> StateConst:
    from em1real.states import EMPTY

    return StateConst(EMPTY if state is None else state)


def children(t: Term) -> Tuple[Term, ...]:
    match t:
        case Lam(body=b):
            return (b,)
        case App(f, a):
            return (f, a)
        case Pair(l, r) | Join(l, r):
            return (l, r)
        case Proj0(u) | Proj1(u) | Succ(u):
            return (u,)
        case If(_, c, a, b):
            return (c, a, b)
        case Rec(_, b, s, n):
            return (b, s, n)
    return ()


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        stack.extend(children(u))


def free_vars(t: Term) -> frozenset:
    match t:
        case Var(name):
            return frozenset((name,))
        case Lam(name, _, body):
            return free_vars(body) - {name}
    out = frozenset()
    for c in children(t):
        out |= free_vars(c)
    return out


def is_closed(t: Term) -> bool:
    return not free_vars(t)


def fresh_name(base: str, avoid) -> str:
    if base not in avoid:
        return base
    stem = base.rstrip("0123456789'") or "v"
    for i in itertools.count(1):
        cand = f"{stem}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def map_children(t: Term, f: Callable[[Term], Term]) -> Term:
    match t:
        case Lam(name, ann, body):
            return Lam(name, ann, f(body))
        case App(fn, a):
            return App(f(fn), f(a))
        case Pair(l, r):
            return Pair(f(l), f(r))
        case Join(l, r):
            return Join(f(l), f(r))
        case Proj0(u):
            return Proj0(f(u))
        case Proj1(u):
            return Proj1(f(u))
        case Succ(u):
            return Succ(f(u))
        case If(ty, c, a, b):
            return If(ty, f(c), f(a), f(b))
        case Rec(ty, b, s, n):
            return Rec(ty, f(b), f(s), f(n))
    return t


def subst(t: Term, name: str, u: Term) -> Term:
    """Capture-avoiding substitution ``t[u/name]``."""
    return subst_many(t, {name: u})


def subst_many(t: Term, sigma: Mapping[str, Term]) -> Term:
    if not sigma:
        return t
    fv_sigma = frozenset().union(*(free_vars(v) for v in sigma.values()))
    return _subst(t, dict(sigma), fv_sigma)


def _subst(t: Term, sigma: dict, fv_sigma: frozenset) -> Term:
    match t:
        case Var(name):
            return sigma.get(name, t)
        case Lam(name, ann, body):
            inner = {k: v for k, v in sigma.items() if k != name}
            if not inner:
                return t
            if name in fv_sigma:
                new = fresh_name(name, fv_sigma | free_vars(body) | set(inner))
                body = _subst(body, {name: Var(new)}, frozenset((new,)))
                name = new
            return Lam(name, ann, _subst(body, inner, fv_sigma))
        case Zero() | TrueC() | FalseC() | StateConst() | PredConst() | DefRef():
            return t
    return map_children(t, lambda c: _subst(c, sigma, fv_sigma))


def canonical(t: Term, _bound: Tuple[str, ...] = ()) -> Term:
    """Rename bound variables by binding depth so that alpha-equivalent
    terms become structurally equal."""
    match t:
        case Var(name):
            if name in _bound:
                depth = len(_bound) - 1 - _bound[::-1].index(name)
                return Var(f"#{depth}")
            return t
        case Lam(name, ann, body):
            return Lam(f"#{len(_bound)}", ann, canonical(body, _bound + (name,)))
        case Zero() | TrueC() | FalseC() | StateConst() | PredConst() | DefRef():
            return t
    return map_children(t, lambda c: canonical(c, _bound))


def alpha_eq(a: Term, b: Term) -> bool:
    return a == b or canonical(a) == canonical(b)


# ---------------------------------------------------------------------------
# Definitions


class KernelError(Exception):
    """Base class of errors raised by the calculus."""


class TypeCheckError(KernelError):
    def __init__(self, message: str, subterm: Optional[Term] = None):
        self.subterm = subterm
        where = f" in `{subterm}`" if subterm is not None else ""
        super().__init__(message + where)


@dataclass(frozen=True)
class Definition:
    name: str
    ty: TypeExpr
    body: Term


class DefEnv:
    """Named closed terms of pure System T, predicates included."""

    def __init__(self, defs=()):
        self._defs: Dict[str, Definition] = {}
        self._pred_cache: Dict[tuple, bool] = {}
        for d in defs:
            self.add(d.name, d.body, d.ty)

    def add(self, name: str, body: Term, ty: Optional[TypeExpr] = None) -> Definition:
        if name in self._defs:
            raise KernelError(f"definition {name!r} already bound")
        if not is_closed(body):
            raise KernelError(f"definition {name!r} is not closed: {sorted(free_vars(body))}")
        frag = classify(body)
        if frag is not Fragment.T:
            raise KernelError(f"definition {name!r} must be pure T, found {frag.value}")
        inferred = typecheck(self, {}, body)
        if ty is not None and ty != inferred:
            raise TypeCheckError(f"definition {name!r} declared {ty!r} but has type {inferred!r}", body)
        d = Definition(name, inferred, body)
        self._defs[name] = d
        return d

    def __contains__(self, name) -> bool:
        return name in self._defs

    def __getitem__(self, name) -> Definition:
        return self._defs[name]

    def __iter__(self):
        return iter(self._defs.values())

    def __len__(self):
        return len(self._defs)

    def names(self) -> frozenset:
        return frozenset(self._defs)

    def copy(self) -> "DefEnv":
        env = DefEnv()
        env._defs = dict(self._defs)
        return env

    def pred_arity(self, name: str) -> int:
        """Arity of predicate ``name : N^k -> Bool``."""
        if name not in self._defs:
            raise TypeCheckError(f"unknown predicate {name!r}")
        ty = self._defs[name].ty
        k = 0
        while isinstance(ty, Arrow) and ty.dom == NAT:
            ty = ty.cod
            k += 1
        if ty != BOOL or k == 0:
            raise TypeCheckError(f"{name!r} is not a predicate N^k -> Bool (k >= 1)")
        return k

    def holds(self, pred: str, args: Tuple[int, ...]) -> bool:
        """Evaluate the closed atomic formula ``pred args`` in System T."""
        key = (pred, tuple(args))
        if key not in self._pred_cache:
            from em1real.evaluation import eval_atomic

            v = eval_atomic(self, app(DefRef(pred), *map(numeral, args)))
            self._pred_cache[key] = v.value
        return self._pred_cache[key]


# ---------------------------------------------------------------------------
# Type checking


def const_type(env: DefEnv, t: PredConst) -> TypeExpr:
    arity = env.pred_arity(t.pred)
    k = arity - 1
    match t:
        case OracleX():
            return arrows(*([NAT] * k), BOOL)
        case SkolemPhi():
            return arrows(*([NAT] * k), NAT)
        case AddClass():
            return arrows(*([NAT] * arity), STATE)
        case ChiApprox():
            return arrows(STATE, *([NAT] * k), BOOL)
        case PhiApprox():
            return arrows(STATE, *([NAT] * k), NAT)
        case AddApprox():
            return arrows(STATE, *([NAT] * arity), STATE)
    raise AssertionError(t)


def typecheck(env: DefEnv, ctx: Mapping[str, TypeExpr], t: Term) -> TypeExpr:
    """Return the unique type of ``t`` under ``ctx`` or raise TypeCheckError."""
    match t:
        case Var(name):
            if name not in ctx:
                raise TypeCheckError(f"unbound variable {name!r}", t)
            return ctx[name]
        case Lam(name, ann, body):
            return Arrow(ann, typecheck(env, {**ctx, name: ann}, body))
        case App(fn, arg):
            fty = typecheck(env, ctx, fn)
            if not isinstance(fty, Arrow):
                raise TypeCheckError(f"applying a non-function of type {fty!r}", t)
            aty = typecheck(env, ctx, arg)
            if aty != fty.dom:
                raise TypeCheckError(f"argument has type {aty!r}, expected {fty.dom!r}", t)
            return fty.cod
        case Pair(l, r):
            return Prod(typecheck(env, ctx, l), typecheck(env, ctx, r))
        case Proj0(u) | Proj1(u):
            ty = typecheck(env, ctx, u)
            if not isinstance(ty, Prod):
                raise TypeCheckError(f"projection of a non-pair of type {ty!r}", t)
            return ty.left if isinstance(t, Proj0) else ty.right
        case Zero():
            return NAT
        case Succ(u):
            _expect(env, ctx, u, NAT, t)
            return NAT
        case TrueC() | FalseC():
            return BOOL
        case If(ty, c, a, b):
            _expect(env, ctx, c, BOOL, t)
            aty = typecheck(env, ctx, a)
            bty = typecheck(env, ctx, b)
            if aty != bty:
                raise TypeCheckError(f"if branches differ: {aty!r} vs {bty!r}", t)
            if ty is not None and ty != aty:
                raise TypeCheckError(f"if annotated {ty!r} but branches have {aty!r}", t)
            return aty
        case Rec(ty, base, step, n):
            bty = typecheck(env, ctx, base)
            if ty is not None and ty != bty:
                raise TypeCheckError(f"rec annotated {ty!r} but base has {bty!r}", t)
            _expect(env, ctx, step, Arrow(NAT, Arrow(bty, bty)), t)
            _expect(env, ctx, n, NAT, t)
            return bty
        case StateConst():
            return STATE
        case Join(l, r):
            _expect(env, ctx, l, STATE, t)
            _expect(env, ctx, r, STATE, t)
            return STATE
        case PredConst():
            try:
                return const_type(env, t)
            except TypeCheckError as exc:
                raise TypeCheckError(str(exc), t) from None
        case DefRef(name):
            if name not in env:
                raise TypeCheckError(f"unknown definition {name!r}", t)
            return env[name].ty
    raise TypeCheckError(f"not a term: {t!r}")


def _expect(env, ctx, u, ty, parent):
    got = typecheck(env, ctx, u)
    if got != ty:
        raise TypeCheckError(f"expected {ty!r}, found {got!r} for `{u}`", parent)


# ---------------------------------------------------------------------------
# Fragments


class Fragment(enum.Enum):
    T = "T"
    T_S = "T_S"
    T_CLASS = "T_Class"
    T_LEARN = "T_Learn"
    MIXED = "Mixed"

    def join(self, other: "Fragment") -> "Fragment":
        if self is other:
            return self
        rank = {Fragment.T: 0, Fragment.T_S: 1}
        if self in rank and other in rank:
            return self if rank[self] >= rank[other] else other
        if self in rank:
            return other
        if other in rank:
            return self
        return Fragment.MIXED

    def __le__(self, other: "Fragment") -> bool:
        return self.join(other) is other


def _node_fragment(t: Term) -> Fragment:
    if isinstance(t, CLASS_CONSTS):
        return Fragment.T_CLASS
    if isinstance(t, LEARN_CONSTS):
        return Fragment.T_LEARN
    # join belongs to both families, so it sits below either of them
    if isinstance(t, (StateConst, Join)):
        return Fragment.T_S
    return Fragment.T


def classify(t: Term) -> Fragment:
    frag = Fragment.T
    for u in subterms(t):
        frag = frag.join(_node_fragment(u))
        if frag is Fragment.MIXED:
            break
    return frag


def has_state_empty(t: Term) -> bool:
    return all(not u.state for u in subterms(t) if isinstance(u, StateConst))
