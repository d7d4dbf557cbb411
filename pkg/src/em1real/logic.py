"""Arithmetical formulas, realizer types and formula approximation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Tuple

from em1real.kernel import (
    BOOL,
    FALSE,
    NAT,
    STATE,
    Arrow,
    DefEnv,
    Prod,
    Term,
    TypeCheckError,
    TypeExpr,
    Var,
    app,
    canonical,
    free_vars,
    fresh_name,
    has_state_empty,
    nat_pred_type,
    subst,
    subst_many,
    typecheck,
)
from em1real.evaluation import Boolean, approximate, eval_atomic


class Formula:
    __slots__ = ()

    def __str__(self):
        from em1real.syntax import print_formula

        return print_formula(self)


@dataclass(frozen=True, slots=True, repr=False)
class Atomic(Formula):
    head: Term
    args: Tuple[Term, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    def __repr__(self):
        return f"Atomic({self.head!r}, {self.args!r})"


@dataclass(frozen=True, slots=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula

    def __repr__(self):
        return f"And({self.left!r}, {self.right!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula

    def __repr__(self):
        return f"Or({self.left!r}, {self.right!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Imp(Formula):
    left: Formula
    right: Formula

    def __repr__(self):
        return f"Imp({self.left!r}, {self.right!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Forall(Formula):
    var: str
    body: Formula

    def __repr__(self):
        return f"Forall({self.var!r}, {self.body!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Exists(Formula):
    var: str
    body: Formula

    def __repr__(self):
        return f"Exists({self.var!r}, {self.body!r})"


BOTTOM = Atomic(FALSE, ())

Binary = (And, Or, Imp)
Quant = (Forall, Exists)


def atomic_term(a: Atomic) -> Term:
    """The boolean term ``head args`` an atomic formula stands for."""
    return app(a.head, *a.args)


def realizer_type(a: Formula) -> TypeExpr:
    match a:
        case Atomic():
            return STATE
        case And(l, r):
            return Prod(realizer_type(l), realizer_type(r))
        case Or(l, r):
            return Prod(BOOL, Prod(realizer_type(l), realizer_type(r)))
        case Imp(l, r):
            return Arrow(realizer_type(l), realizer_type(r))
        case Forall(_, b):
            return Arrow(NAT, realizer_type(b))
        case Exists(_, b):
            return Prod(NAT, realizer_type(b))
    raise TypeError(f"not a formula: {a!r}")


def formula_free_vars(a: Formula) -> frozenset:
    match a:
        case Atomic(head, args):
            out = free_vars(head)
            for t in args:
                out |= free_vars(t)
            return out
        case Forall(x, b) | Exists(x, b):
            return formula_free_vars(b) - {x}
    return formula_free_vars(a.left) | formula_free_vars(a.right)


def map_terms(a: Formula, f: Callable[[Term], Term]) -> Formula:
    """Apply ``f`` to every head and argument, leaving binders alone."""
    match a:
        case Atomic(head, args):
            return Atomic(f(head), tuple(f(t) for t in args))
        case Forall(x, b):
            return Forall(x, map_terms(b, f))
        case Exists(x, b):
            return Exists(x, map_terms(b, f))
    return type(a)(map_terms(a.left, f), map_terms(a.right, f))


def subst_formula(a: Formula, x: str, t: Term) -> Formula:
    """Capture-avoiding ``a[t/x]``."""
    match a:
        case Atomic(head, args):
            return Atomic(subst(head, x, t), tuple(subst(u, x, t) for u in args))
        case Forall(y, b) | Exists(y, b):
            if y == x or x not in formula_free_vars(b):
                return a
            if y in free_vars(t):
                z = fresh_name(y, free_vars(t) | formula_free_vars(b) | {x})
                b = subst_formula(b, y, Var(z))
                y = z
            return type(a)(y, subst_formula(b, x, t))
    return type(a)(subst_formula(a.left, x, t), subst_formula(a.right, x, t))


def approx_formula(a: Formula, s) -> Formula:
    return map_terms(a, lambda t: approximate(t, s))


def canonical_formula(a: Formula, _bound: Tuple[str, ...] = ()) -> Formula:
    match a:
        case Atomic(head, args):
            # later (inner) binders overwrite outer ones with the same name
            ren = {x: Var(f"@{i}") for i, x in enumerate(_bound)}
            return Atomic(canonical(head), tuple(canonical(_rename(t, ren)) for t in args))
        case Forall(x, b) | Exists(x, b):
            return type(a)(f"@{len(_bound)}", canonical_formula(b, _bound + (x,)))
    return type(a)(canonical_formula(a.left, _bound), canonical_formula(a.right, _bound))


def _rename(t: Term, ren: Mapping[str, Term]) -> Term:
    relevant = {k: v for k, v in ren.items() if k in free_vars(t)}
    return subst_many(t, relevant)


def formula_alpha_eq(a: Formula, b: Formula) -> bool:
    return a == b or canonical_formula(a) == canonical_formula(b)


def check_formula(env: DefEnv, a: Formula, nat_vars=frozenset()) -> None:
    """Validate that ``a`` is a formula of the classical language.

    Heads are closed predicates of state empty; arguments are Nat terms
    whose free variables are all of type Nat.
    """
    match a:
        case Atomic(head, args):
            if free_vars(head):
                raise TypeCheckError(f"atomic head has free variables {sorted(free_vars(head))}", head)
            if not has_state_empty(head):
                raise TypeCheckError("atomic head mentions a non-empty state", head)
            hty = typecheck(env, {}, head)
            if hty != nat_pred_type(len(args)) and not (not args and hty == BOOL):
                raise TypeCheckError(f"head of type {hty!r} applied to {len(args)} arguments", head)
            ctx: Dict[str, TypeExpr] = {}
            for t in args:
                for v in free_vars(t):
                    ctx[v] = NAT
                if typecheck(env, ctx, t) != NAT:
                    raise TypeCheckError("atomic argument is not of type N", t)
                if not has_state_empty(t):
                    raise TypeCheckError("atomic argument mentions a non-empty state", t)
        case Forall(x, b) | Exists(x, b):
            check_formula(env, b, nat_vars | {x})
        case _:
            check_formula(env, a.left, nat_vars)
            check_formula(env, a.right, nat_vars)


def eval_closed_atomic(env: DefEnv, a: Atomic) -> bool:
    v = eval_atomic(env, atomic_term(a))
    if not isinstance(v, Boolean):
        raise TypeCheckError(f"atomic formula evaluates to {v}, not a boolean")
    return v.value


@dataclass(frozen=True)
class Judgement:
    """``labels : assumptions |- conclusion`` with the free Nat variables."""

    assumptions: Tuple[Tuple[str, Formula], ...]
    conclusion: Formula
    free_vars: Tuple[str, ...] = ()

    def __post_init__(self):
        labels = [lab for lab, _ in self.assumptions]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate assumption labels {labels}")

    def __str__(self):
        hyps = ", ".join(f"{lab} : {f}" for lab, f in self.assumptions)
        return (hyps + " " if hyps else "") + f"|- {self.conclusion}"
