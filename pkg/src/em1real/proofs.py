"""Natural deduction for HA + EM1: proof trees, checking and realizer extraction.

``check`` recomputes every conclusion from the children and the rule; it
never trusts a conclusion stored in a node. ``extract`` decorates the same
tree with realizer terms, following the standard term assignment with the
two classical additions: atomic rules produce state-valued learners and
the EM1 axiom is realized by :func:`em1_term`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from em1real.evaluation import EvalError, equal_learn, normalize, normalize_open
from em1real.kernel import (
    BOOL,
    CLASS_CONSTS,
    FALSE,
    NAT,
    STATE,
    TRUE,
    ZERO,
    AddClass,
    App,
    Arrow,
    DefEnv,
    DefRef,
    FalseC,
    If,
    Join,
    KernelError,
    Lam,
    OracleX,
    Pair,
    Prod,
    Proj0,
    Proj1,
    Rec,
    SkolemPhi,
    Succ,
    Term,
    TrueC,
    TypeCheckError,
    TypeExpr,
    Var,
    Zero,
    alpha_eq,
    app,
    canonical,
    free_vars,
    fresh_name,
    has_state_empty,
    spine,
    state_const,
    subst,
    subterms,
    typecheck,
)
from em1real.logic import (
    And,
    Atomic,
    Exists,
    Forall,
    Formula,
    Imp,
    Judgement,
    Or,
    atomic_term,
    check_formula,
    formula_alpha_eq,
    formula_free_vars,
    realizer_type,
    subst_formula,
)

EQ = "eq"
LEQ = "leq"
CONNECTIVE_IMP = "imp"
CONNECTIVE_NOT = "not"
MAX_TAUT_ATOMS = 20


class ProofError(Exception):
    """A proof step does not follow from its premises."""

    def __init__(self, reason: str, message: str, node=None):
        self.reason = reason
        self.node = node
        super().__init__(f"{reason}: {message}")


class VariableBudgetExceeded(Exception):
    pass


# ---------------------------------------------------------------------------
# Proof trees


class ProofNode:
    __slots__ = ()

    def __str__(self):
        from em1real.syntax import print_proof

        return print_proof(self)


@dataclass(frozen=True, eq=True)
class Assume(ProofNode):
    label: str
    formula: Formula


@dataclass(frozen=True)
class AndI(ProofNode):
    left: ProofNode
    right: ProofNode


@dataclass(frozen=True)
class AndE0(ProofNode):
    proof: ProofNode


@dataclass(frozen=True)
class AndE1(ProofNode):
    proof: ProofNode


@dataclass(frozen=True)
class ImpI(ProofNode):
    label: str
    formula: Formula
    proof: ProofNode


@dataclass(frozen=True)
class ImpE(ProofNode):
    fn: ProofNode
    arg: ProofNode


@dataclass(frozen=True)
class OrI0(ProofNode):
    proof: ProofNode
    right: Formula


@dataclass(frozen=True)
class OrI1(ProofNode):
    left: Formula
    proof: ProofNode


@dataclass(frozen=True)
class OrE(ProofNode):
    proof: ProofNode
    label1: str
    case1: ProofNode
    label2: str
    case2: ProofNode


@dataclass(frozen=True)
class ForallI(ProofNode):
    var: str
    proof: ProofNode


@dataclass(frozen=True)
class ForallE(ProofNode):
    proof: ProofNode
    term: Term


@dataclass(frozen=True)
class ExistsI(ProofNode):
    witness: Term
    formula: Formula  # the full existential being introduced
    proof: ProofNode


@dataclass(frozen=True)
class ExistsE(ProofNode):
    proof: ProofNode
    var: str
    label: str
    body: ProofNode


@dataclass(frozen=True)
class Induction(ProofNode):
    base: ProofNode
    step: ProofNode


@dataclass(frozen=True)
class Post(ProofNode):
    rule: str
    premises: Tuple[ProofNode, ...]
    conclusion: Formula

    def __post_init__(self):
        object.__setattr__(self, "premises", tuple(self.premises))


@dataclass(frozen=True)
class AtomicAxiom(ProofNode):
    formula: Formula


@dataclass(frozen=True)
class EM1(ProofNode):
    pred: str


@dataclass(frozen=True)
class ChiAxiom(ProofNode):
    pred: str
    args: Tuple[Term, ...]
    witness: Term

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class PhiAxiom(ProofNode):
    pred: str
    args: Tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


def proof_children(p: ProofNode) -> Tuple[ProofNode, ...]:
    match p:
        case AndI(l, r) | ImpE(l, r) | Induction(l, r):
            return (l, r)
        case AndE0(q) | AndE1(q) | ImpI(proof=q) | OrI0(proof=q) | OrI1(proof=q):
            return (q,)
        case ForallI(proof=q) | ForallE(proof=q) | ExistsI(proof=q):
            return (q,)
        case OrE(q, _, c1, _, c2):
            return (q, c1, c2)
        case ExistsE(q, _, _, b):
            return (q, b)
        case Post(premises=ps):
            return ps
    return ()


# ---------------------------------------------------------------------------
# Derived heads for the oracle axioms and EM1


def _vars(k: int, stem: str) -> List[str]:
    return [stem] if k == 1 else [f"{stem}{i}" for i in range(1, k + 1)]


def _arity(env: DefEnv, pred: str) -> int:
    try:
        return env.pred_arity(pred)
    except TypeCheckError as exc:
        raise ProofError("rule-mismatch", str(exc)) from None


def _lams(names: Sequence[str], body: Term) -> Term:
    for x in reversed(names):
        body = Lam(x, NAT, body)
    return body


def chi_head(env: DefEnv, pred: str) -> Term:
    """``\\x1..x(k+1). imp (P x1..x(k+1)) (X[P] x1..xk)``."""
    n = _arity(env, pred)
    xs = [f"x{i}" for i in range(1, n + 1)]
    vs = [Var(x) for x in xs]
    body = app(DefRef(CONNECTIVE_IMP), app(DefRef(pred), *vs), app(OracleX(pred), *vs[:-1]))
    return _lams(xs, body)


def phi_head(env: DefEnv, pred: str) -> Term:
    """``\\x1..xk. imp (X[P] x1..xk) (P x1..xk (Phi[P] x1..xk))``."""
    k = _arity(env, pred) - 1
    xs = [f"x{i}" for i in range(1, k + 1)]
    vs = [Var(x) for x in xs]
    body = app(
        DefRef(CONNECTIVE_IMP),
        app(OracleX(pred), *vs),
        app(DefRef(pred), *vs, app(SkolemPhi(pred), *vs)),
    )
    return _lams(xs, body)


def neg_head(env: DefEnv, pred: str) -> Term:
    n = _arity(env, pred)
    xs = [f"x{i}" for i in range(1, n + 1)]
    return _lams(xs, App(DefRef(CONNECTIVE_NOT), app(DefRef(pred), *map(Var, xs))))


def em1_statement(env: DefEnv, pred: str) -> Formula:
    """``forall x. (exists y. P(x, y)) \\/ (forall y. not P(x, y))``."""
    n = _arity(env, pred)
    if n < 2:
        raise ProofError("rule-mismatch", f"EM1 needs a predicate of arity >= 2, {pred} has {n}")
    xs = _vars(n - 1, "x")
    args = tuple(map(Var, xs)) + (Var("y"),)
    body: Formula = Or(
        Exists("y", Atomic(DefRef(pred), args)),
        Forall("y", Atomic(neg_head(env, pred), args)),
    )
    for x in reversed(xs):
        body = Forall(x, body)
    return body


def em1_term(env: DefEnv, pred: str) -> Term:
    """The realizer of EM1 for ``pred``:
    ``\\a. (X[P] a, ((Phi[P] a, empty), \\n. Add[P] a n))``."""
    n = _arity(env, pred)
    if n < 2:
        raise ProofError("rule-mismatch", f"EM1 needs a predicate of arity >= 2, {pred} has {n}")
    alphas = _vars(n - 1, "a")
    vs = [Var(a) for a in alphas]
    body = Pair(
        app(OracleX(pred), *vs),
        Pair(
            Pair(app(SkolemPhi(pred), *vs), state_const()),
            Lam("n", NAT, app(AddClass(pred), *vs, Var("n"))),
        ),
    )
    return _lams(alphas, body)


def dummy(ty: TypeExpr) -> Term:
    if ty == NAT:
        return ZERO
    if ty == BOOL:
        return FALSE
    if ty == STATE:
        return state_const()
    if isinstance(ty, Arrow):
        return Lam("_", ty.dom, dummy(ty.cod))
    if isinstance(ty, Prod):
        return Pair(dummy(ty.left), dummy(ty.right))
    raise TypeError(f"no dummy for {ty!r}")


# ---------------------------------------------------------------------------
# Tautological consequence


def _is_connective(env: DefEnv, name: str, nargs: int) -> bool:
    if name not in env:
        return False
    ty = env[name].ty
    for _ in range(nargs):
        if not isinstance(ty, Arrow) or ty.dom != BOOL:
            return False
        ty = ty.cod
    return ty == BOOL


def _propositional(env: DefEnv, t: Term, atoms: Dict[Term, int]):
    """Decompose a boolean term into ('const', b) / ('atom', i) / ('ite', c, a, b)."""
    while True:
        if isinstance(t, TrueC):
            return ("const", True)
        if isinstance(t, FalseC):
            return ("const", False)
        if not free_vars(t) and not any(isinstance(u, CLASS_CONSTS) for u in subterms(t)):
            nf = normalize(env, t)
            return ("const", isinstance(nf.term, TrueC))
        if isinstance(t, If):
            return (
                "ite",
                _propositional(env, t.cond, atoms),
                _propositional(env, t.then, atoms),
                _propositional(env, t.else_, atoms),
            )
        h, args = spine(t)
        if isinstance(h, Lam) and args:
            t = app(subst(h.body, h.name, args[0]), *args[1:])
            continue
        if isinstance(h, DefRef) and _is_connective(env, h.name, len(args)):
            t = app(env[h.name].body, *args)
            continue
        break
    key = canonical(app(h, *[_norm(env, a) for a in args]))
    if key not in atoms:
        atoms[key] = len(atoms)
    return ("atom", atoms[key])


def _norm(env: DefEnv, t: Term) -> Term:
    try:
        return normalize_open(env, t)
    except EvalError:
        return t


def _prop_eval(node, assignment) -> bool:
    match node:
        case ("const", b):
            return b
        case ("atom", i):
            return assignment[i]
        case ("ite", c, a, b):
            return _prop_eval(a, assignment) if _prop_eval(c, assignment) else _prop_eval(b, assignment)
    raise AssertionError(node)


def taut_consequence(env: DefEnv, premises: Sequence[Term], conclusion: Term) -> bool:
    """True iff every boolean assignment to the atomic subterms that makes all
    premises True also makes the conclusion True."""
    atoms: Dict[Term, int] = {}
    ps = [_propositional(env, t, atoms) for t in premises]
    c = _propositional(env, conclusion, atoms)
    if len(atoms) > MAX_TAUT_ATOMS:
        raise VariableBudgetExceeded(f"{len(atoms)} distinct atoms (max {MAX_TAUT_ATOMS})")
    for bits in itertools.product((False, True), repeat=len(atoms)):
        if all(_prop_eval(p, bits) for p in ps) and not _prop_eval(c, bits):
            return False
    return True


# ---------------------------------------------------------------------------
# Atomic axioms and Post rules


def _binary(a: Formula, name: str) -> Optional[Tuple[Term, Term]]:
    if isinstance(a, Atomic) and a.head == DefRef(name) and len(a.args) == 2:
        return a.args
    return None


def _same(env: DefEnv, u: Term, v: Term) -> bool:
    return alpha_eq(_norm(env, u), _norm(env, v))


def _leq_axiom(env: DefEnv, u: Term, v: Term) -> bool:
    u, v = _norm(env, u), _norm(env, v)
    if isinstance(u, Zero):
        return True
    while True:
        if alpha_eq(u, v):
            return True
        if not isinstance(v, Succ):
            return False
        v = v.term


def _has_class_consts(t: Term) -> bool:
    return any(isinstance(u, CLASS_CONSTS) for u in subterms(t))


def valid_atomic_axiom(env: DefEnv, a: Atomic) -> bool:
    """Equality/ordering axioms, equations of T and tautologies."""
    t = atomic_term(a)
    if not free_vars(t) and not _has_class_consts(t):
        return isinstance(normalize(env, t).term, TrueC)
    if isinstance(_norm(env, t), TrueC):
        return True
    for _ in range(64):
        h, args = spine(t)
        if h == DefRef(EQ) and len(args) == 2:
            if _same(env, *args):
                return True
            break
        if h == DefRef(LEQ) and len(args) == 2:
            if _leq_axiom(env, *args):
                return True
            break
        if isinstance(h, Lam) and args:
            t = app(subst(h.body, h.name, args[0]), *args[1:])
        elif isinstance(h, DefRef) and h.name in env and not _is_connective(env, h.name, len(args)):
            t = app(env[h.name].body, *args)
        else:
            break
    return taut_consequence(env, [], atomic_term(a))


def _replace(t: Term, old: Term, new: Term) -> Term:
    if alpha_eq(t, old):
        return new
    from em1real.kernel import map_children

    if isinstance(t, Lam) and t.name in free_vars(old):
        return t
    return map_children(t, lambda c: _replace(c, old, new))


def _post_eq_subst(env, prem, concl) -> bool:
    eq = _binary(prem[0], EQ)
    if eq is None or not isinstance(prem[1], Atomic):
        return False
    u, v = eq
    src, dst = prem[1], concl
    if not alpha_eq(src.head, dst.head) or len(src.args) != len(dst.args):
        return False
    return all(
        _same(env, s, d) or _same(env, _replace(s, u, v), d) for s, d in zip(src.args, dst.args)
    )


def _post_rule_ok(env: DefEnv, rule: str, prem: List[Atomic], concl: Atomic) -> bool:
    match rule, len(prem):
        case "eq_refl", 0:
            c = _binary(concl, EQ)
            return bool(c) and _same(env, c[0], c[1])
        case "leq_refl", 0:
            c = _binary(concl, LEQ)
            return bool(c) and _same(env, c[0], c[1])
        case "leq_zero", 0:
            c = _binary(concl, LEQ)
            return bool(c) and isinstance(_norm(env, c[0]), Zero)
        case "t_eq", 0:
            c = _binary(concl, EQ)
            if not c or free_vars(atomic_term(concl)) or _has_class_consts(atomic_term(concl)):
                return False
            return equal_learn(env, c[0], c[1])
        case "taut", _:
            return taut_consequence(env, [atomic_term(p) for p in prem], atomic_term(concl))
        case "conv", 1:
            return alpha_eq(_norm(env, atomic_term(prem[0])), _norm(env, atomic_term(concl)))
        case "eq_sym", 1:
            e, c = _binary(prem[0], EQ), _binary(concl, EQ)
            return bool(e and c) and _same(env, e[0], c[1]) and _same(env, e[1], c[0])
        case "eq_trans", 2:
            e1, e2, c = _binary(prem[0], EQ), _binary(prem[1], EQ), _binary(concl, EQ)
            return (
                bool(e1 and e2 and c)
                and _same(env, e1[1], e2[0])
                and _same(env, e1[0], c[0])
                and _same(env, e2[1], c[1])
            )
        case "eq_subst", 2:
            return _post_eq_subst(env, prem, concl)
        case "leq_trans", 2:
            l1, l2, c = _binary(prem[0], LEQ), _binary(prem[1], LEQ), _binary(concl, LEQ)
            return (
                bool(l1 and l2 and c)
                and _same(env, l1[1], l2[0])
                and _same(env, l1[0], c[0])
                and _same(env, l2[1], c[1])
            )
        case "leq_antisym", 2:
            l1, l2, c = _binary(prem[0], LEQ), _binary(prem[1], LEQ), _binary(concl, EQ)
            return (
                bool(l1 and l2 and c)
                and _same(env, l1[0], l2[1])
                and _same(env, l1[1], l2[0])
                and _same(env, l1[0], c[0])
                and _same(env, l1[1], c[1])
            )
    raise ProofError("invalid-post-rule", f"unknown Post rule {rule!r} with {len(prem)} premises")


POST_RULES = ("eq_refl", "leq_refl", "leq_zero", "t_eq", "taut", "conv", "eq_sym", "eq_trans", "eq_subst", "leq_trans", "leq_antisym")


# ---------------------------------------------------------------------------
# Checking and extraction


class _Walker:
    def __init__(self, env: DefEnv):
        self.env = env
        self.labels = set()
        self.nat_vars = set()

    def formula(self, a: Formula, node) -> None:
        try:
            check_formula(self.env, a)
        except KernelError as exc:
            raise ProofError("rule-mismatch", f"ill-formed formula {a}: {exc}", node) from None
        self.nat_vars |= formula_free_vars(a)

    def nat_term(self, t: Term, node) -> None:
        ctx = {v: NAT for v in free_vars(t)}
        try:
            ty = typecheck(self.env, ctx, t)
        except KernelError as exc:
            raise ProofError("rule-mismatch", f"ill-typed term {t}: {exc}", node) from None
        if ty != NAT or not has_state_empty(t):
            raise ProofError("rule-mismatch", f"{t} is not an arithmetical term", node)
        self.nat_vars |= free_vars(t)

    @staticmethod
    def merge(node, *hyp_maps) -> Dict[str, Formula]:
        out: Dict[str, Formula] = {}
        for hyps in hyp_maps:
            for lab, f in hyps.items():
                if lab in out and not formula_alpha_eq(out[lab], f):
                    raise ProofError("rule-mismatch", f"label {lab!r} used for {out[lab]} and {f}", node)
                out.setdefault(lab, f)
        return out

    @staticmethod
    def discharge(node, hyps, label, expected: Formula) -> Dict[str, Formula]:
        if label in hyps and not formula_alpha_eq(hyps[label], expected):
            raise ProofError(
                "rule-mismatch", f"assumption {label!r} is {hyps[label]}, expected {expected}", node
            )
        return {k: v for k, v in hyps.items() if k != label}

    def walk(self, p: ProofNode):
        """Return (conclusion, open assumptions, realizer)."""
        env = self.env
        match p:
            case Assume(label, a):
                self.formula(a, p)
                self.labels.add(label)
                return a, {label: a}, Var(label)

            case AndI(l, r):
                a, h1, u = self.walk(l)
                b, h2, v = self.walk(r)
                return And(a, b), self.merge(p, h1, h2), Pair(u, v)

            case AndE0(q) | AndE1(q):
                c, h, u = self.walk(q)
                if not isinstance(c, And):
                    raise ProofError("rule-mismatch", f"and-elimination from {c}", p)
                if isinstance(p, AndE0):
                    return c.left, h, Proj0(u)
                return c.right, h, Proj1(u)

            case ImpI(label, a, q):
                self.formula(a, p)
                self.labels.add(label)
                c, h, u = self.walk(q)
                h = self.discharge(p, h, label, a)
                return Imp(a, c), h, Lam(label, realizer_type(a), u)

            case ImpE(f, x):
                c, h1, u = self.walk(f)
                a, h2, v = self.walk(x)
                if not isinstance(c, Imp) or not formula_alpha_eq(c.left, a):
                    raise ProofError("rule-mismatch", f"cannot apply {c} to {a}", p)
                return c.right, self.merge(p, h1, h2), App(u, v)

            case OrI0(q, b):
                self.formula(b, p)
                a, h, u = self.walk(q)
                return Or(a, b), h, Pair(TRUE, Pair(u, dummy(realizer_type(b))))

            case OrI1(a, q):
                self.formula(a, p)
                b, h, u = self.walk(q)
                return Or(a, b), h, Pair(FALSE, Pair(dummy(realizer_type(a)), u))

            case OrE(q, l1, c1, l2, c2):
                d, h, u = self.walk(q)
                if not isinstance(d, Or):
                    raise ProofError("rule-mismatch", f"or-elimination from {d}", p)
                self.labels |= {l1, l2}
                e1, g1, w1 = self.walk(c1)
                e2, g2, w2 = self.walk(c2)
                if not formula_alpha_eq(e1, e2):
                    raise ProofError("rule-mismatch", f"or-elimination branches prove {e1} and {e2}", p)
                g1 = self.discharge(p, g1, l1, d.left)
                g2 = self.discharge(p, g2, l2, d.right)
                term = If(
                    realizer_type(e1),
                    Proj0(u),
                    App(Lam(l1, realizer_type(d.left), w1), Proj0(Proj1(u))),
                    App(Lam(l2, realizer_type(d.right), w2), Proj1(Proj1(u))),
                )
                return e1, self.merge(p, h, g1, g2), term

            case ForallI(x, q):
                c, h, u = self.walk(q)
                bad = [lab for lab, f in h.items() if x in formula_free_vars(f)]
                if bad:
                    raise ProofError(
                        "eigenvariable-violation", f"{x} is free in open assumption(s) {bad}", p
                    )
                self.nat_vars.add(x)
                return Forall(x, c), h, Lam(x, NAT, u)

            case ForallE(q, t):
                self.nat_term(t, p)
                c, h, u = self.walk(q)
                if not isinstance(c, Forall):
                    raise ProofError("rule-mismatch", f"forall-elimination from {c}", p)
                return subst_formula(c.body, c.var, t), h, App(u, t)

            case ExistsI(t, e, q):
                self.nat_term(t, p)
                self.formula(e, p)
                if not isinstance(e, Exists):
                    raise ProofError("rule-mismatch", f"exists-introduction into {e}", p)
                c, h, u = self.walk(q)
                want = subst_formula(e.body, e.var, t)
                if not formula_alpha_eq(c, want):
                    raise ProofError("rule-mismatch", f"proves {c}, expected {want}", p)
                return e, h, Pair(t, u)

            case ExistsE(q, x, label, body):
                e, h, u = self.walk(q)
                if not isinstance(e, Exists):
                    raise ProofError("rule-mismatch", f"exists-elimination from {e}", p)
                if x in formula_free_vars(e):
                    raise ProofError("eigenvariable-violation", f"{x} is free in {e}", p)
                inst = subst_formula(e.body, e.var, Var(x))
                self.labels.add(label)
                self.nat_vars.add(x)
                c, g, t = self.walk(body)
                g = self.discharge(p, g, label, inst)
                if x in formula_free_vars(c):
                    raise ProofError("eigenvariable-violation", f"{x} is free in the conclusion {c}", p)
                bad = [lab for lab, f in g.items() if x in formula_free_vars(f)]
                if bad:
                    raise ProofError(
                        "eigenvariable-violation", f"{x} is free in open assumption(s) {bad}", p
                    )
                term = app(Lam(x, NAT, Lam(label, realizer_type(inst), t)), Proj0(u), Proj1(u))
                return c, self.merge(p, h, g), term

            case Induction(b, s):
                c0, h1, u = self.walk(b)
                cs, h2, v = self.walk(s)
                if not (isinstance(cs, Forall) and isinstance(cs.body, Imp)):
                    raise ProofError("rule-mismatch", f"induction step proves {cs}", p)
                x, a = cs.var, cs.body.left
                if not formula_alpha_eq(cs.body.right, subst_formula(a, x, Succ(Var(x)))):
                    raise ProofError("rule-mismatch", f"induction step does not prove {a} -> {a}[S {x}/{x}]", p)
                if not formula_alpha_eq(c0, subst_formula(a, x, ZERO)):
                    raise ProofError("rule-mismatch", f"induction base proves {c0}, not {a}[0/{x}]", p)
                y = fresh_name(x, free_vars(u) | free_vars(v))
                term = Lam(y, NAT, Rec(realizer_type(a), u, v, Var(y)))
                return Forall(x, a), self.merge(p, h1, h2), term

            case Post(rule, premises, concl):
                self.formula(concl, p)
                walked = [self.walk(q) for q in premises]
                prem = [c for c, _, _ in walked]
                for a in prem + [concl]:
                    if not isinstance(a, Atomic):
                        raise ProofError("non-atomic-post-formula", f"{a} is not atomic", p)
                try:
                    ok = _post_rule_ok(env, rule, prem, concl)
                except (EvalError, VariableBudgetExceeded) as exc:
                    raise ProofError("invalid-post-rule", str(exc), p) from None
                if not ok:
                    raise ProofError("invalid-post-rule", f"{rule} does not derive {concl}", p)
                term = walked[0][2] if walked else state_const()
                for _, _, w in walked[1:]:
                    term = Join(term, w)
                return concl, self.merge(p, *(h for _, h, _ in walked)), term

            case AtomicAxiom(a):
                self.formula(a, p)
                if not isinstance(a, Atomic):
                    raise ProofError("non-atomic-post-formula", f"axiom {a} is not atomic", p)
                try:
                    ok = valid_atomic_axiom(env, a)
                except (EvalError, VariableBudgetExceeded) as exc:
                    raise ProofError("invalid-post-rule", str(exc), p) from None
                if not ok:
                    raise ProofError("invalid-post-rule", f"{a} is not an atomic axiom", p)
                return a, {}, state_const()

            case EM1(pred):
                return em1_statement(env, pred), {}, em1_term(env, pred)

            case ChiAxiom(pred, args, t):
                n = _arity(env, pred)
                if len(args) + 1 != n:
                    raise ProofError("rule-mismatch", f"{pred} takes {n} arguments", p)
                for a in args + (t,):
                    self.nat_term(a, p)
                concl = Atomic(chi_head(env, pred), args + (t,))
                return concl, {}, app(AddClass(pred), *args, t)

            case PhiAxiom(pred, args):
                n = _arity(env, pred)
                if len(args) + 1 != n:
                    raise ProofError("rule-mismatch", f"{pred} takes {n} arguments", p)
                for a in args:
                    self.nat_term(a, p)
                return Atomic(phi_head(env, pred), args), {}, state_const()

        raise ProofError("rule-mismatch", f"unknown proof node {p!r}", p)

    def run(self, p: ProofNode):
        concl, hyps, term = self.walk(p)
        clash = self.labels & self.nat_vars
        if clash:
            raise ProofError("rule-mismatch", f"names used both as labels and variables: {sorted(clash)}", p)
        return concl, hyps, term


def _judgement(concl: Formula, hyps: Dict[str, Formula]) -> Judgement:
    fv = set(formula_free_vars(concl))
    for f in hyps.values():
        fv |= formula_free_vars(f)
    return Judgement(tuple(sorted(hyps.items())), concl, tuple(sorted(fv)))


def check(env: DefEnv, p: ProofNode) -> Judgement:
    concl, hyps, _ = _Walker(env).run(p)
    return _judgement(concl, hyps)


def extract(env: DefEnv, p: ProofNode) -> Term:
    """The realizer decorating the conclusion of ``p``; open assumptions
    become free variables named by their labels."""
    return _Walker(env).run(p)[2]


def check_and_extract(env: DefEnv, p: ProofNode) -> Tuple[Judgement, Term]:
    concl, hyps, term = _Walker(env).run(p)
    return _judgement(concl, hyps), term


def extraction_context(j: Judgement) -> Dict[str, TypeExpr]:
    """Typing context for an extracted realizer of judgement ``j``."""
    ctx: Dict[str, TypeExpr] = {v: NAT for v in j.free_vars}
    for lab, f in j.assumptions:
        ctx[lab] = realizer_type(f)
    return ctx
