"""Concrete syntax: tokenizer, recursive-descent parsers and canonical printers.

Every printer is the inverse of its parser on printed text, so
``parse(print(x)) == x`` for types, terms, formulas, proofs and states.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Callable, FrozenSet, List, Optional, Tuple

from em1real.kernel import (
    BOOL,
    FALSE,
    NAT,
    STATE,
    TRUE,
    AddApprox,
    AddClass,
    App,
    Arrow,
    Base,
    ChiApprox,
    DefEnv,
    DefRef,
    FalseC,
    If,
    Join,
    Lam,
    OracleX,
    Pair,
    PhiApprox,
    PredConst,
    Prod,
    Proj0,
    Proj1,
    Rec,
    SkolemPhi,
    StateConst,
    Succ,
    Term,
    TrueC,
    TypeExpr,
    Var,
    as_numeral,
    numeral,
    spine,
)
from em1real.logic import And, Atomic, Exists, Forall, Formula, Imp, Or
from em1real import proofs as pf
from em1real.states import EMPTY, Atom, State, mk_atom


# ---------------------------------------------------------------------------
# Diagnostics


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    line: int
    col: int
    message: str

    def __str__(self):
        return f"{self.line}:{self.col}: {self.severity}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(str(diagnostic))


# ---------------------------------------------------------------------------
# Tokens

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|\\/|/\\|[\\:.()\[\]{},=*])
    """,
    re.X,
)

CONST_KEYWORDS = {
    "X": OracleX,
    "Phi": SkolemPhi,
    "Add": AddClass,
    "chi": ChiApprox,
    "phi": PhiApprox,
    "add": AddApprox,
}
CONST_NAMES = {cls: name for name, cls in CONST_KEYWORDS.items()}

TERM_KEYWORDS = frozenset(
    {"S", "fst", "snd", "true", "false", "empty", "if", "then", "else", "rec", "join", "state"}
)
RESERVED = TERM_KEYWORDS | {"forall", "exists", "def", "let", "N", "Bool", "State"}

PROOF_RULES = frozenset(
    {
        "assume", "and_i", "and_e0", "and_e1", "imp_i", "imp_e", "or_i0", "or_i1", "or_e",
        "forall_i", "forall_e", "exists_i", "exists_e", "induction", "post", "axiom",
        "em1", "chi_ax", "phi_ax",
    }
)


@dataclass(frozen=True)
class Token:
    kind: str  # num | ident | sym | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    out: List[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(
                Diagnostic("error", line, pos - line_start + 1, f"unexpected character {text[pos]!r}")
            )
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# ---------------------------------------------------------------------------
# Parser


class Parser:
    def __init__(self, text: str, env: Optional[DefEnv] = None):
        self.toks = tokenize(text)
        self.i = 0
        self.env = env
        self.def_names: FrozenSet[str] = env.names() if env is not None else frozenset()
        self.lets: dict = {}
        # id(proof node) -> (line, col) of the rule keyword, for diagnostics
        self.spans: dict = {}

    # -- token helpers --------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise ParseError(Diagnostic("error", tok.line, tok.col, message))

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "ident") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self, what: str = "identifier") -> str:
        if self.tok.kind != "ident" or self.tok.text in RESERVED:
            self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        name = self.tok.text
        self.i += 1
        return name

    def number(self) -> int:
        if self.tok.kind != "num":
            self.error(f"expected a number, found {self.tok.text or 'end of input'!r}")
        n = int(self.tok.text)
        self.i += 1
        return n

    def end(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r} after end of input")

    # -- types ------------------------------------------------------------

    def type_(self) -> TypeExpr:
        left = self.prod_type()
        if self.accept("->"):
            return Arrow(left, self.type_())
        return left

    def prod_type(self) -> TypeExpr:
        left = self.atom_type()
        if self.accept("*"):
            return Prod(left, self.prod_type())
        return left

    def atom_type(self) -> TypeExpr:
        if self.accept("("):
            ty = self.type_()
            self.expect(")")
            return ty
        for name, ty in (("N", NAT), ("Bool", BOOL), ("State", STATE)):
            if self.accept(name):
                return ty
        self.error(f"expected a type, found {self.tok.text or 'end of input'!r}")

    # -- terms ------------------------------------------------------------

    def term(self, scope: FrozenSet[str] = frozenset()) -> Term:
        if self.accept("\\"):
            name = self.ident("variable")
            self.expect(":")
            ann = self.type_()
            self.expect(".")
            return Lam(name, ann, self.term(scope | {name}))
        if self.accept("if"):
            ty = self.opt_type_index()
            c = self.term(scope)
            self.expect("then")
            a = self.term(scope)
            self.expect("else")
            return If(ty, c, a, self.term(scope))
        head = self.atom(scope)
        while self.starts_atom():
            head = App(head, self.atom(scope))
        return head

    def opt_type_index(self) -> Optional[TypeExpr]:
        if self.accept("["):
            ty = self.type_()
            self.expect("]")
            return ty
        return None

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind == "num":
            return True
        if t.kind == "sym":
            return t.text == "("
        if t.kind == "ident":
            if t.text in CONST_KEYWORDS:
                return True
            return t.text in TERM_KEYWORDS - {"if", "then", "else"} or t.text not in RESERVED
        return False

    def atom(self, scope: FrozenSet[str]) -> Term:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return numeral(int(t.text))
        if self.accept("("):
            a = self.term(scope)
            if self.accept(","):
                b = self.term(scope)
                self.expect(")")
                return Pair(a, b)
            self.expect(")")
            return a
        if t.kind != "ident":
            self.error(f"expected a term, found {t.text or 'end of input'!r}")
        word = t.text
        if word in CONST_KEYWORDS and self.peek().text == "[":
            self.i += 2
            pred = self.ident("predicate name")
            self.expect("]")
            return CONST_KEYWORDS[word](pred)
        self.i += 1
        match word:
            case "S":
                return Succ(self.atom(scope))
            case "fst":
                return Proj0(self.atom(scope))
            case "snd":
                return Proj1(self.atom(scope))
            case "true":
                return TRUE
            case "false":
                return FALSE
            case "empty":
                return StateConst(EMPTY)
            case "rec":
                ty = self.opt_type_index()
                self.expect("(")
                b = self.term(scope)
                self.expect(",")
                s = self.term(scope)
                self.expect(",")
                n = self.term(scope)
                self.expect(")")
                return Rec(ty, b, s, n)
            case "join":
                self.expect("(")
                a = self.term(scope)
                self.expect(",")
                b = self.term(scope)
                self.expect(")")
                return Join(a, b)
            case "state":
                self.i -= 1
                return StateConst(self.state())
        if word in RESERVED:
            self.error(f"unexpected keyword {word!r}", t)
        if word not in scope and word in self.def_names:
            return DefRef(word)
        return Var(word)

    # -- states -------------------------------------------------------------

    def state(self) -> State:
        if self.accept("empty"):
            return EMPTY
        self.expect("state")
        self.expect("{")
        atoms: List[Atom] = []
        if not self.at("}"):
            while True:
                start = self.tok
                pred = self.ident("predicate name")
                self.expect("(")
                args = [self.number()]
                while self.accept(","):
                    args.append(self.number())
                self.expect(")")
                self.expect("=")
                m = self.number()
                atoms.append(self.make_atom(pred, args, m, start))
                if not self.accept(","):
                    break
        self.expect("}")
        try:
            return State(tuple(atoms))
        except ValueError as exc:
            self.error(str(exc))

    def make_atom(self, pred, args, m, tok) -> Atom:
        if self.env is None:
            return Atom(pred, tuple(args), m)
        from em1real.states import AtomError

        try:
            return mk_atom(self.env, pred, args, m)
        except AtomError as exc:
            self.error(str(exc), tok)

    # -- formulas -------------------------------------------------------------

    def formula(self, scope: FrozenSet[str] = frozenset()) -> Formula:
        for word, cls in (("forall", Forall), ("exists", Exists)):
            if self.accept(word):
                x = self.ident("variable")
                self.expect(".")
                return cls(x, self.formula(scope | {x}))
        left = self.disj(scope)
        if self.accept("->"):
            return Imp(left, self.formula(scope))
        return left

    def disj(self, scope) -> Formula:
        left = self.conj(scope)
        if self.accept("\\/"):
            return Or(left, self.operand(scope, self.disj))
        return left

    def conj(self, scope) -> Formula:
        left = self.primary(scope)
        if self.accept("/\\"):
            return And(left, self.operand(scope, self.conj))
        return left

    def operand(self, scope, rest: Callable) -> Formula:
        if self.at("forall") or self.at("exists"):
            return self.formula(scope)
        return rest(scope)

    def primary(self, scope) -> Formula:
        if self.accept("("):
            a = self.formula(scope)
            self.expect(")")
            return a
        if self.accept("["):
            head = self.term(scope)
            self.expect("]")
        else:
            head = DefRef(self.ident("predicate name"))
        args: Tuple[Term, ...] = ()
        if self.accept("("):
            items = [self.term(scope)]
            while self.accept(","):
                items.append(self.term(scope))
            self.expect(")")
            args = tuple(items)
        return Atomic(head, args)

    def braced_formula(self, scope) -> Formula:
        self.expect("{")
        a = self.formula(scope)
        self.expect("}")
        return a

    # -- proofs -------------------------------------------------------------

    def proof_file(self):
        scope = frozenset()
        while self.accept("let"):
            name_tok = self.tok
            name = self.ident("proof name")
            if name in self.lets:
                self.error(f"proof name {name!r} already defined", name_tok)
            self.expect("=")
            self.lets[name] = self.proof(scope)
        p = self.proof(scope)
        self.end()
        return p

    def subproof(self, scope):
        if self.accept("("):
            p = self.proof(scope)
            self.expect(")")
            return p
        t = self.tok
        if t.kind == "ident" and t.text in self.lets:
            self.i += 1
            return self.lets[t.text]
        if t.kind == "ident" and t.text in PROOF_RULES:
            return self.proof(scope)
        self.error(f"expected a subproof, found {t.text or 'end of input'!r}")

    def term_arg(self, scope) -> Term:
        return self.atom(scope)

    def term_list(self, scope) -> Tuple[Term, ...]:
        self.expect("[")
        items: List[Term] = []
        if not self.at("]"):
            items.append(self.term(scope))
            while self.accept(","):
                items.append(self.term(scope))
        self.expect("]")
        return tuple(items)

    def proof(self, scope):
        t = self.tok
        if t.kind != "ident" or t.text not in PROOF_RULES:
            if self.at("(") or (t.kind == "ident" and t.text in self.lets):
                return self.subproof(scope)
            self.error(f"expected a proof rule, found {t.text or 'end of input'!r}")
        self.i += 1
        node = self.rule(t.text, scope)
        self.spans.setdefault(id(node), (t.line, t.col))
        return node

    def rule(self, word: str, scope):
        sub = lambda: self.subproof(scope)  # noqa: E731
        match word:
            case "assume":
                label = self.ident("label")
                return pf.Assume(label, self.braced_formula(scope))
            case "and_i":
                return pf.AndI(sub(), sub())
            case "and_e0":
                return pf.AndE0(sub())
            case "and_e1":
                return pf.AndE1(sub())
            case "imp_i":
                label = self.ident("label")
                a = self.braced_formula(scope)
                return pf.ImpI(label, a, sub())
            case "imp_e":
                return pf.ImpE(sub(), sub())
            case "or_i0":
                p = sub()
                return pf.OrI0(p, self.braced_formula(scope))
            case "or_i1":
                a = self.braced_formula(scope)
                return pf.OrI1(a, sub())
            case "or_e":
                p = sub()
                l1 = self.ident("label")
                q1 = sub()
                l2 = self.ident("label")
                return pf.OrE(p, l1, q1, l2, sub())
            case "forall_i":
                x = self.ident("variable")
                return pf.ForallI(x, self.subproof(scope | {x}))
            case "forall_e":
                p = sub()
                return pf.ForallE(p, self.term_arg(scope))
            case "exists_i":
                w = self.term_arg(scope)
                a = self.braced_formula(scope)
                return pf.ExistsI(w, a, sub())
            case "exists_e":
                p = sub()
                x = self.ident("variable")
                label = self.ident("label")
                return pf.ExistsE(p, x, label, self.subproof(scope | {x}))
            case "induction":
                return pf.Induction(sub(), sub())
            case "post":
                rule = self.ident("Post rule name")
                premises: List = []
                if self.accept("["):
                    if not self.at("]"):
                        premises.append(sub())
                        while self.accept(","):
                            premises.append(sub())
                    self.expect("]")
                return pf.Post(rule, tuple(premises), self.braced_formula(scope))
            case "axiom":
                return pf.AtomicAxiom(self.braced_formula(scope))
            case "em1":
                return pf.EM1(self.ident("predicate name"))
            case "chi_ax":
                pred = self.ident("predicate name")
                args = self.term_list(scope)
                return pf.ChiAxiom(pred, args, self.term_arg(scope))
            case "phi_ax":
                pred = self.ident("predicate name")
                return pf.PhiAxiom(pred, self.term_list(scope))
        raise AssertionError(word)

    # -- definitions --------------------------------------------------------

    def defs(self, env: DefEnv) -> DefEnv:
        from em1real.kernel import KernelError

        while self.tok.kind != "eof":
            self.expect("def")
            name_tok = self.tok
            name = self.ident("definition name")
            ty = None
            if self.accept(":"):
                ty = self.type_()
            self.expect("=")
            body = self.term()
            try:
                env.add(name, body, ty)
            except KernelError as exc:
                self.error(str(exc), name_tok)
            self.def_names = env.names()
        return env


def _run(text: str, env: Optional[DefEnv], fn: Callable[[Parser], object]):
    p = Parser(text, env)
    out = fn(p)
    p.end()
    return out


def parse_type(text: str) -> TypeExpr:
    return _run(text, None, Parser.type_)


def parse_term(text: str, env: Optional[DefEnv] = None) -> Term:
    return _run(text, env, Parser.term)


def parse_formula(text: str, env: Optional[DefEnv] = None) -> Formula:
    return _run(text, env, Parser.formula)


def parse_state(text: str, env: Optional[DefEnv] = None) -> State:
    return _run(text, env, Parser.state)


def parse_proof(text: str, env: Optional[DefEnv] = None):
    return Parser(text, env).proof_file()


def parse_proof_with_spans(text: str, env: Optional[DefEnv] = None):
    """Like :func:`parse_proof`, also returning ``{id(node): (line, col)}``."""
    p = Parser(text, env)
    proof = p.proof_file()
    return proof, p.spans


def parse_defs(text: str, env: Optional[DefEnv] = None) -> DefEnv:
    """Extend a copy of ``env`` with the definitions in ``text``."""
    env = env.copy() if env is not None else DefEnv()
    return Parser(text, env).defs(env)


KINDS = {
    ".term": "term",
    ".form": "formula",
    ".proof": "proof",
    ".state": "state",
    ".defs": "defs",
}


def parse(kind: str, text: str, env: Optional[DefEnv] = None):
    match kind:
        case "term":
            return parse_term(text, env)
        case "formula":
            return parse_formula(text, env)
        case "proof":
            return parse_proof(text, env)
        case "state":
            return parse_state(text, env)
        case "defs":
            return parse_defs(text, env)
        case "type":
            return parse_type(text)
    raise ValueError(f"unknown source kind {kind!r}")


def load_prelude() -> DefEnv:
    text = resources.files("em1real").joinpath("data/prelude.defs").read_text(encoding="utf-8")
    return parse_defs(text)


# ---------------------------------------------------------------------------
# Printers


def print_type(ty: TypeExpr) -> str:
    match ty:
        case Base(name):
            return name
        case Arrow(dom, cod):
            d = print_type(dom)
            return f"({d}) -> {print_type(cod)}" if isinstance(dom, Arrow) else f"{d} -> {print_type(cod)}"
        case Prod(left, right):
            l = print_type(left)
            if isinstance(left, (Arrow, Prod)):
                l = f"({l})"
            r = print_type(right)
            if isinstance(right, Arrow):
                r = f"({r})"
            return f"{l} * {r}"
    raise TypeError(f"not a type: {ty!r}")


TOP, HEAD, ARG = 0, 1, 2


def print_term(t: Term, prec: int = TOP) -> str:
    k = as_numeral(t)
    if k is not None:
        return str(k)
    match t:
        case Var(name) | DefRef(name):
            return name
        case TrueC():
            return "true"
        case FalseC():
            return "false"
        case StateConst(state):
            return print_state(state)
        case PredConst(pred):
            return f"{CONST_NAMES[type(t)]}[{pred}]"
        case Pair(l, r):
            return f"({print_term(l)}, {print_term(r)})"
        case Join(l, r):
            return f"join({print_term(l)}, {print_term(r)})"
        case Rec(ty, b, s, n):
            idx = f"[{print_type(ty)}]" if ty is not None else ""
            return f"rec{idx}({print_term(b)}, {print_term(s)}, {print_term(n)})"
        case Lam(name, ann, body):
            out = f"\\{name}:{print_type(ann)}. {print_term(body)}"
            return out if prec == TOP else f"({out})"
        case If(ty, c, a, b):
            idx = f"[{print_type(ty)}]" if ty is not None else ""
            out = f"if{idx} {print_term(c)} then {print_term(a)} else {print_term(b)}"
            return out if prec == TOP else f"({out})"
        case Succ(u) | Proj0(u) | Proj1(u):
            word = {Succ: "S", Proj0: "fst", Proj1: "snd"}[type(t)]
            out = f"{word} {print_term(u, ARG)}"
            return out if prec < ARG else f"({out})"
        case App():
            h, args = spine(t)
            out = " ".join([print_term(h, HEAD)] + [print_term(a, ARG) for a in args])
            return out if prec < ARG else f"({out})"
    raise TypeError(f"not a term: {t!r}")


def print_state(s: State) -> str:
    return str(s)


_FORMULA_PREC = {Imp: 1, Or: 2, And: 3}
_FORMULA_OP = {Imp: "->", Or: "\\/", And: "/\\"}


def print_formula(a: Formula, prec: int = 0) -> str:
    match a:
        case Atomic(head, args):
            h = head.name if isinstance(head, DefRef) else f"[{print_term(head)}]"
            if not args:
                return h
            return f"{h}({', '.join(print_term(t) for t in args)})"
        case Forall(x, b) | Exists(x, b):
            word = "forall" if isinstance(a, Forall) else "exists"
            out = f"{word} {x}. {print_formula(b)}"
            return out if prec == 0 else f"({out})"
        case And(l, r) | Or(l, r) | Imp(l, r):
            p = _FORMULA_PREC[type(a)]
            out = f"{print_formula(l, p + 1)} {_FORMULA_OP[type(a)]} {print_formula(r, p)}"
            return out if prec <= p else f"({out})"
    raise TypeError(f"not a formula: {a!r}")


def print_proof(p) -> str:
    def sub(q) -> str:
        return f"({print_proof(q)})"

    def braced(a: Formula) -> str:
        return "{" + print_formula(a) + "}"

    def arg(t: Term) -> str:
        return print_term(t, ARG)

    match p:
        case pf.Assume(label, a):
            return f"assume {label} {braced(a)}"
        case pf.AndI(l, r):
            return f"and_i {sub(l)} {sub(r)}"
        case pf.AndE0(q):
            return f"and_e0 {sub(q)}"
        case pf.AndE1(q):
            return f"and_e1 {sub(q)}"
        case pf.ImpI(label, a, q):
            return f"imp_i {label} {braced(a)} {sub(q)}"
        case pf.ImpE(f, x):
            return f"imp_e {sub(f)} {sub(x)}"
        case pf.OrI0(q, b):
            return f"or_i0 {sub(q)} {braced(b)}"
        case pf.OrI1(a, q):
            return f"or_i1 {braced(a)} {sub(q)}"
        case pf.OrE(q, l1, c1, l2, c2):
            return f"or_e {sub(q)} {l1} {sub(c1)} {l2} {sub(c2)}"
        case pf.ForallI(x, q):
            return f"forall_i {x} {sub(q)}"
        case pf.ForallE(q, t):
            return f"forall_e {sub(q)} {arg(t)}"
        case pf.ExistsI(t, a, q):
            return f"exists_i {arg(t)} {braced(a)} {sub(q)}"
        case pf.ExistsE(q, x, label, b):
            return f"exists_e {sub(q)} {x} {label} {sub(b)}"
        case pf.Induction(b, s):
            return f"induction {sub(b)} {sub(s)}"
        case pf.Post(rule, premises, concl):
            prem = f" [{', '.join(sub(q) for q in premises)}]" if premises else ""
            return f"post {rule}{prem} {braced(concl)}"
        case pf.AtomicAxiom(a):
            return f"axiom {braced(a)}"
        case pf.EM1(pred):
            return f"em1 {pred}"
        case pf.ChiAxiom(pred, args, t):
            return f"chi_ax {pred} [{', '.join(print_term(u) for u in args)}] {arg(t)}"
        case pf.PhiAxiom(pred, args):
            return f"phi_ax {pred} [{', '.join(print_term(u) for u in args)}]"
    raise TypeError(f"not a proof: {p!r}")


def print_defs(env: DefEnv) -> str:
    return "".join(f"def {d.name} : {print_type(d.ty)} = {print_term(d.body)}\n" for d in env)


def print_ast(x) -> str:
    if isinstance(x, Term):
        return print_term(x)
    if isinstance(x, Formula):
        return print_formula(x)
    if isinstance(x, State):
        return print_state(x)
    if isinstance(x, TypeExpr):
        return print_type(x)
    if isinstance(x, DefEnv):
        return print_defs(x)
    return print_proof(x)
