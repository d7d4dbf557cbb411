"""Command-line interface.

Exit codes: 0 success, 1 semantic failure (failed check, refuted
realizer, ill-typed input), 2 parse or input error, 3 internal error
(step budget or iteration cap exhausted, unexpected exceptions).
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path
from typing import List, Optional

from em1real import learning, proofs
from em1real.evaluation import StepBudgetExceeded, approximate, normalize
from em1real.kernel import CLASS_CONSTS, DefEnv, KernelError, StateConst, free_vars, subst, subterms
from em1real.states import AtomError
from em1real.syntax import (
    KINDS,
    Diagnostic,
    ParseError,
    load_prelude,
    parse,
    parse_defs,
    parse_proof_with_spans,
    print_term,
)

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INTERNAL = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


class Source:
    """An input file together with its kind (from the extension or ``--kind``)."""

    def __init__(self, path: str, kind: Optional[str] = None):
        self.path = path
        self.kind = kind or KINDS.get(Path(path).suffix)
        if self.kind is None:
            raise CliError(EXIT_PARSE, f"error: {path}: cannot infer the kind of file; pass --kind")
        try:
            self.text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(EXIT_PARSE, f"error: {path}: {exc.strerror}") from None
        self.spans: dict = {}

    def parse(self, env: DefEnv, kind: Optional[str] = None):
        kind = kind or self.kind
        try:
            if kind == "proof":
                node, self.spans = parse_proof_with_spans(self.text, env)
                return node
            return parse(kind, self.text, env)
        except ParseError as exc:
            raise CliError(EXIT_PARSE, f"{self.path}:{exc.diagnostic}") from None

    def diagnostic(self, exc: proofs.ProofError) -> str:
        line, col = self.spans.get(id(exc.node), (1, 1))
        return f"{self.path}:{Diagnostic('error', line, col, str(exc))}"


def _env(args) -> DefEnv:
    env = load_prelude() if not args.no_prelude else DefEnv()
    for path in args.defs or ():
        src = Source(path, "defs")
        try:
            env = parse_defs(src.text, env)
        except ParseError as exc:
            raise CliError(EXIT_PARSE, f"{path}:{exc.diagnostic}") from None
    return env


def _proof_or_exit(env, src: Source):
    p = src.parse(env)
    try:
        judgement, term = proofs.check_and_extract(env, p)
    except proofs.ProofError as exc:
        raise CliError(EXIT_FAIL, src.diagnostic(exc)) from None
    return judgement, term


def _realizer(env, path: str, kind: Optional[str]):
    src = Source(path, kind)
    if src.kind == "proof":
        return _proof_or_exit(env, src)[1]
    if src.kind != "term":
        raise CliError(EXIT_PARSE, f"error: {path}: expected a proof or a term, not a {src.kind} file")
    return src.parse(env)


def _state(env, path: str):
    return Source(path, "state").parse(env)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_check(env, args, out):
    judgement, _ = _proof_or_exit(env, Source(args.proof, args.kind))
    print(judgement, file=out)


def cmd_extract(env, args, out):
    _, term = _proof_or_exit(env, Source(args.proof, args.kind))
    text = print_term(term)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    print(text, file=out)


def cmd_normalize(env, args, out):
    t = Source(args.term, args.kind).parse(env)
    if args.state:
        sc = StateConst(_state(env, args.state))
        if any(isinstance(u, CLASS_CONSTS) for u in subterms(t)):
            t = approximate(t, sc)
        if "s" in free_vars(t):
            t = subst(t, "s", sc)
    nf = normalize(env, t, strategy=args.strategy)
    print(nf.value if nf.value is not None else print_term(nf.term), file=out)


def cmd_realizes(env, args, out):
    t = _realizer(env, args.term, args.kind)
    a = Source(args.formula, "formula").parse(env)
    verdict = learning.realizes_at(env, t, a, _state(env, args.state), depth=args.depth)
    print(verdict, file=out)
    if isinstance(verdict, learning.Fail):
        return EXIT_FAIL


def cmd_witness(env, args, out):
    t = _realizer(env, args.source, args.kind)
    start = _state(env, args.warm_start) if args.warm_start else None
    kwargs = {"iter_cap": args.iter_cap}
    if start is not None:
        kwargs["start"] = start
    try:
        witness, trace = learning.pi02_witness(env, t, args.pred, args.input, **kwargs)
    except learning.CheckFailed as exc:
        raise CliError(EXIT_FAIL, f"error: check failed: {exc}") from None
    if args.trace:
        Path(args.trace).write_text(trace.to_json_lines(), encoding="utf-8")
    print(witness, file=out)


def cmd_converge(env, args, out):
    t = Source(args.term, args.kind).parse(env)
    try:
        chain = learning.WiChain([_state(env, p) for p in args.chain])
    except ValueError as exc:
        raise CliError(EXIT_FAIL, f"error: {exc}") from None
    report = learning.check_converges(env, t, chain)
    print(f"last_change {report.last_change_index}", file=out)
    print(f"final {report.final_value}", file=out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="em1real", description="Realizers and learning for HA + EM1 proofs.")
    ap.add_argument("--defs", action="append", metavar="FILE", help="extra definitions file (repeatable)")
    ap.add_argument("--no-prelude", action="store_true", help="do not load the built-in prelude")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--kind", choices=sorted(set(KINDS.values())), help="override the file kind")
        p.set_defaults(fn=fn)
        return p

    p = add("check", cmd_check, "check a proof and print its judgement")
    p.add_argument("proof")

    p = add("extract", cmd_extract, "print the realizer extracted from a proof")
    p.add_argument("proof")
    p.add_argument("-o", "--output", help="also write the realizer to this file")

    p = add("normalize", cmd_normalize, "normalize a closed term")
    p.add_argument("term")
    p.add_argument("--state", help="approximate at this state; also binds the variable s")
    p.add_argument("--strategy", choices=["outermost", "innermost"], default="outermost")

    p = add("realizes", cmd_realizes, "check a realizer against a formula at a state")
    p.add_argument("term")
    p.add_argument("formula")
    p.add_argument("--state", required=True)
    p.add_argument("--depth", type=int, default=learning.DEFAULT_DEPTH)

    p = add("witness", cmd_witness, "compute a witness from a realizer of forall x. exists y. P(x, y)")
    p.add_argument("source", metavar="proof|term")
    p.add_argument("--pred", required=True)
    p.add_argument("--input", type=int, required=True)
    p.add_argument("--trace", help="write the learning trace as JSON lines")
    p.add_argument("--iter-cap", type=int, default=learning.DEFAULT_ITER_CAP)
    p.add_argument("--warm-start", metavar="STATE", help="start learning from this state instead of empty")

    p = add("converge", cmd_converge, "evaluate a term along a chain of states")
    p.add_argument("term")
    p.add_argument("--chain", nargs="+", required=True)
    return ap


def run_command(argv: List[str], out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        # argparse writes usage and help to the process streams
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_PARSE
    try:
        env = _env(args)
        code = args.fn(env, args, out)
        return EXIT_OK if code is None else code
    except CliError as exc:
        print(exc, file=err)
        return exc.code
    except (StepBudgetExceeded, learning.IterCapExceeded, RecursionError) as exc:
        print(f"internal error: {exc}", file=err)
        return EXIT_INTERNAL
    except (KernelError, AtomError, proofs.ProofError, proofs.VariableBudgetExceeded) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_FAIL
    except Exception as exc:  # noqa: BLE001 - every path maps to an exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
