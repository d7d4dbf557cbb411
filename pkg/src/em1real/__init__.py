"""Proof checking, realizer extraction and witness learning for arithmetic
proofs that use excluded middle on Sigma-1 formulas.

Modules, bottom-up: ``kernel`` (System T with states and oracle
constants), ``states``, ``evaluation``, ``logic``, ``proofs``,
``learning``, ``syntax`` and ``cli``.
"""

from em1real.kernel import DefEnv, Fragment, classify, typecheck
from em1real.states import EMPTY, Atom, State, cunion
from em1real.evaluation import approximate, normalize
from em1real.logic import realizer_type
from em1real.proofs import check, em1_term, extract
from em1real.learning import fixed_point, pi02_witness, realizes_at
from em1real.syntax import load_prelude, parse

__all__ = [
    "DefEnv", "Fragment", "classify", "typecheck",
    "EMPTY", "Atom", "State", "cunion",
    "approximate", "normalize", "realizer_type",
    "check", "em1_term", "extract",
    "fixed_point", "pi02_witness", "realizes_at",
    "load_prelude", "parse",
]
