"""Atoms, states of knowledge and the consistent union.

An atom ``<P, args, m>`` records a verified witness ``m`` for
``exists y. P(args, y)``. A state is a finite set of pairwise consistent
atoms, stored in canonical sorted order so that structural equality of
``State`` values is set equality.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple


class AtomError(Exception):
    """Raised when an atom cannot be formed."""

    def __init__(self, reason: str, message: str):
        self.reason = reason
        super().__init__(f"{reason}: {message}")


class InconsistentState(ValueError):
    pass


@dataclass(frozen=True, order=True, slots=True)
class Atom:
    pred: str
    args: Tuple[int, ...]
    witness: int

    @property
    def key(self) -> Tuple[str, Tuple[int, ...]]:
        return (self.pred, self.args)

    def __str__(self):
        return f"{self.pred}({','.join(map(str, self.args))})={self.witness}"


@dataclass(frozen=True, slots=True)
class State:
    atoms: Tuple[Atom, ...] = ()

    def __post_init__(self):
        atoms = tuple(sorted(set(self.atoms)))
        keys = set()
        for a in atoms:
            if a.key in keys:
                raise InconsistentState(f"two witnesses for {a.pred}{a.args}")
            keys.add(a.key)
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def of(cls, *atoms: Atom) -> "State":
        return cls(tuple(atoms))

    def __iter__(self):
        return iter(self.atoms)

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, atom) -> bool:
        return atom in self.atoms

    def __le__(self, other: "State") -> bool:
        return set(self.atoms) <= set(other.atoms)

    def lookup(self, pred: str, args: Tuple[int, ...]) -> Optional[int]:
        for a in self.atoms:
            if a.pred == pred and a.args == tuple(args):
                return a.witness
        return None

    def consistent_with(self, other: "State") -> bool:
        return all(atoms_consistent(a, b) for a in self.atoms for b in other.atoms)

    def disjoint_with(self, other: "State") -> bool:
        return not set(self.atoms) & set(other.atoms)

    def union(self, other: "State") -> "State":
        """Plain set union; raises InconsistentState if the result is not a state."""
        return State(self.atoms + other.atoms)

    def __str__(self):
        if not self.atoms:
            return "empty"
        return "state{" + ", ".join(map(str, self.atoms)) + "}"


EMPTY = State()


def mk_atom(env, pred: str, args: Iterable[int], witness: int) -> Atom:
    """Build ``<pred, args, witness>`` after checking ``pred args witness = True``."""
    args = tuple(int(a) for a in args)
    if pred not in env:
        raise AtomError("unknown-predicate", pred)
    arity = _arity(env, pred)
    if len(args) + 1 != arity:
        raise AtomError("arity-mismatch", f"{pred} takes {arity} arguments, got {len(args) + 1}")
    if not env.holds(pred, args + (witness,)):
        raise AtomError("predicate-false", f"{pred}{args + (witness,)} is False")
    return Atom(pred, args, int(witness))


def _arity(env, pred: str) -> int:
    from em1real.kernel import TypeCheckError

    try:
        return env.pred_arity(pred)
    except TypeCheckError as exc:
        raise AtomError("arity-mismatch", str(exc)) from None


def atoms_consistent(a: Atom, b: Atom) -> bool:
    return a.key != b.key or a.witness == b.witness


def cunion(s1: State, s2: State) -> State:
    """Left-biased consistent union: drop atoms of ``s2`` that conflict with ``s1``."""
    keep = [b for b in s2.atoms if all(atoms_consistent(a, b) for a in s1.atoms)]
    return State(s1.atoms + tuple(keep))


def add_step(env, s: State, pred: str, args: Iterable[int], m: int) -> State:
    args = tuple(args)
    if pred not in env:
        raise AtomError("unknown-predicate", pred)
    arity = _arity(env, pred)
    if len(args) + 1 != arity:
        raise AtomError("arity-mismatch", f"{pred} takes {arity} arguments, got {len(args) + 1}")
    if s.lookup(pred, args) is not None:
        return EMPTY
    if not env.holds(pred, args + (m,)):
        return EMPTY
    return State((Atom(pred, args, m),))


def chi_phi_lookup(s: State, pred: str, args: Iterable[int]) -> Tuple[bool, int]:
    m = s.lookup(pred, tuple(args))
    return (False, 0) if m is None else (True, m)


class StateInterner:
    """Thread-safe map between states and small integer handles.

    Equal states always receive the same id; the empty state is id 0.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._ids: Dict[State, int] = {EMPTY: 0}
        self._states: List[State] = [EMPTY]

    def intern(self, s: State) -> int:
        with self._lock:
            sid = self._ids.get(s)
            if sid is None:
                sid = len(self._states)
                self._ids[s] = sid
                self._states.append(s)
            return sid

    def state(self, sid: int) -> State:
        return self._states[sid]

    def __len__(self):
        return len(self._states)


INTERNER = StateInterner()
EMPTY_ID = 0
