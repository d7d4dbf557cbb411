"""Independent reference models used as test oracles.

None of these import the package's evaluator: they restate the intended
behaviour directly in Python over plain dicts and ints.
"""

from __future__ import annotations

from typing import Dict, List, Tuple

Key = Tuple[str, Tuple[int, ...]]


def next_holds(x: int, y: int) -> bool:
    return y == x + 1


def geq_holds(x: int, y: int) -> bool:
    return y >= x


HOLDS = {"NEXT": next_holds, "GEQ": geq_holds}


def cunion_model(*states: Dict[Key, int]) -> Dict[Key, int]:
    """Left-biased merge: for every key keep the first witness seen."""
    out: Dict[Key, int] = {}
    for s in states:
        for k, m in s.items():
            out.setdefault(k, m)
    return out


def add_model(state: Dict[Key, int], pred: str, args: Tuple[int, ...], m: int) -> Dict[Key, int]:
    if (pred, args) in state or not HOLDS[pred](*args, m):
        return {}
    return {(pred, args): m}


def p2_trace(n: int) -> Tuple[int, List[Tuple[Dict[Key, int], Dict[Key, int]]]]:
    """Hand trace of the classical successor proof at input ``n``.

    The realizer extracted from that proof is, at ``n``,
    ``(Phi[NEXT] n, join(join(empty, Add[NEXT] n (S n)), empty))``:
    the axiom for NEXT(n, S n) and the Skolem axiom are realized by the
    empty state and the oracle axiom by ``Add[NEXT] n (S n)``; the Post
    rule joins the three. Learning from the empty state:

    * round 0, S = {}: ``add`` sees no atom for NEXT(n) and NEXT(n, n+1)
      holds, so tau = {NEXT(n)=n+1};
    * round 1, S = {NEXT(n)=n+1}: the key is present, ``add`` answers {},
      the loop stops;
    * the witness is ``phi`` at the final state, i.e. the stored n+1.
    """
    key = ("NEXT", (n,))
    trace = []
    state: Dict[Key, int] = {}
    while True:
        tau = cunion_model(cunion_model({}, add_model(state, "NEXT", (n,), n + 1)), {})
        trace.append((dict(state), tau))
        if not tau:
            break
        state = {**state, **tau}
    witness = state.get(key, 0)
    return witness, trace


def p1_trace(n: int):
    """The intuitionistic proof's realizer ``(S n, empty)`` never learns."""
    return n + 1, [({}, {})]
