"""Reduction and the early labeled transition system for processes.

Reduction works on flattened scopes (restricted names + parallel components)
and is closed under structural congruence by construction.  The LTS is early:
input transitions are instantiated over the free names of the process plus
one canonical fresh name; bound outputs extrude a canonical fresh object.
Corecursion unfolds as an internal step in both relations, mirroring the
unfold reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .process import (
    Branch, BoundOut, Corec, Fwd, Name, Nil, Par, Process, Recv, RecCall,
    ReplRecv, Restrict, Select, Send, _scope_of, canonical, free_names,
    subst, unfold_corec,
)
from .syntax import Label


class TransitionLabel:
    __slots__ = ()


@dataclass(frozen=True)
class Tau(TransitionLabel):
    pass


@dataclass(frozen=True)
class In(TransitionLabel):
    chan: Name
    obj: Name


@dataclass(frozen=True)
class Out(TransitionLabel):
    chan: Name
    obj: Name


@dataclass(frozen=True)
class BoundOutL(TransitionLabel):
    chan: Name
    obj: Name


@dataclass(frozen=True)
class Sel(TransitionLabel):
    """Offer side of a labeled choice (the branching construct fires)."""

    chan: Name
    label: Label


@dataclass(frozen=True)
class SelCo(TransitionLabel):
    """Selection side of a labeled choice."""

    chan: Name
    label: Label


def label_subject(lab: TransitionLabel) -> Name | None:
    if isinstance(lab, Tau):
        return None
    return lab.chan


def label_free_names(lab: TransitionLabel) -> frozenset[Name]:
    if isinstance(lab, Tau):
        return frozenset()
    if isinstance(lab, (In, Out)):
        return frozenset({lab.chan, lab.obj})
    if isinstance(lab, BoundOutL):
        return frozenset({lab.chan})
    return frozenset({lab.chan})


def label_bound_names(lab: TransitionLabel) -> frozenset[Name]:
    if isinstance(lab, BoundOutL):
        return frozenset({lab.obj})
    return frozenset()


def label_to_json(lab: TransitionLabel) -> dict:
    if isinstance(lab, Tau):
        return {"kind": "tau"}
    if isinstance(lab, In):
        return {"kind": "in", "chan": lab.chan, "obj": lab.obj}
    if isinstance(lab, Out):
        return {"kind": "out", "chan": lab.chan, "obj": lab.obj}
    if isinstance(lab, BoundOutL):
        return {"kind": "boundout", "chan": lab.chan, "obj": lab.obj}
    if isinstance(lab, Sel):
        return {"kind": "offer", "chan": lab.chan, "label": lab.label}
    if isinstance(lab, SelCo):
        return {"kind": "select", "chan": lab.chan, "label": lab.label}
    raise TypeError(f"not a transition label: {lab!r}")


def _first_fresh(prefix: str, avoid: frozenset[Name]) -> Name:
    i = 0
    while f"{prefix}%{i}" in avoid:
        i += 1
    return f"{prefix}%{i}"


def _rebuild(names: list[Name], comps: list[Process]) -> Process:
    live = [c for c in comps if not isinstance(c, Nil)]
    if not live:
        body: Process = Nil()
    else:
        body = live[-1]
        for c in reversed(live[:-1]):
            body = Par(c, body)
    used = frozenset().union(*(free_names(c) for c in live)) if live else frozenset()
    for n in reversed(names):
        if n in used:
            body = Restrict(n, body)
    return body


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------


def reduce_step(p: Process) -> frozenset[Process]:
    """All one-step reducts of p, as canonical forms."""
    names, comps = _scope_of(p)
    avoid = free_names(p) | frozenset(names)
    results: set[Process] = set()

    def emit(new_names: list[Name], new_comps: list[Process]):
        results.add(canonical(_rebuild(new_names, new_comps)))

    for i, ci in enumerate(comps):
        rest = comps[:i] + comps[i + 1:]
        if isinstance(ci, Corec):
            emit(names, rest + [unfold_corec(ci)])
        if isinstance(ci, Fwd):
            for a, b in ((ci.a, ci.b), (ci.b, ci.a)):
                if a in names and a != b:
                    remaining = [n for n in names if n != a]
                    emit(remaining, [subst(c, b, a) for c in rest])
        for j, cj in enumerate(comps):
            if j == i:
                continue
            rest2 = [c for k, c in enumerate(comps) if k not in (i, j)]
            # communication: (bound) output meets (replicated) input
            if isinstance(ci, (Send, BoundOut)) and \
                    isinstance(cj, (Recv, ReplRecv)) and ci.chan == cj.chan:
                replica = [cj] if isinstance(cj, ReplRecv) else []
                if isinstance(ci, Send):
                    cont_in = subst(cj.cont, ci.payload, cj.bind)
                    emit(names, rest2 + [ci.cont, cont_in] + replica)
                else:
                    w = ci.fresh
                    if w in avoid:
                        w = _first_fresh("o", avoid)
                    cont_out = subst(ci.cont, w, ci.fresh)
                    cont_in = subst(cj.cont, w, cj.bind)
                    emit(names + [w], rest2 + [cont_out, cont_in] + replica)
            # labeled choice
            if isinstance(ci, Select) and isinstance(cj, Branch) and \
                    ci.chan == cj.chan:
                cases = cj.case_map()
                if ci.label in cases:
                    emit(names, rest2 + [ci.cont, cases[ci.label]])
    return frozenset(results)


# ---------------------------------------------------------------------------
# labeled transitions
# ---------------------------------------------------------------------------


def lts_step(p: Process,
             universe: tuple[Name, ...] | None = None
             ) -> frozenset[tuple[TransitionLabel, Process]]:
    """All enabled transitions of p, targets in canonical form.

    `universe` overrides the early-input instantiation set (used when two
    processes must be explored over a common set of names).
    """
    return _lts_cached(p, universe)


@lru_cache(maxsize=None)
def _lts_cached(p: Process, universe: tuple[Name, ...] | None
                ) -> frozenset[tuple[TransitionLabel, Process]]:
    fn = free_names(p)
    if universe is None:
        universe = tuple(sorted(fn)) + (_first_fresh("i", fn),)
    ext = _first_fresh("o", fn | frozenset(universe))
    out = set()
    for lab, q in _steps(p, tuple(universe) + (ext,), ext):
        out.add((lab, canonical(q)))
    return frozenset(out)


def _steps(p: Process, universe: tuple[Name, ...], ext: Name):
    """Raw transitions; `ext` is the canonical extruded-object name."""
    if isinstance(p, (Nil, Fwd, RecCall)):
        return []
    if isinstance(p, Send):
        return [(Out(p.chan, p.payload), p.cont)]
    if isinstance(p, BoundOut):
        cont = p.cont if p.fresh == ext else subst(p.cont, ext, p.fresh)
        return [(BoundOutL(p.chan, ext), cont)]
    if isinstance(p, Recv):
        return [(In(p.chan, u), subst(p.cont, u, p.bind)) for u in universe]
    if isinstance(p, ReplRecv):
        return [(In(p.chan, u), Par(subst(p.cont, u, p.bind), p))
                for u in universe]
    if isinstance(p, Select):
        return [(SelCo(p.chan, p.label), p.cont)]
    if isinstance(p, Branch):
        return [(Sel(p.chan, l), q) for l, q in p.cases]
    if isinstance(p, Corec):
        return [(Tau(), unfold_corec(p))]
    if isinstance(p, Par):
        out = []
        left = _steps(p.left, universe, ext)
        right = _steps(p.right, universe, ext)
        for lab, q in left:
            if label_bound_names(lab) & free_names(p.right):
                continue
            out.append((lab, Par(q, p.right)))
        for lab, q in right:
            if label_bound_names(lab) & free_names(p.left):
                continue
            out.append((lab, Par(p.left, q)))
        for lab1, q1 in left:
            for lab2, q2 in right:
                res = _sync(lab1, q1, lab2, q2)
                if res is not None:
                    out.append(res)
                res = _sync(lab2, q2, lab1, q1)
                if res is not None:
                    lab, q = res
                    out.append((lab, q))
        return out
    if isinstance(p, Restrict):
        out = []
        # forwarder elimination requires the enclosing restriction
        body_names, body_comps = _scope_of(p.body)
        for i, c in enumerate(body_comps):
            if isinstance(c, Fwd):
                rest = body_comps[:i] + body_comps[i + 1:]
                for a, b in ((c.a, c.b), (c.b, c.a)):
                    if a == p.name and a != b:
                        out.append(
                            (Tau(),
                             _rebuild(body_names, [subst(x, b, a) for x in rest])))
        inner_universe = universe if p.name in universe \
            else universe + (p.name,)
        for lab, q in _steps(p.body, inner_universe, ext):
            if isinstance(lab, Out) and lab.obj == p.name and lab.chan != p.name:
                # open: extrude the restricted name under a canonical alias
                out.append((BoundOutL(lab.chan, ext), subst(q, ext, p.name)))
                continue
            if p.name in label_free_names(lab):
                continue
            out.append((lab, Restrict(p.name, q)))
        return out
    raise TypeError(f"not a process: {p!r}")


def _sync(lab1, q1, lab2, q2):
    """Try to synchronize an output-ish label (left) with an input-ish one."""
    if isinstance(lab1, Out) and isinstance(lab2, In) and \
            lab1.chan == lab2.chan and lab1.obj == lab2.obj:
        return (Tau(), Par(q1, q2))
    if isinstance(lab1, BoundOutL) and isinstance(lab2, In) and \
            lab1.chan == lab2.chan and lab1.obj == lab2.obj:
        # close: the extruded object is reserved-fresh, so it cannot occur
        # free in the input side before the sync
        return (Tau(), Restrict(lab1.obj, Par(q1, q2)))
    if isinstance(lab1, SelCo) and isinstance(lab2, Sel) and \
            lab1.chan == lab2.chan and lab1.label == lab2.label:
        return (Tau(), Par(q1, q2))
    return None


def tau_successors(p: Process) -> frozenset[Process]:
    return frozenset(q for lab, q in lts_step(p) if isinstance(lab, Tau))


@lru_cache(maxsize=None)
def admin_normalize(p: Process) -> Process:
    """Eagerly eliminate forwarders on restricted names.

    These internal steps are always enabled, confluent, and terminating, so
    quotienting exploration states by them preserves weak behavior and
    deadlock verdicts while keeping looping systems finite-state (otherwise
    completed exchanges could pile up forwarder garbage without bound).
    """
    p = canonical(p)
    while True:
        names, comps = _scope_of(p)
        fired = False
        for i, c in enumerate(comps):
            if not isinstance(c, Fwd):
                continue
            for a, b in ((c.a, c.b), (c.b, c.a)):
                if a in names and a != b:
                    rest = comps[:i] + comps[i + 1:]
                    remaining = [n for n in names if n != a]
                    p = canonical(_rebuild(remaining,
                                           [subst(x, b, a) for x in rest]))
                    fired = True
                    break
            if fired:
                break
        if not fired:
            return p


def weak_transitions(p: Process, depth: int,
                     universe: tuple[Name, ...] | None = None
                     ) -> frozenset[tuple[TransitionLabel, Process]]:
    """Pairs (λ, q) with p =⇒ λ =⇒ q using at most `depth` internal steps.

    The τ-closure itself is reported under the Tau label (including p).
    """
    start = canonical(p)
    closure: dict[Process, int] = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for q in frontier:
            d = closure[q]
            if d >= depth:
                continue
            for lab, r in lts_step(q, universe):
                if isinstance(lab, Tau) and (r not in closure or closure[r] > d + 1):
                    closure[r] = d + 1
                    nxt.append(r)
        frontier = nxt
    results: set[tuple[TransitionLabel, Process]] = set()
    for q, d in closure.items():
        results.add((Tau(), q))
        for lab, r in lts_step(q, universe):
            if isinstance(lab, Tau):
                continue
            budget = depth - d
            post: dict[Process, int] = {r: 0}
            stack = [r]
            while stack:
                s = stack.pop()
                ds = post[s]
                results.add((lab, s))
                if ds >= budget:
                    continue
                for lab2, t in lts_step(s, universe):
                    if isinstance(lab2, Tau) and (t not in post or post[t] > ds + 1):
                        post[t] = ds + 1
                        stack.append(t)
    return frozenset(results)
