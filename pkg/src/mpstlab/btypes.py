"""Binary session types and the translations from local and global types.

Binary types are linear-logic propositions read as two-party protocols:
1 (terminated), A ⊗ B (output), A ⊸ B (input), ⊕{...} (selection),
&{...} (offer), !A (shared), νX.A (coinductive), X.  The local-type
translation erases participant names; the global-type translation renders a
choreography's sequencing as the behavior of one distinguished session.
"""

from __future__ import annotations

from dataclasses import dataclass

from .projection import project
from .syntax import (
    Base, GComm, GEnd, GPar, GRec, GVar, GlobalType, InvalidTypeError, Label,
    LEnd, LRec, LRecv, LSend, LVar, LocalT, LocalType, Participant, Payload,
    RecVar, SpecError, Unit,
)


class BinaryType:
    """Base class of binary session type nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class One(BinaryType):
    """Terminated session."""


@dataclass(frozen=True)
class Tensor(BinaryType):
    """Output a session of type `left`, continue as `right`."""

    left: BinaryType
    right: BinaryType


@dataclass(frozen=True)
class Lolli(BinaryType):
    """Input a session of type `left`, continue as `right`."""

    left: BinaryType
    right: BinaryType


@dataclass(frozen=True)
class Plus(BinaryType):
    """Internal choice (selection) among labeled alternatives."""

    branches: tuple[tuple[Label, BinaryType], ...]

    def __post_init__(self):
        _check_branches(self.branches)

    def branch_map(self) -> dict[Label, BinaryType]:
        return dict(self.branches)

    def labels(self) -> frozenset[Label]:
        return frozenset(l for l, _ in self.branches)


@dataclass(frozen=True)
class With(BinaryType):
    """External choice (offer) among labeled alternatives."""

    branches: tuple[tuple[Label, BinaryType], ...]

    def __post_init__(self):
        _check_branches(self.branches)

    def branch_map(self) -> dict[Label, BinaryType]:
        return dict(self.branches)

    def labels(self) -> frozenset[Label]:
        return frozenset(l for l, _ in self.branches)


@dataclass(frozen=True)
class Bang(BinaryType):
    """Shared (replicated) session."""

    body: BinaryType


@dataclass(frozen=True)
class Nu(BinaryType):
    """Coinductive session type; the body must be strictly positive in var."""

    var: RecVar
    body: BinaryType

    def __post_init__(self):
        if isinstance(self.body, TVar) and self.body.var == self.var:
            raise InvalidTypeError("coinductive type with no behavior")
        if not _strictly_positive(self.body, self.var):
            raise InvalidTypeError(
                f"recursion variable {self.var} not strictly positive")


@dataclass(frozen=True)
class TVar(BinaryType):
    var: RecVar


def _check_branches(branches):
    if not branches:
        raise InvalidTypeError("empty label map")
    labels = [l for l, _ in branches]
    if len(set(labels)) != len(labels):
        raise InvalidTypeError(f"duplicate label in {labels}")


def _strictly_positive(t: BinaryType, var: RecVar) -> bool:
    # no occurrence to the left of ⊸ (session inputs must not consume
    # the coinductive behavior itself)
    if isinstance(t, (One,)):
        return True
    if isinstance(t, TVar):
        return True
    if isinstance(t, Tensor):
        return _strictly_positive(t.left, var) and _strictly_positive(t.right, var)
    if isinstance(t, Lolli):
        return var not in free_tvars(t.left) and _strictly_positive(t.right, var)
    if isinstance(t, (Plus, With)):
        return all(_strictly_positive(b, var) for _, b in t.branches)
    if isinstance(t, Bang):
        return _strictly_positive(t.body, var)
    if isinstance(t, Nu):
        if t.var == var:
            return True
        return _strictly_positive(t.body, var)
    raise TypeError(f"not a binary type: {t!r}")


def plus(branches) -> Plus:
    if isinstance(branches, dict):
        branches = branches.items()
    return Plus(tuple(branches))


def with_(branches) -> With:
    if isinstance(branches, dict):
        branches = branches.items()
    return With(tuple(branches))


def free_tvars(t: BinaryType) -> frozenset[RecVar]:
    if isinstance(t, One):
        return frozenset()
    if isinstance(t, TVar):
        return frozenset({t.var})
    if isinstance(t, (Tensor, Lolli)):
        return free_tvars(t.left) | free_tvars(t.right)
    if isinstance(t, (Plus, With)):
        out: frozenset[RecVar] = frozenset()
        for _, b in t.branches:
            out |= free_tvars(b)
        return out
    if isinstance(t, Bang):
        return free_tvars(t.body)
    if isinstance(t, Nu):
        return free_tvars(t.body) - {t.var}
    raise TypeError(f"not a binary type: {t!r}")


def subst_tvar(t: BinaryType, var: RecVar, repl: BinaryType) -> BinaryType:
    if isinstance(t, One):
        return t
    if isinstance(t, TVar):
        return repl if t.var == var else t
    if isinstance(t, Tensor):
        return Tensor(subst_tvar(t.left, var, repl), subst_tvar(t.right, var, repl))
    if isinstance(t, Lolli):
        return Lolli(subst_tvar(t.left, var, repl), subst_tvar(t.right, var, repl))
    if isinstance(t, Plus):
        return Plus(tuple((l, subst_tvar(b, var, repl)) for l, b in t.branches))
    if isinstance(t, With):
        return With(tuple((l, subst_tvar(b, var, repl)) for l, b in t.branches))
    if isinstance(t, Bang):
        return Bang(subst_tvar(t.body, var, repl))
    if isinstance(t, Nu):
        if t.var == var:
            return t
        return Nu(t.var, subst_tvar(t.body, var, repl))
    raise TypeError(f"not a binary type: {t!r}")


def unfold(t: Nu) -> BinaryType:
    """One-step unfolding of a coinductive type."""
    return subst_tvar(t.body, t.var, t)


def canonical_btype(t: BinaryType) -> BinaryType:
    """Sorted label maps, binders renamed by traversal depth."""

    def walk(node: BinaryType, env: dict[RecVar, RecVar], depth: int):
        if isinstance(node, One):
            return node
        if isinstance(node, TVar):
            return TVar(env.get(node.var, node.var))
        if isinstance(node, Tensor):
            return Tensor(walk(node.left, env, depth), walk(node.right, env, depth))
        if isinstance(node, Lolli):
            return Lolli(walk(node.left, env, depth), walk(node.right, env, depth))
        if isinstance(node, Plus):
            return Plus(tuple(sorted(
                ((l, walk(b, env, depth)) for l, b in node.branches),
                key=lambda x: x[0])))
        if isinstance(node, With):
            return With(tuple(sorted(
                ((l, walk(b, env, depth)) for l, b in node.branches),
                key=lambda x: x[0])))
        if isinstance(node, Bang):
            return Bang(walk(node.body, env, depth))
        if isinstance(node, Nu):
            fresh = f"%{depth}"
            return Nu(fresh, walk(node.body, {**env, node.var: fresh}, depth + 1))
        raise TypeError(f"not a binary type: {node!r}")

    return walk(t, {}, 0)


def btype_equal(a: BinaryType, b: BinaryType) -> bool:
    return canonical_btype(a) == canonical_btype(b)


def btype_to_text(t: BinaryType) -> str:
    if isinstance(t, One):
        return "1"
    if isinstance(t, TVar):
        return t.var
    if isinstance(t, Tensor):
        return f"({btype_to_text(t.left)} * {btype_to_text(t.right)})"
    if isinstance(t, Lolli):
        return f"({btype_to_text(t.left)} -o {btype_to_text(t.right)})"
    if isinstance(t, Plus):
        body = ", ".join(f"{l}: {btype_to_text(b)}" for l, b in t.branches)
        return f"+{{{body}}}"
    if isinstance(t, With):
        body = ", ".join(f"{l}: {btype_to_text(b)}" for l, b in t.branches)
        return f"&{{{body}}}"
    if isinstance(t, Bang):
        return f"!{btype_to_text(t.body)}"
    if isinstance(t, Nu):
        return f"nu {t.var}. {btype_to_text(t.body)}"
    raise TypeError(f"not a binary type: {t!r}")


def btype_to_json(t: BinaryType) -> dict:
    if isinstance(t, One):
        return {"kind": "one"}
    if isinstance(t, TVar):
        return {"kind": "tvar", "var": t.var}
    if isinstance(t, Tensor):
        return {"kind": "tensor", "left": btype_to_json(t.left),
                "right": btype_to_json(t.right)}
    if isinstance(t, Lolli):
        return {"kind": "lolli", "left": btype_to_json(t.left),
                "right": btype_to_json(t.right)}
    if isinstance(t, (Plus, With)):
        kind = "plus" if isinstance(t, Plus) else "with"
        return {"kind": kind,
                "branches": [{"label": l, "type": btype_to_json(b)}
                             for l, b in t.branches]}
    if isinstance(t, Bang):
        return {"kind": "bang", "body": btype_to_json(t.body)}
    if isinstance(t, Nu):
        return {"kind": "nu", "var": t.var, "body": btype_to_json(t.body)}
    raise TypeError(f"not a binary type: {t!r}")


# ---------------------------------------------------------------------------
# local types -> binary types
# ---------------------------------------------------------------------------


def lt_map(t: LocalType | Payload) -> BinaryType:
    """Translate a local type (or payload) to a binary type.

    Participant names are erased; base and unit payloads become 1; selections
    become ⊕ of ⊗, branchings become & of ⊸, recursion becomes ν.
    """
    if isinstance(t, (Base, Unit)):
        return One()
    if isinstance(t, LocalT):
        return lt_map(t.t)
    if isinstance(t, LEnd):
        return One()
    if isinstance(t, LVar):
        return TVar(t.var)
    if isinstance(t, LRec):
        return Nu(t.var, lt_map(t.body))
    if isinstance(t, LSend):
        return Plus(tuple((l, Tensor(lt_map(u), lt_map(c)))
                          for l, u, c in t.branches))
    if isinstance(t, LRecv):
        return With(tuple((l, Lolli(lt_map(u), lt_map(c)))
                          for l, u, c in t.branches))
    raise TypeError(f"not a local type or payload: {t!r}")


# ---------------------------------------------------------------------------
# closure of projections under a corecursion environment
# ---------------------------------------------------------------------------


class ClosureError(SpecError):
    pass


def clt_map(g: GlobalType, p: Participant, eta, parts: frozenset[Participant],
            channel: str) -> BinaryType:
    """Close the projection of g onto p under the corecursion environment.

    eta follows typecheck.EtaMap: it resolves a free recursion variable to
    the binary type recorded for p's channel.  Three cases: substitute the
    recorded type for the free variable (p participates), return the recorded
    type itself (p does not), or translate a closed projection directly.
    """
    t = project(g, p)
    fv = sorted(_free_lvars(t))
    if not fv:
        return lt_map(t)
    if len(fv) > 1:
        raise ClosureError(f"projection of {p} has several free variables {fv}")
    var = fv[0]
    recorded = eta.lookup_channel(var, channel)
    if recorded is None:
        raise ClosureError(f"no recorded type for channel {channel} under {var}")
    if p in parts:
        return subst_tvar(lt_map(t), var, recorded)
    return recorded


def _free_lvars(t: LocalType) -> frozenset[RecVar]:
    from .syntax import free_lvars

    return free_lvars(t)


# ---------------------------------------------------------------------------
# global types -> binary types (the distinguished-session view)
# ---------------------------------------------------------------------------


def gt_map(g: GlobalType) -> BinaryType:
    """Binary type of the session that mirrors a choreography's steps.

    Each communication becomes selection, output, offer, input on the
    distinguished session; the per-participant payload contribution is fixed
    to 1.  Composition is not supported.
    """
    if isinstance(g, GEnd):
        return One()
    if isinstance(g, GVar):
        return TVar(g.var)
    if isinstance(g, GRec):
        return Nu(g.var, gt_map(g.body))
    if isinstance(g, GPar):
        raise InvalidTypeError(
            "no distinguished-session type for composed global types")
    if isinstance(g, GComm):
        return Plus(tuple(
            (l, Tensor(One(), With(((l, Lolli(One(), gt_map(c))),))))
            for l, _, c in g.branches))
    raise TypeError(f"not a global type: {g!r}")


# ---------------------------------------------------------------------------
# the width preorder on selections
# ---------------------------------------------------------------------------


def oplus_leq(a1: BinaryType, a2: BinaryType) -> bool:
    """True iff a1 = a2, or both are selections and a2 extends a1's label map
    with equal bodies on shared labels."""
    c1, c2 = canonical_btype(a1), canonical_btype(a2)
    if c1 == c2:
        return True
    if isinstance(c1, Plus) and isinstance(c2, Plus):
        m2 = c2.branch_map()
        return all(l in m2 and m2[l] == b for l, b in c1.branches)
    return False
