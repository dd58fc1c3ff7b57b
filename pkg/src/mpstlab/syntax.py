"""Choreography and endpoint type ASTs.

Global types describe the full message flow of a protocol; local types are one
participant's view of it.  All nodes are frozen dataclasses: construction
validates the structural invariants, and every value is immutable and hashable
afterwards.  Branch maps are stored in insertion order but compared as maps;
`canonical_global` / `canonical_local` sort branches and rename recursion
binders, and are the equality of record for all semantic comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

Participant = str
Label = str
RecVar = str

BASE_TYPES = ("bool", "nat", "int", "str")


class SpecError(Exception):
    """Base class for all structured errors raised by this package."""


class InvalidTypeError(SpecError):
    """A global or local type violates a structural invariant."""


# ---------------------------------------------------------------------------
# payload types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Base:
    """Base payload type (bool, nat, int, str)."""

    name: str

    def __post_init__(self):
        if self.name not in BASE_TYPES:
            raise InvalidTypeError(f"unknown base type {self.name!r}")


@dataclass(frozen=True)
class Unit:
    """The opaque unit payload, written `unit` in the surface syntax."""


@dataclass(frozen=True)
class LocalT:
    """A session payload: a local type carried inside a message."""

    t: "LocalType"


Payload = Union[Base, Unit, LocalT]


# ---------------------------------------------------------------------------
# global types
# ---------------------------------------------------------------------------


class GlobalType:
    """Base class of global type nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class GEnd(GlobalType):
    """Completed choreography."""


@dataclass(frozen=True)
class GComm(GlobalType):
    """A labeled communication from `sender` to `receiver`.

    `branches` is a non-empty tuple of (label, payload, continuation), labels
    pairwise distinct, sender != receiver.
    """

    sender: Participant
    receiver: Participant
    branches: tuple[tuple[Label, Payload, GlobalType], ...]

    def __post_init__(self):
        if self.sender == self.receiver:
            raise InvalidTypeError(
                f"reflexive communication {self.sender}->{self.receiver}")
        if not self.branches:
            raise InvalidTypeError("communication with no branches")
        labels = [l for l, _, _ in self.branches]
        if len(set(labels)) != len(labels):
            raise InvalidTypeError(f"duplicate branch label in {labels}")

    def branch_map(self) -> dict[Label, tuple[Payload, GlobalType]]:
        return {l: (u, g) for l, u, g in self.branches}


@dataclass(frozen=True)
class GPar(GlobalType):
    """Concurrent composition of two global types."""

    left: GlobalType
    right: GlobalType


@dataclass(frozen=True)
class GRec(GlobalType):
    """Recursive global type binding `var` in `body`."""

    var: RecVar
    body: GlobalType


@dataclass(frozen=True)
class GVar(GlobalType):
    var: RecVar


# ---------------------------------------------------------------------------
# local types
# ---------------------------------------------------------------------------


class LocalType:
    """Base class of local type nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class LEnd(LocalType):
    """Terminated local type."""


@dataclass(frozen=True)
class LRecv(LocalType):
    """Branching: offer to receive one of the labeled messages from a peer."""

    peer: Participant
    branches: tuple[tuple[Label, Payload, LocalType], ...]

    def __post_init__(self):
        _check_local_branches(self.branches)

    def branch_map(self) -> dict[Label, tuple[Payload, LocalType]]:
        return {l: (u, t) for l, u, t in self.branches}


@dataclass(frozen=True)
class LSend(LocalType):
    """Selection: choose one of the labeled messages to send to a peer."""

    peer: Participant
    branches: tuple[tuple[Label, Payload, LocalType], ...]

    def __post_init__(self):
        _check_local_branches(self.branches)

    def branch_map(self) -> dict[Label, tuple[Payload, LocalType]]:
        return {l: (u, t) for l, u, t in self.branches}


@dataclass(frozen=True)
class LRec(LocalType):
    var: RecVar
    body: LocalType


@dataclass(frozen=True)
class LVar(LocalType):
    var: RecVar


def _check_local_branches(branches) -> None:
    if not branches:
        raise InvalidTypeError("branching with no branches")
    labels = [l for l, _, _ in branches]
    if len(set(labels)) != len(labels):
        raise InvalidTypeError(f"duplicate branch label in {labels}")


# ---------------------------------------------------------------------------
# constructors taking plain dicts/lists
# ---------------------------------------------------------------------------


def gcomm(sender: Participant, receiver: Participant, branches) -> GComm:
    """Build a GComm from any iterable of (label, payload, cont) triples."""
    return GComm(sender, receiver, tuple((l, u, g) for l, u, g in branches))


def lrecv(peer: Participant, branches) -> LRecv:
    return LRecv(peer, tuple((l, u, t) for l, u, t in branches))


def lsend(peer: Participant, branches) -> LSend:
    return LSend(peer, tuple((l, u, t) for l, u, t in branches))


# ---------------------------------------------------------------------------
# participants and recursion-variable hygiene
# ---------------------------------------------------------------------------


def participants(g: GlobalType) -> frozenset[Participant]:
    """The set of participants of a global type."""
    if isinstance(g, (GEnd, GVar)):
        return frozenset()
    if isinstance(g, GComm):
        parts = {g.sender, g.receiver}
        for _, _, cont in g.branches:
            parts |= participants(cont)
        return frozenset(parts)
    if isinstance(g, GPar):
        return participants(g.left) | participants(g.right)
    if isinstance(g, GRec):
        return participants(g.body)
    raise TypeError(f"not a global type: {g!r}")


def free_gvars(g: GlobalType) -> frozenset[RecVar]:
    if isinstance(g, GEnd):
        return frozenset()
    if isinstance(g, GVar):
        return frozenset({g.var})
    if isinstance(g, GComm):
        out: frozenset[RecVar] = frozenset()
        for _, _, cont in g.branches:
            out |= free_gvars(cont)
        return out
    if isinstance(g, GPar):
        return free_gvars(g.left) | free_gvars(g.right)
    if isinstance(g, GRec):
        return free_gvars(g.body) - {g.var}
    raise TypeError(f"not a global type: {g!r}")


def free_lvars(t: LocalType) -> frozenset[RecVar]:
    if isinstance(t, LEnd):
        return frozenset()
    if isinstance(t, LVar):
        return frozenset({t.var})
    if isinstance(t, (LRecv, LSend)):
        out: frozenset[RecVar] = frozenset()
        for _, u, cont in t.branches:
            if isinstance(u, LocalT):
                out |= free_lvars(u.t)
            out |= free_lvars(cont)
        return out
    if isinstance(t, LRec):
        return free_lvars(t.body) - {t.var}
    raise TypeError(f"not a local type: {t!r}")


def is_closed(g: GlobalType) -> bool:
    return not free_gvars(g)


def is_guarded(g: GlobalType) -> bool:
    """Recursion variables may occur only under a communication."""

    def walk(node: GlobalType, unguarded: frozenset[RecVar]) -> bool:
        if isinstance(node, GEnd):
            return True
        if isinstance(node, GVar):
            return node.var not in unguarded
        if isinstance(node, GComm):
            return all(walk(cont, frozenset()) for _, _, cont in node.branches)
        if isinstance(node, GPar):
            return walk(node.left, unguarded) and walk(node.right, unguarded)
        if isinstance(node, GRec):
            return walk(node.body, unguarded | {node.var})
        raise TypeError(f"not a global type: {node!r}")

    return walk(g, frozenset())


def has_rec(g: GlobalType) -> bool:
    if isinstance(g, (GRec, GVar)):
        return True
    if isinstance(g, GComm):
        return any(has_rec(cont) for _, _, cont in g.branches)
    if isinstance(g, GPar):
        return has_rec(g.left) or has_rec(g.right)
    return False


def has_par(g: GlobalType) -> bool:
    if isinstance(g, GPar):
        return True
    if isinstance(g, GComm):
        return any(has_par(cont) for _, _, cont in g.branches)
    if isinstance(g, GRec):
        return has_par(g.body)
    return False


def validate_global(g: GlobalType) -> None:
    """Raise InvalidTypeError unless g is closed and guarded.

    Structural invariants (distinct labels, sender != receiver) already hold
    by construction.
    """
    fv = free_gvars(g)
    if fv:
        raise InvalidTypeError(f"unbound recursion variable(s) {sorted(fv)}")
    if not is_guarded(g):
        raise InvalidTypeError("unguarded recursion variable")


def unfold_global(g: GRec) -> GlobalType:
    """One-step unfolding of a recursive global type."""
    return subst_gvar(g.body, g.var, g)


def subst_gvar(g: GlobalType, var: RecVar, repl: GlobalType) -> GlobalType:
    if isinstance(g, GEnd):
        return g
    if isinstance(g, GVar):
        return repl if g.var == var else g
    if isinstance(g, GComm):
        return GComm(g.sender, g.receiver,
                     tuple((l, u, subst_gvar(c, var, repl))
                           for l, u, c in g.branches))
    if isinstance(g, GPar):
        return GPar(subst_gvar(g.left, var, repl), subst_gvar(g.right, var, repl))
    if isinstance(g, GRec):
        if g.var == var:
            return g
        return GRec(g.var, subst_gvar(g.body, var, repl))
    raise TypeError(f"not a global type: {g!r}")


# ---------------------------------------------------------------------------
# canonical forms: sorted branch maps, binders renamed by traversal order
# ---------------------------------------------------------------------------


def canonical_global(g: GlobalType) -> GlobalType:
    def walk(node, env: dict[RecVar, RecVar], depth: int):
        if isinstance(node, GEnd):
            return node
        if isinstance(node, GVar):
            return GVar(env.get(node.var, node.var))
        if isinstance(node, GComm):
            branches = sorted(
                ((l, _canon_payload(u, env, depth), walk(c, env, depth))
                 for l, u, c in node.branches),
                key=lambda b: b[0])
            return GComm(node.sender, node.receiver, tuple(branches))
        if isinstance(node, GPar):
            return GPar(walk(node.left, env, depth), walk(node.right, env, depth))
        if isinstance(node, GRec):
            fresh = f"%{depth}"
            return GRec(fresh, walk(node.body, {**env, node.var: fresh}, depth + 1))
        raise TypeError(f"not a global type: {node!r}")

    return walk(g, {}, 0)


def canonical_local(t: LocalType) -> LocalType:
    def walk(node, env: dict[RecVar, RecVar], depth: int):
        if isinstance(node, LEnd):
            return node
        if isinstance(node, LVar):
            return LVar(env.get(node.var, node.var))
        if isinstance(node, (LRecv, LSend)):
            branches = tuple(sorted(
                ((l, _canon_payload(u, env, depth), walk(c, env, depth))
                 for l, u, c in node.branches),
                key=lambda b: b[0]))
            cls = LRecv if isinstance(node, LRecv) else LSend
            return cls(node.peer, branches)
        if isinstance(node, LRec):
            fresh = f"%{depth}"
            return LRec(fresh, walk(node.body, {**env, node.var: fresh}, depth + 1))
        raise TypeError(f"not a local type: {node!r}")

    return walk(t, {}, 0)


def _canon_payload(u: Payload, env, depth):
    if isinstance(u, LocalT):
        # payload types are closed local types; binder renaming restarts
        return LocalT(canonical_local(u.t))
    return u


def global_equal(g1: GlobalType, g2: GlobalType) -> bool:
    return canonical_global(g1) == canonical_global(g2)


def local_equal(t1: LocalType, t2: LocalType) -> bool:
    return canonical_local(t1) == canonical_local(t2)


# ---------------------------------------------------------------------------
# pretty printing (the surface grammar) and JSON export
# ---------------------------------------------------------------------------


def payload_to_text(u: Payload) -> str:
    if isinstance(u, Base):
        return u.name
    if isinstance(u, Unit):
        return "unit"
    if isinstance(u, LocalT):
        return f"<{local_to_text(u.t)}>"
    raise TypeError(f"not a payload: {u!r}")


def global_to_text(g: GlobalType) -> str:
    if isinstance(g, GEnd):
        return "end"
    if isinstance(g, GVar):
        return g.var
    if isinstance(g, GRec):
        return f"rec {g.var}. {global_to_text(g.body)}"
    if isinstance(g, GPar):
        return f"({global_to_text(g.left)} | {global_to_text(g.right)})"
    if isinstance(g, GComm):
        body = ", ".join(
            f"{l}({payload_to_text(u)}). {global_to_text(c)}"
            for l, u, c in g.branches)
        return f"{g.sender}->{g.receiver}{{ {body} }}"
    raise TypeError(f"not a global type: {g!r}")


def local_to_text(t: LocalType) -> str:
    if isinstance(t, LEnd):
        return "end"
    if isinstance(t, LVar):
        return t.var
    if isinstance(t, LRec):
        return f"rec {t.var}. {local_to_text(t.body)}"
    if isinstance(t, (LRecv, LSend)):
        op = "?" if isinstance(t, LRecv) else "!"
        body = ", ".join(
            f"{l}({payload_to_text(u)}). {local_to_text(c)}"
            for l, u, c in t.branches)
        return f"{t.peer}{op}{{ {body} }}"
    raise TypeError(f"not a local type: {t!r}")


def payload_to_json(u: Payload) -> dict:
    if isinstance(u, Base):
        return {"kind": "base", "name": u.name}
    if isinstance(u, Unit):
        return {"kind": "unit"}
    if isinstance(u, LocalT):
        return {"kind": "local", "type": local_to_json(u.t)}
    raise TypeError(f"not a payload: {u!r}")


def global_to_json(g: GlobalType) -> dict:
    if isinstance(g, GEnd):
        return {"kind": "end"}
    if isinstance(g, GVar):
        return {"kind": "var", "var": g.var}
    if isinstance(g, GRec):
        return {"kind": "rec", "var": g.var, "body": global_to_json(g.body)}
    if isinstance(g, GPar):
        return {"kind": "par", "left": global_to_json(g.left),
                "right": global_to_json(g.right)}
    if isinstance(g, GComm):
        return {"kind": "comm", "sender": g.sender, "receiver": g.receiver,
                "branches": [
                    {"label": l, "payload": payload_to_json(u),
                     "cont": global_to_json(c)}
                    for l, u, c in g.branches]}
    raise TypeError(f"not a global type: {g!r}")


def local_to_json(t: LocalType) -> dict:
    if isinstance(t, LEnd):
        return {"kind": "end"}
    if isinstance(t, LVar):
        return {"kind": "var", "var": t.var}
    if isinstance(t, LRec):
        return {"kind": "rec", "var": t.var, "body": local_to_json(t.body)}
    if isinstance(t, (LRecv, LSend)):
        kind = "recv" if isinstance(t, LRecv) else "send"
        return {"kind": kind, "peer": t.peer,
                "branches": [
                    {"label": l, "payload": payload_to_json(u),
                     "cont": local_to_json(c)}
                    for l, u, c in t.branches]}
    raise TypeError(f"not a local type: {t!r}")
