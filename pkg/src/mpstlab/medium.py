"""Synthesis of medium processes from global types.

A medium relays every message of a choreography: for each communication it
receives from the sender's channel and forwards to the receiver's channel.
Three flavors: plain (finite types, composition allowed), corecursive (adds a
termination/recursion signal on a distinguished session k), and instrumented
(every protocol step is mirrored by an observable action on k).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .process import (
    Branch, BoundOut, Corec, Fwd, Name, Nil, Par, Process, Recv, RecCall,
    Select,
)
from .syntax import (
    GComm, GEnd, GPar, GRec, GVar, GlobalType, Label, Participant, SpecError,
    participants,
)


class MediumError(SpecError):
    pass


class RecursionNotSupported(MediumError):
    pass


class ParNotSupported(MediumError):
    pass


@dataclass(frozen=True)
class MediumConfig:
    """Participant-to-channel convention plus the distinguished session k."""

    name_of: tuple[tuple[Participant, Name], ...]
    k: Name = "k"
    fresh_seed: int = 0

    def __post_init__(self):
        chans = [c for _, c in self.name_of]
        if len(set(chans)) != len(chans):
            raise MediumError("participant channels must be injective")
        if self.k in chans:
            raise MediumError("k must differ from every participant channel")

    def channel(self, p: Participant) -> Name:
        for q, c in self.name_of:
            if q == p:
                return c
        raise MediumError(f"no channel for participant {p}")

    def channels(self) -> tuple[Name, ...]:
        return tuple(c for _, c in self.name_of)

    @classmethod
    def for_type(cls, g: GlobalType, k: Name = "k") -> "MediumConfig":
        parts = sorted(participants(g))
        names = []
        taken = {k}
        for p in parts:
            cand = p.lower()
            while cand in taken:
                cand = cand + "_"
            taken.add(cand)
            names.append((p, cand))
        return cls(tuple(names), k)


def all_labels(g: GlobalType) -> frozenset[Label]:
    if isinstance(g, (GEnd, GVar)):
        return frozenset()
    if isinstance(g, GComm):
        out = frozenset(l for l, _, _ in g.branches)
        for _, _, c in g.branches:
            out |= all_labels(c)
        return out
    if isinstance(g, GPar):
        return all_labels(g.left) | all_labels(g.right)
    if isinstance(g, GRec):
        return all_labels(g.body)
    raise TypeError(f"not a global type: {g!r}")


class _NameGen:
    def __init__(self, seed: int = 0):
        self.n = seed

    def pair(self) -> tuple[Name, Name]:
        u, v = f"u{self.n}", f"v{self.n}"
        self.n += 1
        return u, v

    def one(self, prefix: str) -> Name:
        x = f"{prefix}{self.n}"
        self.n += 1
        return x


def finite_medium(g: GlobalType, cfg: MediumConfig) -> Process:
    """The relaying process of a finite choreography (no recursion)."""
    gen = _NameGen(cfg.fresh_seed)

    def build(node: GlobalType) -> Process:
        if isinstance(node, GEnd):
            return Nil()
        if isinstance(node, (GRec, GVar)):
            raise RecursionNotSupported("finite mediums take recursion-free types")
        if isinstance(node, GPar):
            return Par(build(node.left), build(node.right))
        if isinstance(node, GComm):
            cp = cfg.channel(node.sender)
            cq = cfg.channel(node.receiver)
            cases = []
            for l, _, cont in node.branches:
                u, v = gen.pair()
                cases.append((l, Recv(cp, u, Select(cq, l, BoundOut(
                    cq, v, Par(Fwd(u, v), build(cont)))))))
            return Branch(cp, tuple(cases))
        raise TypeError(f"not a global type: {node!r}")

    return build(g)


def _corec_tuple(cfg: MediumConfig) -> tuple[Name, ...]:
    # every participant channel plus k, in participant name order
    return tuple(cfg.channel(p)
                 for p in sorted(p for p, _ in cfg.name_of)) + (cfg.k,)


def _spare_label(g: GlobalType) -> Label:
    used = all_labels(g)
    i = 0
    while f"lb#{i}" in used:
        i += 1
    return f"lb#{i}"


def recursive_medium(g: GlobalType, cfg: MediumConfig) -> Process:
    """Medium for recursion (no composition): signals end/loop entry on k.

    The signal label is the label of the branch most recently taken; the
    initial one is a spare label not occurring in the type.
    """
    gen = _NameGen(cfg.fresh_seed)
    zs = _corec_tuple(cfg)
    k = cfg.k

    def build(node: GlobalType, carried: Label) -> Process:
        if isinstance(node, GEnd):
            return Select(k, carried, Nil())
        if isinstance(node, GVar):
            return Select(k, carried, RecCall(node.var, zs))
        if isinstance(node, GRec):
            return Corec(node.var, zs, build(node.body, carried), zs)
        if isinstance(node, GPar):
            raise ParNotSupported("recursive mediums take composition-free types")
        if isinstance(node, GComm):
            cp = cfg.channel(node.sender)
            cq = cfg.channel(node.receiver)
            cases = []
            for l, _, cont in node.branches:
                u, v = gen.pair()
                cases.append((l, Recv(cp, u, Select(cq, l, BoundOut(
                    cq, v, Par(Fwd(u, v), build(cont, l)))))))
            return Branch(cp, tuple(cases))
        raise TypeError(f"not a global type: {node!r}")

    return build(g, _spare_label(g))


def annotated_medium(g, cfg: MediumConfig, mid_payload: Name = "u") -> Process:
    """Instrumented medium: one observable k-action per protocol step.

    Accepts the intermediate (in-flight communication) forms as well; these
    start mid-sequence with `mid_payload` standing for the name already
    received from the sender.
    """
    from .opcorr import MidFinal, MidIn, MidOut

    gen = _NameGen(cfg.fresh_seed)
    k = cfg.k
    zs = _corec_tuple(cfg)

    def step_out(cq: Name, l: Label, u: Name, cont: GlobalType) -> Process:
        # select at the receiver, mirrored by an offer on k, then forward
        v = gen.one("v")
        w = gen.one("w")
        return Select(cq, l, Branch(k, ((l, BoundOut(
            cq, v, Par(Fwd(u, v), Recv(k, w, build(cont))))),)))

    def after_recv(cq: Name, l: Label, u: Name, cont: GlobalType) -> Process:
        # output on k (payload irrelevant), then the receiver-side sequence
        v = gen.one("a")
        return BoundOut(k, v, Par(Nil(), step_out(cq, l, u, cont)))

    def build(node) -> Process:
        if isinstance(node, MidOut):
            cp = cfg.channel(node.sender)
            u = gen.one("u")
            return Recv(cp, u, after_recv(cfg.channel(node.receiver),
                                          node.label, u, node.cont))
        if isinstance(node, MidIn):
            return step_out(cfg.channel(node.receiver), node.label,
                            mid_payload, node.cont)
        if isinstance(node, MidFinal):
            v = gen.one("v")
            w = gen.one("w")
            return BoundOut(cfg.channel(node.receiver), v,
                            Par(Fwd(mid_payload, v),
                                Recv(k, w, build(node.cont))))
        if isinstance(node, GEnd):
            return Nil()
        if isinstance(node, GVar):
            return RecCall(node.var, zs)
        if isinstance(node, GRec):
            return Corec(node.var, zs, build(node.body), zs)
        if isinstance(node, GPar):
            raise ParNotSupported("instrumented mediums take composition-free types")
        if isinstance(node, GComm):
            cp = cfg.channel(node.sender)
            cases = []
            for l, _, cont in node.branches:
                u = gen.one("u")
                cases.append((l, Select(k, l, Recv(cp, u, after_recv(
                    cfg.channel(node.receiver), l, u, cont)))))
            return Branch(cp, tuple(cases))
        raise TypeError(f"not a global type: {node!r}")

    return build(g)
