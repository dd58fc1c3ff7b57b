"""Seed-reproducible pseudo-random corpora of global types.

Two flavors: finite types (composition allowed, no recursion) and recursive
types (no composition, at most one recursion binder).  Recursive corpora use
globally fresh label names per communication: reusing a label across
communications can make the loop-signal offers of the corecursive medium
collide, which no amount of silent widening can repair.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .projection import is_wf
from .syntax import (
    Base, GComm, GEnd, GPar, GRec, GVar, GlobalType, LEnd, LocalT, Unit,
    lrecv, lsend,
)

_PARTICIPANT_POOL = ("A", "B", "C", "D")
_LABEL_POOL = ("l1", "l2")
_BASES = ("int", "bool", "str", "nat")


@dataclass(frozen=True)
class CorpusParams:
    max_participants: int = 4
    max_labels: int = 2
    max_depth: int = 4
    kind: str = "fin"  # "fin" (with composition) or "mu" (with recursion)
    payload_sessions: bool = False  # allow small session payloads (fin only)

    def __post_init__(self):
        if self.kind not in ("fin", "mu"):
            raise ValueError(f"unknown corpus kind {self.kind!r}")
        if self.max_participants > len(_PARTICIPANT_POOL):
            raise ValueError("at most four participants")


@dataclass
class CorpusEntry:
    g: GlobalType
    wf: bool


def gen_corpus(seed: int, n: int, params: CorpusParams | None = None
               ) -> list[CorpusEntry]:
    """Deterministic list of global types, each tagged by projectability."""
    params = params or CorpusParams()
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        g = _gen_one(rng, params)
        out.append(CorpusEntry(g, is_wf(g)))
    return out


def _gen_one(rng: random.Random, params: CorpusParams) -> GlobalType:
    parts = list(_PARTICIPANT_POOL[:max(2, rng.randint(2, params.max_participants))])
    if params.kind == "mu":
        labeler = _FreshLabels()
        use_rec = rng.random() < 0.7
        body = _gen_mu(rng, params, parts, params.max_depth, labeler,
                       rec_var="X" if use_rec else None)
        if use_rec and "X" in _gvars(body):
            return GRec("X", body)
        return body
    return _gen_fin(rng, params, parts, params.max_depth)


class _FreshLabels:
    def __init__(self):
        self.n = 0

    def take(self, width: int) -> list[str]:
        out = [f"m{self.n + i}" for i in range(width)]
        self.n += width
        return out


def _gvars(g: GlobalType) -> set[str]:
    from .syntax import free_gvars

    return set(free_gvars(g))


def _payload(rng: random.Random, params: CorpusParams):
    r = rng.random()
    if r < 0.4:
        return Unit()
    if r < 0.9 or not params.payload_sessions:
        return Base(rng.choice(_BASES))
    # a small closed session payload
    p = rng.choice(_PARTICIPANT_POOL)
    mk = lsend if rng.random() < 0.5 else lrecv
    return LocalT(mk(p, [("go", Unit(), LEnd())]))


def _gen_fin(rng: random.Random, params: CorpusParams, parts: list[str],
             depth: int) -> GlobalType:
    if depth == 0 or (depth < params.max_depth and rng.random() < 0.25):
        return GEnd()
    if len(parts) >= 4 and rng.random() < 0.15:
        cut = 2
        left = _gen_fin(rng, params, parts[:cut], depth - 1)
        right = _gen_fin(rng, params, parts[cut:], depth - 1)
        return GPar(left, right)
    sender, receiver = rng.sample(parts, 2)
    width = rng.randint(1, params.max_labels)
    labels = rng.sample(_LABEL_POOL, width)
    branches = [(l, _payload(rng, params),
                 _gen_fin(rng, params, parts, depth - 1)) for l in labels]
    return GComm(sender, receiver, tuple(branches))


def _gen_mu(rng: random.Random, params: CorpusParams, parts: list[str],
            depth: int, labeler: _FreshLabels,
            rec_var: str | None) -> GlobalType:
    if depth == 0:
        return GEnd()
    if depth < params.max_depth and rng.random() < 0.25:
        # a leaf: loop back or finish (loops only under a communication)
        return GEnd()
    sender, receiver = rng.sample(parts, 2)
    width = rng.randint(1, params.max_labels)
    labels = labeler.take(width)
    branches = []
    for l in labels:
        if rec_var is not None and depth <= 2 and rng.random() < 0.5:
            cont: GlobalType = GVar(rec_var)
        else:
            cont = _gen_mu(rng, params, parts, depth - 1, labeler, rec_var)
        branches.append((l, _payload(rng, params), cont))
    return GComm(sender, receiver, tuple(branches))
