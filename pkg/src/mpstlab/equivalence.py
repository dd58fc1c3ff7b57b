"""Swapping of independent communications, conversion rewriting, weak bisimulation.

Swapping commutes causally independent communications of a global type (and
scope-extrudes shared parallel components under a communication).  On
processes, the corresponding moves are the typed commuting conversions: two
consecutive actions on unrelated channels commute, prefixes commute with
restrictions and with independent parallel components.  Both searches are
bounded BFS over canonical forms.  A finite-state weak-bisimulation check
over the labeled semantics completes the toolkit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .process import (
    Branch, BoundOut, Corec, Fwd, Name, Nil, Par, Process, Recv, RecCall,
    ReplRecv, Restrict, Select, Send, canonical, free_names, proc_to_text,
    struct_congruent, subst,
)
from .semantics import Tau, lts_step
from .syntax import (
    GComm, GEnd, GPar, GRec, GVar, GlobalType, canonical_global,
    global_to_text, participants,
)

Path = tuple


# ---------------------------------------------------------------------------
# swapping on global types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SwapStep:
    rule: str
    position: Path
    result: GlobalType


@dataclass(frozen=True)
class SwapWitness:
    steps: tuple[SwapStep, ...]

    def to_json(self) -> dict:
        from .syntax import global_to_json

        return {"steps": [
            {"rule": s.rule, "position": list(s.position),
             "result": global_to_json(s.result)} for s in self.steps]}


def _gsubterms(g: GlobalType, path: Path = ()):
    yield path, g
    if isinstance(g, GComm):
        for l, _, c in g.branches:
            yield from _gsubterms(c, path + (("branch", l),))
    elif isinstance(g, GPar):
        yield from _gsubterms(g.left, path + ("parL",))
        yield from _gsubterms(g.right, path + ("parR",))
    elif isinstance(g, GRec):
        yield from _gsubterms(g.body, path + ("rec",))


def _greplace(g: GlobalType, path: Path, new: GlobalType) -> GlobalType:
    if not path:
        return new
    step, rest = path[0], path[1:]
    if isinstance(g, GComm) and isinstance(step, tuple) and step[0] == "branch":
        return GComm(g.sender, g.receiver, tuple(
            (l, u, _greplace(c, rest, new) if l == step[1] else c)
            for l, u, c in g.branches))
    if isinstance(g, GPar) and step == "parL":
        return GPar(_greplace(g.left, rest, new), g.right)
    if isinstance(g, GPar) and step == "parR":
        return GPar(g.left, _greplace(g.right, rest, new))
    if isinstance(g, GRec) and step == "rec":
        return GRec(g.var, _greplace(g.body, rest, new))
    raise ValueError(f"bad path {path} into {global_to_text(g)}")


def _swap_local(g: GlobalType):
    """All single swap-rule applications at the root of g."""
    out = []
    if isinstance(g, GComm):
        # commuting two independent communications
        inner = [c for _, _, c in g.branches]
        if all(isinstance(c, GComm) for c in inner):
            heads = {(c.sender, c.receiver,
                      tuple((l, u) for l, u, _ in c.branches))
                     for c in inner}
            if len(heads) == 1:
                c0 = inner[0]
                if not ({g.sender, g.receiver} & {c0.sender, c0.receiver}):
                    new = GComm(c0.sender, c0.receiver, tuple(
                        (lj, uj, GComm(g.sender, g.receiver, tuple(
                            (li, ui, ci.branch_map()[lj][1])
                            for li, ui, ci in g.branches)))
                        for lj, uj, _ in c0.branches))
                    out.append(("sw1", new))
        # scope of composition: shared component moves out
        for side in ("L", "R"):
            conts = [c for _, _, c in g.branches]
            if all(isinstance(c, GPar) for c in conts):
                shared = [c.left if side == "L" else c.right for c in conts]
                others = [c.right if side == "L" else c.left for c in conts]
                first = canonical_global(shared[0])
                if all(canonical_global(s) == first for s in shared[1:]) and \
                        not ({g.sender, g.receiver} & participants(shared[0])):
                    comm = GComm(g.sender, g.receiver, tuple(
                        (l, u, o) for (l, u, _), o in zip(g.branches, others)))
                    new = GPar(shared[0], comm) if side == "L" \
                        else GPar(comm, shared[0])
                    out.append(("sw2", new))
    if isinstance(g, GPar):
        # the reverse direction of sw2, both orientations
        for side, shared, comm in (("L", g.left, g.right),
                                   ("R", g.right, g.left)):
            if isinstance(comm, GComm) and \
                    not ({comm.sender, comm.receiver} & participants(shared)):
                branches = tuple(
                    (l, u, GPar(shared, c) if side == "L" else GPar(c, shared))
                    for l, u, c in comm.branches)
                out.append(("sw2", GComm(comm.sender, comm.receiver, branches)))
    return out


def swap_neighbors(g: GlobalType):
    for path, sub in _gsubterms(g):
        for rule, new_sub in _swap_local(sub):
            yield rule, path, _greplace(g, path, new_sub)


def swap_equiv(g1: GlobalType, g2: GlobalType, bound: int) -> SwapWitness | None:
    """Search the swapping congruence for a rewrite of g1 into g2."""
    target = canonical_global(g2)
    start = canonical_global(g1)
    if start == target:
        return SwapWitness(())
    seen = {start: ()}
    frontier = [(g1, ())]
    for _ in range(bound):
        nxt = []
        for g, trail in frontier:
            for rule, path, new in swap_neighbors(g):
                key = canonical_global(new)
                if key in seen:
                    continue
                steps = trail + (SwapStep(rule, path, new),)
                if key == target:
                    return SwapWitness(steps)
                seen[key] = steps
                nxt.append((new, steps))
        frontier = nxt
        if not frontier:
            break
    return None


# ---------------------------------------------------------------------------
# commuting conversions on processes
# ---------------------------------------------------------------------------
#
# Heads that commute: input x(y), bound output x̄(y).(…|…), selection x◁l,
# branching x▷{…}.  A single rewrite commutes the head with the head of its
# continuation (or of one parallel component / one restriction), subject to
# channel-disjointness and binder-freshness side conditions.  Rule tags follow
# the proof-conversion families: I-* for scope/composition commutations (the
# restriction-free variants realize commutation with independent parallel
# composition), II-* for prefix/prefix commutations.


def _psubterms(p: Process, path: Path = (),
               bound: frozenset[Name] = frozenset()):
    yield path, p, bound
    if isinstance(p, Par):
        yield from _psubterms(p.left, path + ("parL",), bound)
        yield from _psubterms(p.right, path + ("parR",), bound)
    elif isinstance(p, Restrict):
        yield from _psubterms(p.body, path + ("res",), bound | {p.name})
    elif isinstance(p, (Recv, ReplRecv)):
        yield from _psubterms(p.cont, path + ("cont",), bound | {p.bind})
    elif isinstance(p, BoundOut):
        yield from _psubterms(p.cont, path + ("cont",), bound | {p.fresh})
    elif isinstance(p, (Send, Select)):
        yield from _psubterms(p.cont, path + ("cont",), bound)
    elif isinstance(p, Branch):
        for l, q in p.cases:
            yield from _psubterms(q, path + (("case", l),), bound)


def _preplace(p: Process, path: Path, new: Process) -> Process:
    if not path:
        return new
    step, rest = path[0], path[1:]
    if isinstance(p, Par) and step == "parL":
        return Par(_preplace(p.left, rest, new), p.right)
    if isinstance(p, Par) and step == "parR":
        return Par(p.left, _preplace(p.right, rest, new))
    if isinstance(p, Restrict) and step == "res":
        return Restrict(p.name, _preplace(p.body, rest, new))
    if isinstance(p, Send) and step == "cont":
        return Send(p.chan, p.payload, _preplace(p.cont, rest, new))
    if isinstance(p, BoundOut) and step == "cont":
        return BoundOut(p.chan, p.fresh, _preplace(p.cont, rest, new))
    if isinstance(p, Recv) and step == "cont":
        return Recv(p.chan, p.bind, _preplace(p.cont, rest, new))
    if isinstance(p, ReplRecv) and step == "cont":
        return ReplRecv(p.chan, p.bind, _preplace(p.cont, rest, new))
    if isinstance(p, Select) and step == "cont":
        return Select(p.chan, p.label, _preplace(p.cont, rest, new))
    if isinstance(p, Branch) and isinstance(step, tuple) and step[0] == "case":
        return Branch(p.chan, tuple(
            (l, _preplace(q, rest, new) if l == step[1] else q)
            for l, q in p.cases))
    raise ValueError(f"bad path {path}")


def _head_binder(p: Process) -> Name | None:
    if isinstance(p, Recv):
        return p.bind
    if isinstance(p, BoundOut):
        return p.fresh
    return None


def _is_head(p: Process) -> bool:
    return isinstance(p, (Recv, BoundOut, Select, Branch))


_RULE_FAMILY = {Recv: "I-3/4", BoundOut: "I-6/7/8", Select: "I-10/18",
                Branch: "I-14/20"}


def _slots(p: Process):
    """Continuation slots of a head action, as (tag, process) pairs."""
    if isinstance(p, (Recv, Select, BoundOut)):
        return [("cont", p.cont)]
    if isinstance(p, Branch):
        return [(("case", l), q) for l, q in p.cases]
    raise ValueError


def _with_slots(p: Process, slots) -> Process:
    if isinstance(p, Recv):
        return Recv(p.chan, p.bind, slots[0][1])
    if isinstance(p, Select):
        return Select(p.chan, p.label, slots[0][1])
    if isinstance(p, BoundOut):
        return BoundOut(p.chan, p.fresh, slots[0][1])
    if isinstance(p, Branch):
        return Branch(p.chan, tuple((tag[1], q) for tag, q in slots))
    raise ValueError


def _same_action(a: Process, b: Process) -> bool:
    """Heads match up to their binder: constructor, channel, labels."""
    if type(a) is not type(b):
        return False
    if isinstance(a, (Recv, BoundOut)):
        return a.chan == b.chan
    if isinstance(a, Select):
        return a.chan == b.chan and a.label == b.label
    if isinstance(a, Branch):
        return a.chan == b.chan and \
            [l for l, _ in a.cases] == [l for l, _ in b.cases]
    return False


def _align_binder(q: Process, b: Name) -> Process | None:
    """Rename the head binder of q to b (None if that would capture)."""
    qb = _head_binder(q)
    if qb is None or qb == b:
        return q
    if b in free_names(q):
        return None
    cont = subst(q.cont, b, qb)
    if isinstance(q, Recv):
        return Recv(q.chan, b, cont)
    return BoundOut(q.chan, b, cont)


_RULE_OF_PAIR = {
    (Recv, Recv): "II-1", (Recv, BoundOut): "II-4/5", (Recv, Select): "II-19",
    (Recv, Branch): "II-13",
    (BoundOut, Recv): "II-9", (BoundOut, BoundOut): "II-2/3",
    (BoundOut, Select): "II-16", (BoundOut, Branch): "II-11",
    (Select, Recv): "II-19", (Select, BoundOut): "II-17/18",
    (Select, Select): "II-14", (Select, Branch): "II-15",
    (Branch, Recv): "II-13", (Branch, BoundOut): "II-12",
    (Branch, Select): "II-15", (Branch, Branch): "II-10",
}


def _aligned_inners(outer: Process):
    """The slot heads of outer, when they all match and do not cross binders.

    Returns (slots, inners) with inner binders aligned, or None.
    """
    slots = _slots(outer)
    inners = [q for _, q in slots]
    if not all(_is_head(q) for q in inners):
        return None
    first = inners[0]
    if not all(_same_action(first, q) for q in inners[1:]):
        return None
    if first.chan == outer.chan:
        return None
    ob = _head_binder(outer)
    if ob is not None and ob == first.chan:
        return None
    ib = _head_binder(first)
    if ib is not None:
        if ib == outer.chan or (ob is not None and ib == ob):
            return None
        aligned = []
        for q in inners:
            q2 = _align_binder(q, ib)
            if q2 is None:
                return None
            aligned.append(q2)
        inners = aligned
    return slots, inners


def _extract_direct(outer: Process) -> list[tuple[str, Process]]:
    """Commute the outer head with directly following aligned heads.

    Covers the prefix/prefix conversions whose redex has no parallel
    structure; a bound output with a parallel continuation is excluded here
    (its parallel sides are handled by the par-aware moves), except for the
    shared-component form where one component is common to every slot.
    """
    if not _is_head(outer):
        return []
    got = _aligned_inners(outer)
    if got is None:
        return []
    slots, inners = got
    first = inners[0]
    out = []
    rule = _RULE_OF_PAIR[(type(outer), type(first))]
    if isinstance(first, Branch):
        labels = [l for l, _ in first.cases]
        new_cases = []
        for l in labels:
            per_case = [(tag, q.case_map()[l]) for (tag, _), q
                        in zip(slots, inners)]
            new_cases.append((l, _with_slots(outer, per_case)))
        out.append((rule, Branch(first.chan, tuple(new_cases))))
        return out
    conts = [_slots(q)[0][1] for q in inners]
    if isinstance(first, BoundOut) and any(isinstance(c, Par) for c in conts):
        # shared-component forms: w̄(y).(P | …) with P common to every slot
        comp_lists = [_par_list(c) for c in conts]
        n = len(comp_lists[0])
        if all(len(cl) == n for cl in comp_lists) and n >= 2:
            ob = _head_binder(outer)
            for j in range(n):
                shared = [cl[j] for cl in comp_lists]
                c0 = canonical(shared[0])
                if any(canonical(s) != c0 for s in shared[1:]):
                    continue
                if ob is not None and ob in free_names(shared[0]):
                    continue
                if outer.chan in free_names(shared[0]):
                    continue
                rests = [_par_fold_list(cl[:j] + cl[j + 1:])
                         for cl in comp_lists]
                pushed = _with_slots(outer, [
                    (tag, r) for (tag, _), r in zip(slots, rests)])
                new = BoundOut(first.chan, first.fresh,
                               Par(shared[0], pushed))
                out.append(("II-12", new))
        return out
    pushed = _with_slots(outer, [(tag, c) for (tag, _), c in zip(slots, conts)])
    out.append((rule, _with_slots(first, [("cont", pushed)])))
    return out


def _extract_from_par(outer: Process) -> list[tuple[str, Process]]:
    """Pull a head out of a parallel component inside the outer's slots.

    α.(… | β.Q | …)  ->  β.α.(… | Q | …), aligned across all slots of α.
    The reverse (pushing a prefix onto one side of a parallel continuation)
    is `_push_into_par`.
    """
    if not _is_head(outer):
        return []
    slots = _slots(outer)
    lists = []
    for _, q in slots:
        if not isinstance(q, Par):
            return []
        lists.append(_par_list(q))
    out = []
    n = len(lists[0])
    if any(len(cl) != n for cl in lists):
        return []
    ob = _head_binder(outer)
    for j in range(n):
        betas = [cl[j] for cl in lists]
        first = betas[0]
        if not _is_head(first) or first.chan == outer.chan:
            continue
        if not all(_same_action(first, b) for b in betas[1:]):
            continue
        if ob is not None and ob == first.chan:
            continue
        ib = _head_binder(first)
        if ib is not None:
            if ib == outer.chan or (ob is not None and ib == ob):
                continue
            aligned = []
            for b in betas:
                b2 = _align_binder(b, ib)
                if b2 is None:
                    break
                aligned.append(b2)
            if len(aligned) != len(betas):
                continue
            betas = aligned
            # the extracted binder must not capture the sibling components
            if any(ib in free_names(c)
                   for cl in lists for i, c in enumerate(cl) if i != j):
                continue
        # components that stay inside must not use the extracted channel:
        # their typing slice would otherwise depend on the moved session
        if any(first.chan in free_names(c)
               for cl in lists for i, c in enumerate(cl) if i != j):
            continue
        if isinstance(first, Branch):
            labels = [l for l, _ in first.cases]
            new_cases = []
            for l in labels:
                per_slot = []
                for (tag, _), cl, b in zip(slots, lists, betas):
                    rest = cl[:j] + cl[j + 1:]
                    per_slot.append(
                        (tag, _par_fold_list(rest + [b.case_map()[l]])))
                new_cases.append((l, _with_slots(outer, per_slot)))
            out.append(("II-12", Branch(first.chan, tuple(new_cases))))
            continue
        if isinstance(first, BoundOut):
            # the extracted output keeps its payload premise (the components
            # using its binder); only the continuation part stays inside
            ib2 = betas[0].fresh
            payloads, conts = [], []
            okflag = True
            for b in betas:
                bl = _par_list(b.cont)
                pay = [c for c in bl if ib2 in free_names(c)]
                non = [c for c in bl if ib2 not in free_names(c)]
                if any(first.chan in free_names(c) for c in pay):
                    okflag = False
                    break
                payloads.append(sorted(pay, key=proc_to_text))
                conts.append(non)
            if not okflag:
                continue
            p0 = [canonical(c) for c in payloads[0]]
            if any([canonical(c) for c in pay] != p0 for pay in payloads[1:]):
                continue
            pay_free = set()
            for c in payloads[0]:
                pay_free |= free_names(c)
            if ob is not None and ob in pay_free:
                continue
            if outer.chan in pay_free:
                continue
            per_slot = []
            for (tag, _), cl, cont in zip(slots, lists, conts):
                rest = cl[:j] + cl[j + 1:]
                per_slot.append((tag, _par_fold_list(rest + cont)))
            pushed = _with_slots(outer, per_slot)
            new_cont = _par_fold_list(payloads[0] + [pushed])
            out.append((_RULE_OF_PAIR[(type(outer), type(first))],
                        BoundOut(first.chan, ib2, new_cont)))
            continue
        per_slot = []
        for (tag, _), cl, b in zip(slots, lists, betas):
            rest = cl[:j] + cl[j + 1:]
            per_slot.append((tag, _par_fold_list(rest + [_slots(b)[0][1]])))
        pushed = _with_slots(outer, per_slot)
        out.append((_RULE_OF_PAIR[(type(outer), type(first))],
                    _with_slots(betas[0], [("cont", pushed)])))
    return out


def _push_into_par(outer: Process) -> list[tuple[str, Process]]:
    """Push a simple prefix onto one side of a bound-output continuation.

    α.β̄(y).(C1 | … | Cn)  ->  β̄(y).(C1 | … | α.Ci | … | Cn),
    for α an input, selection, or parallel-free bound output.
    """
    if not isinstance(outer, (Recv, Select, BoundOut)):
        return []
    if isinstance(outer, BoundOut) and isinstance(outer.cont, Par):
        return []
    inner = outer.cont
    if not isinstance(inner, BoundOut) or not isinstance(inner.cont, Par):
        return []
    if inner.chan == outer.chan:
        return []
    ob = _head_binder(outer)
    if ob is not None and (ob == inner.chan or ob == inner.fresh):
        return []
    if inner.fresh == outer.chan:
        return []
    comps = _par_list(inner.cont)
    out = []
    rule = {Recv: "II-4/5", Select: "II-17/18",
            BoundOut: "II-7/8"}[type(outer)]
    for i, c in enumerate(comps):
        others = comps[:i] + comps[i + 1:]
        if ob is not None and any(ob in free_names(o) for o in others):
            continue
        if any(outer.chan in free_names(o) for o in others):
            continue
        new_comps = list(comps)
        new_comps[i] = _with_slots(outer, [("cont", c)])
        out.append((rule, BoundOut(inner.chan, inner.fresh,
                                   _par_fold_list(new_comps))))
    return out


def _indep_pull(p: Process,
                bound_above: frozenset[Name]) -> list[tuple[str, Process]]:
    """Commutations of a head prefix with an independent parallel component.

    π.(C | Q) <-> C | π.Q  (distributing over branches when π offers them),
    both directions, with binder-freshness on C.  The moved component must
    only use names free at the root: under a compositional judgment those
    are the independently composed premises, whereas components using a
    name bound above belong to an output's payload premise and must stay.
    """
    out = []
    if _is_head(p):
        slots = _slots(p)
        lists = []
        for _, q in slots:
            if not isinstance(q, Par):
                lists = None
                break
            lists.append(_par_list(q))
        if lists is not None:
            n = len(lists[0])
            if all(len(cl) == n for cl in lists):
                b = _head_binder(p)
                for j in range(n):
                    shared = [cl[j] for cl in lists]
                    c0 = canonical(shared[0])
                    if any(canonical(s) != c0 for s in shared[1:]):
                        continue
                    if b is not None and b in free_names(shared[0]):
                        continue
                    if p.chan in free_names(shared[0]):
                        continue
                    if free_names(shared[0]) & bound_above:
                        continue
                    rests = [_par_fold_list(cl[:j] + cl[j + 1:])
                             for cl in lists]
                    inner = _with_slots(p, [
                        (tag, r) for (tag, _), r in zip(slots, rests)])
                    out.append((_RULE_FAMILY[type(p)], Par(shared[0], inner)))
    if isinstance(p, Par):
        for side, comp, other in (("L", p.left, p.right),
                                  ("R", p.right, p.left)):
            if not _is_head(other):
                continue
            b = _head_binder(other)
            if b is not None and b in free_names(comp):
                continue
            if other.chan in free_names(comp):
                continue
            if free_names(comp) & bound_above:
                continue
            slots = _slots(other)
            new_slots = [(tag, Par(comp, q) if side == "L" else Par(q, comp))
                         for tag, q in slots]
            new = _with_slots(other, new_slots)
            out.append((_RULE_FAMILY[type(other)], new))
    return out


def _scope_pull(p: Process) -> list[tuple[str, Process]]:
    """Commutations of a head prefix with an enclosing restriction.

    (νx)(C… | π.Q) <-> π.(νx)(C… | Q), distributing over branches; plus the
    degenerate form (νx)π.Q <-> π.(νx)Q.
    """
    out = []
    if isinstance(p, Restrict):
        x = p.name
        comps = _par_list(p.body)
        for i, c in enumerate(comps):
            if not _is_head(c) or c.chan == x:
                continue
            b = _head_binder(c)
            rest = comps[:i] + comps[i + 1:]
            if b is not None and any(b in free_names(r) for r in rest):
                continue
            if any(c.chan in free_names(r) for r in rest):
                continue
            slots = _slots(c)
            new_slots = []
            for tag, q in slots:
                inner = _par_fold_list(rest + [q])
                if x in free_names(inner):
                    inner = Restrict(x, inner)
                new_slots.append((tag, inner))
            new = _with_slots(c, new_slots)
            rule = {Recv: "I-3/4", BoundOut: "I-6/7/8", Select: "I-10/18",
                    Branch: "I-14/20"}[type(c)]
            out.append((rule + "ν", new))
    if _is_head(p):
        # push the restriction back inside: π.(νx)(...) -> (νx)(π....)
        slots = _slots(p)
        split = []
        for _, q in slots:
            if not isinstance(q, Restrict):
                break
            split.append(q)
        else:
            names = {q.name for q in split}
            if len(names) == 1:
                x = split[0].name
                b = _head_binder(p)
                if x != p.chan and x != b:
                    new_slots = [(tag, q.body)
                                 for (tag, _), q in zip(slots, split)]
                    new = Restrict(x, _with_slots(p, new_slots))
                    rule = {Recv: "I-3/4", BoundOut: "I-6/7/8",
                            Select: "I-10/18", Branch: "I-14/20"}[type(p)]
                    out.append((rule + "ν", new))
    return out


def _par_list(p: Process) -> list[Process]:
    if isinstance(p, Par):
        return _par_list(p.left) + _par_list(p.right)
    return [p]


def _par_fold_list(comps: list[Process]) -> Process:
    comps = [c for c in comps if not isinstance(c, Nil)]
    if not comps:
        return Nil()
    out = comps[-1]
    for c in reversed(comps[:-1]):
        out = Par(c, out)
    return out


def cc_rewrite_step(p: Process) -> frozenset[tuple[str, Process]]:
    """All single conversion applications, at any position, both directions."""
    out = set()
    for path, sub, bound in _psubterms(p):
        for rule, new_sub in (_extract_direct(sub) + _extract_from_par(sub)
                              + _push_into_par(sub)
                              + _indep_pull(sub, bound)
                              + _scope_pull(sub)):
            out.add((rule, _preplace(p, path, new_sub)))
    return frozenset(out)


@dataclass(frozen=True)
class RewriteStep:
    rule: str
    before: Process
    after: Process


@dataclass(frozen=True)
class RewriteTrace:
    steps: tuple[RewriteStep, ...]

    def to_json(self) -> dict:
        return {"steps": [
            {"rule": s.rule, "before": proc_to_text(s.before),
             "after": proc_to_text(s.after)} for s in self.steps]}


def cc_equiv_bounded(p: Process, q: Process, bound: int) -> RewriteTrace | None:
    """Bidirectional bounded search for a conversion path from p to q (mod ≡)."""
    cp, cq = canonical(p), canonical(q)
    if cp == cq:
        return RewriteTrace(())
    # forward map: canonical -> (trace from p), backward: canonical -> trace to q
    fwd: dict[Process, tuple[RewriteStep, ...]] = {cp: ()}
    bwd: dict[Process, tuple[RewriteStep, ...]] = {cq: ()}
    f_frontier = [p]
    b_frontier = [q]
    for depth in range(bound):
        # expand the smaller frontier
        expand_fwd = len(f_frontier) <= len(b_frontier)
        frontier = f_frontier if expand_fwd else b_frontier
        table = fwd if expand_fwd else bwd
        other = bwd if expand_fwd else fwd
        nxt = []
        for cur in frontier:
            ckey = canonical(cur)
            trail = table[ckey]
            for rule, new in cc_rewrite_step(cur):
                key = canonical(new)
                if key in table:
                    continue
                step = RewriteStep(rule, cur, new)
                table[key] = trail + (step,)
                if key in other:
                    if expand_fwd:
                        fsteps, bsteps = table[key], other[key]
                    else:
                        fsteps, bsteps = other[key], table[key]
                    back = tuple(
                        RewriteStep(s.rule, s.after, s.before)
                        for s in reversed(bsteps))
                    return RewriteTrace(fsteps + back)
                nxt.append(new)
        if expand_fwd:
            f_frontier = nxt
        else:
            b_frontier = nxt
        if not f_frontier and not b_frontier:
            break
    return None


# ---------------------------------------------------------------------------
# weak bisimulation
# ---------------------------------------------------------------------------


class Inconclusive:
    """Search bounds exhausted before the relation stabilized."""

    def __repr__(self):
        return "Inconclusive"


INCONCLUSIVE = Inconclusive()


def weak_bisim(p: Process, q: Process, tau_bound: int = 64,
               state_bound: int = 4000) -> bool | Inconclusive:
    """Finite-state weak bisimulation over the labeled semantics."""
    universe = tuple(sorted(free_names(p) | free_names(q)))
    fresh = "i%0"
    i = 0
    while fresh in universe:
        i += 1
        fresh = f"i%{i}"
    universe = universe + (fresh,)

    def explore(start: Process):
        start = canonical(start)
        graph: dict[Process, frozenset] = {}
        todo = [start]
        while todo:
            s = todo.pop()
            if s in graph:
                continue
            if len(graph) > state_bound:
                return None, None
            steps = lts_step(s, universe)
            graph[s] = steps
            for _, t in steps:
                if t not in graph:
                    todo.append(t)
        return start, graph

    s0, g1 = explore(p)
    if g1 is None:
        return INCONCLUSIVE
    t0, g2 = explore(q)
    if g2 is None:
        return INCONCLUSIVE
    graph = dict(g1)
    graph.update(g2)

    # weak closures
    tau_next = {s: frozenset(t for lab, t in steps if isinstance(lab, Tau))
                for s, steps in graph.items()}
    closure: dict[Process, frozenset[Process]] = {}
    for s in graph:
        seen = {s}
        frontier = [s]
        depth = 0
        while frontier and depth < tau_bound:
            depth += 1
            frontier = [t for u in frontier for t in tau_next[u]
                        if t not in seen]
            seen.update(frontier)
        closure[s] = frozenset(seen)

    def weak_matches(s: Process, lab) -> frozenset[Process]:
        if isinstance(lab, Tau):
            return closure[s]
        out = set()
        for u in closure[s]:
            for lab2, v in graph[u]:
                if lab2 == lab:
                    out |= closure[v]
        return frozenset(out)

    related = {(a, b) for a in g1 for b in g2}
    related |= {(b, a) for a, b in related}
    changed = True
    while changed:
        changed = False
        for pair in list(related):
            a, b = pair
            if a not in graph or b not in graph:
                continue
            ok = True
            for lab, a2 in graph[a]:
                if not any((a2, b2) in related for b2 in weak_matches(b, lab)):
                    ok = False
                    break
            if ok:
                for lab, b2 in graph[b]:
                    if not any((a2, b2) in related
                               for a2 in weak_matches(a, lab)):
                        ok = False
                        break
            if not ok:
                related.discard((a, b))
                related.discard((b, a))
                changed = True
    return (s0, t0) in related
