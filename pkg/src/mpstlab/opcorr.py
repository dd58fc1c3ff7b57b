"""Global-type transitions, canonical closures, systems, and the
operational-correspondence and progress checkers.

A system is the restricted composition of an instrumented medium with one
independently well-typed implementation per participant; its only observable
session is the distinguished name k.  The checker drives the global type and
the system side by side: every global step reachable under the closure's
branch choices must be mirrored by a weak transition on k, and every
observable of the system must be a step of the global type, with the reached
process again a system of the reached type (decided by re-typechecking).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .btypes import (
    BinaryType, Lolli, Nu, One, Plus, Tensor, TVar, With, btype_equal,
    btype_to_text, gt_map, lt_map, unfold,
)
from .medium import MediumConfig, annotated_medium
from .process import (
    Branch, BoundOut, Corec, Fwd, Name, Nil, Par, Process, Recv, RecCall,
    Restrict, Select, canonical, canonical_hash, free_names, proc_to_text,
)
from .projection import project, wf_report
from .semantics import (
    BoundOutL, In, Sel, SelCo, Tau, TransitionLabel, admin_normalize,
    lts_step,
)
from .syntax import (
    GComm, GEnd, GPar, GRec, GVar, GlobalType, Label, Participant, Payload,
    RecVar, SpecError, global_to_text, participants, unfold_global,
)
from .typecheck import TypeCheckError, judgment, typecheck

WILDCARD = "*"


class HarnessError(SpecError):
    pass


class UninhabitableError(HarnessError):
    """No closed canonical process offers the requested type."""


# ---------------------------------------------------------------------------
# extended global types: the three in-flight communication states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MidOut(GlobalType):
    """Sender committed to `label`; its output is still pending."""

    sender: Participant
    receiver: Participant
    label: Label
    payload: Payload
    cont: GlobalType


@dataclass(frozen=True)
class MidIn(GlobalType):
    """Receiver committed to `label`; its input is still pending."""

    sender: Participant
    receiver: Participant
    label: Label
    payload: Payload
    cont: GlobalType


@dataclass(frozen=True)
class MidFinal(GlobalType):
    """Just before the receiver's input."""

    sender: Participant
    receiver: Participant
    payload: Payload
    cont: GlobalType


def ext_to_text(g: GlobalType) -> str:
    if isinstance(g, MidOut):
        return (f"{g.sender}~>{g.receiver}:{g.label}<...>."
                f"{ext_to_text(g.cont)}")
    if isinstance(g, MidIn):
        return (f"{g.sender}~>{g.receiver}:{g.label}((...))."
                f"{ext_to_text(g.cont)}")
    if isinstance(g, MidFinal):
        return f"{g.sender}~>{g.receiver}:((...)).{ext_to_text(g.cont)}"
    return global_to_text(g)


def gt_ext(g: GlobalType) -> BinaryType:
    """Distinguished-session type, extended to the in-flight states."""
    if isinstance(g, MidOut):
        return Tensor(One(), With(((g.label, Lolli(One(), gt_ext(g.cont))),)))
    if isinstance(g, MidIn):
        return With(((g.label, Lolli(One(), gt_ext(g.cont))),))
    if isinstance(g, MidFinal):
        return Lolli(One(), gt_ext(g.cont))
    return gt_map(g)


# ---------------------------------------------------------------------------
# labels of the global transition system and the two label maps
# ---------------------------------------------------------------------------


class GlobalLabel:
    __slots__ = ()


@dataclass(frozen=True)
class PIn(GlobalLabel):
    """The receiver's input fires."""

    participant: Participant


@dataclass(frozen=True)
class PSel(GlobalLabel):
    """The receiver commits to a label."""

    participant: Participant
    label: Label


@dataclass(frozen=True)
class POut(GlobalLabel):
    """The sender's output fires."""

    participant: Participant


@dataclass(frozen=True)
class PSelCo(GlobalLabel):
    """The sender selects a label."""

    participant: Participant
    label: Label


def glabel_subject(s: GlobalLabel) -> Participant:
    return s.participant


def glabel_to_json(s: GlobalLabel) -> dict:
    if isinstance(s, PIn):
        return {"kind": "in", "participant": s.participant}
    if isinstance(s, PSel):
        return {"kind": "offer", "participant": s.participant, "label": s.label}
    if isinstance(s, POut):
        return {"kind": "out", "participant": s.participant}
    if isinstance(s, PSelCo):
        return {"kind": "select", "participant": s.participant,
                "label": s.label}
    raise TypeError(f"not a global label: {s!r}")


def global_lts_step(g: GlobalType) -> frozenset[tuple[GlobalLabel, GlobalType]]:
    """One-step transitions of an (extended) global type."""
    if isinstance(g, GComm):
        return frozenset(
            (PSelCo(g.sender, l), MidOut(g.sender, g.receiver, l, u, c))
            for l, u, c in g.branches)
    if isinstance(g, MidOut):
        return frozenset({(POut(g.sender),
                           MidIn(g.sender, g.receiver, g.label, g.payload,
                                 g.cont))})
    if isinstance(g, MidIn):
        return frozenset({(PSel(g.receiver, g.label),
                           MidFinal(g.sender, g.receiver, g.payload, g.cont))})
    if isinstance(g, MidFinal):
        return frozenset({(PIn(g.receiver), g.cont)})
    if isinstance(g, GRec):
        return global_lts_step(unfold_global(g))
    if isinstance(g, (GEnd, GVar)):
        return frozenset()
    if isinstance(g, GPar):
        raise HarnessError("the global transition system takes "
                           "composition-free types")
    raise TypeError(f"not a global type: {g!r}")


def mlab(s: GlobalLabel, k: Name) -> TransitionLabel:
    """Process label mirroring a global label on session k.

    Objects of inputs and bound outputs are irrelevant; they are returned as
    a wildcard and compared with `labels_match`.
    """
    if isinstance(s, PIn):
        return In(k, WILDCARD)
    if isinstance(s, PSel):
        return Sel(k, s.label)
    if isinstance(s, POut):
        return BoundOutL(k, WILDCARD)
    if isinstance(s, PSelCo):
        return SelCo(k, s.label)
    raise TypeError(f"not a global label: {s!r}")


def glab(lab: TransitionLabel, p: Participant) -> GlobalLabel:
    """Global label of a process label on k, for participant p."""
    if isinstance(lab, Tau):
        raise HarnessError("internal steps have no global counterpart")
    if isinstance(lab, In):
        return PIn(p)
    if isinstance(lab, Sel):
        return PSel(p, lab.label)
    if isinstance(lab, BoundOutL):
        return POut(p)
    if isinstance(lab, SelCo):
        return PSelCo(p, lab.label)
    raise HarnessError(f"label {lab!r} has no global counterpart")


def labels_match(pattern: TransitionLabel, actual: TransitionLabel) -> bool:
    if type(pattern) is not type(actual):
        return False
    if isinstance(pattern, (In, BoundOutL)):
        return pattern.chan == actual.chan and \
            (pattern.obj == WILDCARD or pattern.obj == actual.obj)
    return pattern == actual


# ---------------------------------------------------------------------------
# canonical closures
# ---------------------------------------------------------------------------


class Strategy:
    """Deterministic label choice for selection-typed sessions."""

    name = "first"

    def choose(self, labels: tuple[Label, ...], occurrence: int) -> Label:
        return labels[0]


class LastLabel(Strategy):
    name = "last"

    def choose(self, labels, occurrence):
        return labels[-1]


class RoundRobin(Strategy):
    name = "round-robin"

    def choose(self, labels, occurrence):
        return labels[occurrence % len(labels)]


STRATEGIES = {"first": Strategy(), "last": LastLabel(),
              "round-robin": RoundRobin()}


class _ClosureBuilder:
    def __init__(self, strategy: Strategy):
        self.strategy = strategy
        self.occurrence = 0
        self.fresh = 0
        self.choices: list[Label] = []

    def _next(self, prefix: str) -> Name:
        self.fresh += 1
        return f"{prefix}c{self.fresh}"

    def offer(self, x: Name, t: BinaryType,
              rec: tuple[RecVar, Name] | None = None) -> Process:
        """A closed canonical process offering x:t."""
        if isinstance(t, One):
            return Nil()
        if isinstance(t, TVar):
            if rec is not None and rec[0] == t.var:
                return RecCall(t.var, (x,))
            raise UninhabitableError(
                f"free type variable {t.var} has no closed implementation")
        if isinstance(t, Nu):
            body = self.offer(x, t.body, (t.var, x))
            return Corec(t.var, (x,), body, (x,))
        if isinstance(t, Plus):
            labels = tuple(l for l, _ in t.branches)
            label = self.strategy.choose(labels, self.occurrence)
            self.occurrence += 1
            self.choices.append(label)
            return Select(x, label, self.offer(x, t.branch_map()[label], rec))
        if isinstance(t, With):
            return Branch(x, tuple(
                (l, self.offer(x, b, rec)) for l, b in t.branches))
        if isinstance(t, Tensor):
            v = self._next("p")
            return BoundOut(x, v, Par(self.offer(v, t.left, None),
                                      self.offer(x, t.right, rec)))
        if isinstance(t, Lolli):
            y = self._next("q")
            return Recv(x, y, self.consume(y, t.left,
                                           self.offer(x, t.right, rec)))
        raise UninhabitableError(
            f"no canonical implementation for {btype_to_text(t)}")

    def consume(self, y: Name, t: BinaryType, cont: Process) -> Process:
        """Use up a received session y:t, then continue as cont."""
        if isinstance(t, One):
            return cont
        if isinstance(t, Plus):
            return Branch(y, tuple(
                (l, self.consume(y, b, cont)) for l, b in t.branches))
        if isinstance(t, With):
            labels = tuple(l for l, _ in t.branches)
            label = self.strategy.choose(labels, self.occurrence)
            self.occurrence += 1
            return Select(y, label, self.consume(y, t.branch_map()[label],
                                                 cont))
        if isinstance(t, Tensor):
            w = self._next("r")
            return Recv(y, w, self.consume(w, t.left,
                                           self.consume(y, t.right, cont)))
        if isinstance(t, Lolli):
            w = self._next("s")
            return BoundOut(y, w, Par(self.offer(w, t.left, None),
                                      self.consume(y, t.right, cont)))
        raise UninhabitableError(
            f"cannot use up a session of type {btype_to_text(t)}")


def build_closure(delta: dict[Name, BinaryType],
                  strategy: Strategy | None = None) -> Process:
    """One canonical member of the closure set for the given context.

    Each channel gets an independently well-typed closed implementation; the
    result is their parallel composition.  Every piece is validated against
    its type by the checker.
    """
    strategy = strategy or Strategy()
    builder = _ClosureBuilder(strategy)
    pieces = []
    for x in delta:
        q = builder.offer(x, delta[x])
        typecheck(judgment(q, x, delta[x]))
        pieces.append(q)
    if not pieces:
        return Nil()
    out = pieces[-1]
    for q in reversed(pieces[:-1]):
        out = Par(q, out)
    return out


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------


@dataclass
class System:
    """Closed composition of an instrumented medium with one implementation
    per participant; observable only on cfg.k."""

    process: Process
    g: GlobalType
    cfg: MediumConfig
    closure: tuple[tuple[Name, Process], ...]
    strategy: Strategy


def build_system(g: GlobalType, cfg: MediumConfig | None = None,
                 strategy: Strategy | None = None) -> System:
    """Compose canonical implementations with the instrumented medium.

    The result is validated against the distinguished-session type of g.
    """
    strategy = strategy or Strategy()
    cfg = cfg or MediumConfig.for_type(g)
    report = wf_report(g)
    if not report.ok:
        raise HarnessError(
            "not projectable: "
            + "; ".join(str(e) for e in report.errors.values()))
    parts = sorted(participants(g))
    builder = _ClosureBuilder(strategy)
    closure = []
    for p in parts:
        chan = cfg.channel(p)
        t = lt_map(project(g, p))
        q = builder.offer(chan, t)
        typecheck(judgment(q, chan, t))
        closure.append((chan, q))
    m = annotated_medium(g, cfg)
    body: Process = m
    for chan, q in reversed(closure):
        body = Par(q, body)
    proc: Process = body
    for chan, _ in reversed(closure):
        proc = Restrict(chan, proc)
    typecheck(judgment(proc, cfg.k, gt_ext(g)))
    return System(proc, g, cfg, tuple(closure), strategy)


# ---------------------------------------------------------------------------
# operational correspondence
# ---------------------------------------------------------------------------


@dataclass
class StepRecord:
    sigma: GlobalLabel
    lam: TransitionLabel
    g_after: GlobalType
    state_hash: str

    def to_json(self) -> dict:
        from .semantics import label_to_json

        return {"sigma": glabel_to_json(self.sigma),
                "lambda": label_to_json(self.lam),
                "global": ext_to_text(self.g_after),
                "state": self.state_hash}


@dataclass
class CounterexampleTrace(SpecError):
    reason: str
    g_state: GlobalType
    p_state: Process
    trail: tuple[StepRecord, ...]

    def __str__(self):
        return (f"{self.reason} at {ext_to_text(self.g_state)} after "
                f"{len(self.trail)} step(s)")


@dataclass
class CorrespondenceReport:
    ok: bool
    strategies: tuple[str, ...]
    steps: tuple[StepRecord, ...] = ()
    counterexample: CounterexampleTrace | None = None
    states_checked: int = 0

    def to_json(self) -> dict:
        return {"ok": self.ok, "strategies": list(self.strategies),
                "states_checked": self.states_checked,
                "steps": [s.to_json() for s in self.steps],
                "counterexample": None if self.counterexample is None
                else str(self.counterexample)}


_TAU_BUDGET = 24


def _weak_observables(p: Process, tau_budget: int = _TAU_BUDGET):
    """Observable transitions after internal steps: (λ, pre-τ-count, target)."""
    start = admin_normalize(p)
    closure = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for q in frontier:
            d = closure[q]
            if d >= tau_budget:
                continue
            for lab, r in lts_step(q):
                if not isinstance(lab, Tau):
                    continue
                r = admin_normalize(r)
                if r not in closure or closure[r] > d + 1:
                    closure[r] = d + 1
                    nxt.append(r)
        frontier = nxt
    out = []
    for q in closure:
        for lab, r in lts_step(q):
            if not isinstance(lab, Tau):
                out.append((lab, q, admin_normalize(r)))
    return out, closure


def _is_member(p: Process, g: GlobalType, k: Name) -> str | None:
    """Re-typecheck p as a system of g; None if it is, else the failure."""
    try:
        typecheck(judgment(canonical(p), k, gt_ext(g)))
        return None
    except TypeCheckError as e:
        return str(e)


def check_correspondence(g: GlobalType, depth: int,
                         strategies: tuple[str, ...] = ("first",),
                         cfg: MediumConfig | None = None
                         ) -> CorrespondenceReport:
    """Drive the global type and each strategy's system side by side.

    (a) every global step reachable under the closure's label choices is
    matched by a weak transition with the mirrored label, reaching a system
    of the successor type; (b) every observable of the system corresponds to
    a global step the same way.  Loops are followed up to `depth` global
    steps.
    """
    all_steps: list[StepRecord] = []
    states = 0
    for sname in strategies:
        strategy = STRATEGIES[sname]
        try:
            system = build_system(g, cfg, strategy)
        except (HarnessError, TypeCheckError) as e:
            return CorrespondenceReport(
                ok=False, strategies=tuple(strategies),
                counterexample=CounterexampleTrace(
                    f"system construction failed: {e}", g, Nil(), ()))
        k = system.cfg.k
        seen: set[tuple[GlobalType, Process]] = set()
        stack = [(g, admin_normalize(system.process), 0, ())]
        while stack:
            gstate, pstate, used, trail = stack.pop()
            key = (gstate, pstate)
            if key in seen:
                continue
            seen.add(key)
            states += 1
            gsteps = sorted(global_lts_step(gstate),
                            key=lambda sg: repr(sg[0]))
            observables, _ = _weak_observables(pstate)
            # (b): every observable is a global step with a matching label
            for lab, _, target in observables:
                if lab.chan != k:
                    return _fail(f"observable on {lab.chan}, not on k",
                                 gstate, pstate, trail, strategies, states)
                cands = [(sg, gn) for sg, gn in gsteps
                         if labels_match(mlab(sg, k), lab)]
                if not cands:
                    return _fail(
                        f"process action {lab} has no global counterpart",
                        gstate, pstate, trail, strategies, states)
                sg, gn = cands[0]
                if glab(lab, glabel_subject(sg)) != sg:
                    return _fail(
                        f"label maps disagree on {lab}", gstate, pstate,
                        trail, strategies, states)
                err = _is_member(target, gn, k)
                if err:
                    return _fail(
                        f"after {lab} the process is not a system of "
                        f"{ext_to_text(gn)}: {err}", gstate, pstate, trail,
                        strategies, states)
            # (a): global steps must be matched (selection steps only along
            # the branch this closure actually chooses)
            matched_any = False
            has_select = any(isinstance(sg, PSelCo) for sg, _ in gsteps)
            for sg, gn in gsteps:
                want = mlab(sg, k)
                hits = [(lab, tgt) for lab, _, tgt in observables
                        if labels_match(want, lab)]
                if not hits:
                    if isinstance(sg, PSelCo):
                        continue  # not this closure's choice
                    return _fail(
                        f"global step {sg} has no weak process match",
                        gstate, pstate, trail, strategies, states)
                matched_any = True
                lab, tgt = hits[0]
                err = _is_member(tgt, gn, k)
                if err:
                    return _fail(
                        f"match of {sg} is not a system of {ext_to_text(gn)}:"
                        f" {err}", gstate, pstate, trail, strategies, states)
                rec = StepRecord(sg, lab, gn, canonical_hash(tgt))
                all_steps.append(rec)
                if used + 1 <= depth:
                    stack.append((gn, admin_normalize(tgt), used + 1,
                                  trail + (rec,)))
            if gsteps and has_select and not matched_any:
                return _fail(
                    "no selection branch of the global type is matched",
                    gstate, pstate, trail, strategies, states)
    return CorrespondenceReport(ok=True, strategies=tuple(strategies),
                                steps=tuple(all_steps),
                                states_checked=states)


def _fail(reason, gstate, pstate, trail, strategies, states):
    return CorrespondenceReport(
        ok=False, strategies=tuple(strategies), states_checked=states,
        counterexample=CounterexampleTrace(reason, gstate, pstate, trail))


# ---------------------------------------------------------------------------
# progress / deadlock-freedom
# ---------------------------------------------------------------------------


@dataclass
class DeadlockTrace(SpecError):
    state: Process
    path: tuple[TransitionLabel, ...]

    def __str__(self):
        return (f"live state with no successor after {len(self.path)} "
                f"step(s): {proc_to_text(self.state)}")


@dataclass
class ProgressReport:
    ok: bool
    states: int
    terminated_states: int
    deadlock: DeadlockTrace | None = None
    complete: bool = True  # state bound not hit
    tau_cycle_without_observable: bool = False
    non_k_observable: str | None = None
    type_errors: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"ok": self.ok, "states": self.states,
                "terminated_states": self.terminated_states,
                "complete": self.complete,
                "deadlock": None if self.deadlock is None else str(self.deadlock),
                "tau_cycle_without_observable":
                    self.tau_cycle_without_observable,
                "non_k_observable": self.non_k_observable,
                "type_errors": list(self.type_errors)}


def is_live(p: Process) -> bool:
    """A state with a non-replicated guarded prefix at top level."""
    from .process import Send, _scope_of

    _, comps = _scope_of(canonical(p))
    return any(isinstance(c, (Send, Recv, BoundOut, Select, Branch))
               for c in comps)


def _advance_offer(t: BinaryType, lab: TransitionLabel) -> BinaryType:
    """How the offered type evolves along an observable on the offer channel."""
    while isinstance(t, Nu):
        t = unfold(t)
    if isinstance(lab, SelCo):
        if not isinstance(t, Plus):
            raise HarnessError(f"selection against {btype_to_text(t)}")
        return t.branch_map()[lab.label]
    if isinstance(lab, Sel):
        if not isinstance(t, With):
            raise HarnessError(f"offer against {btype_to_text(t)}")
        return t.branch_map()[lab.label]
    if isinstance(lab, BoundOutL):
        if not isinstance(t, Tensor):
            raise HarnessError(f"output against {btype_to_text(t)}")
        return t.right
    if isinstance(lab, In):
        if not isinstance(t, Lolli):
            raise HarnessError(f"input against {btype_to_text(t)}")
        return t.right
    raise HarnessError(f"no offer evolution for {lab!r}")


def check_progress(sys: System | Process, state_bound: int = 2000,
                   check_types: bool = False) -> ProgressReport:
    """Exhaustively explore internal and observable steps.

    Every live state must have a successor; terminal states must be inert.
    With `check_types`, every state is re-typechecked against the offer type
    evolved along the path (all paths to a state must agree on it).
    """
    if isinstance(sys, System):
        root = admin_normalize(sys.process)
        k = sys.cfg.k
        offer0: BinaryType | None = gt_ext(sys.g)
    else:
        root = admin_normalize(sys)
        k = None
        offer0 = None
    type_errors: list[str] = []
    offer_at: dict[Process, BinaryType] = {root: offer0} if offer0 else {}
    seen: dict[Process, tuple[TransitionLabel, ...]] = {root: ()}
    edges: dict[Process, list[tuple[TransitionLabel, Process]]] = {}
    stack = [root]
    complete = True
    non_k = None
    while stack:
        state = stack.pop()
        if len(seen) > state_bound:
            complete = False
            break
        succ = sorted(((lab, admin_normalize(t)) for lab, t in
                       lts_step(state)), key=repr)
        edges[state] = succ
        if check_types and state in offer_at:
            try:
                typecheck(judgment(state, k or "%k", offer_at[state]))
            except TypeCheckError as e:
                type_errors.append(f"{proc_to_text(state)}: {e}")
        for lab, target in succ:
            if not isinstance(lab, Tau) and k is not None and lab.chan != k:
                non_k = f"observable {lab} not on {k}"
            if check_types and state in offer_at:
                try:
                    nxt_offer = offer_at[state] if isinstance(lab, Tau) \
                        else _advance_offer(offer_at[state], lab)
                    offer_at.setdefault(target, nxt_offer)
                except HarnessError as e:
                    type_errors.append(str(e))
            if target not in seen:
                seen[target] = seen[state] + (lab,)
                stack.append(target)
    terminated = 0
    deadlock = None
    for state, succ in edges.items():
        if succ:
            continue
        if state == canonical(Nil()):
            terminated += 1
        elif is_live(state):
            deadlock = DeadlockTrace(state, seen[state])
            break
        else:
            terminated += 1
    # internal-only cycles: depth-first search on the τ sub-graph
    tau_cycle = _has_tau_cycle(edges)
    ok = (deadlock is None and non_k is None and not tau_cycle
          and not type_errors and complete)
    return ProgressReport(ok=ok, states=len(seen), terminated_states=terminated,
                          deadlock=deadlock, complete=complete,
                          tau_cycle_without_observable=tau_cycle,
                          non_k_observable=non_k,
                          type_errors=tuple(type_errors))


def _has_tau_cycle(edges) -> bool:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {s: WHITE for s in edges}

    def visit(s) -> bool:
        color[s] = GRAY
        for lab, t in edges.get(s, ()):
            if not isinstance(lab, Tau) or t not in color:
                continue
            if color[t] == GRAY:
                return True
            if color[t] == WHITE and visit(t):
                return True
        color[s] = BLACK
        return False

    return any(color[s] == WHITE and visit(s) for s in list(color))
