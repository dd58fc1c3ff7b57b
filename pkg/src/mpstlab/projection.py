"""Projection of global types onto participants, and the merge operator.

Merge reconciles a third party's views of different protocol branches:
identical base/terminated/selection types merge to themselves, branchings
merge by label union with recursive merge on shared labels.  Projection is
undefined (raises) exactly where a side condition of the definition fails.
A simple (merge-free) projection requiring syntactically equal third-party
views is provided alongside, for finite types only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    Base, GComm, GEnd, GPar, GRec, GVar, GlobalType, InvalidTypeError, LEnd,
    LRec, LRecv, LSend, LVar, LocalT, LocalType, Participant, Payload,
    SpecError, Unit, canonical_local, free_gvars, local_equal, local_to_text,
    participants, payload_to_text,
)


class MergeConflict(SpecError):
    """Two local types cannot be merged; carries the offending subterms."""

    def __init__(self, path: tuple[str, ...], left, right, reason: str):
        self.path = path
        self.left = left
        self.right = right
        self.reason = reason
        where = "/".join(path) if path else "(top)"
        super().__init__(f"merge conflict at {where}: {reason}")


class ProjectError(SpecError):
    """A global type has no projection for the requested participant."""

    def __init__(self, participant: Participant, path: tuple[str, ...],
                 reason: str, cause: MergeConflict | None = None):
        self.participant = participant
        self.path = path
        self.reason = reason
        self.cause = cause
        where = "/".join(path) if path else "(top)"
        super().__init__(f"cannot project onto {participant} at {where}: {reason}")


# ---------------------------------------------------------------------------
# merge
# ---------------------------------------------------------------------------


def merge(t1: LocalType, t2: LocalType) -> LocalType:
    """The commutative partial merge on local types; raises MergeConflict."""
    return _merge(t1, t2, ())


def _merge(t1: LocalType, t2: LocalType, path: tuple[str, ...]) -> LocalType:
    if isinstance(t1, LEnd) and isinstance(t2, LEnd):
        return t1
    if isinstance(t1, LVar) and isinstance(t2, LVar):
        if t1.var == t2.var:
            return t1
        raise MergeConflict(path, t1, t2,
                            f"distinct recursion variables {t1.var} / {t2.var}")
    if isinstance(t1, LRec) and isinstance(t2, LRec):
        # bodies merge under one binder; binder structure must agree
        if t1.var != t2.var:
            c1, c2 = canonical_local(t1), canonical_local(t2)
            return LRec(c1.var, _merge(c1.body, c2.body, path + ("rec",)))
        return LRec(t1.var, _merge(t1.body, t2.body, path + ("rec",)))
    if isinstance(t1, LSend) and isinstance(t2, LSend):
        if t1.peer == t2.peer and local_equal(t1, t2):
            return t1
        raise MergeConflict(path, t1, t2, "selections must be identical")
    if isinstance(t1, LRecv) and isinstance(t2, LRecv):
        if t1.peer != t2.peer:
            raise MergeConflict(path, t1, t2,
                                f"branchings from {t1.peer} / {t2.peer}")
        m2 = t2.branch_map()
        out = []
        for label, payload, cont in t1.branches:
            if label in m2:
                payload2, cont2 = m2.pop(label)
                u = _merge_payload(payload, payload2, path + (label,))
                c = _merge(cont, cont2, path + (label,))
                out.append((label, u, c))
            else:
                out.append((label, payload, cont))
        for label, payload, cont in t2.branches:
            if label in m2:
                out.append((label, payload, cont))
        return LRecv(t1.peer, tuple(out))
    raise MergeConflict(
        path, t1, t2,
        f"incompatible shapes {type(t1).__name__} / {type(t2).__name__}")


def _merge_payload(u1: Payload, u2: Payload, path) -> Payload:
    if isinstance(u1, Base) and isinstance(u2, Base):
        if u1.name == u2.name:
            return u1
        raise MergeConflict(path, u1, u2,
                            f"base types {u1.name} / {u2.name}")
    if isinstance(u1, Unit) and isinstance(u2, Unit):
        return u1
    if isinstance(u1, LocalT) and isinstance(u2, LocalT):
        return LocalT(_merge(u1.t, u2.t, path + ("payload",)))
    raise MergeConflict(path, u1, u2, "payload kinds differ")


def try_merge(t1: LocalType, t2: LocalType) -> LocalType | None:
    try:
        return merge(t1, t2)
    except MergeConflict:
        return None


# ---------------------------------------------------------------------------
# merge-based projection
# ---------------------------------------------------------------------------


def project(g: GlobalType, r: Participant) -> LocalType:
    """Merge-based projection of g onto r; raises ProjectError."""
    return _project(g, r, ())


def _project(g: GlobalType, r: Participant, path: tuple[str, ...]) -> LocalType:
    if isinstance(g, GEnd):
        return LEnd()
    if isinstance(g, GVar):
        return LVar(g.var)
    if isinstance(g, GRec):
        body = _project(g.body, r, path + ("rec",))
        if isinstance(body, LVar) and body.var == g.var:
            return LEnd()
        return LRec(g.var, body)
    if isinstance(g, GPar):
        in_left = r in participants(g.left)
        in_right = r in participants(g.right)
        if in_left and in_right:
            raise ProjectError(r, path, "participant occurs on both sides of |")
        if in_left:
            return _project(g.left, r, path + ("parL",))
        if in_right:
            return _project(g.right, r, path + ("parR",))
        return LEnd()
    if isinstance(g, GComm):
        # the participant field records the communication's sender
        if r == g.sender:
            return LSend(g.sender, tuple(
                (l, u, _project(c, r, path + (l,))) for l, u, c in g.branches))
        if r == g.receiver:
            return LRecv(g.sender, tuple(
                (l, u, _project(c, r, path + (l,))) for l, u, c in g.branches))
        acc: LocalType | None = None
        for l, _, cont in g.branches:
            t = _project(cont, r, path + (l,))
            if acc is None:
                acc = t
            else:
                try:
                    acc = _merge(acc, t, path + (l,))
                except MergeConflict as e:
                    raise ProjectError(r, path + (l,), str(e), e) from e
        assert acc is not None
        return acc
    raise TypeError(f"not a global type: {g!r}")


# ---------------------------------------------------------------------------
# simple projection (finite types, no merge)
# ---------------------------------------------------------------------------


def project_simple(g: GlobalType, r: Participant) -> LocalType:
    """Projection requiring syntactically equal third-party continuations."""
    return _sproject(g, r, ())


def _sproject(g: GlobalType, r: Participant, path) -> LocalType:
    if isinstance(g, (GRec, GVar)):
        raise ValueError("simple projection is defined on finite types only")
    if isinstance(g, GEnd):
        return LEnd()
    if isinstance(g, GPar):
        in_left = r in participants(g.left)
        in_right = r in participants(g.right)
        if in_left and in_right:
            raise ProjectError(r, path, "participant occurs on both sides of |")
        if in_left:
            return _sproject(g.left, r, path + ("parL",))
        if in_right:
            return _sproject(g.right, r, path + ("parR",))
        return LEnd()
    if isinstance(g, GComm):
        if r == g.sender:
            return LSend(g.sender, tuple(
                (l, u, _sproject(c, r, path + (l,))) for l, u, c in g.branches))
        if r == g.receiver:
            return LRecv(g.sender, tuple(
                (l, u, _sproject(c, r, path + (l,))) for l, u, c in g.branches))
        views = [(l, _sproject(c, r, path + (l,))) for l, _, c in g.branches]
        first_label, first = views[0]
        for l, view in views[1:]:
            if not local_equal(first, view):
                raise ProjectError(
                    r, path,
                    f"branches {first_label} and {l} give different views: "
                    f"{local_to_text(first)} vs {local_to_text(view)}")
        return first
    raise TypeError(f"not a global type: {g!r}")


# ---------------------------------------------------------------------------
# well-formedness
# ---------------------------------------------------------------------------


@dataclass
class WfReport:
    """Per-participant outcome of projecting a global type."""

    ok: bool
    projections: dict[Participant, LocalType] = field(default_factory=dict)
    errors: dict[Participant, ProjectError] = field(default_factory=dict)

    def to_json(self) -> dict:
        from .syntax import local_to_json

        return {
            "well_formed": self.ok,
            "projections": {p: local_to_json(t)
                            for p, t in sorted(self.projections.items())},
            "errors": {p: str(e) for p, e in sorted(self.errors.items())},
        }


def wf_report(g: GlobalType) -> WfReport:
    report = WfReport(ok=True)
    for r in sorted(participants(g)):
        try:
            report.projections[r] = project(g, r)
        except ProjectError as e:
            report.errors[r] = e
            report.ok = False
    return report


def is_wf(g: GlobalType) -> bool:
    """True iff the merge-based projection is defined for every participant."""
    return wf_report(g).ok


def is_swf(g: GlobalType) -> bool:
    """True iff the simple projection is defined for every participant."""
    for r in sorted(participants(g)):
        try:
            project_simple(g, r)
        except ProjectError:
            return False
    return True


# ---------------------------------------------------------------------------
# the width preorder induced by merge
# ---------------------------------------------------------------------------


def merge_leq(t1: LocalType, t2: LocalType) -> bool:
    """True iff some T' satisfies merge(t1, T') = t2.

    Decided structurally on canonical forms without unfolding: branchings may
    widen (t1's branch map a submap of t2's, entries related recursively);
    everything else must be equal.
    """
    return _merge_leq(canonical_local(t1), canonical_local(t2))


def _merge_leq(t1: LocalType, t2: LocalType) -> bool:
    if isinstance(t1, LEnd) and isinstance(t2, LEnd):
        return True
    if isinstance(t1, LVar) and isinstance(t2, LVar):
        return t1.var == t2.var
    if isinstance(t1, LRec) and isinstance(t2, LRec):
        return t1.var == t2.var and _merge_leq(t1.body, t2.body)
    if isinstance(t1, LSend) and isinstance(t2, LSend):
        return t1 == t2
    if isinstance(t1, LRecv) and isinstance(t2, LRecv):
        if t1.peer != t2.peer:
            return False
        m2 = t2.branch_map()
        for label, payload, cont in t1.branches:
            if label not in m2:
                return False
            payload2, cont2 = m2[label]
            if not _payload_leq(payload, payload2):
                return False
            if not _merge_leq(cont, cont2):
                return False
        return True
    return False


def _payload_leq(u1: Payload, u2: Payload) -> bool:
    if isinstance(u1, LocalT) and isinstance(u2, LocalT):
        return _merge_leq(u1.t, u2.t)
    return u1 == u2
