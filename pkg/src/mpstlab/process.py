"""Process terms, capture-avoiding substitution, and structural congruence.

Processes are immutable dataclasses over interned string names.  Structural
congruence is decided by a canonical normal form: parallel compositions are
flattened into multisets, inert restrictions are dropped, restrictions float
to the head of their scope, forwarders are oriented by name order, and all
binders are renamed by a deterministic traversal scheme before comparison.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .syntax import Label, RecVar, SpecError

Name = str

_FRESH_COUNTER = itertools.count()


def fresh_name(prefix: str = "n") -> Name:
    """A globally fresh name: `prefix#<counter>`."""
    return f"{prefix}#{next(_FRESH_COUNTER)}"


class ProcessError(SpecError):
    """A process violates a structural invariant."""


class Process:
    """Base class of process nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Nil(Process):
    """Inaction."""


@dataclass(frozen=True)
class Par(Process):
    left: Process
    right: Process


@dataclass(frozen=True)
class Restrict(Process):
    """Name restriction (new name)."""

    name: Name
    body: Process


@dataclass(frozen=True)
class Send(Process):
    """Free output of `payload` on `chan`."""

    chan: Name
    payload: Name
    cont: Process


@dataclass(frozen=True)
class BoundOut(Process):
    """Bound output: restrict `fresh` and send it on `chan`."""

    chan: Name
    fresh: Name
    cont: Process


@dataclass(frozen=True)
class Recv(Process):
    chan: Name
    bind: Name
    cont: Process


@dataclass(frozen=True)
class ReplRecv(Process):
    """Replicated (persistent) input."""

    chan: Name
    bind: Name
    cont: Process


@dataclass(frozen=True)
class Select(Process):
    chan: Name
    label: Label
    cont: Process


@dataclass(frozen=True)
class Branch(Process):
    chan: Name
    cases: tuple[tuple[Label, Process], ...]

    def __post_init__(self):
        labels = [l for l, _ in self.cases]
        if len(set(labels)) != len(labels):
            raise ProcessError(f"duplicate branch label in {labels}")
        if not self.cases:
            raise ProcessError("branch with no cases")

    def case_map(self) -> dict[Label, Process]:
        return dict(self.cases)


@dataclass(frozen=True)
class Fwd(Process):
    """Forwarder equating two names."""

    a: Name
    b: Name


@dataclass(frozen=True)
class Corec(Process):
    """Corecursive definition applied to a tuple of channels."""

    var: RecVar
    params: tuple[Name, ...]
    body: Process
    args: tuple[Name, ...]

    def __post_init__(self):
        if len(self.params) != len(self.args):
            raise ProcessError(
                f"corec {self.var}: {len(self.params)} params, "
                f"{len(self.args)} args")
        extra = free_names(self.body) - set(self.params)
        if extra:
            raise ProcessError(
                f"corec {self.var}: body has free names {sorted(extra)} "
                f"outside the parameter tuple")


@dataclass(frozen=True)
class RecCall(Process):
    var: RecVar
    args: tuple[Name, ...]


def branch(chan: Name, cases) -> Branch:
    """Build a Branch from a dict or iterable of (label, process) pairs."""
    if isinstance(cases, dict):
        cases = cases.items()
    return Branch(chan, tuple(cases))


# ---------------------------------------------------------------------------
# free names
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def free_names(p: Process) -> frozenset[Name]:
    if isinstance(p, Nil):
        return frozenset()
    if isinstance(p, Par):
        return free_names(p.left) | free_names(p.right)
    if isinstance(p, Restrict):
        return free_names(p.body) - {p.name}
    if isinstance(p, Send):
        return frozenset({p.chan, p.payload}) | free_names(p.cont)
    if isinstance(p, BoundOut):
        return frozenset({p.chan}) | (free_names(p.cont) - {p.fresh})
    if isinstance(p, (Recv, ReplRecv)):
        return frozenset({p.chan}) | (free_names(p.cont) - {p.bind})
    if isinstance(p, Select):
        return frozenset({p.chan}) | free_names(p.cont)
    if isinstance(p, Branch):
        out = frozenset({p.chan})
        for _, q in p.cases:
            out |= free_names(q)
        return out
    if isinstance(p, Fwd):
        return frozenset({p.a, p.b})
    if isinstance(p, Corec):
        return (free_names(p.body) - set(p.params)) | frozenset(p.args)
    if isinstance(p, RecCall):
        return frozenset(p.args)
    raise TypeError(f"not a process: {p!r}")


def free_procvars(p: Process) -> frozenset[RecVar]:
    if isinstance(p, RecCall):
        return frozenset({p.var})
    if isinstance(p, Corec):
        return free_procvars(p.body) - {p.var}
    if isinstance(p, Par):
        return free_procvars(p.left) | free_procvars(p.right)
    if isinstance(p, (Restrict, Send, BoundOut, Recv, ReplRecv, Select)):
        return free_procvars(p.cont if not isinstance(p, Restrict) else p.body)
    if isinstance(p, Branch):
        out: frozenset[RecVar] = frozenset()
        for _, q in p.cases:
            out |= free_procvars(q)
        return out
    return frozenset()


# ---------------------------------------------------------------------------
# substitution
# ---------------------------------------------------------------------------


def subst(p: Process, new: Name, old: Name) -> Process:
    """Capture-avoiding substitution of `new` for free occurrences of `old`."""
    return subst_many(p, {old: new})


def subst_many(p: Process, mapping: dict[Name, Name]) -> Process:
    """Simultaneous capture-avoiding renaming of free names."""
    mapping = {o: n for o, n in mapping.items() if o != n}
    if not mapping:
        return p
    return _subst(p, mapping)


def _sub(mapping: dict[Name, Name], x: Name) -> Name:
    return mapping.get(x, x)


def _under_binder(p_binder: Name, body: Process, mapping: dict[Name, Name]):
    """Rename the binder if it would capture an incoming name."""
    live = {o: n for o, n in mapping.items() if o in free_names(body)}
    live.pop(p_binder, None)
    if p_binder in live.values():
        fresh = fresh_name(p_binder.split("#")[0])
        body = _subst(body, {p_binder: fresh})
        p_binder = fresh
        live = {o: n for o, n in mapping.items()
                if o in free_names(body) and o != p_binder}
    if not live:
        return p_binder, body
    return p_binder, _subst(body, live)


def _subst(p: Process, mapping: dict[Name, Name]) -> Process:
    if isinstance(p, Nil):
        return p
    if isinstance(p, Par):
        return Par(_subst(p.left, mapping), _subst(p.right, mapping))
    if isinstance(p, Restrict):
        name, body = _under_binder(p.name, p.body, mapping)
        return Restrict(name, body)
    if isinstance(p, Send):
        return Send(_sub(mapping, p.chan), _sub(mapping, p.payload),
                    _subst(p.cont, mapping))
    if isinstance(p, BoundOut):
        fresh, cont = _under_binder(p.fresh, p.cont, mapping)
        return BoundOut(_sub(mapping, p.chan), fresh, cont)
    if isinstance(p, Recv):
        bind, cont = _under_binder(p.bind, p.cont, mapping)
        return Recv(_sub(mapping, p.chan), bind, cont)
    if isinstance(p, ReplRecv):
        bind, cont = _under_binder(p.bind, p.cont, mapping)
        return ReplRecv(_sub(mapping, p.chan), bind, cont)
    if isinstance(p, Select):
        return Select(_sub(mapping, p.chan), p.label, _subst(p.cont, mapping))
    if isinstance(p, Branch):
        return Branch(_sub(mapping, p.chan),
                      tuple((l, _subst(q, mapping)) for l, q in p.cases))
    if isinstance(p, Fwd):
        return Fwd(_sub(mapping, p.a), _sub(mapping, p.b))
    if isinstance(p, Corec):
        # body's free names are covered by params, which are binders
        return Corec(p.var, p.params, p.body,
                     tuple(_sub(mapping, a) for a in p.args))
    if isinstance(p, RecCall):
        return RecCall(p.var, tuple(_sub(mapping, a) for a in p.args))
    raise TypeError(f"not a process: {p!r}")


def subst_procvar(p: Process, var: RecVar, definition: Corec) -> Process:
    """Replace calls `var(args)` by the corecursive definition applied to args."""
    if isinstance(p, RecCall):
        if p.var == var:
            return Corec(definition.var, definition.params, definition.body,
                         p.args)
        return p
    if isinstance(p, Corec):
        if p.var == var:
            return p
        return Corec(p.var, p.params, subst_procvar(p.body, var, definition),
                     p.args)
    if isinstance(p, (Nil, Fwd)):
        return p
    if isinstance(p, Par):
        return Par(subst_procvar(p.left, var, definition),
                   subst_procvar(p.right, var, definition))
    if isinstance(p, Restrict):
        return Restrict(p.name, subst_procvar(p.body, var, definition))
    if isinstance(p, Send):
        return Send(p.chan, p.payload, subst_procvar(p.cont, var, definition))
    if isinstance(p, BoundOut):
        return BoundOut(p.chan, p.fresh, subst_procvar(p.cont, var, definition))
    if isinstance(p, Recv):
        return Recv(p.chan, p.bind, subst_procvar(p.cont, var, definition))
    if isinstance(p, ReplRecv):
        return ReplRecv(p.chan, p.bind, subst_procvar(p.cont, var, definition))
    if isinstance(p, Select):
        return Select(p.chan, p.label, subst_procvar(p.cont, var, definition))
    if isinstance(p, Branch):
        return Branch(p.chan, tuple((l, subst_procvar(q, var, definition))
                                    for l, q in p.cases))
    raise TypeError(f"not a process: {p!r}")


def unfold_corec(p: Corec) -> Process:
    """One unfolding: body with args for params and the definition for calls."""
    body = subst_many(p.body, dict(zip(p.params, p.args)))
    return subst_procvar(body, p.var, p)


# ---------------------------------------------------------------------------
# canonical forms / structural congruence
# ---------------------------------------------------------------------------
#
# canonical(p) returns a process such that p == q up to structural congruence
# iff canonical(p) == canonical(q).  The normal form of one scope level is
#   Restrict(s_1, ... Restrict(s_m, Par(c_1, Par(c_2, ...)))),
# where restrictions have floated to the head, inert restrictions and Nil
# components are dropped, forwarders are oriented by name order, and all
# binders are renamed to reserved names (`%d<depth>b<i>` etc., never valid in
# the surface syntax).  Components are ordered by an alpha-invariant skeleton;
# groups tied on the skeleton are resolved by trying their permutations and
# keeping the least rendering (tied groups are tiny in practice).


def rename_procvar(p: Process, old: RecVar, new: RecVar) -> Process:
    if isinstance(p, RecCall):
        return RecCall(new, p.args) if p.var == old else p
    if isinstance(p, Corec):
        if p.var == old:
            return p
        return Corec(p.var, p.params, rename_procvar(p.body, old, new), p.args)
    if isinstance(p, (Nil, Fwd)):
        return p
    if isinstance(p, Par):
        return Par(rename_procvar(p.left, old, new),
                   rename_procvar(p.right, old, new))
    if isinstance(p, Restrict):
        return Restrict(p.name, rename_procvar(p.body, old, new))
    if isinstance(p, Send):
        return Send(p.chan, p.payload, rename_procvar(p.cont, old, new))
    if isinstance(p, BoundOut):
        return BoundOut(p.chan, p.fresh, rename_procvar(p.cont, old, new))
    if isinstance(p, Recv):
        return Recv(p.chan, p.bind, rename_procvar(p.cont, old, new))
    if isinstance(p, ReplRecv):
        return ReplRecv(p.chan, p.bind, rename_procvar(p.cont, old, new))
    if isinstance(p, Select):
        return Select(p.chan, p.label, rename_procvar(p.cont, old, new))
    if isinstance(p, Branch):
        return Branch(p.chan, tuple((l, rename_procvar(q, old, new))
                                    for l, q in p.cases))
    raise TypeError(f"not a process: {p!r}")


def _scope_of(p: Process) -> tuple[list[Name], list[Process]]:
    """Flatten one scope level: restricted names and parallel components."""
    names: list[Name] = []
    comps: list[Process] = []
    outer_free = free_names(p)

    def walk(node: Process):
        if isinstance(node, Nil):
            return
        if isinstance(node, Par):
            walk(node.left)
            walk(node.right)
            return
        if isinstance(node, Restrict):
            if isinstance(node.body, Send) and node.body.payload == node.name \
                    and node.body.chan != node.name:
                # bound-output sugar
                walk(BoundOut(node.body.chan, node.name, node.body.cont))
                return
            if node.name not in free_names(node.body):
                walk(node.body)
                return
            name = node.name
            if name in names or name in outer_free:
                # hoisting must not capture a sibling's occurrences
                fresh = fresh_name(name.split("#")[0].lstrip("%"))
                walk(Restrict(fresh, subst(node.body, fresh, name)))
                return
            names.append(name)
            walk(node.body)
            return
        comps.append(node)

    walk(p)
    used = set()
    for c in comps:
        used |= free_names(c)
    live = [n for n in names if n in used]
    return live, comps


def _skeleton(p: Process, bound: frozenset[Name]) -> tuple:
    """Alpha-invariant shape of a component, free names kept literally."""
    def nm(x: Name):
        return "?" if x in bound else x

    if isinstance(p, Nil):
        return ("0",)
    if isinstance(p, Par):
        return ("|", _skeleton(p.left, bound), _skeleton(p.right, bound))
    if isinstance(p, Restrict):
        return ("nu", _skeleton(p.body, bound | {p.name}))
    if isinstance(p, Send):
        return ("snd", nm(p.chan), nm(p.payload), _skeleton(p.cont, bound))
    if isinstance(p, BoundOut):
        return ("out", nm(p.chan), _skeleton(p.cont, bound | {p.fresh}))
    if isinstance(p, Recv):
        return ("in", nm(p.chan), _skeleton(p.cont, bound | {p.bind}))
    if isinstance(p, ReplRecv):
        return ("rep", nm(p.chan), _skeleton(p.cont, bound | {p.bind}))
    if isinstance(p, Select):
        return ("sel", nm(p.chan), p.label, _skeleton(p.cont, bound))
    if isinstance(p, Branch):
        return ("bra", nm(p.chan),
                tuple(sorted((l, _skeleton(q, bound)) for l, q in p.cases)))
    if isinstance(p, Fwd):
        return ("fwd", tuple(sorted((nm(p.a), nm(p.b)))))
    if isinstance(p, Corec):
        return ("corec", len(p.params),
                _skeleton(p.body, bound | set(p.params)),
                tuple(nm(a) for a in p.args))
    if isinstance(p, RecCall):
        return ("call", tuple(nm(a) for a in p.args))
    raise TypeError(f"not a process: {p!r}")


class _Counter:
    __slots__ = ("bound", "scope", "pvar")

    def __init__(self):
        self.bound = 0
        self.scope = 0
        self.pvar = 0


_PERM_CAP = 5  # max size of a skeleton-tied component group to permute


def canonical(p: Process) -> Process:
    """Canonical representative of p's structural-congruence class."""
    return _canon_cached(p)


@lru_cache(maxsize=None)
def _canon_cached(p: Process) -> Process:
    return _canon_scope(p, 0)


@lru_cache(maxsize=None)
def _canon_scope(p: Process, depth: int) -> Process:
    """Canonicalize one scope level; p has outer renamings already applied."""
    names, comps = _scope_of(p)
    if not comps:
        return Nil()
    scope_set = frozenset(names)

    def order_key(comp: Process):
        return _skeleton(comp, scope_set)

    comps_sorted = sorted(comps, key=order_key)
    groups: list[list[Process]] = []
    for comp in comps_sorted:
        if groups and order_key(groups[-1][0]) == order_key(comp):
            groups[-1].append(comp)
        else:
            groups.append([comp])

    best_key: str | None = None
    best_result: Process | None = None
    for perm in _group_permutations(groups):
        counter = _Counter()
        scope_assign: dict[Name, Name] = {}
        out_comps = [_canon_comp(c, scope_set, scope_assign, counter, depth)
                     for c in perm]
        ordered_scope = [scope_assign[n] for n in names if n in scope_assign]
        result: Process = _par_fold(sorted(out_comps, key=_render))
        for s in reversed(ordered_scope):
            result = Restrict(s, result)
        key = _render(result)
        if best_key is None or key < best_key:
            best_key = key
            best_result = result
    assert best_result is not None
    return best_result


def _group_permutations(groups: list[list[Process]]):
    """All component orders that permute only within skeleton-tied groups."""
    pools = []
    for g in groups:
        if len(g) <= _PERM_CAP:
            pools.append([list(perm) for perm in itertools.permutations(g)])
        else:
            pools.append([g])
    for combo in itertools.product(*pools):
        yield [c for chunk in combo for c in chunk]


def _canon_comp(p: Process, scope_names: frozenset[Name],
                scope_assign: dict[Name, Name], counter: _Counter,
                depth: int) -> Process:
    def scope_nm(x: Name) -> Name:
        if x not in scope_assign:
            scope_assign[x] = f"%d{depth}s{counter.scope}"
            counter.scope += 1
        return scope_assign[x]

    def rec(node: Process, env: dict[Name, Name]) -> Process:
        def nm(x: Name) -> Name:
            if x in env:
                return env[x]
            if x in scope_names:
                return scope_nm(x)
            return x

        if isinstance(node, Nil):
            return node
        if isinstance(node, (Par, Restrict)):
            # nested scope under a prefix: apply renamings, then restart
            # (sorted iteration keeps scope-name assignment deterministic)
            relevant = {x: nm(x) for x in sorted(free_names(node))
                        if x in env or x in scope_names}
            return _canon_scope(subst_many(node, relevant), depth + 1)
        if isinstance(node, Send):
            return Send(nm(node.chan), nm(node.payload), rec(node.cont, env))
        if isinstance(node, BoundOut):
            b = f"%d{depth}b{counter.bound}"
            counter.bound += 1
            return BoundOut(nm(node.chan), b,
                            rec(node.cont, {**env, node.fresh: b}))
        if isinstance(node, (Recv, ReplRecv)):
            b = f"%d{depth}b{counter.bound}"
            counter.bound += 1
            cls = Recv if isinstance(node, Recv) else ReplRecv
            return cls(nm(node.chan), b, rec(node.cont, {**env, node.bind: b}))
        if isinstance(node, Select):
            return Select(nm(node.chan), node.label, rec(node.cont, env))
        if isinstance(node, Branch):
            cases = tuple(sorted(
                ((l, rec(q, env)) for l, q in node.cases),
                key=lambda c: c[0]))
            return Branch(nm(node.chan), cases)
        if isinstance(node, Fwd):
            a, b = sorted((nm(node.a), nm(node.b)))
            return Fwd(a, b)
        if isinstance(node, Corec):
            pvar = f"%d{depth}X{counter.pvar}"
            counter.pvar += 1
            params = tuple(f"%d{depth}p{i}" for i in range(len(node.params)))
            body = subst_many(node.body, dict(zip(node.params, params)))
            body = rename_procvar(body, node.var, pvar)
            body = _canon_scope(body, depth + 1)
            return Corec(pvar, params, body, tuple(nm(a) for a in node.args))
        if isinstance(node, RecCall):
            return RecCall(node.var, tuple(nm(a) for a in node.args))
        raise TypeError(f"not a process: {node!r}")

    return rec(p, {})


def _par_fold(comps: list[Process]) -> Process:
    if not comps:
        return Nil()
    out = comps[-1]
    for c in reversed(comps[:-1]):
        out = Par(c, out)
    return out


@lru_cache(maxsize=None)
def _render(p: Process) -> str:
    return proc_to_text(p)


def struct_congruent(p: Process, q: Process) -> bool:
    """Decide structural congruence via canonical normal forms."""
    return canonical(p) == canonical(q)


# ---------------------------------------------------------------------------
# pretty printing and JSON
# ---------------------------------------------------------------------------


def proc_to_text(p: Process) -> str:
    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Par):
        return f"({proc_to_text(p.left)} | {proc_to_text(p.right)})"
    if isinstance(p, Restrict):
        return f"new {p.name}. {proc_to_text(p.body)}"
    if isinstance(p, Send):
        return f"{p.chan}<{p.payload}>. {proc_to_text(p.cont)}"
    if isinstance(p, BoundOut):
        return f"new {p.fresh}. {p.chan}<{p.fresh}>. {proc_to_text(p.cont)}"
    if isinstance(p, Recv):
        return f"{p.chan}({p.bind}). {proc_to_text(p.cont)}"
    if isinstance(p, ReplRecv):
        return f"!{p.chan}({p.bind}). {proc_to_text(p.cont)}"
    if isinstance(p, Select):
        return f"{p.chan} <- {p.label}; {proc_to_text(p.cont)}"
    if isinstance(p, Branch):
        body = ", ".join(f"{l}: {proc_to_text(q)}" for l, q in p.cases)
        return f"{p.chan} >> {{ {body} }}"
    if isinstance(p, Fwd):
        return f"fwd {p.a} {p.b}"
    if isinstance(p, Corec):
        return (f"corec {p.var}({', '.join(p.params)}). "
                f"{proc_to_text(p.body)} @ ({', '.join(p.args)})")
    if isinstance(p, RecCall):
        return f"{p.var}({', '.join(p.args)})"
    raise TypeError(f"not a process: {p!r}")


def proc_to_json(p: Process) -> dict:
    if isinstance(p, Nil):
        return {"kind": "nil"}
    if isinstance(p, Par):
        return {"kind": "par", "left": proc_to_json(p.left),
                "right": proc_to_json(p.right)}
    if isinstance(p, Restrict):
        return {"kind": "new", "name": p.name, "body": proc_to_json(p.body)}
    if isinstance(p, Send):
        return {"kind": "send", "chan": p.chan, "payload": p.payload,
                "cont": proc_to_json(p.cont)}
    if isinstance(p, BoundOut):
        return {"kind": "boundout", "chan": p.chan, "fresh": p.fresh,
                "cont": proc_to_json(p.cont)}
    if isinstance(p, Recv):
        return {"kind": "recv", "chan": p.chan, "bind": p.bind,
                "cont": proc_to_json(p.cont)}
    if isinstance(p, ReplRecv):
        return {"kind": "repl", "chan": p.chan, "bind": p.bind,
                "cont": proc_to_json(p.cont)}
    if isinstance(p, Select):
        return {"kind": "select", "chan": p.chan, "label": p.label,
                "cont": proc_to_json(p.cont)}
    if isinstance(p, Branch):
        return {"kind": "branch", "chan": p.chan,
                "cases": [{"label": l, "cont": proc_to_json(q)}
                          for l, q in p.cases]}
    if isinstance(p, Fwd):
        return {"kind": "fwd", "a": p.a, "b": p.b}
    if isinstance(p, Corec):
        return {"kind": "corec", "var": p.var, "params": list(p.params),
                "body": proc_to_json(p.body), "args": list(p.args)}
    if isinstance(p, RecCall):
        return {"kind": "call", "var": p.var, "args": list(p.args)}
    raise TypeError(f"not a process: {p!r}")


def canonical_hash(p: Process) -> str:
    """Stable short digest of the canonical form, for trace output."""
    import hashlib

    return hashlib.sha256(_render(canonical(p)).encode()).hexdigest()[:16]
