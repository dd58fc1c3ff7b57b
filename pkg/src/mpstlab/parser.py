"""Parsers for the global-type, local-type, and process surface grammars.

Global types:   end | p->q{ l(U). G, ... } | G1 | G2 | rec X. G | X
Local types:    end | p?{ l(U). T, ... } | p!{ ... } | rec X. T | X
Payloads:       bool | nat | int | str | unit | <T>
Processes:      0 | P | Q | new x. P | x<y>. P | x(y). P | !x(y). P
                | x <- l; P | x >> { l1: P1, ... } | fwd x y
                | corec X(ys). P @ (cs) | X(cs)

Errors carry line and column.  `new y. x<y>. P` is recognized as the
bound-output form.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import process as pr
from . import syntax as sx


class ParseError(sx.SpecError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


_SYMBOLS = ("->", "<-", ">>", "|", ".", ",", ":", ";", "{", "}", "(", ")",
            "<", ">", "?", "!", "@", "0")
_KEYWORDS = ("end", "rec", "new", "fwd", "corec", "unit",
             "bool", "nat", "int", "str")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "kw", or the symbol itself
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":  # comment to end of line
            while i < n and src[i] != "\n":
                i += 1
            continue
        two = src[i:i + 2]
        if two in ("->", "<-", ">>"):
            toks.append(Token(two, two, line, col))
            i += 2
            col += 2
            continue
        if ch in "|.,:;{}()<>?!@0":
            toks.append(Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_#"):
                j += 1
            text = src[i:j]
            kind = "kw" if text in _KEYWORDS else "ident"
            toks.append(Token(kind, text, line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class _Cursor:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind: str, what: str | None = None) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(
                f"expected {what or kind!r}, found {t.text or 'end of input'!r}",
                t.line, t.col)
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(
                f"expected {what}, found {t.text or 'end of input'!r}",
                t.line, t.col)
        return self.next()


# ---------------------------------------------------------------------------
# global and local types
# ---------------------------------------------------------------------------


def parse_global(src: str) -> sx.GlobalType:
    """Parse and validate a closed, guarded global type."""
    cur = _Cursor(tokenize(src))
    g = _global(cur)
    t = cur.peek()
    if t.kind != "eof":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    try:
        sx.validate_global(g)
    except sx.InvalidTypeError as e:
        raise ParseError(str(e), 1, 1) from e
    return g


def parse_local(src: str) -> sx.LocalType:
    cur = _Cursor(tokenize(src))
    t = _local(cur)
    tok = cur.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return t


def _global(cur: _Cursor) -> sx.GlobalType:
    left = _global_atom(cur)
    if cur.peek().kind == "|":
        cur.next()
        right = _global(cur)
        return sx.GPar(left, right)
    return left


def _global_atom(cur: _Cursor) -> sx.GlobalType:
    t = cur.peek()
    if t.kind == "(":
        cur.next()
        g = _global(cur)
        cur.expect(")")
        return g
    if t.kind == "kw" and t.text == "end":
        cur.next()
        return sx.GEnd()
    if t.kind == "kw" and t.text == "rec":
        cur.next()
        var = cur.ident("recursion variable")
        cur.expect(".")
        return sx.GRec(var.text, _global(cur))
    if t.kind == "ident":
        if cur.peek(1).kind == "->":
            sender = cur.next()
            cur.next()
            receiver = cur.ident("receiver")
            if sender.text == receiver.text:
                raise ParseError(
                    f"reflexive communication {sender.text}->{receiver.text}",
                    sender.line, sender.col)
            cur.expect("{")
            branches = [_gbranch(cur)]
            while cur.peek().kind == ",":
                cur.next()
                branches.append(_gbranch(cur))
            cur.expect("}")
            labels = [l for l, _, _ in branches]
            dup = {l for l in labels if labels.count(l) > 1}
            if dup:
                raise ParseError(f"duplicate label(s) {sorted(dup)}",
                                 t.line, t.col)
            return sx.gcomm(sender.text, receiver.text, branches)
        cur.next()
        return sx.GVar(t.text)
    raise ParseError(f"expected a global type, found {t.text or 'end of input'!r}",
                     t.line, t.col)


def _gbranch(cur: _Cursor):
    label = cur.ident("branch label")
    cur.expect("(")
    payload = _payload(cur)
    cur.expect(")")
    cur.expect(".")
    return (label.text, payload, _global(cur))


def _payload(cur: _Cursor) -> sx.Payload:
    t = cur.peek()
    if t.kind == "kw" and t.text == "unit":
        cur.next()
        return sx.Unit()
    if t.kind == "kw" and t.text in sx.BASE_TYPES:
        cur.next()
        return sx.Base(t.text)
    if t.kind == "<":
        cur.next()
        inner = _local(cur)
        cur.expect(">")
        return sx.LocalT(inner)
    raise ParseError(
        f"expected a payload type, found {t.text or 'end of input'!r}",
        t.line, t.col)


def _local(cur: _Cursor) -> sx.LocalType:
    t = cur.peek()
    if t.kind == "kw" and t.text == "end":
        cur.next()
        return sx.LEnd()
    if t.kind == "kw" and t.text == "rec":
        cur.next()
        var = cur.ident("recursion variable")
        cur.expect(".")
        return sx.LRec(var.text, _local(cur))
    if t.kind == "ident":
        if cur.peek(1).kind in ("?", "!"):
            peer = cur.next()
            op = cur.next()
            cur.expect("{")
            branches = [_lbranch(cur)]
            while cur.peek().kind == ",":
                cur.next()
                branches.append(_lbranch(cur))
            cur.expect("}")
            cls = sx.lrecv if op.kind == "?" else sx.lsend
            return cls(peer.text, branches)
        cur.next()
        return sx.LVar(t.text)
    raise ParseError(f"expected a local type, found {t.text or 'end of input'!r}",
                     t.line, t.col)


def _lbranch(cur: _Cursor):
    label = cur.ident("branch label")
    cur.expect("(")
    payload = _payload(cur)
    cur.expect(")")
    cur.expect(".")
    return (label.text, payload, _local(cur))


# ---------------------------------------------------------------------------
# processes
# ---------------------------------------------------------------------------


def parse_process(src: str) -> pr.Process:
    cur = _Cursor(tokenize(src))
    p = _proc(cur)
    t = cur.peek()
    if t.kind != "eof":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    _check_calls(p, {})
    return p


def _proc(cur: _Cursor) -> pr.Process:
    left = _proc_atom(cur)
    if cur.peek().kind == "|":
        cur.next()
        return pr.Par(left, _proc(cur))
    return left


def _proc_atom(cur: _Cursor) -> pr.Process:
    t = cur.peek()
    if t.kind == "0":
        cur.next()
        return pr.Nil()
    if t.kind == "(":
        cur.next()
        p = _proc(cur)
        cur.expect(")")
        return p
    if t.kind == "!":
        cur.next()
        chan = cur.ident("channel")
        cur.expect("(")
        bind = cur.ident("binder")
        cur.expect(")")
        cur.expect(".")
        return pr.ReplRecv(chan.text, bind.text, _proc(cur))
    if t.kind == "kw" and t.text == "new":
        cur.next()
        name = cur.ident("restricted name")
        cur.expect(".")
        body = _proc(cur)
        if isinstance(body, pr.Send) and body.payload == name.text \
                and body.chan != name.text:
            return pr.BoundOut(body.chan, name.text, body.cont)
        return pr.Restrict(name.text, body)
    if t.kind == "kw" and t.text == "fwd":
        cur.next()
        a = cur.ident("name")
        b = cur.ident("name")
        return pr.Fwd(a.text, b.text)
    if t.kind == "kw" and t.text == "corec":
        cur.next()
        var = cur.ident("corecursion variable")
        cur.expect("(")
        params = _name_list(cur)
        cur.expect(")")
        cur.expect(".")
        body = _proc(cur)
        cur.expect("@")
        cur.expect("(")
        args = _name_list(cur)
        cur.expect(")")
        if len(params) != len(args):
            raise ParseError(
                f"corec {var.text}: {len(params)} parameters but "
                f"{len(args)} arguments", var.line, var.col)
        try:
            return pr.Corec(var.text, tuple(params), body, tuple(args))
        except pr.ProcessError as e:
            raise ParseError(str(e), var.line, var.col) from e
    if t.kind == "ident":
        name = cur.next()
        nxt = cur.peek()
        if nxt.kind == "<":
            cur.next()
            payload = cur.ident("payload name")
            cur.expect(">")
            cur.expect(".")
            return pr.Send(name.text, payload.text, _proc(cur))
        if nxt.kind == "<-":
            cur.next()
            label = cur.ident("label")
            cur.expect(";")
            return pr.Select(name.text, label.text, _proc(cur))
        if nxt.kind == ">>":
            cur.next()
            cur.expect("{")
            cases = [_pcase(cur)]
            while cur.peek().kind == ",":
                cur.next()
                cases.append(_pcase(cur))
            cur.expect("}")
            labels = [l for l, _ in cases]
            dup = {l for l in labels if labels.count(l) > 1}
            if dup:
                raise ParseError(f"duplicate case label(s) {sorted(dup)}",
                                 t.line, t.col)
            return pr.Branch(name.text, tuple(cases))
        if nxt.kind == "(":
            cur.next()
            args = _name_list(cur)
            cur.expect(")")
            if len(args) == 1 and cur.peek().kind == ".":
                cur.next()
                return pr.Recv(name.text, args[0], _proc(cur))
            return pr.RecCall(name.text, tuple(args))
        raise ParseError(f"unexpected {nxt.text!r} after {name.text!r}",
                         nxt.line, nxt.col)
    raise ParseError(f"expected a process, found {t.text or 'end of input'!r}",
                     t.line, t.col)


def _pcase(cur: _Cursor):
    label = cur.ident("case label")
    cur.expect(":")
    return (label.text, _proc(cur))


def _name_list(cur: _Cursor) -> list[str]:
    names = [cur.ident("name").text]
    while cur.peek().kind == ",":
        cur.next()
        names.append(cur.ident("name").text)
    return names


def _check_calls(p: pr.Process, arities: dict[str, int]) -> None:
    """Corecursion calls must match the arity of their binder."""
    if isinstance(p, pr.RecCall):
        if p.var in arities and arities[p.var] != len(p.args):
            raise ParseError(
                f"call {p.var} has {len(p.args)} arguments, binder "
                f"takes {arities[p.var]}", 1, 1)
        return
    if isinstance(p, pr.Corec):
        _check_calls(p.body, {**arities, p.var: len(p.params)})
        return
    if isinstance(p, pr.Par):
        _check_calls(p.left, arities)
        _check_calls(p.right, arities)
        return
    if isinstance(p, pr.Restrict):
        _check_calls(p.body, arities)
        return
    if isinstance(p, (pr.Send, pr.BoundOut, pr.Recv, pr.ReplRecv, pr.Select)):
        _check_calls(p.cont, arities)
        return
    if isinstance(p, pr.Branch):
        for _, q in p.cases:
            _check_calls(q, arities)
