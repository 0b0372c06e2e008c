"""Recursive-descent parser for the concrete syntax.

Whitespace-insensitive except inside addresses, which are lexed as single
tokens (``//h/c/a/``, ``/a/*``, ``a/b``).  ``#`` starts a line comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .terms import (
    ALL_COMMANDS, ANON, COMMANDS, EPS, ERR, INTERNAL, NIL, NS, OK, RESERVED,
    SYMBOLS, Assign, Binding, BinOp, BoolOp, Cmp, Command, Decl, Deployed,
    DropSession, If, Located, Location, Name, New, NewSession, Not, Num,
    OpPair, Par, Passive, Pattern, Receive, RelRef, Restrict, Return, Send,
    Spawn, SymUrl, Truth, Url, free_names, is_name, is_segment, make_rs, make_sls,
)

_SEG = r"[A-Za-z0-9_]+"
_TOKENS = [
    ("SKIP", r"[ \t\r]+|#[^\n]*"),
    ("NL", r"\n"),
    ("URL", rf"//[A-Za-z0-9_\-]+(?:\.[A-Za-z0-9_\-]+)*(?:/{_SEG})+/?"),
    ("PATH", rf"/(?:(?:{_SEG}|\.\.)/)*(?:{_SEG}|\*)?"),
    ("RELPATH", rf"\./(?:(?:{_SEG}|\.\.)/)*(?:{_SEG})?|(?:(?:{_SEG}|\.\.)/)+(?:{_SEG})?"),
    ("INT", r"\d+(?![A-Za-z_])"),
    ("NAME", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("OP", r"\|\||->|==|!=|<=|>=|\^I(?![A-Za-z0-9_])|\^\{|[\[\]()<>{}.,:;=!+\-^@]"),
]
_LEXER = re.compile("|".join(f"(?P<{k}>{v})" for k, v in _TOKENS))

COMPARISONS = ("==", "!=", "<=", ">=", "<", ">")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int
    start: int
    end: int


def tokenize(text):
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _LEXER.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "NL":
            line += 1
            line_start = m.end()
        elif kind != "SKIP":
            toks.append(Token(kind, m.group(), line, m.start() - line_start + 1, m.start(), m.end()))
        pos = m.end()
    toks.append(Token("EOF", "", line, pos - line_start + 1, pos, pos))
    return toks


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    # ------------------------------------------------------------ basics
    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise ParseError(f"{msg} (found {found!r})", tok.line, tok.col)

    def at(self, text):
        t = self.tok
        return t.text == text and t.kind in ("OP", "NAME")

    def accept(self, text):
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.error(f"expected {text!r}")

    def adjacent(self):
        """True when the current token immediately follows the previous one."""
        return self.i > 0 and self.toks[self.i - 1].end == self.tok.start

    def name(self, what="name"):
        t = self.tok
        if t.kind != "NAME" or not is_name(t.text):
            self.error(f"expected {what}")
        self.i += 1
        return t.text

    def binder(self):
        if self.tok.kind == "NAME" and self.tok.text == ANON:
            self.i += 1
            return ANON
        return self.name("binder")

    def end(self):
        if self.tok.kind != "EOF":
            self.error("unexpected trailing input")

    # ---------------------------------------------------------- addresses
    def _url_parts(self, tok):
        body = tok.text[2:]
        coll = body.endswith("/")
        parts = body.rstrip("/").split("/")
        host, rest = parts[0], parts[1:]
        if not rest:
            self.error("url needs a context", tok)
        ctx, segs = rest[0], tuple(rest[1:])
        if not is_name(ctx):
            self.error(f"bad context name {ctx!r}", tok)
        return Location(host, ctx), segs, coll

    def _check_url_segs(self, segs, tok):
        for k, s in enumerate(segs):
            if s in ("exec", "session", "application") and k == 0:
                continue
            if s == NS and k == 1 and segs[0] == "session":
                continue
            if not is_segment(s):
                self.error(f"bad url segment {s!r}", tok)

    def location(self):
        t = self.tok
        if t.kind != "URL":
            self.error("expected location")
        loc, segs, coll = self._url_parts(t)
        if segs or coll:
            self.error("expected location //host/ctx", t)
        self.i += 1
        return loc

    def url(self):
        t = self.tok
        if t.kind != "URL":
            self.error("expected url")
        loc, segs, coll = self._url_parts(t)
        if not segs and not coll:
            self.error("a bare location is not a url", t)
        self._check_url_segs(segs, t)
        self.i += 1
        return Url(loc, segs, coll)

    def _path_segs(self, text, tok, allow_up):
        segs = tuple(s for s in text.split("/") if s)
        for s in segs:
            if s == ".." and allow_up:
                continue
            if s == "exec":
                continue
            if not is_segment(s):
                self.error(f"bad path segment {s!r}", tok)
        return segs

    def pattern(self):
        t = self.tok
        if t.kind != "PATH":
            self.error("expected pattern")
        text = t.text
        wildcard = text.endswith("/*")
        if wildcard:
            text = text[:-2]
        if text.endswith("/") or "*" in text or ".." in text:
            self.error("bad pattern", t)
        segs = tuple(s for s in text.split("/") if s)
        if not segs or any(not is_segment(s) for s in segs):
            self.error("bad pattern", t)
        self.i += 1
        return Pattern(segs, wildcard)

    def root_path(self):
        t = self.tok
        if t.kind != "PATH" or "*" in t.text or ".." in t.text:
            self.error("expected root-relative path")
        segs = self._path_segs(t.text, t, False)
        if "exec" in segs[1:]:
            self.error("exec may only start a path", t)
        self.i += 1
        return RelRef(segs, t.text.endswith("/"), root=True)

    def rel_path(self):
        t = self.tok
        if t.kind == "RELPATH":
            text = t.text[2:] if t.text.startswith("./") else t.text
            segs = self._path_segs(text, t, True)
            if "exec" in segs:
                self.error("bad relative path", t)
            self.i += 1
            return RelRef(tuple(s for s in segs if s != "."), t.text.endswith("/"))
        if t.kind == "NAME" and is_name(t.text):
            self.i += 1
            return RelRef((t.text,), False)
        self.error("expected relative path")

    def _sym_tail(self):
        """Optional ``/a/b`` directly after a ``<base>`` token."""
        t = self.tok
        if t.kind == "PATH" and self.adjacent():
            if "*" in t.text or ".." in t.text:
                self.error("bad path after symbolic base")
            segs = self._path_segs(t.text, t, False)
            if "exec" in segs:
                self.error("bad path after symbolic base", t)
            self.i += 1
            return segs, t.text.endswith("/")
        return (), False

    def symbolic(self):
        """``<session>``/``<application>``/``<phbase>``/``<x>`` path or ``<ipath>`` rpath."""
        self.expect("<")
        t = self.tok
        if t.kind != "NAME":
            self.error("expected symbolic base")
        base = t.text
        if base not in SYMBOLS and base != "ipath" and not is_name(base):
            self.error("expected symbolic base")
        self.i += 1
        self.expect(">")
        if base == "ipath":
            t = self.tok
            if self.adjacent() and (t.kind == "RELPATH" or (t.kind == "NAME" and is_name(t.text))):
                rest = self.rel_path()
                if ".." in rest.segs:
                    self.error("'..' not allowed after <ipath>", t)
                return RelRef(rest.segs, rest.coll, ipath=True)
            return RelRef((), True, ipath=True)
        segs, coll = self._sym_tail()
        return SymUrl(base, segs, coll)

    def ref(self):
        t = self.tok
        if t.kind == "URL":
            return self.url()
        if t.kind == "PATH":
            return self.root_path()
        if t.kind in ("RELPATH", "NAME"):
            return self.rel_path()
        if self.at("<"):
            return self.symbolic()
        self.error("expected reference")

    # ------------------------------------------------------------- values
    def value(self):
        t = self.tok
        if t.kind == "INT":
            self.i += 1
            return Num(int(t.text))
        if self.at("-") and self.peek().kind == "INT":
            self.i += 2
            return Num(-int(self.toks[self.i - 1].text))
        if t.kind == "NAME":
            if t.text == "ok":
                self.i += 1
                return OK
            if t.text == "err":
                self.i += 1
                return ERR
            if t.text == "comp":
                return self.component()
            n = self.name("value")
            if self.at("<"):
                save = self.i
                self.i += 1
                try:
                    payload = self.expr()
                    self.expect(">")
                    return OpPair(n, payload)
                except ParseError:
                    self.i = save
            return Name(n)
        if t.kind == "URL":
            return self.url()
        if t.kind == "PATH":
            return self.root_path()
        if t.kind == "RELPATH":
            return self.rel_path()
        if self.at("<"):
            return self.symbolic()
        self.error("expected value")

    def component(self):
        self.expect("comp")
        self.expect(":")
        typ = self.name("component type")
        deployed = None
        if self.accept("["):
            if self.tok.kind == "NAME" and self.tok.text == ANON:
                self.i += 1
                cbase = None
            else:
                t = self.tok
                cbase = self.url()
                if not cbase.coll:
                    self.error("codebase must be a collection url", t)
            self.expect("->")
            pat = self.pattern()
            self.expect("]")
            deployed = (cbase, pat)
        decls = self.decls()
        if deployed is None:
            return Passive(decls, typ)
        return Deployed(decls, typ, deployed[0], deployed[1])

    def decls(self):
        self.expect("<")
        seen = {}
        while not self.accept(">"):
            t = self.tok
            if t.kind == "NAME" and (t.text in COMMANDS or is_name(t.text)):
                op = t.text
                self.i += 1
            else:
                self.error("expected operation name")
            if op in seen:
                self.error(f"duplicate definition for {op}", t)
            self.expect("(")
            param = self.binder()
            self.expect(")")
            self.expect("=")
            body = self.term()
            self.expect(";")
            if op in ("get", "delete") and param in free_names(body, urls=True):
                self.error(f"{op} definition must not use its parameter {param!r}", t)
            check_static(body, t, self)
            seen[op] = Decl(op, param, body)
        return tuple(seen[k] for k in sorted(seen))

    # -------------------------------------------------------- expressions
    def expr(self):
        left = self.atom()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.atom())
        return left

    def atom(self):
        if self.at("("):
            save = self.i
            self.i += 1
            try:
                e = self.expr()
                self.expect(")")
                return e
            except ParseError:
                self.i = save
        return self.value()

    def bexpr(self):
        left = self.bconj()
        while self.accept("or"):
            left = BoolOp("or", left, self.bconj())
        return left

    def bconj(self):
        left = self.bnot()
        while self.accept("and"):
            left = BoolOp("and", left, self.bnot())
        return left

    def bnot(self):
        if self.accept("not"):
            return Not(self.bnot())
        if self.accept("true"):
            return Truth(True)
        if self.accept("false"):
            return Truth(False)
        if self.at("("):
            save = self.i
            self.i += 1
            try:
                b = self.bexpr()
                self.expect(")")
                return b
            except ParseError:
                self.i = save
        left = self.expr()
        t = self.tok
        if t.kind == "OP" and t.text in COMPARISONS:
            self.i += 1
            return Cmp(t.text, left, self.expr())
        self.error("expected comparison")

    # -------------------------------------------------------------- terms
    def deleg(self):
        if self.accept("^I"):
            return INTERNAL
        self.expect("^{")
        entries = []
        if not self.accept("}"):
            while True:
                if self.accept("eps"):
                    entries.append(EPS)
                else:
                    loc = self.location()
                    if self.accept(":"):
                        entries.append(Binding(loc, self.session()))
                    else:
                        entries.append(loc)
                if self.accept("}"):
                    break
                self.expect(",")
        return entries

    def session(self):
        if self.accept(NS):
            return NS
        return self.name("session id")

    def command(self, bind):
        t = self.tok
        op = t.text
        self.i += 1
        deleg = self.deleg()
        self.expect("@")
        tt = self.tok
        target = self.ref()
        ses = None
        if self.accept(":"):
            ses = self.session()
        arg = None
        if op in ("put", "rexec", "lexec"):
            self.expect("(")
            arg = self.expr()
            self.expect(")")
        if deleg is not INTERNAL:
            bindings = [e for e in deleg if isinstance(e, Binding)]
            if ses is None:
                if bindings:
                    self.error("session-annotated delegation entry in a static command", t)
                deleg = make_rs(deleg)
            else:
                if len(bindings) != len(deleg):
                    self.error("runtime delegation entries need a session (loc:S)", t)
                deleg = make_sls(bindings)
        if ses is None:
            if deleg is INTERNAL and not (isinstance(target, RelRef) and not target.root):
                self.error("internal delegation requires a relative target", tt)
        else:
            if not (isinstance(target, Url) or (isinstance(target, SymUrl) and target.is_variable)):
                self.error("a session-annotated command needs an absolute target", tt)
        self.expect(".")
        return Command(bind, op, deleg, target, arg, ses, self.term())

    def session_construct(self, cls):
        self.i += 1
        target = SymUrl("session")
        if self.tok.kind == "URL":
            t = self.tok
            target = self.url()
            if target.coll or len(target.segs) != 2 or target.segs[0] != "session":
                self.error("expected //host/ctx/session/S", t)
        elif self.at("<"):
            t = self.tok
            target = self.symbolic()
            if target != SymUrl("session"):
                self.error("expected <session>", t)
        self.expect(".")
        return cls(target, self.term())

    def term(self):
        t = self.tok
        if t.kind == "OP" and t.text == "(":
            self.i += 1
            body = self.term()
            self.expect(")")
            return body
        if t.kind != "NAME":
            self.error("expected term")
        kw = t.text
        if kw == "nil":
            self.i += 1
            return NIL
        if kw == "return":
            self.i += 1
            return Return(self.expr())
        if kw == "spawn":
            self.i += 1
            self.expect("(")
            child = self.term()
            self.expect(")")
            self.expect(".")
            return Spawn(child, self.term())
        if kw == "if":
            self.i += 1
            cond = self.bexpr()
            self.expect("then")
            then = self.term()
            self.expect("else")
            return If(cond, then, self.term())
        if kw == "newsession":
            return self.session_construct(NewSession)
        if kw == "dropsession":
            return self.session_construct(DropSession)
        if kw == "new":
            self.i += 1
            n = self.name()
            self.expect(".")
            return New(n, self.term())
        # forms starting with a name
        nxt = self.peek()
        if nxt.text == "=" and nxt.kind == "OP":
            bind = self.binder()
            self.i += 1
            if self.tok.kind == "NAME" and self.tok.text in ALL_COMMANDS:
                return self.command(bind)
            e = self.expr()
            self.expect(".")
            return Assign(bind, e, self.term())
        chan = self.name("channel")
        if self.accept("!"):
            sls = ()
            if self.at("^{") or self.at("^I"):
                at = self.tok
                d = self.deleg()
                if d is INTERNAL or any(not isinstance(e, Binding) for e in d):
                    self.error("send annotations are loc:S entries", at)
                sls = make_sls(d)
            e = self.expr()
            self.expect(".")
            return Send(chan, sls, e, self.term())
        if self.accept("("):
            bind = self.binder()
            self.expect(")")
            self.expect(".")
            return Receive(chan, bind, self.term())
        self.error("expected '=', '!' or '(' after name")

    # ----------------------------------------------------------- networks
    def resource(self):
        save = self.i
        try:
            v = self.value()
            if self.at("]"):
                return v
        except ParseError:
            pass
        self.i = save
        return self.term()

    def item(self):
        if self.accept("new"):
            n = self.name()
            self.expect(".")
            self.expect("(")
            body = self.network()
            self.expect(")")
            return Restrict(n, body)
        self.expect("[")
        res = self.resource()
        self.expect("]")
        self.expect("@")
        return Located(self.url(), res)

    def network(self):
        if self.tok.kind == "INT" and self.tok.text == "0":
            self.i += 1
            return Par(())
        parts = [self.item()]
        while self.accept("||"):
            parts.append(self.item())
        return parts[0] if len(parts) == 1 else Par(tuple(parts))


def check_static(term, tok, parser):
    """Reject runtime-only forms inside declaration bodies."""
    stack = [term]
    while stack:
        t = stack.pop()
        if isinstance(t, Command):
            if t.ses is not None:
                parser.error("session annotations are not allowed in declarations", tok)
            stack.append(t.cont)
        elif isinstance(t, (NewSession, DropSession)):
            if t.target != SymUrl("session"):
                parser.error("declarations use newsession/dropsession without a url", tok)
            stack.append(t.cont)
        elif isinstance(t, Send):
            if t.sls:
                parser.error("send annotations are not allowed in declarations", tok)
            stack.append(t.cont)
        elif isinstance(t, (Assign, Receive)):
            stack.append(t.cont)
        elif isinstance(t, Spawn):
            stack += [t.child, t.cont]
        elif isinstance(t, If):
            stack += [t.then, t.orelse]
        elif isinstance(t, New):
            stack.append(t.body)


def _run(text, method):
    p = Parser(text)
    out = getattr(p, method)()
    p.end()
    return out


def parse_network(text):
    return _run(text, "network")


def parse_term(text):
    return _run(text, "term")


def parse_value(text):
    return _run(text, "value")


def parse_expr(text):
    return _run(text, "expr")


def parse_bexpr(text):
    return _run(text, "bexpr")


def parse_url(text):
    return _run(text, "url")


def parse_location(text):
    return _run(text, "location")


def parse_pattern(text):
    return _run(text, "pattern")


def parse_ref(text):
    return _run(text, "ref")


def parse_decls(text):
    return _run(text, "decls")


def parse_path(text):
    """A ``path``: ``/rpath``, ``/exec/rpath``, ``/session/...`` or empty."""
    if text == "":
        return RelRef((), False, root=True)
    t = tokenize(text)
    if len(t) != 2 or t[0].kind != "PATH" or "*" in text or ".." in text:
        raise ParseError(f"bad path {text!r}", 1, 1)
    segs = tuple(s for s in text.split("/") if s)
    return RelRef(segs, text.endswith("/"), root=True)


__all__ = [
    "ParseError", "Parser", "tokenize", "parse_network", "parse_term",
    "parse_value", "parse_expr", "parse_bexpr", "parse_url", "parse_location",
    "parse_pattern", "parse_ref", "parse_decls", "parse_path", "RESERVED",
]
