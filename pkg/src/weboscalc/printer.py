"""Canonical concrete syntax.

``show`` is deterministic and its output parses back to an equal tree.
Networks in canonical form print their restrictions outermost and their
located resources in canonical order.
"""
from __future__ import annotations

from .terms import (
    EPS, INTERNAL, NS, Assign, Binding, BinOp, BoolOp, Cmp, Command, Const,
    Decl, Deployed, DropSession, Eps, If, Internal, Located, Location, Name,
    New, NewSession, Nil, Not, Num, OpPair, Par, Passive, Pattern, Receive,
    RelRef, Restrict, Return, Send, Spawn, SymUrl, Truth, Url, is_name,
)


def show(n):
    f = _SHOW.get(type(n))
    if f is None:
        raise TypeError(f"cannot print {n!r}")
    return f(n)


def show_location(l):
    return f"//{l.host}/{l.ctx}"


def show_url(u):
    text = show_location(u.loc)
    if u.segs:
        text += "/" + "/".join(u.segs)
    if u.coll:
        text += "/"
    return text


def show_relref(r):
    body = "/".join(r.segs)
    if r.coll and r.segs:
        body += "/"
    if r.root:
        return "/" + body
    if r.segs and not is_name(r.segs[0]) and r.segs[0] != "..":
        body = "./" + body
    if r.ipath:
        return "<ipath>" + body
    return body if body else "./"


def show_symurl(s):
    text = f"<{s.base}>"
    if s.segs:
        text += "/" + "/".join(s.segs)
    if s.coll:
        text += "/"
    return text


def show_pattern(p):
    text = "/" + "/".join(p.prefix)
    return text + "/*" if p.wildcard else text


def _decls(decls):
    inner = " ".join(f"{d.op}({d.param}) = {show(d.body)};" for d in decls)
    return f"< {inner} >" if inner else "< >"


def show_passive(c):
    return f"comp:{c.type} {_decls(c.decls)}"


def show_deployed(c):
    base = "_" if c.codebase is None else show_url(c.codebase)
    return f"comp:{c.type} [{base} -> {show_pattern(c.pattern)}] {_decls(c.decls)}"


def _expr(e):
    if isinstance(e, BinOp):
        right = _expr(e.right)
        if isinstance(e.right, BinOp):
            right = f"({right})"
        return f"{_expr(e.left)} {e.op} {right}"
    return show(e)


def _bexpr(b, parent=None):
    if isinstance(b, Truth):
        return "true" if b.value else "false"
    if isinstance(b, Cmp):
        return f"{_expr(b.left)} {b.op} {_expr(b.right)}"
    if isinstance(b, Not):
        return f"not {_bexpr(b.arg, 'not')}"
    if isinstance(b, BoolOp):
        text = f"{_bexpr(b.left, b.op)} {b.op} {_bexpr(b.right, b.op + 'R')}"
        if parent is not None:
            text = f"({text})"
        return text
    raise TypeError(f"not a boolean expression: {b!r}")


def show_deleg(d):
    if d is INTERNAL:
        return "^I"
    return "^{" + ", ".join(_entry(e) for e in d) + "}"


def _entry(e):
    if e is EPS:
        return "eps"
    if isinstance(e, Binding):
        return f"{show_location(e.loc)}:{e.ses}"
    return show_location(e)


def show_command(c):
    text = f"{c.bind} = {c.op}{show_deleg(c.deleg)}@{show(c.target)}"
    if c.ses is not None:
        text += f" : {c.ses}"
    if c.arg is not None:
        text += f" ({_expr(c.arg)})"
    return f"{text} . {show(c.cont)}"


def show_send(s):
    ann = show_deleg(s.sls) if s.sls else ""
    return f"{s.chan}!{ann} {_expr(s.expr)} . {show(s.cont)}"


def _session(kw, n):
    if isinstance(n.target, SymUrl) and n.target.base == "session" and not n.target.segs:
        return f"{kw} . {show(n.cont)}"
    return f"{kw} {show(n.target)} . {show(n.cont)}"


def show_network(n):
    if isinstance(n, Located):
        return f"[ {show(n.res)} ]@{show_url(n.url)}"
    if isinstance(n, Par):
        if not n.parts:
            return "0"
        return " || ".join(show_network(p) for p in n.parts)
    if isinstance(n, Restrict):
        return f"new {n.name}.({show_network(n.body)})"
    raise TypeError(f"not a network: {n!r}")


_SHOW = {
    Location: show_location,
    Url: show_url,
    RelRef: show_relref,
    SymUrl: show_symurl,
    Pattern: show_pattern,
    Const: lambda c: c.name,
    Num: lambda n: str(n.value),
    Name: lambda n: n.text,
    OpPair: lambda p: f"{p.op}<{_expr(p.payload)}>",
    Passive: show_passive,
    Deployed: show_deployed,
    Decl: lambda d: f"{d.op}({d.param}) = {show(d.body)};",
    BinOp: _expr,
    Truth: _bexpr,
    Cmp: _bexpr,
    BoolOp: _bexpr,
    Not: _bexpr,
    Internal: lambda _: "^I",
    Eps: lambda _: "eps",
    Binding: _entry,
    Command: show_command,
    Assign: lambda a: f"{a.bind} = {_expr(a.expr)} . {show(a.cont)}",
    Send: show_send,
    Receive: lambda r: f"{r.chan}({r.bind}) . {show(r.cont)}",
    Spawn: lambda s: f"spawn ({show(s.child)}) . {show(s.cont)}",
    If: lambda i: f"if {_bexpr(i.cond)} then {show(i.then)} else {show(i.orelse)}",
    NewSession: lambda n: _session("newsession", n),
    DropSession: lambda n: _session("dropsession", n),
    Return: lambda r: f"return {_expr(r.expr)}",
    Nil: lambda _: "nil",
    New: lambda n: f"new {n.name} . {show(n.body)}",
    Located: show_network,
    Par: show_network,
    Restrict: show_network,
}

__all__ = ["show", "show_url", "show_location", "show_pattern", "NS"]
