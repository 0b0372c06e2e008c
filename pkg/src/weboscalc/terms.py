"""Abstract syntax of networks, runtime/static terms and values.

All nodes are frozen dataclasses, so they hash and compare structurally.
Names are plain strings; ``ns`` is the no-session marker and ``_`` the
anonymous binder.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

NS = "ns"
ANON = "_"

COMMANDS = ("put", "get", "delete", "rexec")  # Com
ALL_COMMANDS = COMMANDS + ("lexec",)

# segment names that may only sit at fixed positions of a url
URL_KEYWORDS = frozenset({"exec", "session", "application", "ns"})

RESERVED = frozenset({
    "exec", "session", "application", "ns", "ok", "err",
    "put", "get", "delete", "rexec", "lexec",
    "spawn", "if", "then", "else", "newsession", "dropsession",
    "return", "nil", "new", "comp", "eps", "true", "false",
    "and", "or", "not", "phbase", "ipath",
})

SYMBOLS = ("session", "application", "phbase")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_GENERATED = re.compile(r"_g(\d+)\Z")


def is_name(text):
    return bool(_IDENT.match(text)) and text not in RESERVED and text != ANON


_SEGMENT = re.compile(r"[A-Za-z0-9_]+\Z")


def is_segment(text):
    """Url path segments are names, or digit-led identifiers such as ``7``."""
    return bool(_SEGMENT.match(text)) and text not in RESERVED and text != ANON


def generated_index(text):
    """Index ``k`` of a generated name ``_g<k>``, else None."""
    m = _GENERATED.match(text)
    return int(m.group(1)) if m else None


class _Show:
    def __str__(self):
        from .printer import show
        return show(self)


# --------------------------------------------------------------- addresses

@dataclass(frozen=True, order=True)
class Location(_Show):
    host: str
    ctx: str


@dataclass(frozen=True, order=True)
class Url(_Show):
    """Absolute url: a location followed by path segments.

    ``coll`` marks a collection (trailing separator).  The bare base
    ``Url(l, (), False)`` only appears transiently while symbolic bases are
    resolved.
    """
    loc: Location
    segs: tuple = ()
    coll: bool = True

    @property
    def is_exec(self):
        return bool(self.segs) and self.segs[0] == "exec"

    @property
    def extra(self):
        if not self.segs:
            return None
        if self.segs[0] == "session":
            return "session-ns" if self.segs[1:2] == (NS,) else "session"
        if self.segs[0] == "application":
            return "application"
        return None

    @property
    def is_root_relative(self):
        """True when the path after the context is an ordinary ``/rpath``."""
        return not (self.segs and self.segs[0] in URL_KEYWORDS)

    def child(self, name, coll=False):
        return Url(self.loc, self.segs + (name,), coll)


@dataclass(frozen=True)
class RelRef(_Show):
    """Relative reference: ``a/b``, ``/a/b``, ``/exec/a`` or ``<ipath>a``.

    Segments may include ``..`` (relative form only).  The empty relative
    path is collection shaped.  Root-relative references double as the
    ``path`` category used by pattern matching.
    """
    segs: tuple = ()
    coll: bool = True
    root: bool = False
    ipath: bool = False


@dataclass(frozen=True)
class SymUrl(_Show):
    """Url with a symbolic base: ``<session>``, ``<application>``,
    ``<phbase>`` or a variable ``<x>``."""
    base: str
    segs: tuple = ()
    coll: bool = False

    @property
    def is_variable(self):
        return self.base not in SYMBOLS


@dataclass(frozen=True, order=True)
class Pattern(_Show):
    prefix: tuple
    wildcard: bool = False

    def __post_init__(self):
        if not self.prefix:
            raise ValueError("pattern prefix must be nonempty")


# ----------------------------------------------------------------- values

@dataclass(frozen=True)
class Const(_Show):
    name: str  # "ok" | "err"


OK = Const("ok")
ERR = Const("err")


@dataclass(frozen=True)
class Num(_Show):
    value: int


@dataclass(frozen=True)
class Name(_Show):
    text: str


@dataclass(frozen=True)
class OpPair(_Show):
    op: str
    payload: object


@dataclass(frozen=True)
class Decl(_Show):
    op: str
    param: str
    body: object


@dataclass(frozen=True)
class Passive(_Show):
    decls: tuple  # of Decl, sorted by op
    type: str

    def lookup(self, op):
        return _lookup(self.decls, op)


@dataclass(frozen=True)
class Deployed(_Show):
    decls: tuple
    type: str
    codebase: Optional[Url]  # None is the service-component marker
    pattern: Pattern

    def lookup(self, op):
        return _lookup(self.decls, op)

    @property
    def ops(self):
        return frozenset(d.op for d in self.decls)


def _lookup(decls, op):
    for d in decls:
        if d.op == op:
            return d
    return None


# ------------------------------------------------------------ expressions

@dataclass(frozen=True)
class BinOp(_Show):
    op: str  # "+" | "-"
    left: object
    right: object


@dataclass(frozen=True)
class Truth(_Show):
    value: bool


@dataclass(frozen=True)
class Cmp(_Show):
    op: str  # == != < > <= >=
    left: object
    right: object


@dataclass(frozen=True)
class BoolOp(_Show):
    op: str  # "and" | "or"
    left: object
    right: object


@dataclass(frozen=True)
class Not(_Show):
    arg: object


VALUE_TYPES = (Const, Num, Name, OpPair, Passive, Deployed, Url, RelRef, SymUrl)
REF_TYPES = (Url, RelRef, SymUrl)

# ------------------------------------------------------------- delegation

class Internal(_Show):
    """The internal-command marker used in place of a delegation set."""
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INTERNAL"

    def __reduce__(self):
        return (Internal, ())


INTERNAL = Internal()


class Eps(_Show):
    """Self-context entry of a static delegation set."""
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "EPS"

    def __reduce__(self):
        return (Eps, ())


EPS = Eps()


@dataclass(frozen=True, order=True)
class Binding(_Show):
    """Runtime delegation entry ``l:S``."""
    loc: Location
    ses: str


def make_sls(bindings):
    """Canonical runtime delegation map: one entry per location, sorted.

    Later entries win on duplicate locations.
    """
    table = {}
    for b in bindings:
        table[b.loc] = b.ses
    return tuple(Binding(l, s) for l, s in sorted(table.items()))


def make_rs(entries):
    return tuple(sorted(set(entries), key=lambda e: (0, "") if e is EPS else (1, str(e))))


def sls_union(sls, loc, ses):
    """``sls ∪ {l:S}``; the new entry overrides an existing one for ``loc``."""
    base = () if sls is INTERNAL else sls
    return make_sls(base + (Binding(loc, ses),))


# ----------------------------------------------------------------- terms

@dataclass(frozen=True)
class Command(_Show):
    """``bind = op^deleg @target [: ses] (arg) . cont``.

    Static commands have ``ses is None`` and a delegation tuple of
    Location/EPS entries; runtime commands carry a session id and a tuple of
    Binding entries.  Either form may use INTERNAL.
    """
    bind: str
    op: str
    deleg: object
    target: object
    arg: object
    ses: Optional[str]
    cont: object

    @property
    def is_runtime(self):
        return self.ses is not None


@dataclass(frozen=True)
class Assign(_Show):
    bind: str
    expr: object
    cont: object


@dataclass(frozen=True)
class Send(_Show):
    chan: str
    sls: tuple
    expr: object
    cont: object


@dataclass(frozen=True)
class Receive(_Show):
    chan: str
    bind: str
    cont: object


@dataclass(frozen=True)
class Spawn(_Show):
    child: object
    cont: object


@dataclass(frozen=True)
class If(_Show):
    cond: object
    then: object
    orelse: object


@dataclass(frozen=True)
class NewSession(_Show):
    target: object  # SymUrl("session") statically, Url(l, ("session", S)) at runtime
    cont: object


@dataclass(frozen=True)
class DropSession(_Show):
    target: object
    cont: object


@dataclass(frozen=True)
class Return(_Show):
    expr: object


@dataclass(frozen=True)
class Nil(_Show):
    pass


NIL = Nil()


@dataclass(frozen=True)
class New(_Show):
    name: str
    body: object


TERM_TYPES = (Command, Assign, Send, Receive, Spawn, If, NewSession,
              DropSession, Return, Nil, New)

# --------------------------------------------------------------- networks

@dataclass(frozen=True)
class Located(_Show):
    url: Url
    res: object


@dataclass(frozen=True)
class Par(_Show):
    parts: tuple


@dataclass(frozen=True)
class Restrict(_Show):
    name: str
    body: object


def session_of(url):
    """Session id carried by a ``l/session/S...`` url, else None."""
    if isinstance(url, Url) and len(url.segs) >= 2 and url.segs[0] == "session":
        return url.segs[1]
    return None


# ------------------------------------------------------------ free names

def free_names(node, urls=False):
    """Names occurring unbound in ``node``.

    Binders are restriction, command/assign/receive variables and
    declaration parameters.  Url path segments are only reported when
    ``urls`` is true; ``ns`` and reserved segments never are.
    """
    out = set()
    _fn(node, frozenset(), out, urls)
    return out


def _seg_names(segs):
    return [s for s in segs if s not in URL_KEYWORDS and s != ".."]


def _fn(n, bound, out, urls):
    def add(x):
        if x not in bound and x != ANON and x != NS:
            out.add(x)

    if isinstance(n, (Const, Num, Truth, Nil, Eps, Internal)) or n is None:
        return
    if isinstance(n, Name):
        add(n.text)
    elif isinstance(n, OpPair):
        add(n.op)
        _fn(n.payload, bound, out, urls)
    elif isinstance(n, (BinOp, Cmp, BoolOp)):
        _fn(n.left, bound, out, urls)
        _fn(n.right, bound, out, urls)
    elif isinstance(n, Not):
        _fn(n.arg, bound, out, urls)
    elif isinstance(n, (Passive, Deployed)):
        for d in n.decls:
            _fn(d.body, bound | {d.param}, out, urls)
        if isinstance(n, Deployed) and urls:
            _fn(n.codebase, bound, out, urls)
            for s in n.pattern.prefix:
                add(s)
    elif isinstance(n, (Url, RelRef)):
        if urls:
            for s in _seg_names(n.segs):
                add(s)
    elif isinstance(n, SymUrl):
        if n.is_variable:
            add(n.base)
        if urls:
            for s in _seg_names(n.segs):
                add(s)
    elif isinstance(n, Binding):
        add(n.ses)
    elif isinstance(n, tuple):
        for x in n:
            _fn(x, bound, out, urls)
    elif isinstance(n, Command):
        _fn(n.target, bound, out, urls)
        _fn(n.arg, bound, out, urls)
        if n.deleg is not INTERNAL:
            for e in n.deleg:
                _fn(e, bound, out, urls)
        if n.ses is not None:
            add(n.ses)
        _fn(n.cont, bound | {n.bind}, out, urls)
    elif isinstance(n, Assign):
        _fn(n.expr, bound, out, urls)
        _fn(n.cont, bound | {n.bind}, out, urls)
    elif isinstance(n, Send):
        add(n.chan)
        _fn(n.sls, bound, out, urls)
        _fn(n.expr, bound, out, urls)
        _fn(n.cont, bound, out, urls)
    elif isinstance(n, Receive):
        add(n.chan)
        _fn(n.cont, bound | {n.bind}, out, urls)
    elif isinstance(n, Spawn):
        _fn(n.child, bound, out, urls)
        _fn(n.cont, bound, out, urls)
    elif isinstance(n, If):
        _fn(n.cond, bound, out, urls)
        _fn(n.then, bound, out, urls)
        _fn(n.orelse, bound, out, urls)
    elif isinstance(n, (NewSession, DropSession)):
        _fn(n.target, bound, out, urls)
        _fn(n.cont, bound, out, urls)
    elif isinstance(n, Return):
        _fn(n.expr, bound, out, urls)
    elif isinstance(n, New):
        _fn(n.body, bound | {n.name}, out, urls)
    elif isinstance(n, Located):
        _fn(n.url, bound, out, urls)
        _fn(n.res, bound, out, urls)
    elif isinstance(n, Par):
        for p in n.parts:
            _fn(p, bound, out, urls)
    elif isinstance(n, Restrict):
        _fn(n.body, bound | {n.name}, out, urls)
    elif isinstance(n, (Location, Pattern)):
        if isinstance(n, Pattern) and urls:
            for s in n.prefix:
                add(s)
    else:
        raise TypeError(f"free_names: unexpected node {n!r}")


def all_names(node):
    """Every name in ``node``, bound or free, including url segments."""
    out = set()
    _all(node, out)
    return out


def _all(n, out):
    if isinstance(n, str):
        out.add(n)
    elif isinstance(n, tuple):
        for x in n:
            _all(x, out)
    elif hasattr(n, "__dataclass_fields__"):
        for f in n.__dataclass_fields__:
            _all(getattr(n, f), out)


# ----------------------------------------------------------- substitution

def subst(node, mapping):
    """Capture-avoiding simultaneous substitution of names by values.

    Expression positions take any value.  Channel names, op labels, url
    segments and session ids are names only, so there they are replaced
    only by Name values.  A variable base ``<x>`` is replaced by a Url
    value by concatenation.
    """
    mapping = {k: v for k, v in mapping.items() if k != ANON}
    if not mapping:
        return node
    return _Subst(mapping).go(node)


def rename(node, old, new):
    return subst(node, {old: Name(new)})


class _Subst:
    def __init__(self, mapping):
        self.m = mapping
        self._fv = None

    def value_names(self):
        if self._fv is None:
            self._fv = set()
            for v in self.m.values():
                self._fv |= free_names(v, urls=True)
        return self._fv

    def name(self, x):
        v = self.m.get(x)
        return v.text if isinstance(v, Name) else x

    def segs(self, segs):
        return tuple(s if s in URL_KEYWORDS else self.name(s) for s in segs)

    def under(self, binder, body, *parts):
        """Apply to ``body`` (and extra ``parts``) in the scope of ``binder``.

        Returns (binder', body', parts').
        """
        if binder == ANON:
            inner = self
        else:
            if binder in self.m:
                rest = {k: v for k, v in self.m.items() if k != binder}
                inner = _Subst(rest) if rest else None
            else:
                inner = self
            if inner is not None and binder in inner.value_names():
                avoid = inner.value_names() | all_names(body) | set(inner.m)
                for p in parts:
                    avoid |= all_names(p)
                fresh = _fresh_variant(binder, avoid)
                body = rename(body, binder, fresh)
                parts = tuple(rename(p, binder, fresh) for p in parts)
                binder = fresh
        if inner is None:
            return binder, body, parts
        return binder, inner.go(body), tuple(inner.go(p) for p in parts)

    def go(self, n):
        go = self.go
        if isinstance(n, (Const, Num, Truth, Nil, Eps, Internal, Location)) or n is None:
            return n
        if isinstance(n, Name):
            return self.m.get(n.text, n)
        if isinstance(n, OpPair):
            return OpPair(self.name(n.op), go(n.payload))
        if isinstance(n, BinOp):
            return BinOp(n.op, go(n.left), go(n.right))
        if isinstance(n, Cmp):
            return Cmp(n.op, go(n.left), go(n.right))
        if isinstance(n, BoolOp):
            return BoolOp(n.op, go(n.left), go(n.right))
        if isinstance(n, Not):
            return Not(go(n.arg))
        if isinstance(n, Url):
            return Url(n.loc, self.segs(n.segs), n.coll)
        if isinstance(n, RelRef):
            return RelRef(self.segs(n.segs), n.coll, n.root, n.ipath)
        if isinstance(n, SymUrl):
            segs = self.segs(n.segs)
            if n.is_variable and n.base in self.m:
                v = self.m[n.base]
                if isinstance(v, Url):
                    coll = n.coll if (segs or n.coll) else v.coll
                    return Url(v.loc, v.segs + segs, coll)
                if isinstance(v, Name):
                    return SymUrl(v.text, segs, n.coll)
            return SymUrl(n.base, segs, n.coll)
        if isinstance(n, Pattern):
            return Pattern(self.segs(n.prefix), n.wildcard)
        if isinstance(n, Binding):
            return Binding(n.loc, self.name(n.ses))
        if isinstance(n, Decl):
            param, body, _ = self.under(n.param, n.body)
            return Decl(n.op, param, body)
        if isinstance(n, Passive):
            return Passive(tuple(go(d) for d in n.decls), n.type)
        if isinstance(n, Deployed):
            return Deployed(tuple(go(d) for d in n.decls), n.type,
                            go(n.codebase), go(n.pattern))
        if isinstance(n, tuple):
            return tuple(go(x) for x in n)
        if isinstance(n, Command):
            deleg = n.deleg if n.deleg is INTERNAL else tuple(go(e) for e in n.deleg)
            if n.deleg is not INTERNAL and n.ses is not None:
                deleg = make_sls(deleg)
            ses = None if n.ses is None else self.name(n.ses)
            bind, cont, _ = self.under(n.bind, n.cont)
            return Command(bind, n.op, deleg, go(n.target), go(n.arg), ses, cont)
        if isinstance(n, Assign):
            bind, cont, _ = self.under(n.bind, n.cont)
            return Assign(bind, go(n.expr), cont)
        if isinstance(n, Send):
            return Send(self.name(n.chan), make_sls(go(n.sls)), go(n.expr), go(n.cont))
        if isinstance(n, Receive):
            bind, cont, _ = self.under(n.bind, n.cont)
            return Receive(self.name(n.chan), bind, cont)
        if isinstance(n, Spawn):
            return Spawn(go(n.child), go(n.cont))
        if isinstance(n, If):
            return If(go(n.cond), go(n.then), go(n.orelse))
        if isinstance(n, NewSession):
            return NewSession(go(n.target), go(n.cont))
        if isinstance(n, DropSession):
            return DropSession(go(n.target), go(n.cont))
        if isinstance(n, Return):
            return Return(go(n.expr))
        if isinstance(n, New):
            name, body, _ = self.under(n.name, n.body)
            return New(name, body)
        if isinstance(n, Located):
            return Located(go(n.url), go(n.res))
        if isinstance(n, Par):
            return Par(tuple(go(p) for p in n.parts))
        if isinstance(n, Restrict):
            name, body, _ = self.under(n.name, n.body)
            return Restrict(name, body)
        raise TypeError(f"subst: unexpected node {n!r}")


def _fresh_variant(base, avoid):
    i = 1
    while f"{base}_{i}" in avoid:
        i += 1
    return f"{base}_{i}"


# --------------------------------------------------------------- helpers

def is_value(node):
    return isinstance(node, VALUE_TYPES)


def is_term(node):
    return isinstance(node, TERM_TYPES)
