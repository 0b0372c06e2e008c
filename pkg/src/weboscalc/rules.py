"""Reduction rules: redex recognizers and rewrites.

A ``World`` is the restriction-free body of a canonical network together
with its restricted names and the scenario configuration.  Every rule has a
recognizer (inside ``redexes_at``) and a rewrite (``apply``).  Rewrites
return an ``Outcome``; renormalization is the engine's job.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EvalError, LocError, ResolveError
from .printer import show
from .terms import (
    ANON, ERR, INTERNAL, NIL, NS, OK, Assign, Binding, BinOp,
    BoolOp, Cmp, Command, Const, Deployed, DropSession, If, Located,
    Name, New, NewSession, Nil, Not, Num, OpPair, Passive, Pattern, Receive,
    RelRef, Return, Send, Spawn, SymUrl, Truth, Url, free_names, is_value,
    make_sls, sls_union, subst,
)
from .urlalg import (
    Config, cond, int_d, int_g, loc, match, maxpat, parent_dir,
    pat_dir, path_minus, resolve_ctx, resolve_url, url_id, url_path, urls,
    extends,
)

SYNC = "SYNC"
SPAWN = "SPAWN"
IF_T = "IF-T"
IF_F = "IF-F"
ASSIGN = "ASSIGN"
PUT_OVERWRITE = "PUT-OVERWRITE"
PUT_CREATE = "PUT-CREATE"
GET = "GET"
DELETE = "DELETE"
REXEC_FRESH = "REXEC-FRESH"
CAPTURE_COM = "CAPTURE-COM"
CAPTURE_USEROP = "CAPTURE-USEROP"
CMD_ERR = "CMD-ERR"
SES_NEW_NOOP = "SES-NEW-NOOP"
SES_NEW = "SES-NEW"
SES_DROP_NOOP = "SES-DROP-NOOP"
SES_DROP = "SES-DROP"
LEXEC = "LEXEC"

RULES = (SYNC, SPAWN, IF_T, IF_F, ASSIGN, PUT_OVERWRITE, PUT_CREATE, GET,
         DELETE, REXEC_FRESH, CAPTURE_COM, CAPTURE_USEROP, CMD_ERR,
         SES_NEW_NOOP, SES_NEW, SES_DROP_NOOP, SES_DROP, LEXEC)
RULE_RANK = {r: k for k, r in enumerate(RULES)}

DEFAULT_RULES = frozenset({PUT_OVERWRITE, PUT_CREATE, GET, DELETE, REXEC_FRESH})
CAPTURE_RULES = frozenset({CAPTURE_COM, CAPTURE_USEROP})
COMMAND_RULES = DEFAULT_RULES | CAPTURE_RULES | {CMD_ERR}


@dataclass(frozen=True)
class Redex:
    rule: str
    focus: tuple  # item indices; the acting program first

    @property
    def key(self):
        return f"{self.rule}:{','.join(map(str, self.focus))}"

    def sort_key(self):
        return (self.focus, RULE_RANK[self.rule])


class Fresh:
    """Supply of generated names ``_g<k>``."""

    def __init__(self, counter=0):
        self.counter = counter
        self.issued = []

    def __call__(self):
        name = f"_g{self.counter}"
        self.counter += 1
        self.issued.append(name)
        return name


@dataclass
class Outcome:
    items: list
    names: list = field(default_factory=list)  # newly restricted
    sub: list = field(default_factory=list)  # inner rule ids
    target: str = ""
    substs: list = field(default_factory=list)  # printed summaries


# ------------------------------------------------------------ evaluation

def eval_expr(e, known=None):
    """Evaluate an expression.  When ``known`` is given, Names outside it are
    unbound variables."""
    if isinstance(e, (Const, Num, Url, RelRef, Passive, Deployed)):
        return e
    if isinstance(e, Name):
        if known is not None and e.text not in known:
            raise EvalError(f"unbound variable {e.text}")
        return e
    if isinstance(e, OpPair):
        return OpPair(e.op, eval_expr(e.payload, known))
    if isinstance(e, BinOp):
        a, b = eval_expr(e.left, known), eval_expr(e.right, known)
        if not (isinstance(a, Num) and isinstance(b, Num)):
            raise EvalError(f"{e.op} needs numbers, got {show(a)} and {show(b)}")
        return Num(a.value + b.value if e.op == "+" else a.value - b.value)
    if isinstance(e, SymUrl):
        raise EvalError(f"unresolved reference {show(e)}")
    raise EvalError(f"not an expression: {e!r}")


_ORDER_OPS = {"<": lambda a, b: a < b, ">": lambda a, b: a > b,
              "<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b}


def eval_bool(b, known=None):
    if isinstance(b, Truth):
        return b.value
    if isinstance(b, Not):
        return not eval_bool(b.arg, known)
    if isinstance(b, BoolOp):
        if b.op == "and":
            return eval_bool(b.left, known) and eval_bool(b.right, known)
        return eval_bool(b.left, known) or eval_bool(b.right, known)
    if isinstance(b, Cmp):
        x, y = eval_expr(b.left, known), eval_expr(b.right, known)
        if b.op == "==":
            return x == y
        if b.op == "!=":
            return x != y
        if not (isinstance(x, Num) and isinstance(y, Num)):
            raise EvalError(f"{b.op} compares numbers only")
        return _ORDER_OPS[b.op](x.value, y.value)
    raise EvalError(f"not a boolean expression: {b!r}")


# ------------------------------------------------------- term traversal

def _map_expr(e, fn):
    if isinstance(e, BinOp):
        return BinOp(e.op, _map_expr(e.left, fn), _map_expr(e.right, fn))
    if isinstance(e, OpPair):
        return OpPair(e.op, _map_expr(e.payload, fn))
    if isinstance(e, (Cmp, BoolOp)):
        return type(e)(e.op, _map_expr(e.left, fn), _map_expr(e.right, fn))
    if isinstance(e, Not):
        return Not(_map_expr(e.arg, fn))
    if e is None or isinstance(e, Truth):
        return e
    return fn(e)


def map_term(t, val, cmd=None, send=None, ret=None):
    """Rebuild ``t`` applying ``val`` to every value/address leaf.

    ``cmd``/``send``/``ret`` post-process rebuilt commands, sends and
    returns.  Component values are leaves: their code is not entered.
    """
    def go(t):
        if isinstance(t, Command):
            c = Command(t.bind, t.op, t.deleg, val(t.target), _map_expr(t.arg, val),
                        t.ses, go(t.cont))
            return cmd(c) if cmd else c
        if isinstance(t, Assign):
            return Assign(t.bind, _map_expr(t.expr, val), go(t.cont))
        if isinstance(t, Send):
            s = Send(t.chan, t.sls, _map_expr(t.expr, val), go(t.cont))
            return send(s) if send else s
        if isinstance(t, Receive):
            return Receive(t.chan, t.bind, go(t.cont))
        if isinstance(t, Spawn):
            return Spawn(go(t.child), go(t.cont))
        if isinstance(t, If):
            return If(_map_expr(t.cond, val), go(t.then), go(t.orelse))
        if isinstance(t, (NewSession, DropSession)):
            return type(t)(val(t.target), go(t.cont))
        if isinstance(t, Return):
            r = Return(_map_expr(t.expr, val))
            return ret(r) if ret else r
        if isinstance(t, New):
            return New(t.name, go(t.body))
        if isinstance(t, Nil):
            return t
        raise TypeError(f"not a term: {t!r}")
    return go(t)


# ---------------------------------------------------------- substitutions

def _rebind_url(u, table):
    if (isinstance(u, Url) and u.loc in table and len(u.segs) >= 2
            and u.segs[0] == "session"):
        return Url(u.loc, ("session", table[u.loc]) + u.segs[2:], u.coll)
    return u


def _rebind_sls(sls, table):
    if sls is INTERNAL:
        return sls
    return make_sls(Binding(b.loc, table.get(b.loc, b.ses)) for b in sls)


def rebind(t, sls):
    """Install the sessions of a delegation map throughout ``t``.

    Every command annotation ``l path : S`` (delegation entries included,
    being the empty-path case) and every session url ``l/session/S`` for a
    context ``l`` bound in ``sls`` is rewritten to the delegated session.
    """
    if sls is INTERNAL or not sls:
        return t
    table = {b.loc: b.ses for b in sls}

    def on_cmd(c):
        ses = c.ses
        if ses is not None and isinstance(c.target, Url) and c.target.loc in table:
            ses = table[c.target.loc]
        deleg = c.deleg if c.ses is None else _rebind_sls(c.deleg, table)
        return Command(c.bind, c.op, deleg, c.target, c.arg, ses, c.cont)

    def on_send(s):
        return Send(s.chan, _rebind_sls(s.sls, table), s.expr, s.cont)

    return map_term(t, lambda v: _rebind_url(v, table), cmd=on_cmd, send=on_send)


def resolve_symbols(t, l, pat, path):
    """Bind ``<session>``, ``<application>``, ``<phbase>`` and ``<ipath>``
    for an instance of a component deployed in ``l`` with pattern ``pat``
    invoked on ``path``."""
    pdir = pat_dir(pat)
    ipath = path_minus(path, pat)

    def val(v):
        if isinstance(v, SymUrl) and not v.is_variable:
            if v.base == "session":
                head = ("session", NS)
            elif v.base == "application":
                head = ("application",)
            else:
                head = pdir.segs
            return Url(l, head + v.segs, v.coll)
        if isinstance(v, RelRef) and v.ipath:
            coll = v.coll if v.segs else ipath.coll
            return RelRef(ipath.segs + v.segs, coll)
        return v

    return map_term(t, val)


def resolve_commands(t, l, codebase, pat):
    """Resolve command targets and delegation contexts of component code.

    Internal commands resolve against the pattern directory; others against
    the codebase, or the physical base when there is none.  All session
    annotations start at ``ns``.
    """
    pdir = Url(l, pat_dir(pat).segs, True)
    base = codebase if codebase is not None else pdir

    def on_cmd(c):
        if c.ses is not None:
            return c
        try:
            if c.deleg is INTERNAL:
                target = resolve_url(pdir, c.target)
                deleg = INTERNAL
            else:
                target = c.target
                if not isinstance(target, Url) and not (
                        isinstance(target, SymUrl) and target.is_variable):
                    target = resolve_url(base, target)
                deleg = make_sls(Binding(resolve_ctx(base, r), NS) for r in c.deleg)
        except ResolveError:
            return c
        return Command(c.bind, c.op, deleg, target, c.arg, NS, c.cont)

    return map_term(t, lambda v: v, cmd=on_cmd)


def replace_return(t, chan, sls):
    return map_term(t, lambda v: v, ret=lambda r: Send(chan, sls, r.expr, NIL))


def apply_subst(t, kind, payload):
    """Apply one of the substitution families by name.

    ``kind`` is ``delegation-update`` (payload: runtime delegation map),
    ``symbol-resolution`` (payload: (loc, pattern, path)),
    ``command-resolution`` (payload: (loc, codebase, pattern)),
    ``session-rebind`` (payload: {loc: session}) or ``names``
    (payload: {name: value}).
    """
    if kind == "delegation-update":
        return rebind(t, payload)
    if kind == "symbol-resolution":
        return resolve_symbols(t, *payload)
    if kind == "command-resolution":
        return resolve_commands(t, *payload)
    if kind == "session-rebind":
        return rebind(t, make_sls(Binding(l, s) for l, s in payload.items()))
    if kind == "names":
        return subst(t, payload)
    raise ValueError(f"unknown substitution kind {kind!r}")


# ------------------------------------------------------------------ world

class World:
    """Read-only view of a restriction-free network used by the rules."""

    def __init__(self, items, names=(), cfg=None):
        self.items = tuple(items)
        self.names = frozenset(names)
        self.cfg = cfg if cfg is not None else Config()
        self.pairs = [(it.url, it.res) for it in self.items]
        self.url_set = urls(self.pairs)
        self.ids = {url_id(u) for u in self.url_set}
        known = set(self.names) | set(self.cfg.data_names)
        for it in self.items:
            if is_value(it.res):
                known |= free_names(it.res)
        self.known = frozenset(known)

    # lookups
    def values_at(self, url):
        return [k for k, it in enumerate(self.items) if it.url == url and is_value(it.res)]

    def components_for(self, target):
        out = []
        for k, it in enumerate(self.items):
            u = it.url
            if (isinstance(it.res, Deployed) and u.loc == target.loc and u.coll
                    and len(u.segs) == 2 and u.segs[0] == "exec"):
                out.append(k)
        return out

    def default_allowed(self, op, target, deleg):
        """Footer condition of the uncaptured-command rules."""
        if deleg is INTERNAL:
            return True
        best = maxpat(self.pairs, url_path(target), target.loc)
        if best is None:
            return True
        for k in self.components_for(target):
            comp = self.items[k].res
            if comp.pattern == best and op in comp.ops:
                return False
        return True

    def evaluate(self, e):
        return eval_expr(e, self.known)

    def truth(self, b):
        return eval_bool(b, self.known)


def head(res):
    return None if is_value(res) else res


# ----------------------------------------------------------- recognizers

def command_redexes(w, i, c):
    """Auxiliary-transition redexes of the command at item ``i`` (no CMD-ERR)."""
    out = []
    target = c.target
    if c.ses is None or not isinstance(target, Url):
        return out
    value = None
    if c.arg is not None:
        try:
            value = w.evaluate(c.arg)
        except EvalError:
            return out
    default = w.default_allowed(c.op, target, c.deleg)
    userop = False
    if c.deleg is not INTERNAL:
        for k in w.components_for(target):
            comp = w.items[k].res
            if not match(target, comp.pattern, w.pairs, w.url_set):
                continue
            if c.op in comp.ops:
                out.append(Redex(CAPTURE_COM, (i, k)))
            elif (c.op == "rexec" and isinstance(value, OpPair)
                  and comp.lookup(value.op) is not None
                  and (not target.coll or w.cfg.collection_op_dispatch)):
                out.append(Redex(CAPTURE_USEROP, (i, k)))
                userop = True
    if default:
        if c.op == "put":
            for j in w.values_at(target):
                out.append(Redex(PUT_OVERWRITE, (i, j)))
            d = parent_dir(target)
            if (d is not None and (d in w.url_set or int_d(d))
                    and url_id(target) not in w.ids):
                out.append(Redex(PUT_CREATE, (i,)))
        elif c.op == "get":
            for j in w.values_at(target):
                out.append(Redex(GET, (i, j)))
        elif c.op == "delete":
            if not any(extends(u, target) for u in w.url_set):
                for j in w.values_at(target):
                    out.append(Redex(DELETE, (i, j)))
        elif c.op == "rexec":
            if target.coll and (target in w.url_set or int_g(target)) and not userop:
                out.append(Redex(REXEC_FRESH, (i,)))
    return out


def redexes_at(w, i):
    """All redexes whose acting program is item ``i``."""
    it = w.items[i]
    t = head(it.res)
    if t is None:
        return []
    if isinstance(t, Command):
        if t.op == "lexec":
            return [Redex(LEXEC, (i,))]
        found = command_redexes(w, i, t)
        return found or [Redex(CMD_ERR, (i,))]
    if isinstance(t, Assign):
        try:
            w.evaluate(t.expr)
        except EvalError:
            return []
        return [Redex(ASSIGN, (i,))]
    if isinstance(t, If):
        try:
            return [Redex(IF_T if w.truth(t.cond) else IF_F, (i,))]
        except EvalError:
            return []
    if isinstance(t, Spawn):
        return [Redex(SPAWN, (i,))] if it.url.coll else []
    if isinstance(t, Send):
        try:
            w.evaluate(t.expr)
        except EvalError:
            return []
        out = []
        for j, other in enumerate(w.items):
            r = head(other.res)
            if j != i and isinstance(r, Receive) and r.chan == t.chan:
                out.append(Redex(SYNC, (i, j)))
        return out
    if isinstance(t, NewSession):
        if not isinstance(t.target, Url):
            return []
        return [Redex(SES_NEW if t.target.segs[1] == NS else SES_NEW_NOOP, (i,))]
    if isinstance(t, DropSession):
        if not isinstance(t.target, Url):
            return []
        return [Redex(SES_DROP_NOOP if t.target.segs[1] == NS else SES_DROP, (i,))]
    return []


def all_redexes(w):
    out = []
    for i in range(len(w.items)):
        out.extend(redexes_at(w, i))
    out.sort(key=Redex.sort_key)
    return out


# --------------------------------------------------------------- rewrites

def _replace(items, i, res):
    out = list(items)
    out[i] = Located(items[i].url, res)
    return out


def _target_text(c):
    return f"{show(c.target)}:{c.ses}" if c.ses is not None else show(c.target)


def apply(w, rx, fresh):
    """Rewrite ``w`` by redex ``rx``; ``fresh`` supplies generated names."""
    rule = rx.rule
    i = rx.focus[0]
    it = w.items[i]
    t = it.res
    items = w.items

    if rule == SYNC:
        j = rx.focus[1]
        recv = items[j].res
        v = w.evaluate(t.expr)
        out = _replace(items, i, t.cont)
        out[j] = Located(items[j].url, rebind(subst(recv.cont, {recv.bind: v}), t.sls))
        binds = [] if recv.bind == ANON else [f"{recv.bind}:={show(v)}"]
        return Outcome(out, substs=binds + _rebound(t.sls))
    if rule == SPAWN:
        n = fresh()
        out = _replace(items, i, t.cont)
        out.append(Located(it.url.child(n, coll=True), t.child))
        return Outcome(out, [n])
    if rule in (IF_T, IF_F):
        return Outcome(_replace(items, i, t.then if rule == IF_T else t.orelse))
    if rule == ASSIGN:
        v = w.evaluate(t.expr)
        return Outcome(_replace(items, i, subst(t.cont, {t.bind: v})), substs=_bound(t, v))
    if rule in (SES_NEW_NOOP, SES_DROP_NOOP):
        return Outcome(_replace(items, i, t.cont))
    if rule == SES_NEW:
        return _session_new(w, i, t, fresh)
    if rule == SES_DROP:
        return _session_drop(w, i, t)
    if rule == LEXEC:
        return _lexec(w, i, t, fresh)
    if rule in COMMAND_RULES:
        return _command(w, rx, t, fresh)
    raise ValueError(f"unknown rule {rule}")


def _bound(c, value):
    return [] if c.bind == ANON else [f"{c.bind}:={show(value)}"]


def _rebound(sls):
    return [f"rebind {show(b)}" for b in sls] if sls and sls is not INTERNAL else []


def _continue(c, value):
    return subst(c.cont, {c.bind: value})


def _command(w, rx, c, fresh):
    rule, i = rx.rule, rx.focus[0]
    items = w.items
    target = c.target
    tgt = _target_text(c)
    if rule == CMD_ERR:
        return Outcome(_replace(items, i, _continue(c, ERR)), target=tgt,
                       substs=_bound(c, ERR))
    if rule == PUT_OVERWRITE:
        j = rx.focus[1]
        out = _replace(items, i, _continue(c, OK))
        out[j] = Located(items[j].url, w.evaluate(c.arg))
        return Outcome(out, target=tgt, substs=_bound(c, OK))
    if rule == PUT_CREATE:
        out = _replace(items, i, _continue(c, OK))
        out.append(Located(target, w.evaluate(c.arg)))
        return Outcome(out, target=tgt, substs=_bound(c, OK))
    if rule == GET:
        v = items[rx.focus[1]].res
        return Outcome(_replace(items, i, _continue(c, v)), target=tgt, substs=_bound(c, v))
    if rule == DELETE:
        j = rx.focus[1]
        out = _replace(items, i, _continue(c, OK))
        del out[j]
        return Outcome(out, target=tgt, substs=_bound(c, OK))
    if rule == REXEC_FRESH:
        n = fresh()
        out = _replace(items, i, _continue(c, Name(n)))
        out.append(Located(target.child(n, coll=cond(target, w.cfg)), w.evaluate(c.arg)))
        return Outcome(out, [n], target=tgt, substs=_bound(c, Name(n)))
    if rule in CAPTURE_RULES:
        return _capture(w, rx, c, fresh)
    raise ValueError(rule)


def _capture(w, rx, c, fresh):
    """Expand a captured command and perform its synchronization."""
    i, k = rx.focus
    items = w.items
    comp_item = items[k]
    comp = comp_item.res
    target = c.target
    l = target.loc
    value = w.evaluate(c.arg) if c.arg is not None else OK
    if rx.rule == CAPTURE_USEROP:
        op, payload = value.op, value.payload
    else:
        op, payload = c.op, value
    decl = comp.lookup(op)
    z = fresh()
    t = fresh()
    sls = sls_union(c.deleg, l, c.ses)
    body = resolve_symbols(decl.body, l, comp.pattern, url_path(target))
    body = resolve_commands(body, l, comp.codebase, comp.pattern)
    body = replace_return(body, z, sls)
    body = rebind(subst(body, {decl.param: payload}), sls)
    out = _replace(items, i, Receive(z, c.bind, c.cont))
    out.append(Located(comp_item.url.child(t, coll=True), body))
    substs = [] if decl.param == ANON else [f"{decl.param}:={show(payload)}"]
    return Outcome(out, [z, t], sub=[SYNC], target=_target_text(c),
                   substs=substs + _rebound(sls))


def _session_new(w, i, t, fresh):
    l = t.target.loc
    n = fresh()
    table = make_sls([Binding(l, n)])
    out = _replace(w.items, i, rebind(t.cont, table))
    out.append(Located(Url(l, ("session", n), True), OK))
    return Outcome(out, [n], sub=[REXEC_FRESH], target=f"{show(Url(l, ('session',), True))}:{NS}",
                   substs=_rebound(table))


def _session_drop(w, i, t):
    l = t.target.loc
    sess = Url(l, t.target.segs, True)
    cont = rebind(t.cont, make_sls([Binding(l, NS)]))
    out = _replace(w.items, i, cont)
    blocked = any(extends(u, sess) for u in w.url_set)
    found = w.values_at(sess)
    if found and not blocked:
        del out[found[0]]
        sub = [DELETE]
    else:
        sub = [CMD_ERR]
    return Outcome(out, sub=sub, target=f"{show(sess)}:{NS}",
                   substs=_rebound(make_sls([Binding(l, NS)])))


def _lexec(w, i, c, fresh):
    """Download, deploy and initialize an application component.

    The code is read with an uncaptured GET; the instance collection and
    the deployment are created with REXEC on built-in collections, which
    cannot be captured or fail.  The initializing PUT remains as the next
    command of the caller.
    """
    target = c.target
    tgt = _target_text(c)

    def fail(sub):
        return Outcome(_replace(w.items, i, _continue(c, ERR)), sub=sub, target=tgt,
                       substs=_bound(c, ERR))

    if c.ses is None or not isinstance(target, Url) or target.coll:
        return fail([CMD_ERR])
    probe = Command(ANON, "get", (), target, None, c.ses, NIL)
    inner = command_redexes(w, i, probe)
    gets = [r for r in inner if r.rule == GET]
    if not gets:
        return fail([CMD_ERR])
    code = w.items[gets[0].focus[1]].res
    if not isinstance(code, Passive):
        return fail([GET, CMD_ERR])
    l = target.loc
    try:
        l2 = loc(l, code.type, w.cfg)
    except LocError:
        return fail([GET, CMD_ERR])
    n2 = fresh()
    m = fresh()
    name = target.segs[-1]
    deployed = Deployed(code.decls, code.type, parent_dir(target), Pattern((n2, name)))
    out = list(w.items)
    out.append(Located(Url(l2, (n2,), True), OK))
    out.append(Located(Url(l2, ("exec", m), True), deployed))
    ref = Url(l2, (n2,), False)
    init = Command(ANON, "put", sls_union(c.deleg, l, c.ses), Url(l2, (n2, name), False),
                   c.arg, NS, subst(c.cont, {c.bind: ref}))
    out[i] = Located(w.items[i].url, init)
    return Outcome(out, [n2, m], sub=[GET, REXEC_FRESH, REXEC_FRESH], target=tgt,
                   substs=_bound(c, ref))
