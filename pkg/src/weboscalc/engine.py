"""Reduction driver: canonical form, redex enumeration, scheduling, traces."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .errors import ScriptError
from .printer import show, show_url
from .rules import (
    Fresh, Outcome, World, all_redexes, apply, head,
)
from .terms import (
    Located, Name, New, Nil, Par, Restrict, all_names,
    generated_index, rename, subst,
)
from .urlalg import Config

DEFAULT_MAX_STEPS = 10000


@dataclass(frozen=True)
class EngineState:
    """A network in canonical form: restricted names outermost (sorted by
    generation index) over located resources in print order."""
    names: tuple
    items: tuple
    counter: int = 0
    step: int = 0
    cfg: Config = field(default_factory=Config, compare=False, hash=False, repr=False)

    def network(self):
        if not self.items:
            body = Par(())
        elif len(self.items) == 1:
            body = self.items[0]
        else:
            body = Par(self.items)
        for name in reversed(self.names):
            body = Restrict(name, body)
        return body

    def show(self):
        return show_state(self)

    def world(self):
        return World(self.items, self.names, self.cfg)


def show_state(st):
    if not st.items:
        body = "0"
    else:
        body = " || ".join(show(it) for it in st.items)
    for name in reversed(st.names):
        body = f"new {name}.({body})"
    return body


def _item_key(it):
    return (show_url(it.url), show(it.res))


def _next_counter(node, counter):
    for n in all_names(node):
        k = generated_index(n)
        if k is not None and k >= counter:
            counter = k + 1
    return counter


def normalize(net, counter=0, cfg=None, step=0):
    """Bring ``net`` (a network node or an EngineState) to canonical form.

    Restrictions are hoisted out of parallel compositions and out of the
    head of located programs.  Restricted names outside the generated
    namespace, or generated names bound twice, are renamed to fresh
    generated names.
    """
    if isinstance(net, EngineState):
        if cfg is None:
            cfg = net.cfg
        counter = max(counter, net.counter)
        step = net.step
        net = net.network()
    if cfg is None:
        cfg = Config()
    fresh = Fresh(_next_counter(net, counter))
    names = []
    seen = set()
    items = []

    def bind(name, body):
        if generated_index(name) is not None and name not in seen:
            new = name
        else:
            new = fresh()
            body = rename(body, name, new)
        seen.add(new)
        names.append(new)
        return body

    def walk(n):
        if isinstance(n, Restrict):
            walk(bind(n.name, n.body))
        elif isinstance(n, Par):
            for p in n.parts:
                walk(p)
        elif isinstance(n, Located):
            res = n.res
            while isinstance(res, New):
                res = bind(res.name, res.body)
            items.append(Located(n.url, res))
        else:
            raise TypeError(f"not a network: {n!r}")

    walk(net)
    names.sort(key=generated_index)
    items.sort(key=_item_key)
    st = EngineState(tuple(names), tuple(items), fresh.counter, step, cfg)
    if cfg.gc:
        st = collect(st)
    return st


def collect(st):
    """Drop finished programs living under restricted names, then drop
    restrictions that no longer occur."""
    restricted = set(st.names)
    items = tuple(it for it in st.items
                  if not (isinstance(it.res, Nil) and it.url.segs
                          and it.url.segs[-1] in restricted))
    used = set()
    for it in items:
        used |= all_names(it)
    names = tuple(n for n in st.names if n in used)
    return EngineState(names, items, st.counter, st.step, st.cfg)


def fresh_name(st):
    """A generated name unused in ``st`` and the advanced state."""
    name = f"_g{st.counter}"
    return name, EngineState(st.names, st.items, st.counter + 1, st.step, st.cfg)


def initial_state(net, cfg=None):
    return normalize(net, cfg=cfg)


def enumerate_redexes(st):
    """All enabled redexes in canonical order (focus positions, then rule)."""
    return all_redexes(st.world())


def stuck_resources(st):
    """Non-nil programs with no redex of their own and none they take part in."""
    involved = set()
    for rx in enumerate_redexes(st):
        involved.update(rx.focus)
    out = []
    for k, it in enumerate(st.items):
        t = head(it.res)
        if t is None or isinstance(t, Nil) or k in involved:
            continue
        out.append(it)
    return out


# ---------------------------------------------------------------- policies

class Deterministic:
    name = "det"

    def choose(self, redexes, st):
        return redexes[0]


class RandomPolicy:
    def __init__(self, seed):
        self.seed = seed
        self.rng = random.Random(seed)

    @property
    def name(self):
        return f"rand:{self.seed}"

    def choose(self, redexes, st):
        return self.rng.choice(redexes)


class Scripted:
    """Replays a list of redex keys (``RULE:i,j``)."""

    def __init__(self, keys):
        self.keys = list(keys)
        self.pos = 0

    name = "script"

    def choose(self, redexes, st):
        if self.pos >= len(self.keys):
            raise ScriptError(f"script exhausted after {self.pos} choices")
        key = self.keys[self.pos]
        self.pos += 1
        for rx in redexes:
            if rx.key == key:
                return rx
        enabled = ", ".join(rx.key for rx in redexes)
        raise ScriptError(f"step {st.step}: {key} is not enabled (enabled: {enabled})")


def parse_policy(text, script_loader=None):
    """``det``, ``rand:<seed>`` or ``script:<file>``."""
    if text in ("det", "deterministic"):
        return Deterministic()
    if text.startswith("rand:"):
        return RandomPolicy(int(text[5:]))
    if text.startswith("script:"):
        path = text[7:]
        if script_loader is None:
            with open(path, encoding="utf-8") as fh:
                keys = read_script(fh.read())
        else:
            keys = script_loader(path)
        return Scripted(keys)
    raise ValueError(f"unknown policy {text!r}")


def read_script(text):
    """Redex keys from a script file or a text trace."""
    keys = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("{"):
            keys.append(json.loads(line)["key"])
            continue
        for part in line.split():
            if part.startswith("key="):
                keys.append(part[4:])
                break
        else:
            if line.startswith("step="):
                continue
            keys.append(line)
    return keys


# ------------------------------------------------------------------- steps

@dataclass
class TraceEvent:
    step: int
    rule: str
    key: str
    focus: list
    fresh: list
    target: str = ""
    sub: list = field(default_factory=list)
    substs: list = field(default_factory=list)
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)

    def text(self):
        parts = [f"step={self.step}", f"rule={self.rule}",
                 f"focus={','.join(self.focus)}",
                 f"fresh={','.join(self.fresh) if self.fresh else '-'}"]
        if self.target:
            parts.append(f"target={self.target}")
        if self.sub:
            parts.append(f"sub={','.join(self.sub)}")
        parts.append(f"key={self.key}")
        return " ".join(parts)

    def record(self):
        return {"step": self.step, "rule": self.rule, "key": self.key,
                "focus": self.focus, "fresh": self.fresh, "target": self.target,
                "sub": self.sub, "substs": self.substs, "pre": self.pre,
                "post": self.post}

    def structured(self):
        return json.dumps(self.record(), sort_keys=True)


def successor(st, rx):
    """Apply ``rx`` to ``st`` and renormalize; returns (state, outcome)."""
    fresh = Fresh(st.counter)
    out: Outcome = apply(st.world(), rx, fresh)
    names = st.names + tuple(out.names)
    net = Par(tuple(out.items))
    for n in reversed(names):
        net = Restrict(n, net)
    nxt = normalize(net, counter=fresh.counter, cfg=st.cfg, step=st.step + 1)
    return nxt, out


def step(st, policy=None):
    """One reduction step, or None when no redex is enabled."""
    redexes = enumerate_redexes(st)
    if not redexes:
        return None
    rx = (policy or Deterministic()).choose(redexes, st)
    nxt, out = successor(st, rx)
    before = set(st.items)
    event = TraceEvent(
        step=st.step,
        rule=rx.rule,
        key=rx.key,
        focus=[show_url(st.items[k].url) for k in rx.focus],
        fresh=list(out.names),
        target=out.target,
        sub=list(out.sub),
        substs=list(out.substs),
        pre=[show(st.items[k]) for k in rx.focus],
        post=[show(it) for it in nxt.items if it not in before],
    )
    return nxt, event


@dataclass
class RunResult:
    state: EngineState
    trace: list
    terminal: bool
    stuck: list

    @property
    def limit_hit(self):
        return not self.terminal


def run(st, policy=None, max_steps=DEFAULT_MAX_STEPS):
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    policy = policy or Deterministic()
    trace = []
    terminal = False
    for _ in range(max_steps):
        res = step(st, policy)
        if res is None:
            terminal = True
            break
        st, event = res
        trace.append(event)
    else:
        terminal = not enumerate_redexes(st)
    return RunResult(st, trace, terminal, stuck_resources(st) if terminal else [])


# --------------------------------------------------------------- alpha key

def alpha_key(st):
    """Printed form of ``st`` invariant under renaming of restricted names."""
    restricted = set(st.names)
    if not restricted:
        return show_state(st)
    blank = {n: Name("_r") for n in restricted}
    ordered = sorted(st.items, key=lambda it: (_item_key(subst(it, blank)), _item_key(it)))
    order = []
    for it in ordered:
        for n in _occurrence_order(show(it)):
            if n in restricted and n not in order:
                order.append(n)
    order += sorted(restricted - set(order), key=generated_index)
    mapping = {n: Name(f"_a{k}") for k, n in enumerate(order)}
    items = sorted((subst(it, mapping) for it in st.items), key=_item_key)
    body = " || ".join(show(it) for it in items) or "0"
    return f"new {' '.join(mapping[n].text for n in order)}.({body})"


def _occurrence_order(text):
    import re
    return re.findall(r"_g\d+", text)
