"""Scenario files: configuration, initial network, policy and assertions.

Format (``#`` starts a comment line)::

    name: crud
    config:
      loc //h/c gui -> //h/run
      cond //h/c/items/ true
      flag collection-op-dispatch
      data alice bob
      gc
    net:
      [ x = put^{}@//h/c/f : ns (5) . nil ]@//h/c/p/
    policy: det
    max-steps: 100
    assert:
      resource-at //h/c/f 5
      terminal
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .engine import DEFAULT_MAX_STEPS, RunResult, parse_policy, read_script
from .errors import ConfigError, LoadError, ParseError
from .parser import parse_location, parse_network, parse_url, parse_value
from .printer import show
from .terms import (
    Command, DropSession, If, Located, New, NewSession, Par, Restrict, Return,
    Spawn, SymUrl, Url, all_names, generated_index, is_name, is_value,
)
from .urlalg import Config

SECTIONS = ("name", "config", "net", "policy", "max-steps", "assert")
_HEADER = re.compile(r"(%s):\s*(.*)\Z" % "|".join(re.escape(s) for s in SECTIONS))


@dataclass
class Assertion:
    kind: str
    args: tuple
    line: int
    text: str


@dataclass
class Scenario:
    name: str
    cfg: Config
    net: object
    source: str
    policy: str = "det"
    max_steps: int = DEFAULT_MAX_STEPS
    assertions: list = field(default_factory=list)
    path: Path | None = None


# ------------------------------------------------------------------ loading

def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read {path}: {exc.strerror}") from None
    sc = parse_scenario(text)
    sc.path = path
    return sc


def _split_sections(text):
    sections = {}
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _HEADER.match(line) if not raw[:1].isspace() else None
        if m:
            current = m.group(1)
            if current in sections:
                raise LoadError(f"duplicate section {current!r}", no)
            sections[current] = [(no, m.group(2))] if m.group(2) else []
            continue
        if current is None:
            raise LoadError(f"text outside any section: {stripped!r}", no)
        sections[current].append((no, stripped))
    return sections


def parse_scenario(text):
    sections = _split_sections(text)
    if "net" not in sections:
        raise LoadError("missing 'net:' section")
    name = " ".join(t for _, t in sections.get("name", [])) or "scenario"
    cfg = _parse_config(sections.get("config", []))
    net_lines = sections["net"]
    source = "\n".join(t for _, t in net_lines)
    if not net_lines:
        raise LoadError("empty 'net:' section")
    first = net_lines[0][0]
    try:
        net = parse_network(source)
    except ParseError as exc:
        # map the offending line back to the file
        line = net_lines[min(exc.line, len(net_lines)) - 1][0] if exc.line else first
        raise LoadError(exc.message, line) from None
    _validate_net(net, first)
    policy = "det"
    if sections.get("policy"):
        no, policy = sections["policy"][0]
        if policy not in ("det", "deterministic") and not re.fullmatch(r"rand:\d+|script:\S+", policy):
            raise LoadError(f"unknown policy {policy!r}", no)
    max_steps = DEFAULT_MAX_STEPS
    if sections.get("max-steps"):
        no, txt = sections["max-steps"][0]
        if not txt.isdigit():
            raise LoadError(f"max-steps must be a non-negative integer, got {txt!r}", no)
        max_steps = int(txt)
    assertions = [_parse_assertion(no, t) for no, t in sections.get("assert", [])]
    return Scenario(name, cfg, net, source, policy, max_steps, assertions)


def _parse_config(lines):
    cfg = Config()
    data = set()
    for no, text in lines:
        words = text.split()
        try:
            if words[0] == "loc" and len(words) == 5 and words[3] == "->":
                cfg.add_loc(parse_location(words[1]), words[2], parse_location(words[4]))
            elif words[0] == "cond" and len(words) == 3 and words[2] in ("true", "false"):
                cfg.add_cond(parse_url(words[1]), words[2] == "true")
            elif words[0] == "flag" and len(words) == 2 and words[1] == "collection-op-dispatch":
                cfg.collection_op_dispatch = True
            elif words[0] == "data" and len(words) > 1:
                for w in words[1:]:
                    if not is_name(w):
                        raise LoadError(f"not a name: {w!r}", no)
                    _check_user_name(w, no)
                    data.add(w)
            elif words == ["gc"]:
                cfg.gc = True
            else:
                raise LoadError(f"unrecognized config line {text!r}", no)
        except (ConfigError, ParseError) as exc:
            raise LoadError(str(exc), no) from None
    cfg.data_names = frozenset(data)
    return cfg


def _check_user_name(name, line):
    if generated_index(name) is not None:
        raise LoadError(f"{name} is reserved for generated names", line)


def _validate_net(net, line):
    for n in all_names(net):
        if isinstance(n, str) and is_name(n):
            _check_user_name(n, line)
    stack = [net]
    while stack:
        n = stack.pop()
        if isinstance(n, Restrict):
            stack.append(n.body)
        elif isinstance(n, Par):
            stack.extend(n.parts)
        elif isinstance(n, Located):
            if not is_value(n.res):
                _validate_program(n.res, line)


def _validate_program(t, line):
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Command):
            if t.ses is None:
                raise LoadError(f"running command needs a session annotation: {show(t.target)}", line)
            _check_ref(t.target, line)
            stack.append(t.cont)
        elif isinstance(t, (NewSession, DropSession)):
            if not isinstance(t.target, Url):
                raise LoadError("running newsession/dropsession needs an explicit url", line)
            stack.append(t.cont)
        elif isinstance(t, Return):
            raise LoadError("return outside a component operation", line)
        elif isinstance(t, Spawn):
            stack += [t.child, t.cont]
        elif isinstance(t, If):
            stack += [t.then, t.orelse]
        elif isinstance(t, New):
            stack.append(t.body)
        elif hasattr(t, "cont"):
            stack.append(t.cont)


def _check_ref(ref, line):
    if isinstance(ref, SymUrl) and not ref.is_variable:
        raise LoadError(f"symbolic reference {show(ref)} outside a component", line)


# --------------------------------------------------------------- assertions

ASSERTION_KINDS = ("resource-at", "resource-one-of", "absent", "count", "terminal",
                   "stuck-count", "steps", "trace-contains")


def _parse_assertion(no, text):
    words = text.split(None, 1)
    kind = words[0]
    rest = words[1] if len(words) > 1 else ""
    try:
        if kind == "resource-at":
            url, val = rest.split(None, 1)
            return Assertion(kind, (parse_url(url), parse_value(val)), no, text)
        if kind == "resource-one-of":
            url, vals = rest.split(None, 1)
            options = tuple(parse_value(v.strip()) for v in vals.split("|"))
            return Assertion(kind, (parse_url(url), options), no, text)
        if kind == "absent":
            return Assertion(kind, (parse_url(rest.strip()),), no, text)
        if kind == "count":
            url, n = rest.split()
            return Assertion(kind, (parse_url(url), int(n)), no, text)
        if kind == "terminal" and not rest:
            return Assertion(kind, (), no, text)
        if kind == "stuck-count":
            return Assertion(kind, (int(rest),), no, text)
        if kind == "steps":
            op, n = rest.split()
            if op != "<=":
                raise ValueError(op)
            return Assertion(kind, (int(n),), no, text)
        if kind == "trace-contains":
            parts = rest.split()
            if len(parts) not in (1, 2):
                raise ValueError(rest)
            return Assertion(kind, tuple(parts), no, text)
    except ParseError as exc:
        raise LoadError(f"assertion {text!r}: {exc.message}", no) from None
    except ValueError:
        pass
    raise LoadError(f"malformed assertion {text!r}", no)


def _values_at(state, url):
    return [it.res for it in state.items if it.url == url and is_value(it.res)]


def _event_matches(ev, rule, where):
    if ev.rule != rule and rule not in ev.sub:
        return False
    if where is None:
        return True
    return where == ev.target or where in ev.focus


def check_assertion(a: Assertion, result: RunResult):
    """(passed, detail) for one assertion against a finished run."""
    st = result.state
    if a.kind in ("resource-at", "resource-one-of"):
        url, want = a.args
        options = want if a.kind == "resource-one-of" else (want,)
        found = _values_at(st, url)
        if any(v in options for v in found):
            return True, ""
        got = ", ".join(show(v) for v in found) or "nothing"
        exp = " | ".join(show(v) for v in options)
        return False, f"expected {exp} at {show(url)}, found {got}"
    if a.kind == "absent":
        (url,) = a.args
        present = [it for it in st.items if it.url == url]
        if not present:
            return True, ""
        return False, f"{show(url)} holds {show(present[0].res)}"
    if a.kind == "count":
        url, n = a.args
        below = [it for it in st.items if is_value(it.res) and it.url.loc == url.loc
                 and len(it.url.segs) == len(url.segs) + 1
                 and it.url.segs[:len(url.segs)] == url.segs]
        return len(below) == n, f"{len(below)} resources directly under {show(url)}"
    if a.kind == "terminal":
        return result.terminal, "" if result.terminal else "max-steps-exceeded"
    if a.kind == "stuck-count":
        return len(result.stuck) == a.args[0], f"{len(result.stuck)} stuck resources"
    if a.kind == "steps":
        return len(result.trace) <= a.args[0], f"{len(result.trace)} steps"
    if a.kind == "trace-contains":
        rule = a.args[0]
        where = a.args[1] if len(a.args) > 1 else None
        ok = any(_event_matches(ev, rule, where) for ev in result.trace)
        return ok, "" if ok else "no matching event"
    raise ValueError(a.kind)


def scenario_policy(sc, override=None):
    text = override or sc.policy

    def loader(p):
        base = sc.path.parent if sc.path is not None else Path(".")
        q = Path(p)
        if not q.is_absolute() and not q.exists():
            q = base / q
        return read_script(q.read_text(encoding="utf-8"))

    return parse_policy(text, loader)


def library_dir():
    return Path(__file__).parent / "scenarios"


def library():
    """Bundled scenario files in name order."""
    return sorted(library_dir().glob("*.wos"))
