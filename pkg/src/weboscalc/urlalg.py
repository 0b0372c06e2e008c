"""Url and pattern algebra: resolution, pattern membership and ordering,
and the auxiliary functions consulted by the reduction rules."""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError, LocError, PreconditionError, ResolveError
from .terms import (
    EPS, Deployed, Passive, RelRef, SymUrl, Url,
)

DATA_TYPE = "data"


# ------------------------------------------------------------- built-ins

def int_g(u):
    """``l/``, ``l/session/`` or ``l/exec/``."""
    return u.coll and (u.segs == () or u.segs in (("session",), ("exec",)))


def int_d(u):
    """``l/`` or ``l/application/``."""
    return u.coll and u.segs in ((), ("application",))


# ------------------------------------------------------------ resolution

def _eliminate(stack, segs):
    out = list(stack)
    for s in segs:
        if s == "..":
            if not out:
                raise ResolveError("'..' climbs above the context root")
            out.pop()
        else:
            out.append(s)
    return tuple(out)


def resolve_url(base, ref):
    """Resolve a non-symbolic reference against a collection base url."""
    if isinstance(ref, Url):
        return ref
    if isinstance(ref, SymUrl) or (isinstance(ref, RelRef) and ref.ipath):
        raise ResolveError(f"symbolic reference {ref} must be substituted first")
    if not isinstance(ref, RelRef):
        raise ResolveError(f"not a reference: {ref!r}")
    if not base.coll:
        raise PreconditionError(f"base {base} is not a collection")
    if ref.root:
        return Url(base.loc, ref.segs, ref.coll)
    segs = _eliminate(base.segs, ref.segs)
    coll = ref.coll or not ref.segs or ref.segs[-1] == ".."
    if not segs and not coll:
        coll = True
    return Url(base.loc, segs, coll)


def resolve_ctx(base, entry):
    """Context named by a delegation entry; ``eps`` is the base's context."""
    if entry is EPS:
        return base.loc
    return entry


def url_path(u):
    """The path of ``u`` after its context, as a root-relative RelRef."""
    return RelRef(u.segs, u.coll, root=True)


def url_id(u):
    """Identity ignoring the trailing separator."""
    return (u.loc, u.segs)


def parent_dir(u):
    """``d(url)``: the collection directly containing ``u`` (None for ``l/``)."""
    if not u.segs:
        return None
    return Url(u.loc, u.segs[:-1], True)


def extends(longer, shorter):
    """``longer > shorter``: ``longer`` strictly extends ``shorter`` as an
    address, so ``l/a/`` and ``l/a/b`` both extend ``l/a``."""
    if longer.loc != shorter.loc or longer.segs[:len(shorter.segs)] != shorter.segs:
        return False
    if len(longer.segs) > len(shorter.segs):
        return True
    return len(longer.segs) == len(shorter.segs) and longer.coll and not shorter.coll


def collection_prefixes(u):
    return [Url(u.loc, u.segs[:k], True) for k in range(len(u.segs))]


# --------------------------------------------------------------- patterns

def pat_member(path, pat):
    """Is the root-relative ``path`` matched by ``pat``?"""
    segs = path.segs
    if segs and segs[0] in ("exec", "session", "application"):
        return False
    n = len(pat.prefix)
    if not pat.wildcard:
        return segs == pat.prefix and not path.coll
    if len(segs) < n or segs[:n] != pat.prefix:
        return False
    return len(segs) > n or path.coll


def pat_key(pat):
    return (len(pat.prefix), 0 if pat.wildcard else 1, "/".join(pat.prefix))


def pat_order(p1, p2):
    """-1, 0 or 1: longer literal prefix wins, then exact over wildcard,
    then lexicographic prefix text."""
    k1, k2 = pat_key(p1), pat_key(p2)
    return (k1 > k2) - (k1 < k2)


def pat_dir(pat):
    if pat.wildcard:
        return RelRef(pat.prefix, True, root=True)
    return RelRef(pat.prefix[:-1], True, root=True)


def path_minus(path, pat):
    if not pat_member(path, pat):
        raise PreconditionError(f"{path} is not matched by {pat}")
    if not pat.wildcard:
        return RelRef((), True)
    rest = path.segs[len(pat.prefix):]
    return RelRef(rest, path.coll if rest else True)


def component_at(url, res):
    """The pattern contributed by ``[res]@url``, if it is a deployed component."""
    if (isinstance(res, Deployed) and url.coll and len(url.segs) == 2
            and url.segs[0] == "exec"):
        return res.pattern
    return None


def pats(items, loc=None):
    out = []
    for u, res in items:
        p = component_at(u, res)
        if p is not None and (loc is None or u.loc == loc):
            out.append(p)
    return out


def maxpat(items, path, loc=None):
    """Greatest deployed pattern matching ``path`` (None stands for ε).

    ``items`` is an iterable of (url, resource) pairs; ``loc`` restricts the
    search to components deployed in that context.
    """
    best = None
    for p in pats(items, loc):
        if pat_member(path, p) and (best is None or pat_order(p, best) > 0):
            best = p
    return best


def urls(items):
    """Stored urls together with all of their collection prefixes."""
    out = set()
    for u, _ in items:
        out.add(u)
        out.update(collection_prefixes(u))
    return out


def is_live(u, items, url_set=None):
    """Liveness for dispatch: stored (or prefix of stored), or covered by a
    pattern deployed in ``u``'s context."""
    if url_set is None:
        url_set = urls(items)
    if u in url_set:
        return True
    path = url_path(u)
    return any(pat_member(path, p) for p in pats(items, u.loc))


def match(target, pat, items, url_set=None):
    path = url_path(target)
    if not pat_member(path, pat):
        return False
    if not is_live(target, items, url_set):
        return False
    best = maxpat(items, path, target.loc)
    return best is None or pat_order(pat, best) >= 0


# ----------------------------------------------------------- configuration

@dataclass
class Config:
    """Scenario configuration: ``loc`` capabilities, ``cond`` overrides and flags."""
    loc_capability: dict = field(default_factory=dict)
    cond_overrides: dict = field(default_factory=dict)
    collection_op_dispatch: bool = False
    data_names: frozenset = frozenset()
    gc: bool = False

    def add_loc(self, l, typ, target):
        if target.host != l.host:
            raise ConfigError(f"loc {l} {typ} -> {target}: capability must be on the same host")
        self.loc_capability[(l, typ)] = target

    def add_cond(self, u, value):
        if not u.coll:
            raise ConfigError(f"cond {u}: not a collection url")
        if int_g(u) and not value:
            raise ConfigError(f"cond {u}: forced true for built-in collections")
        self.cond_overrides[u] = value


def cond(u, cfg=None):
    if int_g(u):
        return True
    if cfg is None:
        return False
    return cfg.cond_overrides.get(u, False)


def loc(l, type_name, cfg):
    try:
        return cfg.loc_capability[(l, type_name)]
    except KeyError:
        raise LocError(f"no context on {l.host} runs {type_name!r} components") from None


def value_type(v):
    if isinstance(v, (Passive, Deployed)):
        return v.type
    return DATA_TYPE
