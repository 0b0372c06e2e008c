import pytest

from weboscalc.engine import enumerate_redexes, normalize, run, successor
from weboscalc.errors import EvalError
from weboscalc.parser import parse_bexpr, parse_expr, parse_network, parse_term, parse_url
from weboscalc.rules import apply_subst, eval_bool, eval_expr
from weboscalc.terms import (
    NS, Binding, Command, Deployed, Location, Num, OpPair, Pattern, is_value,
)
from weboscalc.urlalg import Config, url_path

H = Location("h", "c")


def state(text, cfg=None):
    return normalize(parse_network(text), cfg=cfg or Config())


def rules_of(st):
    return [rx.rule for rx in enumerate_redexes(st)]


def fire(st, rule):
    for rx in enumerate_redexes(st):
        if rx.rule == rule:
            return successor(st, rx)[0]
    raise AssertionError(f"{rule} not enabled in {st.show()}")


def value_at(st, url):
    found = [it.res for it in st.items if it.url == parse_url(url) and is_value(it.res)]
    return found[0] if found else None


def finish(text, cfg=None, steps=200):
    result = run(state(text, cfg), max_steps=steps)
    assert result.terminal
    return result


# ---------------------------------------------------------------- evaluation

def test_eval_expr():
    assert eval_expr(Num(5)) == Num(5)
    assert eval_expr(parse_expr("2 + 3")) == Num(5)
    assert eval_expr(parse_expr("tag<1 + 1>")) == OpPair("tag", Num(2))
    with pytest.raises(EvalError):
        eval_expr(parse_expr("ok + 1"))


def test_eval_bool():
    assert eval_bool(parse_bexpr("ok == ok"))
    assert not eval_bool(parse_bexpr("3 < 2"))
    assert not eval_bool(parse_bexpr("err == ok"))
    with pytest.raises(EvalError):
        eval_bool(parse_bexpr("ok < 2"))


def test_unbound_variable_is_eval_error():
    with pytest.raises(EvalError):
        eval_expr(parse_expr("x"), known=frozenset())


# ---------------------------------------------------------------------- sync

def test_sync_installs_delegated_sessions():
    st = state("new z.([ z!^{//h/c1:s9} 1 . nil ]@//h/c/a/ || "
               "[ z(x) . y = put^{}@//h/c1/f : ns (x) . nil ]@//h/c/b/)")
    nxt = fire(st, "SYNC")
    text = nxt.show()
    assert "y = put^{}@//h/c1/f : s9 (1) . nil" in text


def test_sync_empty_sls_leaves_body():
    st = state("new z.([ z!ok . nil ]@//h/c/a/ || [ z(x) . y = get^{}@//h/c/f : ns . nil ]@//h/c/b/)")
    assert "y = get^{}@//h/c/f : ns . nil" in fire(st, "SYNC").show()


def test_sync_evaluates_payload():
    st = state("new z.([ z!2 + 3 . nil ]@//h/c/a/ || [ z(x) . y = put^{}@//h/c/f : ns (x) . nil ]@//h/c/b/)")
    assert "(5)" in fire(st, "SYNC").show()


# --------------------------------------------------------------------- spawn

def test_spawn_at_collection():
    nxt = fire(state("[ spawn (nil) . nil ]@//h/c/p/"), "SPAWN")
    assert nxt.show() == "new _g0.([ nil ]@//h/c/p/ || [ nil ]@//h/c/p/_g0/)"


def test_two_spawns_fresh():
    res = finish("[ spawn (nil) . spawn (nil) . nil ]@//h/c/p/")
    assert [ev.fresh for ev in res.trace] == [["_g0"], ["_g1"]]


def test_spawn_at_single_url_is_stuck():
    st = state("[ spawn (nil) . nil ]@//h/c/p")
    assert rules_of(st) == []
    assert len(run(st).stuck) == 1


# ------------------------------------------------------------------------ if

def test_if_branches():
    assert rules_of(state("[ if ok == ok then nil else nil ]@//h/c/p/")) == ["IF-T"]
    assert rules_of(state("[ if 1 < 0 then nil else nil ]@//h/c/p/")) == ["IF-F"]


def test_if_with_unbound_is_stuck():
    st = state("[ if err == x then nil else nil ]@//h/c/p/")
    assert rules_of(st) == []
    assert len(run(st).stuck) == 1


def test_data_names_are_values():
    cfg = Config(data_names=frozenset({"x"}))
    assert rules_of(state("[ if err == x then nil else nil ]@//h/c/p/", cfg)) == ["IF-F"]


# --------------------------------------------------------------------- error

def test_get_absent_errs():
    res = finish("[ x = get^{}@//h/c/f : ns . y = put^{}@//h/c/r : ns (x) . nil ]@//h/c/p/")
    assert res.trace[0].rule == "CMD-ERR"
    assert value_at(res.state, "//h/c/r").name == "err"


def test_delete_non_empty_collection_errs():
    st = state("[ ok ]@//h/c/a/ || [ 1 ]@//h/c/a/x || [ x = delete^{}@//h/c/a/ : ns . nil ]@//h/c/p/")
    assert rules_of(st) == ["CMD-ERR"]


def test_put_missing_parent_errs():
    assert rules_of(state("[ x = put^{}@//h/c/a/f : ns (1) . nil ]@//h/c/p/")) == ["CMD-ERR"]


# ----------------------------------------------------------------------- put

def test_put_overwrite():
    st = fire(state("[ 1 ]@//h/c/f || [ x = put^{}@//h/c/f : ns (5) . nil ]@//h/c/p/"), "PUT-OVERWRITE")
    assert value_at(st, "//h/c/f") == Num(5)


def test_put_create_at_context_root():
    st = fire(state("[ x = put^{}@//h/c/f : ns (5) . nil ]@//h/c/p/"), "PUT-CREATE")
    assert value_at(st, "//h/c/f") == Num(5)


def test_put_application_attribute():
    st = fire(state("[ x = put^{}@//h/c/application/k : ns (5) . nil ]@//h/c/p/"), "PUT-CREATE")
    assert value_at(st, "//h/c/application/k") == Num(5)


def test_put_cannot_create_same_stem():
    st = state("[ ok ]@//h/c/a/ || [ x = put^{}@//h/c/a : ns (5) . nil ]@//h/c/p/")
    assert rules_of(st) == ["CMD-ERR"]


# ----------------------------------------------------------------------- get

def test_get_persists():
    res = finish("[ 7 ]@//h/c/f || [ x = get^{}@//h/c/f : ns . y = get^{}@//h/c/f : ns . "
                 "z = put^{}@//h/c/r : ns (x + y) . nil ]@//h/c/p/")
    assert value_at(res.state, "//h/c/f") == Num(7)
    assert value_at(res.state, "//h/c/r") == Num(14)


def test_get_deployed_component():
    res = finish("[ comp:svc [_ -> /a/*] < get(u) = return 1; > ]@//h/c/exec/m/ || "
                 "[ x = get^{}@//h/c/exec/m/ : ns . y = put^{}@//h/c/copy : ns (x) . nil ]@//h/c/p/")
    assert isinstance(value_at(res.state, "//h/c/copy"), Deployed)


# -------------------------------------------------------------------- delete

def test_delete_then_get():
    res = finish("[ 5 ]@//h/c/f || [ x = delete^{}@//h/c/f : ns . y = get^{}@//h/c/f : ns . "
                 "z = put^{}@//h/c/r : ns (y) . nil ]@//h/c/p/")
    assert [ev.rule for ev in res.trace][:2] == ["DELETE", "CMD-ERR"]
    assert value_at(res.state, "//h/c/f") is None


# --------------------------------------------------------------------- rexec

def test_rexec_fresh_single():
    st = fire(state("[ ok ]@//h/c/items/ || [ x = rexec^{}@//h/c/items/ : ns (5) . nil ]@//h/c/p/"),
              "REXEC-FRESH")
    assert value_at(st, "//h/c/items/_g0") == Num(5)


def test_rexec_on_session_collection_makes_collection():
    st = fire(state("[ x = rexec^{}@//h/c/session/ : ns (ok) . nil ]@//h/c/p/"), "REXEC-FRESH")
    assert value_at(st, "//h/c/session/_g0/").name == "ok"


def test_rexec_cond_override():
    cfg = Config()
    cfg.add_cond(parse_url("//h/c/items/"), True)
    st = fire(state("[ ok ]@//h/c/items/ || [ x = rexec^{}@//h/c/items/ : ns (5) . nil ]@//h/c/p/", cfg),
              "REXEC-FRESH")
    assert value_at(st, "//h/c/items/_g0/") == Num(5)


def test_rexec_oppair_on_collection_is_stored():
    st = state("[ comp:s [_ -> /items/*] < pay(a) = return ok; > ]@//h/c/exec/m/ || "
               "[ ok ]@//h/c/items/ || [ x = rexec^{}@//h/c/items/ : ns (pay<1>) . nil ]@//h/c/p/")
    assert rules_of(st) == ["REXEC-FRESH"]
    cfg = Config(collection_op_dispatch=True)
    st = normalize(st, cfg=cfg)
    assert rules_of(st) == ["CAPTURE-USEROP"]


# ------------------------------------------------------------------- capture

GET9 = "[ comp:svc [_ -> /a/*] < get(u) = return 9; > ]@//h/c/exec/m/"


def test_capture_replaces_default():
    st = state(GET9 + " || [ 1 ]@//h/c/a/q || [ x = get^{}@//h/c/a/q : ns . nil ]@//h/c/p/")
    assert rules_of(st) == ["CAPTURE-COM"]


def test_capture_returns_value():
    res = finish(GET9 + " || [ x = get^{}@//h/c/a/q : ns . y = put^{}@//h/c/r : ns (x) . nil ]@//h/c/p/")
    assert [ev.rule for ev in res.trace] == ["CAPTURE-COM", "SYNC", "PUT-CREATE"]
    assert value_at(res.state, "//h/c/r") == Num(9)


def test_capture_resolves_ipath():
    res = finish("[ comp:svc [_ -> /a/*] < get(u) = v = get^I@<ipath> . return v; > ]@//h/c/exec/m/ || "
                 "[ 4 ]@//h/c/a/q || [ x = get^{}@//h/c/a/q : ns . y = put^{}@//h/c/r : ns (x) . nil ]@//h/c/p/")
    assert "target=//h/c/a/q:ns" in res.trace[1].text()
    assert value_at(res.state, "//h/c/r") == Num(4)


def test_capture_delegates_caller_session():
    st = state("[ comp:svc [_ -> /a/*] < get(u) = v = get^{}@//h/c/f . return v; > ]@//h/c/exec/m/ || "
               "[ x = get^{}@//h/c/a/q : s5 . nil ]@//h/c/p/")
    nxt = fire(st, "CAPTURE-COM")
    assert "v = get^{}@//h/c/f : s5" in nxt.show()


def test_internal_commands_not_captured():
    st = state(GET9 + " || [ 1 ]@//h/c/a/q || [ x = get^I@//h/c/a/q : ns . nil ]@//h/c/p/")
    assert rules_of(st) == ["GET"]


def test_userop():
    res = finish("[ comp:b [_ -> /acct/*] < pay(a) = return ok; > ]@//h/c/exec/m/ || "
                 "[ x = rexec^{}@//h/c/acct/7 : ns (pay<3>) . y = put^{}@//h/c/r : ns (x) . nil ]@//h/c/p/")
    assert res.trace[0].rule == "CAPTURE-USEROP"
    assert value_at(res.state, "//h/c/r").name == "ok"


def test_userop_blocked_by_rexec_definition():
    st = state("[ comp:b [_ -> /acct/*] < pay(a) = return ok; rexec(a) = return 1; > ]@//h/c/exec/m/ || "
               "[ x = rexec^{}@//h/c/acct/7 : ns (pay<3>) . nil ]@//h/c/p/")
    assert rules_of(st) == ["CAPTURE-COM"]


def test_userop_undefined_errs():
    st = state("[ comp:b [_ -> /acct/*] < pay(a) = return ok; > ]@//h/c/exec/m/ || "
               "[ x = rexec^{}@//h/c/acct/7 : ns (tag<3>) . nil ]@//h/c/p/")
    assert rules_of(st) == ["CMD-ERR"]


def test_longest_pattern_wins():
    st = state("[ comp:s [_ -> /a/*] < get(u) = return 1; > ]@//h/c/exec/m1/ || "
               "[ comp:s [_ -> /a/b/*] < get(u) = return 2; > ]@//h/c/exec/m2/ || "
               "[ x = get^{}@//h/c/a/b/c : ns . nil ]@//h/c/p/")
    (rx,) = enumerate_redexes(st)
    assert st.items[rx.focus[1]].url == parse_url("//h/c/exec/m2/")


# ------------------------------------------------------------------ sessions

def test_session_new_annotates_commands():
    st = fire(state("[ newsession //h/c/session/ns . x = get^{}@//h/c/f : ns . nil ]@//h/c/p/"), "SES-NEW")
    assert "x = get^{}@//h/c/f : _g0" in st.show()
    assert value_at(st, "//h/c/session/_g0/").name == "ok"


def test_session_new_noop():
    st = state("[ newsession //h/c/session/s2 . nil ]@//h/c/p/")
    assert rules_of(st) == ["SES-NEW-NOOP"]


def test_session_drop_after_new():
    res = finish("[ newsession //h/c/session/ns . dropsession //h/c/session/ns . "
                 "x = get^{}@//h/c/f : ns . nil ]@//h/c/p/")
    assert [ev.rule for ev in res.trace] == ["SES-NEW", "SES-DROP", "CMD-ERR"]
    assert res.trace[-1].target == "//h/c/f:ns"
    assert not any(it.url.segs[:1] == ("session",) for it in res.state.items)


def test_session_drop_noop():
    assert rules_of(state("[ dropsession //h/c/session/ns . nil ]@//h/c/p/")) == ["SES-DROP-NOOP"]


def test_session_new_drop_new_fresh():
    res = finish("[ newsession //h/c/session/ns . dropsession //h/c/session/ns . "
                 "newsession //h/c/session/ns . nil ]@//h/c/p/")
    assert res.trace[0].fresh != res.trace[2].fresh


def test_session_drop_of_missing_resource_still_rebinds():
    res = finish("[ dropsession //h/c/session/s3 . x = get^{}@//h/c/f : s3 . nil ]@//h/c/p/")
    assert res.trace[0].sub == ["CMD-ERR"]
    assert res.trace[1].target == "//h/c/f:ns"


# --------------------------------------------------------------------- lexec

def lexec_cfg():
    cfg = Config()
    cfg.add_loc(H, "gui", Location("h", "run"))
    return cfg


def test_lexec_deploys_component():
    st = state("[ comp:gui < put(v) = return ok; > ]@//h/c/apps/calc || "
               "[ y = lexec^{}@//h/c/apps/calc : ns (1) . nil ]@//h/c/p/", lexec_cfg())
    nxt = fire(st, "LEXEC")
    deployed = [it for it in nxt.items if isinstance(it.res, Deployed)]
    (d,) = deployed
    assert d.res.codebase == parse_url("//h/c/apps/")
    assert d.res.pattern == Pattern(("_g0", "calc"))
    assert d.url.loc == Location("h", "run") and d.url.segs[0] == "exec"
    assert value_at(nxt, "//h/run/_g0/").name == "ok"
    init = [it.res for it in nxt.items if it.url == parse_url("//h/c/p/")][0]
    assert isinstance(init, Command) and init.op == "put"
    assert init.target == parse_url("//h/run/_g0/calc")


def test_lexec_missing_code_errs():
    res = finish("[ y = lexec^{}@//h/c/apps/none : ns (1) . z = put^{}@//h/c/r : ns (y) . nil ]@//h/c/p/",
                 lexec_cfg())
    assert value_at(res.state, "//h/c/r").name == "err"


def test_lexec_without_capable_context_errs():
    res = finish("[ comp:gui < put(v) = return ok; > ]@//h/c/apps/calc || "
                 "[ y = lexec^{}@//h/c/apps/calc : ns (1) . z = put^{}@//h/c/r : ns (y) . nil ]@//h/c/p/")
    assert value_at(res.state, "//h/c/r").name == "err"


def test_lexec_init_put_carries_caller_session():
    st = state("[ comp:gui < put(v) = return ok; > ]@//h/c/apps/calc || "
               "[ y = lexec^{}@//h/c/apps/calc : s4 (1) . nil ]@//h/c/p/", lexec_cfg())
    assert "put^{//h/c:s4}@//h/run/_g0/calc : ns (1)" in fire(st, "LEXEC").show()


# ---------------------------------------------------------------- substitutions

def test_apply_subst_delegation_update():
    t = parse_term("x = put^{}@//h/c1/f : s0 (1) . nil")
    out = apply_subst(t, "delegation-update", (Binding(Location("h", "c1"), "s9"),))
    assert out.ses == "s9"


def test_apply_subst_symbol_resolution():
    t = parse_term("x = get^{}@<session>/k . nil")
    out = apply_subst(t, "symbol-resolution", (H, Pattern(("a",), True), url_path(parse_url("//h/c/a/q"))))
    assert out.target == parse_url("//h/c/session/ns/k")


def test_apply_subst_session_rebind():
    t = parse_term("x = get^{}@//h/c/session/ns/k : ns . nil")
    out = apply_subst(t, "session-rebind", {H: "x9"})
    assert out.target == parse_url("//h/c/session/x9/k")
    assert out.ses == "x9"


def test_apply_subst_command_resolution():
    t = parse_term("x = get^{eps}@f . y = put^I@b (1) . nil")
    out = apply_subst(t, "command-resolution", (H, parse_url("//h/c/apps/"), Pattern(("a",), True)))
    assert out.target == parse_url("//h/c/apps/f") and out.ses == NS
    assert out.deleg == (Binding(H, NS),)
    assert out.cont.target == parse_url("//h/c/a/b")


def test_session_roundtrip_leaves_ns():
    st = state("[ newsession //h/c/session/ns . dropsession //h/c/session/ns . "
               "x = get^{//h/c:ns}@//h/c/f : ns . nil ]@//h/c/p/")
    res = run(st, max_steps=2)
    assert res.state.show().endswith("[ x = get^{//h/c:ns}@//h/c/f : ns . nil ]@//h/c/p/)")
