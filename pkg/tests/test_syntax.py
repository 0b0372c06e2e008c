import random

import pytest
from hypothesis import given, settings, strategies as st

from weboscalc.errors import ParseError
from weboscalc.parser import (
    parse_network, parse_pattern, parse_ref, parse_term, parse_value,
)
from weboscalc.printer import show
from weboscalc.scenario import library, load_scenario
from weboscalc.terms import (
    INTERNAL, NIL, NS, OK, Command, Located, Location, Name, Num, OpPair, Par,
    RelRef, Restrict, Return, Url, free_names, is_name,
)

from netgen import gen_ast

H = Location("h", "c")


def test_parse_value_resource():
    net = parse_network("[ 5 ]@//h/c/f")
    assert net == Located(Url(H, ("f",), False), Num(5))


def test_parse_program_resource():
    net = parse_network("[ x = get^{}@//h/c/f : ns . nil ]@//h/c/p/")
    assert isinstance(net, Located) and net.url == Url(H, ("p",), True)
    cmd = net.res
    assert isinstance(cmd, Command)
    assert (cmd.op, cmd.deleg, cmd.ses, cmd.cont) == ("get", (), NS, NIL)
    assert cmd.target == Url(H, ("f",), False)


def test_internal_with_absolute_target_rejected():
    with pytest.raises(ParseError, match="relative"):
        parse_network("[ x = put^I@//h/c/f (5) . nil ]@//h/c/p/")


def test_parse_term_return():
    assert parse_term("return ok") == Return(OK)


def test_parse_term_internal_ipath():
    t = parse_term("x = get^I@<ipath> . return x")
    assert isinstance(t, Command)
    assert t.deleg is INTERNAL
    assert t.target == RelRef((), True, ipath=True)
    assert t.cont == Return(Name("x"))


def test_duplicate_definition_rejected():
    with pytest.raises(ParseError, match="duplicate definition for get"):
        parse_value("comp:svc < get(p) = nil; get(q) = nil; >")


def test_get_param_use_rejected():
    with pytest.raises(ParseError):
        parse_value("comp:svc < get(p) = return p; >")


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse_network("[ 5 ]@//h/c/f ||\n  [ x = ]@//h/c/g")
    assert info.value.line == 2


def test_print_roundtrip_single():
    assert show(parse_network("[ 5 ]@//h/c/f")) == "[ 5 ]@//h/c/f"


def test_print_oppair():
    assert show(OpPair("tag", Num(7))) == "tag<7>"


def test_canonical_order_of_two_resources():
    from weboscalc.engine import normalize
    st = normalize(parse_network("[ 2 ]@//h/c/z || [ 1 ]@//h/c/a"))
    assert st.show() == "[ 1 ]@//h/c/a || [ 2 ]@//h/c/z"


def test_free_names_examples():
    assert free_names(parse_term("x = get^{}@//h/c/f : ns . y = x . nil")) == set()
    assert free_names(parse_term("z(x) . nil")) == {"z"}
    assert free_names(parse_network("new t.([ t ]@//h/c/f)")) == set()


def test_reserved_words_are_not_names():
    for w in ("exec", "session", "application", "ns", "ok", "err", "put", "lexec"):
        assert not is_name(w)
    assert is_name("x1")


def test_url_forms():
    assert parse_ref("//h/c/session/ns/k") == Url(H, ("session", "ns", "k"), False)
    assert parse_ref("/a/b/") == RelRef(("a", "b"), True, root=True)
    assert parse_ref("../x") == RelRef(("..", "x"), False)
    assert parse_ref("./7") == RelRef(("7",), False)
    assert parse_pattern("/a/*").wildcard


def test_empty_network():
    assert parse_network("0") == Par(())
    assert show(Par(())) == "0"


def test_restriction_prints_and_parses():
    net = Restrict("x", Located(Url(H, ("f",), False), Name("x")))
    assert parse_network(show(net)) == net


@pytest.mark.parametrize("path", library(), ids=lambda p: p.stem)
def test_scenario_library_roundtrip(path):
    net = load_scenario(path).net
    text = show(net)
    assert parse_network(text) == net
    assert show(parse_network(text)) == text


def test_generated_ast_roundtrip_1000():
    rng = random.Random(20261016)
    for _ in range(1000):
        net = gen_ast(rng)
        text = show(net)
        assert parse_network(text) == net, text


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False))
def test_roundtrip_property(rng):
    net = gen_ast(rng)
    text = show(net)
    again = parse_network(text)
    assert again == net
    assert show(again) == text
