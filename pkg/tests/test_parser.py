import pytest
from hypothesis import given, settings, strategies as st

from bcheck import ast as A
from bcheck.context import DuplicateDeclError, Fork, InputOneWay, Leaf, NativeType, OutputReqRes, VarDecl
from bcheck.oracle import EnumConfig, enumerate_behaviours
from bcheck.parser import (
    EmptyChoiceError,
    ParseError,
    parse_behaviour,
    parse_context,
    parse_expr,
    pretty_behaviour,
    pretty_context,
    pretty_expr,
)
from strategies import behaviours, contexts, exprs

T = A.BoolLit(True)


@pytest.mark.parametrize(
    "text, tree",
    [
        ("nil", A.Nil()),
        ("o(x0)", A.Input(A.OneWay("o", 0))),
        ("nil ; x0 = true | nil", A.Par(A.Seq(A.Nil(), A.Assign(0, T)), A.Nil())),
        ("nil | nil | nil", A.Par(A.Nil(), A.Par(A.Nil(), A.Nil()))),
        ("nil ; nil ; nil", A.Seq(A.Nil(), A.Seq(A.Nil(), A.Nil()))),
        ("(nil | nil) ; nil", A.Seq(A.Par(A.Nil(), A.Nil()), A.Nil())),
        ("while [ x1 < 3 ] x1 = 2", A.While(A.BinOp("lt", A.Var(1), A.IntLit(3)), A.Assign(1, A.IntLit(2)))),
        ("if true then nil else nil ; nil", A.Seq(A.If(T, A.Nil(), A.Nil()), A.Nil())),
        ("o(x0)(x1) { x1 = x0 }", A.Input(A.RequestResponse("o", 0, 1, A.Assign(1, A.Var(0))))),
        ("o @ l (1L)", A.Output(A.Notification("o", "l", A.LongLit(1)))),
        ("o @ l (\"hi\")(x2)", A.Output(A.SolicitResponse("o", "l", A.StringLit("hi"), 2))),
        ("wait(c, o, l, x0)", A.Wait("c", "o", "l", 0)),
        ("exec(c, o, x0) { nil }", A.Exec("c", "o", 0, A.Nil())),
        (
            "inputchoice [o(x0)] { nil } [p(x1)(x2) { nil }] { x0 = 2.5 }",
            A.InputChoice(
                (
                    (A.OneWay("o", 0), A.Nil()),
                    (A.RequestResponse("p", 1, 2, A.Nil()), A.Assign(0, A.DoubleLit(2.5))),
                )
            ),
        ),
    ],
)
def test_parse_examples(text, tree):
    assert parse_behaviour(text) == tree


def test_expression_precedence():
    e = parse_expr("!x0 == x1 && x2 < 1 || false")
    assert e == A.BinOp(
        "or",
        A.BinOp("and", A.BinOp("eq", A.Not(A.Var(0)), A.Var(1)), A.BinOp("lt", A.Var(2), A.IntLit(1))),
        A.BoolLit(False),
    )
    assert parse_expr("x0 == x1 == x2") == A.BinOp("eq", A.BinOp("eq", A.Var(0), A.Var(1)), A.Var(2))


def test_context_examples():
    assert parse_context("{ x0 : int }") == Leaf((VarDecl(0, NativeType.INT),))
    assert parse_context("{ } & { o : <int> }") == Fork(Leaf(), Leaf((InputOneWay("o", NativeType.INT),)))
    g = parse_context("{ o @ l : <int, bool> }")
    assert g == Leaf((OutputReqRes("o", "l", NativeType.INT, NativeType.BOOL),))
    assert parse_context(pretty_context(g)) == g


def test_context_ampersand_left_assoc():
    a, b, c = Leaf(), Leaf((VarDecl(0, NativeType.INT),)), Leaf((VarDecl(1, NativeType.RAW),))
    assert parse_context("{ } & { x0 : int } & { x1 : raw }") == Fork(Fork(a, b), c)
    right = Fork(a, Fork(b, c))
    assert parse_context(pretty_context(right)) == right


def test_duplicate_var_in_leaf():
    with pytest.raises(DuplicateDeclError) as info:
        parse_context("{ x0 : int, x0 : bool }")
    assert info.value.span is not None
    # the same variable in two parallel branches is fine
    parse_context("{ x0 : int } & { x0 : bool }")


def test_empty_choice():
    with pytest.raises(EmptyChoiceError):
        parse_behaviour("inputchoice")
    with pytest.raises(EmptyChoiceError):
        parse_behaviour("inputchoice ; nil")


@pytest.mark.parametrize("bad", ["", "nil ;", "x0 = ", "if true then nil", "(nil", "o(y)", "nil nil", "x01 = 1", "while [true] "])
def test_syntax_errors_carry_span_and_expected(bad):
    with pytest.raises(ParseError) as info:
        parse_behaviour(bad)
    err = info.value
    assert isinstance(err, SyntaxError)
    assert 0 <= err.span.start <= err.span.end <= len(bad.encode())
    assert err.expected


def test_spans_are_byte_offsets():
    text = "# é\nx0 = \"ü\" ; nil"
    b = parse_behaviour(text)
    raw = text.encode()
    assert raw[b.first.span.start:b.first.span.end] == 'x0 = "ü"'.encode()
    assert raw[b.span.start:b.span.end] == raw[raw.index(b"x0"):]


def test_paths_mode():
    en = A.VariableEnumerator()
    b = parse_behaviour("amount = 12 ; amount.fruit.apple = 2 ; amount.fruit.description = \"Apple\"", en)
    assert [p for p in en.mapping] == [A.VariablePath.parse(s) for s in ("amount", "amount.fruit.apple", "amount.fruit.description")]
    assert b.first == A.Assign(0, A.IntLit(12))
    assert pretty_behaviour(b, en.names()).startswith("amount = 12 ; amount.fruit.apple = 2")


def test_pretty_minimal_parentheses():
    assert pretty_behaviour(A.Par(A.Nil(), A.Nil())) == "nil | nil"
    assert pretty_behaviour(A.Par(A.Par(A.Nil(), A.Nil()), A.Nil())) == "(nil | nil) | nil"
    assert pretty_behaviour(A.Seq(A.Nil(), A.Par(A.Nil(), A.Nil()))) == "nil ; (nil | nil)"
    assert pretty_behaviour(A.Par(A.Seq(A.Nil(), A.Nil()), A.Nil())) == "nil ; nil | nil"


def test_round_trip_enumerated_with_communication():
    cfg = EnumConfig(4, variables=2, exprs=(A.BoolLit(False), A.Var(1)), include_comm=True)
    for b in enumerate_behaviours(cfg):
        assert parse_behaviour(pretty_behaviour(b)) == b


@settings(max_examples=300, deadline=None)
@given(behaviours)
def test_round_trip_behaviours(b):
    assert parse_behaviour(pretty_behaviour(b)) == b


@settings(max_examples=300, deadline=None)
@given(exprs)
def test_round_trip_exprs(e):
    assert parse_expr(pretty_expr(e)) == e


@settings(max_examples=200, deadline=None)
@given(contexts)
def test_round_trip_contexts(g):
    assert parse_context(pretty_context(g)) == g


@settings(max_examples=500, deadline=None)
@given(st.binary(max_size=40))
def test_noise_never_crashes(data):
    for parse in (parse_behaviour, parse_context):
        try:
            parse(data)
        except SyntaxError:
            pass


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="nil;|()x0=true[]{}ifthenelsewhileo@&:<>,!\"# \n", max_size=30))
def test_token_soup_never_crashes(text):
    for parse in (parse_behaviour, parse_context):
        try:
            parse(text)
        except (SyntaxError, DuplicateDeclError):
            pass


def test_deep_nesting_is_a_syntax_error():
    with pytest.raises(ParseError):
        parse_behaviour("(" * 5000 + "nil" + ")" * 5000)
