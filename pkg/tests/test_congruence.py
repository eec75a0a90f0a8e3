from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from bcheck import ast as A
from bcheck.checker import Rule, TypeCheckError, check_behaviour, format_derivation, verify_derivation
from bcheck.congruence import (
    CongruenceRule as C,
    InvalidPosition,
    RewriteStep,
    RuleShapeMismatch,
    TransportShapeError,
    apply_rule,
    congruent,
    format_trace,
    normalize,
    normalize_trace,
    parse_trace,
    positions,
    replay_trace,
    transport,
    transport_trace,
)
from bcheck.context import EMPTY, Fork, Leaf, NativeType as N, VarDecl
from bcheck.parser import parse_behaviour as pb, parse_context as pc
from strategies import behaviours

GOLDEN = Path(__file__).parent / "golden"
a, b, c = pb("x0 = true"), pb("x1 = 2"), pb("while [ false ] nil")


def test_apply_rule_examples():
    assert apply_rule(A.Seq(A.Nil(), a), (), C.NIL_SEQ_ELIM) == a
    assert apply_rule(A.Par(b, A.Nil()), (), C.PAR_NIL_ELIM) == b
    assert apply_rule(A.Par(A.Par(a, b), c), (), C.PAR_ASSOC_R) == A.Par(a, A.Par(b, c))
    assert apply_rule(A.Par(a, A.Par(b, c)), (), C.PAR_ASSOC_L) == A.Par(A.Par(a, b), c)
    assert apply_rule(a, (), C.REFL) == a


def test_apply_rule_at_position_only_touches_subterm():
    t = pb("if true then (nil ; (x0 = true | nil)) else nil")
    out = apply_rule(t, ("if.then", "seq.2"), C.PAR_COMM)
    assert out == pb("if true then (nil ; (nil | x0 = true)) else nil")


def test_apply_rule_errors():
    with pytest.raises(RuleShapeMismatch):
        apply_rule(a, (), C.PAR_COMM)
    with pytest.raises(RuleShapeMismatch):
        apply_rule(A.Seq(a, A.Nil()), (), C.NIL_SEQ_ELIM)
    with pytest.raises(InvalidPosition):
        apply_rule(a, ("seq.1",), C.REFL)
    with pytest.raises(InvalidPosition):
        apply_rule(pb("inputchoice [o(x0)] { nil }"), ("eta.0",), C.REFL)
    with pytest.raises(InvalidPosition):
        apply_rule(pb("inputchoice [o(x0)] { nil }"), ("choice.1",), C.REFL)


def test_positions_cover_every_selector():
    t = pb("inputchoice [o(x0)(x1) { nil }] { exec(c, o, x0) { nil } } [p(x0)] { o(x0)(x1) { nil } }")
    assert list(positions(t)) == [
        (),
        ("eta.0",),
        ("choice.0",),
        ("choice.0", "exec.body"),
        ("choice.1",),
        ("choice.1", "input.body"),
    ]


@settings(max_examples=200, deadline=None)
@given(behaviours, st.data())
def test_every_rule_is_undone_by_its_inverse(t, data):
    pos = data.draw(st.sampled_from(list(positions(t))))
    for rule in C:
        try:
            out = apply_rule(t, pos, rule)
        except RuleShapeMismatch:
            continue
        assert apply_rule(out, pos, rule.inverse) == t


def test_normalize_examples():
    assert normalize(A.Seq(A.Nil(), A.Nil())) == A.Nil()
    t = A.Seq(A.Assign(0, A.IntLit(1)), A.Nil())
    assert normalize(t) == t
    x, y, z = pb("x0 = true"), pb("x1 = true"), pb("x2 = true")
    assert normalize(A.Par(A.Par(z, x), y)) == normalize(A.Par(x, A.Par(y, z))) == A.Par(x, A.Par(y, z))
    assert normalize(pb("nil | nil ; nil")) == A.Nil()
    assert normalize(pb("while [ true ] (nil ; (nil | x1 = 1 | x0 = 1))")) == pb("while [ true ] (x0 = 1 | x1 = 1)")


@settings(max_examples=300, deadline=None)
@given(behaviours)
def test_normalize_idempotent_and_traced(t):
    n = normalize(t)
    assert normalize(n) == n
    nf, trace = normalize_trace(t)
    assert nf == n
    assert replay_trace(t, trace) == n


def test_congruent_examples():
    x, y = pb("x0 = true"), pb("x0 = x0")
    assert congruent(A.Par(x, y), A.Par(y, x)) == (RewriteStep((), C.PAR_COMM),)
    assert congruent(x, x) == ()
    assert congruent(A.Seq(x, A.Nil()), x) is None
    assert congruent(pb("nil | x0 = true"), pb("x0 = true | nil")) == (RewriteStep((), C.PAR_COMM),)


def _scramble(t, data, steps=6):
    for _ in range(steps):
        pos = data.draw(st.sampled_from(list(positions(t))))
        rule = data.draw(st.sampled_from(list(C)))
        try:
            t = apply_rule(t, pos, rule)
        except RuleShapeMismatch:
            pass
    return t


@settings(max_examples=300, deadline=None)
@given(behaviours, st.data())
def test_congruent_finds_replayable_trace(t, data):
    u = _scramble(t, data)
    trace = congruent(t, u)
    assert trace is not None
    assert replay_trace(t, trace) == u
    assert replay_trace(u, tuple(RewriteStep(p, r.inverse) for p, r in reversed(trace))) == t


def test_trace_format():
    trace = (RewriteStep((), C.PAR_COMM), RewriteStep(("seq.2", "par.L"), C.NIL_SEQ_ELIM), RewriteStep(("choice.0", "input.body"), C.REFL))
    text = format_trace(trace)
    assert text == "root  ParComm\nseq.2.par.L  NilSeqElim\nchoice.0.input.body  Refl  # eta-body\n"
    assert parse_trace(text) == trace
    assert parse_trace("root ParComm\n") == trace[:1]
    assert format_trace(()) == ""


# -- transport ---------------------------------------------------------------


def _golden(name, g, t, step):
    _, d = check_behaviour(g, t)
    out = transport(d, step)
    text = f"{format_derivation(d)}--- {format_trace((RewriteStep(*step),))}{format_derivation(out)}"
    assert text == (GOLDEN / f"transport_{name}.txt").read_text(encoding="utf-8")
    assert verify_derivation(out)
    return d, out


def test_transport_nil_seq_elim_golden():
    g = pc("{ x0 : int }")
    d, out = _golden("nil_seq_elim", g, pb("nil ; x0 = true"), ((), C.NIL_SEQ_ELIM))
    # t-seq t-nil x  becomes  x
    assert d.premises[0].rule is Rule.NIL and out is d.premises[1]


def test_transport_par_comm_golden():
    g = pc("{ x0 : bool } & { x1 : int }")
    d, out = _golden("par_comm", g, pb("x0 = x0 | x1 = true"), ((), C.PAR_COMM))
    t1, t2 = d.premises
    assert out.premises[0] is t2 and out.premises[1] is t1
    assert out.pre == Fork(d.pre.right, d.pre.left) and out.post == Fork(d.post.right, d.post.left)


def test_transport_par_assoc_golden():
    g = pc("({ x0 : bool } & { }) & { x0 : int }")
    d, out = _golden("par_assoc", g, pb("(x0 = false | nil) | while [ x0 < 3 ] nil"), ((), C.PAR_ASSOC_R))
    (t1, t2), t3 = d.premises[0].premises, d.premises[1]
    assert out.premises[0] is t1 and out.premises[1].premises[0] is t2 and out.premises[1].premises[1] is t3
    (g1, g2), g3 = (d.pre.left.left, d.pre.left.right), d.pre.right
    assert out.pre == Fork(g1, Fork(g2, g3))


def test_transport_other_root_cases():
    g = Leaf((VarDecl(0, N.BOOL),))
    _, d = check_behaviour(g, a)
    intro = transport(d, ((), C.NIL_SEQ_INTRO))
    assert intro.rule is Rule.SEQ and intro.premises[1] is d and (intro.pre, intro.post) == (d.pre, d.post)
    aux = Leaf((VarDecl(7, N.RAW),))
    par = transport(d, ((), C.PAR_NIL_INTRO), aux)
    assert par.pre == Fork(g, aux) and par.post == Fork(d.post, aux) and par.premises[0] is d
    assert transport(par, ((), C.PAR_NIL_ELIM)) is d
    assert verify_derivation(intro) and verify_derivation(par)
    assert transport(d, ((), C.REFL)) is d


def test_transport_shape_errors():
    _, d = check_behaviour(EMPTY, a)
    with pytest.raises(TransportShapeError):
        transport(d, ((), C.PAR_COMM))
    with pytest.raises(TransportShapeError):
        transport(d, ((), C.NIL_SEQ_ELIM))
    _, d = check_behaviour(Fork(EMPTY, EMPTY), pb("nil | nil"))
    with pytest.raises(TransportShapeError):
        transport(d, ((), C.PAR_ASSOC_R))


def test_transport_nested_context_preserving_steps_splice():
    g = pc("{ x0 : bool } & { }")
    t = pb("if x0 then (nil ; x0 = true | nil) else (x0 = true | nil)")
    _, d = check_behaviour(g, t)
    out = transport(d, (("if.then", "par.L"), C.NIL_SEQ_ELIM))
    assert verify_derivation(out) and out.subject == apply_rule(t, ("if.then", "par.L"), C.NIL_SEQ_ELIM)
    assert out.premises[0].premises[0] is d.premises[0].premises[0].premises[1]


def test_transport_nested_par_step_rethreads():
    g = pc("({ } & { x0 : bool }) & { }")
    t = pb("(x0 = 1 | nil) | nil")
    _, d = check_behaviour(g, t)
    out = transport(d, (("par.L",), C.PAR_COMM))
    assert verify_derivation(out)
    assert out.pre == pc("({ x0 : bool } & { }) & { }")
    g = pc("{ x0 : bool } & { }")
    _, d = check_behaviour(g, pb("x0 = true ; (x0 = false | nil)"))
    out = transport(d, (("seq.2",), C.PAR_COMM))
    assert verify_derivation(out) and out.pre == Fork(EMPTY, Leaf((VarDecl(0, N.BOOL),)))
    assert out.premises[1].pre == Fork(EMPTY, Leaf((VarDecl(0, N.BOOL),)))


def test_transport_nested_par_step_can_be_impossible():
    # swapping the branch contexts under the guard retypes x0 as int
    g = pc("{ x0 : bool } & { x0 : int }")
    t = pb("if x0 then (x0 = true | x0 = x0) else nil")
    _, d = check_behaviour(g, t)
    with pytest.raises(TransportShapeError):
        transport(d, (("if.then",), C.PAR_COMM))
    # no context with the swapped then-branch derivation types the result at all
    swapped = apply_rule(t, ("if.then",), C.PAR_COMM)
    with pytest.raises(TypeCheckError):
        check_behaviour(Fork(g.right, g.left), swapped)


def _par_only_paths(t, under_other=False):
    match t:
        case A.Par(x, y):
            return not under_other and _par_only_paths(x) and _par_only_paths(y)
        case A.Seq(x, y):
            return _par_only_paths(x, True) and _par_only_paths(y, True)
        case A.If(_, x, y):
            return _par_only_paths(x, True) and _par_only_paths(y, True)
        case A.While(_, x):
            return _par_only_paths(x, True)
    return True


def test_normalization_transport_keeps_typability(corpus5, pool):
    checked = 0
    for t in corpus5:
        if not _par_only_paths(t):
            continue
        nf, trace = normalize_trace(t)
        for g in pool:
            try:
                _, d = check_behaviour(g, t)
            except TypeCheckError:
                continue
            out = transport_trace(d, trace)
            assert out.subject == nf and verify_derivation(out)
            checked += 1
    assert checked > 1000
