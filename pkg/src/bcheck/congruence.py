"""Structural congruence of behaviours and transport of typing derivations.

The congruence is generated by::

    nil ; B  ==  B          B | nil  ==  B
    B1 | B2  ==  B2 | B1    (B1 | B2) | B3  ==  B1 | (B2 | B3)

closed under reflexivity, transitivity and contexts (a rule may fire at any
:data:`Position`).  ``B ; nil`` is deliberately *not* congruent to ``B``.

Positions are tuples of child selectors such as ``("seq.2", "par.L")``.
"""

from __future__ import annotations

import enum
from dataclasses import replace
from functools import lru_cache
from typing import Callable, Iterator, NamedTuple, Optional

from . import ast as A
from .checker import Derivation, HoleMismatch, Rule, TypeCheckError, derive_around
from .context import EMPTY, Context, Fork

Position = tuple[str, ...]


class CongruenceRule(enum.Enum):
    REFL = "Refl"
    NIL_SEQ_ELIM = "NilSeqElim"
    NIL_SEQ_INTRO = "NilSeqIntro"
    PAR_NIL_ELIM = "ParNilElim"
    PAR_NIL_INTRO = "ParNilIntro"
    PAR_COMM = "ParComm"
    PAR_ASSOC_L = "ParAssocL"
    PAR_ASSOC_R = "ParAssocR"

    @property
    def inverse(self) -> CongruenceRule:
        return _INVERSE[self]

    def __str__(self) -> str:
        return self.value


_INVERSE = {
    CongruenceRule.REFL: CongruenceRule.REFL,
    CongruenceRule.NIL_SEQ_ELIM: CongruenceRule.NIL_SEQ_INTRO,
    CongruenceRule.NIL_SEQ_INTRO: CongruenceRule.NIL_SEQ_ELIM,
    CongruenceRule.PAR_NIL_ELIM: CongruenceRule.PAR_NIL_INTRO,
    CongruenceRule.PAR_NIL_INTRO: CongruenceRule.PAR_NIL_ELIM,
    CongruenceRule.PAR_COMM: CongruenceRule.PAR_COMM,
    CongruenceRule.PAR_ASSOC_L: CongruenceRule.PAR_ASSOC_R,
    CongruenceRule.PAR_ASSOC_R: CongruenceRule.PAR_ASSOC_L,
}

# rules whose transported derivation keeps its input and output contexts
CONTEXT_PRESERVING = frozenset(
    {CongruenceRule.REFL, CongruenceRule.NIL_SEQ_ELIM, CongruenceRule.NIL_SEQ_INTRO}
)


class RewriteStep(NamedTuple):
    pos: Position
    rule: CongruenceRule


Trace = tuple[RewriteStep, ...]


class CongruenceError(Exception):
    pass


class InvalidPosition(CongruenceError, LookupError):
    pass


class RuleShapeMismatch(CongruenceError, ValueError):
    pass


class TransportShapeError(CongruenceError):
    pass


# -- positions ---------------------------------------------------------------


def children(b: A.Behaviour) -> list[tuple[str, A.Behaviour]]:
    match b:
        case A.Seq(x, y):
            return [("seq.1", x), ("seq.2", y)]
        case A.Par(x, y):
            return [("par.L", x), ("par.R", y)]
        case A.If(_, x, y):
            return [("if.then", x), ("if.else", y)]
        case A.While(_, x):
            return [("while.body", x)]
        case A.Exec(body=x):
            return [("exec.body", x)]
        case A.Input(A.RequestResponse(body=x)):
            return [("input.body", x)]
        case A.InputChoice(branches):
            out = []
            for i, (eta, body) in enumerate(branches):
                if isinstance(eta, A.RequestResponse):
                    out.append((f"eta.{i}", eta.body))
                out.append((f"choice.{i}", body))
            return out
    return []


def child(b: A.Behaviour, sel: str) -> A.Behaviour:
    for s, c in children(b):
        if s == sel:
            return c
    raise InvalidPosition(f"no child {sel!r} in {type(b).__name__}")


def with_child(b: A.Behaviour, sel: str, new: A.Behaviour) -> A.Behaviour:
    match sel, b:
        case "seq.1", A.Seq():
            return replace(b, first=new)
        case "seq.2", A.Seq():
            return replace(b, second=new)
        case "par.L", A.Par():
            return replace(b, left=new)
        case "par.R", A.Par():
            return replace(b, right=new)
        case "if.then", A.If():
            return replace(b, then=new)
        case "if.else", A.If():
            return replace(b, orelse=new)
        case "while.body", A.While():
            return replace(b, body=new)
        case "exec.body", A.Exec():
            return replace(b, body=new)
        case "input.body", A.Input(A.RequestResponse() as eta):
            return replace(b, eta=replace(eta, body=new))
        case _, A.InputChoice(branches):
            kind, _, idx = sel.partition(".")
            if idx.isdigit() and int(idx) < len(branches):
                i = int(idx)
                eta, body = branches[i]
                if kind == "choice":
                    branch = (eta, new)
                elif kind == "eta" and isinstance(eta, A.RequestResponse):
                    branch = (replace(eta, body=new), body)
                else:
                    raise InvalidPosition(f"no child {sel!r} in InputChoice")
                return replace(b, branches=branches[:i] + (branch,) + branches[i + 1:])
    raise InvalidPosition(f"no child {sel!r} in {type(b).__name__}")


def subterm(b: A.Behaviour, pos: Position) -> A.Behaviour:
    for sel in pos:
        b = child(b, sel)
    return b


def positions(b: A.Behaviour, prefix: Position = ()) -> Iterator[Position]:
    """Every position in ``b``, parents before children."""
    yield prefix
    for sel, c in children(b):
        yield from positions(c, prefix + (sel,))


def _rewrite(t: A.Behaviour, rule: CongruenceRule) -> A.Behaviour:
    R = CongruenceRule
    match rule, t:
        case R.REFL, _:
            return t
        case R.NIL_SEQ_ELIM, A.Seq(A.Nil(), x):
            return x
        case R.NIL_SEQ_INTRO, _:
            return A.Seq(A.Nil(), t)
        case R.PAR_NIL_ELIM, A.Par(x, A.Nil()):
            return x
        case R.PAR_NIL_INTRO, _:
            return A.Par(t, A.Nil())
        case R.PAR_COMM, A.Par(x, y):
            return A.Par(y, x)
        case R.PAR_ASSOC_L, A.Par(x, A.Par(y, z)):
            return A.Par(A.Par(x, y), z)
        case R.PAR_ASSOC_R, A.Par(A.Par(x, y), z):
            return A.Par(x, A.Par(y, z))
    raise RuleShapeMismatch(f"{rule} does not apply to {type(t).__name__}")


def apply_rule(b: A.Behaviour, pos: Position, rule: CongruenceRule) -> A.Behaviour:
    """Rewrite the subterm of ``b`` at ``pos`` with ``rule``; everything else is untouched."""
    if not pos:
        return _rewrite(b, rule)
    sel = pos[0]
    return with_child(b, sel, apply_rule(child(b, sel), pos[1:], rule))


def replay_trace(b: A.Behaviour, trace: Trace) -> A.Behaviour:
    for pos, rule in trace:
        b = apply_rule(b, pos, rule)
    return b


# -- canonical form ----------------------------------------------------------


def _key(b: A.Behaviour) -> str:
    from .parser import pretty_behaviour

    return pretty_behaviour(b)


def _spine(b: A.Behaviour) -> list[A.Behaviour]:
    out = []
    while isinstance(b, A.Par):
        out.append(b.left)
        b = b.right
    out.append(b)
    return out


def _right_nest(items: list[A.Behaviour]) -> A.Behaviour:
    b = items[-1]
    for x in reversed(items[:-1]):
        b = A.Par(x, b)
    return b


def _map_children(b: A.Behaviour, f: Callable[[A.Behaviour], A.Behaviour]) -> A.Behaviour:
    for sel, c in children(b):
        b = with_child(b, sel, f(c))
    return b


@lru_cache(maxsize=1 << 16)
def normalize(b: A.Behaviour) -> A.Behaviour:
    """Canonical representative of the congruence class of ``b``.

    Children first; then a leading ``nil ;`` is dropped; maximal parallel
    spines are flattened, stripped of ``nil`` and sorted by printed form.
    """
    match b:
        case A.Seq(x, y):
            x, y = normalize(x), normalize(y)
            return y if x == A.Nil() else A.Seq(x, y)
        case A.Par(x, y):
            items = [e for side in (normalize(x), normalize(y)) for e in _spine(side) if e != A.Nil()]
            if not items:
                return A.Nil()
            return _right_nest(sorted(items, key=_key))
    return _map_children(b, normalize)


@lru_cache(maxsize=1 << 16)
def normalize_trace(b: A.Behaviour) -> tuple[A.Behaviour, Trace]:
    """``normalize(b)`` together with a trace that rewrites ``b`` into it."""
    steps: list[RewriteStep] = []
    nf = _norm(b, (), steps)
    return nf, tuple(steps)


def _norm(b: A.Behaviour, pos: Position, steps: list[RewriteStep]) -> A.Behaviour:
    R = CongruenceRule
    match b:
        case A.Seq(x, y):
            x = _norm(x, pos + ("seq.1",), steps)
            y = _norm(y, pos + ("seq.2",), steps)
            if x == A.Nil():
                steps.append(RewriteStep(pos, R.NIL_SEQ_ELIM))
                return y
            return A.Seq(x, y)
        case A.Par(x, y):
            x = _norm(x, pos + ("par.L",), steps)
            y = _norm(y, pos + ("par.R",), steps)
            if y == A.Nil():
                steps.append(RewriteStep(pos, R.PAR_NIL_ELIM))
                return x
            if x == A.Nil():
                steps.append(RewriteStep(pos, R.PAR_COMM))
                steps.append(RewriteStep(pos, R.PAR_NIL_ELIM))
                return y
            return _sort_spine(_right_assoc(A.Par(x, y), pos, steps), pos, steps)
    for sel, c in children(b):
        b = with_child(b, sel, _norm(c, pos + (sel,), steps))
    return b


def _right_assoc(t: A.Behaviour, pos: Position, steps: list[RewriteStep]) -> A.Behaviour:
    while isinstance(t, A.Par) and isinstance(t.left, A.Par):
        steps.append(RewriteStep(pos, CongruenceRule.PAR_ASSOC_R))
        t = A.Par(t.left.left, A.Par(t.left.right, t.right))
    if isinstance(t, A.Par):
        t = A.Par(t.left, _right_assoc(t.right, pos + ("par.R",), steps))
    return t


def _sort_spine(t: A.Behaviour, pos: Position, steps: list[RewriteStep]) -> A.Behaviour:
    R = CongruenceRule
    items = _spine(t)
    keys = [_key(x) for x in items]
    n = len(items)
    # bubble sort by adjacent transpositions on the right-nested spine
    for end in range(n - 1, 0, -1):
        for i in range(end):
            if keys[i] <= keys[i + 1]:
                continue
            here = pos + ("par.R",) * i
            if i == n - 2:
                steps.append(RewriteStep(here, R.PAR_COMM))
            else:
                steps.append(RewriteStep(here, R.PAR_ASSOC_L))
                steps.append(RewriteStep(here + ("par.L",), R.PAR_COMM))
                steps.append(RewriteStep(here, R.PAR_ASSOC_R))
            items[i], items[i + 1] = items[i + 1], items[i]
            keys[i], keys[i + 1] = keys[i + 1], keys[i]
    return _right_nest(items)


def _cancel(steps: list[RewriteStep]) -> Trace:
    out: list[RewriteStep] = []
    for s in steps:
        if out and out[-1].pos == s.pos and out[-1].rule.inverse is s.rule and s.rule is not CongruenceRule.REFL:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


def congruent(b1: A.Behaviour, b2: A.Behaviour) -> Optional[Trace]:
    """A trace rewriting ``b1`` into ``b2``, or ``None`` when they are not congruent."""
    if b1 == b2:
        return ()
    n1, t1 = normalize_trace(b1)
    n2, t2 = normalize_trace(b2)
    if n1 != n2:
        return None
    back = [RewriteStep(p, r.inverse) for p, r in reversed(t2)]
    return _cancel(list(t1) + back)


# -- trace text format -------------------------------------------------------


def format_position(pos: Position) -> str:
    return ".".join(pos) if pos else "root"


def parse_position(text: str) -> Position:
    if text == "root":
        return ()
    parts = text.split(".")
    if len(parts) % 2:
        raise ValueError(f"malformed position {text!r}")
    return tuple(f"{parts[i]}.{parts[i + 1]}" for i in range(0, len(parts), 2))


def _under_port_body(pos: Position) -> bool:
    return any(s == "input.body" or s.startswith("eta.") for s in pos)


def format_trace(trace: Trace) -> str:
    lines = []
    for pos, rule in trace:
        line = f"{format_position(pos)}  {rule}"
        if _under_port_body(pos):
            line += "  # eta-body"
        lines.append(line)
    return "".join(line + "\n" for line in lines)


def parse_trace(text: str) -> Trace:
    steps = []
    by_name = {r.value: r for r in CongruenceRule}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        pos, name = line.split()
        steps.append(RewriteStep(parse_position(pos), by_name[name]))
    return tuple(steps)


# -- derivation transport ----------------------------------------------------

_PREMISE = {
    "seq.1": (Rule.SEQ, 0),
    "seq.2": (Rule.SEQ, 1),
    "par.L": (Rule.PAR, 0),
    "par.R": (Rule.PAR, 1),
    "if.then": (Rule.IF, 0),
    "if.else": (Rule.IF, 1),
    "while.body": (Rule.WHILE, 0),
    "input.body": (Rule.IN_REQRES, 0),
}


def _descend(d: Derivation, sel: str) -> Derivation:
    if sel in _PREMISE:
        rule, i = _PREMISE[sel]
        if d.rule is rule:
            return d.premises[i]
    elif d.rule is Rule.CHOICE:
        kind, _, idx = sel.partition(".")
        i = int(idx) if idx.isdigit() else len(d.premises)
        if i < len(d.premises):
            branch = d.premises[i]
            if kind == "choice":
                return branch.premises[1]
            if kind == "eta" and branch.premises[0].rule is Rule.IN_REQRES:
                return branch.premises[0].premises[0]
    raise TransportShapeError(f"no derivation premise for {sel!r} under {d.rule.value}")


def sub_derivation(d: Derivation, pos: Position) -> Derivation:
    for sel in pos:
        d = _descend(d, sel)
    return d


def _splice(d: Derivation, pos: Position, new: Derivation, b: A.Behaviour) -> Derivation:
    """Put ``new`` at ``pos`` in ``d``; ``b`` is the rewritten subject of ``d``."""
    if not pos:
        return new
    sel, rest = pos[0], pos[1:]
    inner = child(b, sel)
    if sel in _PREMISE:
        i = _PREMISE[sel][1]
        ps = list(d.premises)
        ps[i] = _splice(ps[i], rest, new, inner)
        return replace(d, subject=b, premises=tuple(ps))
    kind, _, idx = sel.partition(".")
    i = int(idx)
    eta, body = b.branches[i]
    branch = d.premises[i]
    inp, rhs = branch.premises
    if kind == "choice":
        rhs = _splice(rhs, rest, new, inner)
    else:
        inp = replace(inp, subject=A.Input(eta), premises=(_splice(inp.premises[0], rest, new, inner),))
    branch = replace(branch, subject=A.Seq(A.Input(eta), body), premises=(inp, rhs))
    ps = list(d.premises)
    ps[i] = branch
    return replace(d, subject=b, premises=tuple(ps))


def _par(d1: Derivation, d2: Derivation) -> Derivation:
    return Derivation(Rule.PAR, Fork(d1.pre, d2.pre), A.Par(d1.subject, d2.subject), Fork(d1.post, d2.post), (d1, d2))


def _nil(g: Context) -> Derivation:
    return Derivation(Rule.NIL, g, A.Nil(), g)


def _transport_here(d: Derivation, rule: CongruenceRule, aux: Context) -> Derivation:
    R = CongruenceRule
    match rule:
        case R.REFL:
            return d
        case R.NIL_SEQ_ELIM if d.rule is Rule.SEQ and d.premises[0].rule is Rule.NIL:
            return d.premises[1]
        case R.NIL_SEQ_INTRO:
            return Derivation(Rule.SEQ, d.pre, A.Seq(A.Nil(), d.subject), d.post, (_nil(d.pre), d))
        case R.PAR_NIL_ELIM if d.rule is Rule.PAR and d.premises[1].rule is Rule.NIL:
            return d.premises[0]
        case R.PAR_NIL_INTRO:
            return _par(d, _nil(aux))
        case R.PAR_COMM if d.rule is Rule.PAR:
            t1, t2 = d.premises
            return _par(t2, t1)
        case R.PAR_ASSOC_R if d.rule is Rule.PAR and d.premises[0].rule is Rule.PAR:
            (t1, t2), t3 = d.premises[0].premises, d.premises[1]
            return _par(t1, _par(t2, t3))
        case R.PAR_ASSOC_L if d.rule is Rule.PAR and d.premises[1].rule is Rule.PAR:
            t1, (t2, t3) = d.premises[0], d.premises[1].premises
            return _par(_par(t1, t2), t3)
    raise TransportShapeError(f"{rule} does not match a {d.rule.value} derivation")


def context_map(rule: CongruenceRule, aux: Context = EMPTY) -> Callable[[Context], Context]:
    """How ``rule`` rearranges the context of the derivation it is applied to."""
    R = CongruenceRule

    def f(g: Context) -> Context:
        match rule, g:
            case R.REFL | R.NIL_SEQ_ELIM | R.NIL_SEQ_INTRO, _:
                return g
            case R.PAR_COMM, Fork(a, b):
                return Fork(b, a)
            case R.PAR_ASSOC_R, Fork(Fork(a, b), c):
                return Fork(a, Fork(b, c))
            case R.PAR_ASSOC_L, Fork(a, Fork(b, c)):
                return Fork(Fork(a, b), c)
            case R.PAR_NIL_ELIM, Fork(a, _):
                return a
            case R.PAR_NIL_INTRO, _:
                return Fork(g, aux)
        raise TransportShapeError(f"{rule} cannot rearrange this context")

    return f


def _map_at(g: Context, address: tuple[str, ...], f: Callable[[Context], Context]) -> Context:
    if not address:
        return f(g)
    if not isinstance(g, Fork):
        raise TransportShapeError("context tree is shallower than the rewrite position")
    if address[0] == "par.L":
        return Fork(_map_at(g.left, address[1:], f), g.right)
    return Fork(g.left, _map_at(g.right, address[1:], f))


def transport(d: Derivation, step: tuple[Position, CongruenceRule], aux: Context = EMPTY) -> Derivation:
    """Turn a derivation for ``B1`` into one for ``apply_rule(B1, *step)``.

    At the rewritten node the derivation is rebuilt exactly per rule: a
    leading ``t-nil`` premise is dropped or added, parallel premises are
    swapped or reassociated together with their contexts, and ``aux`` is the
    context given to the ``nil`` that ``ParNilIntro`` adds.

    When the rewrite changes the contexts of that node and it sits below
    something other than parallel composition, the surrounding derivation is
    re-derived around it from the correspondingly rearranged root context.
    :class:`TransportShapeError` is raised if the node does not match the rule
    or if no such surrounding derivation exists.
    """
    pos, rule = step
    sub = sub_derivation(d, pos)
    new = _transport_here(sub, rule, aux)
    if not pos or rule is CongruenceRule.REFL:
        return _splice(d, pos, new, d.subject) if pos else new
    b2 = apply_rule(d.subject, pos, rule)
    if new.pre == sub.pre and new.post == sub.post:
        return _splice(d, pos, new, b2)
    address = tuple(s for s in pos if s.startswith("par."))
    g2 = _map_at(d.pre, address, context_map(rule, aux))
    try:
        return derive_around(g2, b2, pos, new)
    except (HoleMismatch, TypeCheckError) as exc:
        raise TransportShapeError(
            f"{rule} at {format_position(pos)} rearranges contexts that the surrounding derivation depends on"
        ) from exc


def transport_trace(d: Derivation, trace: Trace, aux: Context = EMPTY) -> Derivation:
    for step in trace:
        d = transport(d, step, aux)
    return d
