"""Flow-sensitive typing of behaviours: ``G |- B |> G'``.

:func:`check_behaviour` is the syntax-directed algorithm; it returns the
output context together with an explicit :class:`Derivation`.
:func:`verify_derivation` re-checks a derivation node by node against the rule
schemas without ever calling the algorithm.

Rules for nil, if, while, sequence and parallel composition form the core
fragment.  Assignment, communication and inputchoice rules are extensions
(``Rule.extension``) and are switched off with ``paper_core=True``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

from . import ast as A
from .context import (
    NUMERIC,
    Context,
    Fork,
    InputOneWay,
    InputReqRes,
    Leaf,
    MemberPath,
    NativeType,
    OutputOneWay,
    OutputReqRes,
    TypeDecl,
    find_first,
    lookup_var,
    replay,
    update_var,
    BadPath,
)

BOOL = NativeType.BOOL


class Rule(enum.Enum):
    NIL = "t-nil"
    IF = "t-if"
    WHILE = "t-while"
    SEQ = "t-seq"
    PAR = "t-par"
    ASSIGN = "t-assign"
    IN_ONEWAY = "t-in-oneway"
    IN_REQRES = "t-in-reqres"
    OUT_NOTIFY = "t-out-notify"
    OUT_SOLICIT = "t-out-solicit"
    CHOICE = "t-choice"

    @property
    def extension(self) -> bool:
        return self not in _CORE


_CORE = frozenset({Rule.NIL, Rule.IF, Rule.WHILE, Rule.SEQ, Rule.PAR})


class ErrorKind(enum.Enum):
    GUARD_NOT_BOOL = "GuardNotBool"
    BRANCH_CONTEXT_MISMATCH = "BranchContextMismatch"
    WHILE_CONTEXT_CHANGED = "WhileContextChanged"
    CONTEXT_SHAPE_MISMATCH = "ContextShapeMismatch"
    UNBOUND_VARIABLE = "UnboundVariable"
    UNKNOWN_OPERATION = "UnknownOperation"
    PAYLOAD_TYPE_MISMATCH = "PayloadTypeMismatch"
    UNSUPPORTED_CONSTRUCT = "UnsupportedConstruct"

    def __str__(self) -> str:
        return self.value


class TypeCheckError(Exception):
    """A behaviour (or expression) has no typing.  ``subject`` is the offending sub-behaviour."""

    def __init__(self, kind: ErrorKind, detail: str, subject: Optional[A.Behaviour] = None) -> None:
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail
        self.subject = subject


@dataclass(frozen=True)
class ExprTyping:
    context: Context
    expr: A.Expr
    type: NativeType


@dataclass(frozen=True)
class Derivation:
    rule: Rule
    pre: Context
    subject: A.Behaviour
    post: Context
    premises: tuple[Derivation, ...] = ()
    exprs: tuple[ExprTyping, ...] = ()
    # position of the port declaration used by communication rules
    witness: Optional[MemberPath] = None

    def nodes(self):
        yield self
        for p in self.premises:
            yield from p.nodes()


# -- expressions -------------------------------------------------------------


def type_of_expr(g: Context, e: A.Expr) -> NativeType:
    match e:
        case A.BoolLit():
            return BOOL
        case A.IntLit():
            return NativeType.INT
        case A.DoubleLit():
            return NativeType.DOUBLE
        case A.LongLit():
            return NativeType.LONG
        case A.StringLit():
            return NativeType.STRING
        case A.Var(x):
            found = lookup_var(x, g)
            if found is None:
                raise TypeCheckError(ErrorKind.UNBOUND_VARIABLE, f"variable x{x} is not declared")
            return found[0]
        case A.Not(a):
            t = type_of_expr(g, a)
            if t is not BOOL:
                raise TypeCheckError(ErrorKind.PAYLOAD_TYPE_MISMATCH, f"'!' needs bool, got {t}")
            return BOOL
        case A.BinOp(op, l, r):
            tl, tr = type_of_expr(g, l), type_of_expr(g, r)
            if op in ("and", "or"):
                if tl is not BOOL or tr is not BOOL:
                    raise TypeCheckError(
                        ErrorKind.PAYLOAD_TYPE_MISMATCH, f"'{op}' needs bool operands, got {tl} and {tr}"
                    )
            elif op == "eq":
                if tl is not tr:
                    raise TypeCheckError(ErrorKind.PAYLOAD_TYPE_MISMATCH, f"cannot compare {tl} with {tr}")
            elif tl is not tr or tl not in NUMERIC:
                raise TypeCheckError(
                    ErrorKind.PAYLOAD_TYPE_MISMATCH, f"'<' needs two equal numeric operands, got {tl} and {tr}"
                )
            return BOOL
    raise TypeError(f"not an expression: {e!r}")


# -- port declarations -------------------------------------------------------


def _port_pred(kind: type, op: str, loc: Optional[str] = None) -> Callable[[TypeDecl], bool]:
    if loc is None:
        return lambda d: type(d) is kind and d.op == op
    return lambda d: type(d) is kind and d.op == op and d.loc == loc


def lookup_port(kind: type, g: Context, op: str, loc: Optional[str] = None):
    """First declaration of ``kind`` for ``op`` (at ``loc``), as ``(path, decl)``."""
    return find_first(_port_pred(kind, op, loc), g)


# -- the algorithm -----------------------------------------------------------


class HoleMismatch(Exception):
    """Raised when a plugged sub-derivation does not fit the context reaching it."""


Position = tuple[str, ...]


class _Checker:
    def __init__(self, paper_core: bool = False, hole: Optional[tuple[Position, Derivation]] = None) -> None:
        self.paper_core = paper_core
        self.hole = hole

    def expr(self, g: Context, e: A.Expr, b: A.Behaviour) -> ExprTyping:
        try:
            return ExprTyping(g, e, type_of_expr(g, e))
        except TypeCheckError as exc:
            raise TypeCheckError(exc.kind, exc.detail, b) from None

    def guard(self, g: Context, e: A.Expr, b: A.Behaviour) -> ExprTyping:
        et = self.expr(g, e, b)
        if et.type is not BOOL:
            raise TypeCheckError(ErrorKind.GUARD_NOT_BOOL, f"guard has type {et.type}, expected bool", b)
        return et

    def extension(self, b: A.Behaviour, what: str) -> None:
        if self.paper_core:
            raise TypeCheckError(ErrorKind.UNSUPPORTED_CONSTRUCT, f"{what} is outside the core fragment", b)

    def check(self, g: Context, b: A.Behaviour, pos: Position = ()) -> Derivation:
        if self.hole is not None and pos == self.hole[0]:
            d = self.hole[1]
            if d.pre != g or d.subject != b:
                raise HoleMismatch(pos)
            return d
        match b:
            case A.Nil():
                return Derivation(Rule.NIL, g, b, g)
            case A.If(e, then, orelse):
                et = self.guard(g, e, b)
                d1 = self.check(g, then, pos + ("if.then",))
                d2 = self.check(g, orelse, pos + ("if.else",))
                if d1.post != d2.post:
                    raise TypeCheckError(
                        ErrorKind.BRANCH_CONTEXT_MISMATCH, "branches finish in different contexts", b
                    )
                return Derivation(Rule.IF, g, b, d1.post, (d1, d2), (et,))
            case A.While(e, body):
                et = self.guard(g, e, b)
                d = self.check(g, body, pos + ("while.body",))
                if d.post != g:
                    raise TypeCheckError(ErrorKind.WHILE_CONTEXT_CHANGED, "loop body changes the context", b)
                return Derivation(Rule.WHILE, g, b, g, (d,), (et,))
            case A.Seq(first, second):
                d1 = self.check(g, first, pos + ("seq.1",))
                d2 = self.check(d1.post, second, pos + ("seq.2",))
                return Derivation(Rule.SEQ, g, b, d2.post, (d1, d2))
            case A.Par(left, right):
                if not isinstance(g, Fork):
                    raise TypeCheckError(
                        ErrorKind.CONTEXT_SHAPE_MISMATCH, "parallel composition needs a '&' context", b
                    )
                d1 = self.check(g.left, left, pos + ("par.L",))
                d2 = self.check(g.right, right, pos + ("par.R",))
                return Derivation(Rule.PAR, g, b, Fork(d1.post, d2.post), (d1, d2))
            case A.Assign(x, e):
                self.extension(b, "assignment")
                et = self.expr(g, e, b)
                return Derivation(Rule.ASSIGN, g, b, update_var(x, et.type, g), (), (et,))
            case A.Input(eta):
                self.extension(b, "input")
                return self.input(g, b, eta, pos + ("input.body",))
            case A.Output(A.Notification(o, l, e)):
                self.extension(b, "output")
                path, decl = self.port(OutputOneWay, g, b, o, l)
                et = self.expr(g, e, b)
                if et.type is not decl.type:
                    raise TypeCheckError(
                        ErrorKind.PAYLOAD_TYPE_MISMATCH, f"{o}@{l} sends {decl.type}, got {et.type}", b
                    )
                return Derivation(Rule.OUT_NOTIFY, g, b, g, (), (et,), path)
            case A.Output(A.SolicitResponse(o, l, e, x)):
                self.extension(b, "output")
                path, decl = self.port(OutputReqRes, g, b, o, l)
                et = self.expr(g, e, b)
                if et.type is not decl.request:
                    raise TypeCheckError(
                        ErrorKind.PAYLOAD_TYPE_MISMATCH, f"{o}@{l} sends {decl.request}, got {et.type}", b
                    )
                return Derivation(Rule.OUT_SOLICIT, g, b, update_var(x, decl.response, g), (), (et,), path)
            case A.InputChoice(branches):
                self.extension(b, "inputchoice")
                ds = []
                for i, (eta, body) in enumerate(branches):
                    inp = A.Input(eta, span=eta.span)
                    d1 = self.input(g, inp, eta, pos + (f"eta.{i}",))
                    d2 = self.check(d1.post, body, pos + (f"choice.{i}",))
                    ds.append(Derivation(Rule.SEQ, g, A.Seq(inp, body), d2.post, (d1, d2)))
                out = ds[0].post
                if any(d.post != out for d in ds[1:]):
                    raise TypeCheckError(
                        ErrorKind.BRANCH_CONTEXT_MISMATCH, "inputchoice branches finish in different contexts", b
                    )
                return Derivation(Rule.CHOICE, g, b, out, tuple(ds))
            case A.Wait() | A.Exec():
                raise TypeCheckError(
                    ErrorKind.UNSUPPORTED_CONSTRUCT, f"{type(b).__name__.lower()} has no typing rule", b
                )
        raise TypeError(f"not a behaviour: {b!r}")

    def port(self, kind: type, g: Context, b: A.Behaviour, op: str, loc: Optional[str] = None):
        hit = lookup_port(kind, g, op, loc)
        if hit is None:
            where = op if loc is None else f"{op}@{loc}"
            raise TypeCheckError(ErrorKind.UNKNOWN_OPERATION, f"no declaration for {where}", b)
        return hit

    def input(self, g: Context, b: A.Behaviour, eta: A.Eta, body_pos: Position) -> Derivation:
        match eta:
            case A.OneWay(o, x):
                path, decl = self.port(InputOneWay, g, b, o)
                return Derivation(Rule.IN_ONEWAY, g, b, update_var(x, decl.type, g), witness=path)
            case A.RequestResponse(o, x, y, body):
                path, decl = self.port(InputReqRes, g, b, o)
                d = self.check(update_var(x, decl.request, g), body, body_pos)
                found = lookup_var(y, d.post)
                if found is None or found[0] is not decl.response:
                    got = "nothing" if found is None else str(found[0])
                    raise TypeCheckError(
                        ErrorKind.PAYLOAD_TYPE_MISMATCH, f"{o} replies {decl.response}, x{y} holds {got}", b
                    )
                return Derivation(Rule.IN_REQRES, g, b, d.post, (d,), witness=path)
        raise TypeError(f"not an input: {eta!r}")


def check_behaviour(g: Context, b: A.Behaviour, *, paper_core: bool = False) -> tuple[Context, Derivation]:
    """Type ``b`` from ``g``.  Raises :class:`TypeCheckError` when no rule applies."""
    d = _Checker(paper_core).check(g, b)
    return d.post, d


def derive_around(g: Context, b: A.Behaviour, pos: Position, sub: Derivation) -> Derivation:
    """Type ``b`` from ``g``, using ``sub`` verbatim as the derivation at ``pos``.

    Raises :class:`HoleMismatch` if the context flowing into ``pos`` is not
    ``sub.pre``, and :class:`TypeCheckError` if the surroundings do not type.
    """
    return _Checker(hole=(pos, sub)).check(g, b)


# -- independent verification ------------------------------------------------


def verify_derivation(d: Derivation) -> bool:
    """True iff every node of ``d`` is a correct instance of its rule."""
    try:
        return all(_node_ok(n) for n in d.nodes())
    except (TypeCheckError, BadPath):
        return False


def _expr_ok(et: ExprTyping, g: Context, e: A.Expr, want: Optional[NativeType] = None) -> bool:
    if et.context != g or et.expr != e:
        return False
    if want is not None and et.type is not want:
        return False
    return type_of_expr(g, e) is et.type


def _port_ok(n: Derivation, kind: type, op: str, loc: Optional[str] = None):
    """The declaration the witness points at, if it is the first matching one."""
    if n.witness is None:
        return None
    decl = replay(n.witness, n.pre)
    if lookup_port(kind, n.pre, op, loc) != (n.witness, decl):
        return None
    return decl


def _arity(n: Derivation, premises: int, exprs: int, witness: bool = False) -> bool:
    return len(n.premises) == premises and len(n.exprs) == exprs and (n.witness is not None) == witness


def _node_ok(n: Derivation) -> bool:
    g, b, ps = n.pre, n.subject, n.premises
    match n.rule, b:
        case Rule.NIL, A.Nil():
            return _arity(n, 0, 0) and n.post == g
        case Rule.IF, A.If(e, then, orelse):
            return (
                _arity(n, 2, 1)
                and _expr_ok(n.exprs[0], g, e, BOOL)
                and ps[0].pre == g
                and ps[0].subject == then
                and ps[1].pre == g
                and ps[1].subject == orelse
                and ps[0].post == ps[1].post == n.post
            )
        case Rule.WHILE, A.While(e, body):
            return (
                _arity(n, 1, 1)
                and _expr_ok(n.exprs[0], g, e, BOOL)
                and ps[0].pre == g
                and ps[0].subject == body
                and ps[0].post == g
                and n.post == g
            )
        case Rule.SEQ, A.Seq(first, second):
            return (
                _arity(n, 2, 0)
                and ps[0].pre == g
                and ps[0].subject == first
                and ps[1].pre == ps[0].post
                and ps[1].subject == second
                and n.post == ps[1].post
            )
        case Rule.PAR, A.Par(left, right):
            return (
                _arity(n, 2, 0)
                and isinstance(g, Fork)
                and ps[0].pre == g.left
                and ps[0].subject == left
                and ps[1].pre == g.right
                and ps[1].subject == right
                and n.post == Fork(ps[0].post, ps[1].post)
            )
        case Rule.ASSIGN, A.Assign(x, e):
            return (
                _arity(n, 0, 1)
                and _expr_ok(n.exprs[0], g, e)
                and n.post == update_var(x, n.exprs[0].type, g)
            )
        case Rule.IN_ONEWAY, A.Input(A.OneWay(o, x)):
            if not _arity(n, 0, 0, witness=True):
                return False
            decl = _port_ok(n, InputOneWay, o)
            return decl is not None and n.post == update_var(x, decl.type, g)
        case Rule.IN_REQRES, A.Input(A.RequestResponse(o, x, y, body)):
            if not _arity(n, 1, 0, witness=True):
                return False
            decl = _port_ok(n, InputReqRes, o)
            if decl is None:
                return False
            p = ps[0]
            found = lookup_var(y, p.post)
            return (
                p.pre == update_var(x, decl.request, g)
                and p.subject == body
                and found is not None
                and found[0] is decl.response
                and n.post == p.post
            )
        case Rule.OUT_NOTIFY, A.Output(A.Notification(o, l, e)):
            if not _arity(n, 0, 1, witness=True):
                return False
            decl = _port_ok(n, OutputOneWay, o, l)
            return decl is not None and _expr_ok(n.exprs[0], g, e, decl.type) and n.post == g
        case Rule.OUT_SOLICIT, A.Output(A.SolicitResponse(o, l, e, x)):
            if not _arity(n, 0, 1, witness=True):
                return False
            decl = _port_ok(n, OutputReqRes, o, l)
            return (
                decl is not None
                and _expr_ok(n.exprs[0], g, e, decl.request)
                and n.post == update_var(x, decl.response, g)
            )
        case Rule.CHOICE, A.InputChoice(branches):
            if not _arity(n, len(branches), 0):
                return False
            for p, (eta, body) in zip(ps, branches):
                if p.pre != g or p.subject != A.Seq(A.Input(eta), body) or p.post != n.post:
                    return False
            return True
    return False


# -- serialization -----------------------------------------------------------


def format_derivation(d: Derivation, names: Optional[dict[int, str]] = None) -> str:
    """One node per line, premises indented by two spaces; expression premises first."""
    from .parser import pretty_behaviour, pretty_context, pretty_expr

    lines: list[str] = []

    def emit(n: Derivation, depth: int) -> None:
        pad = "  " * depth
        tag = n.rule.value + (" [extension]" if n.rule.extension else "")
        lines.append(
            f"{pad}{tag}  {pretty_context(n.pre, names)} ⊢ {pretty_behaviour(n.subject, names)}"
            f" ▷ {pretty_context(n.post, names)}"
        )
        for et in n.exprs:
            lines.append(
                f"{pad}  expr  {pretty_context(et.context, names)} ⊢e {pretty_expr(et.expr, names)} : {et.type}"
            )
        for p in n.premises:
            emit(p, depth + 1)

    emit(d, 0)
    return "\n".join(lines) + "\n"
