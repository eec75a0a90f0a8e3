"""Concrete syntax for behaviours and contexts.

Behaviours::

    behaviour := seq ("|" behaviour)?
    seq       := atom (";" seq)?
    atom      := "nil" | "if" expr "then" atom "else" atom | "while" "[" expr "]" atom
               | var "=" expr | "(" behaviour ")" | input | output
               | "inputchoice" ("[" input "]" "{" behaviour "}")+
               | "wait" "(" chan "," op "," loc "," var ")"
               | "exec" "(" chan "," op "," var ")" "{" behaviour "}"
    input     := op "(" var ")" ( "(" var ")" "{" behaviour "}" )?
    output    := op "@" loc "(" expr ")" ( "(" var ")" )?

Contexts are ``&``-joined blocks ``{ x0 : int, o : <int>, o @ l : <int, bool> }``;
``&`` is left-associative and parentheses may group.  ``#`` starts a comment.

With an enumerator (``paths`` mode) variables are written as dotted paths such
as ``amount.fruit.apple`` and receive indices in order of first occurrence.
"""

from __future__ import annotations

import json
import math
import re
from typing import Optional

from . import ast as A
from .ast import SourceSpan
from .context import (
    Context,
    DuplicateDeclError,
    Fork,
    InputOneWay,
    InputReqRes,
    Leaf,
    NativeType,
    OutputOneWay,
    OutputReqRes,
    TypeDecl,
    VarDecl,
)

__all__ = [
    "ParseError",
    "EmptyChoiceError",
    "parse_behaviour",
    "parse_context",
    "parse_expr",
    "pretty_behaviour",
    "pretty_context",
    "pretty_decl",
    "pretty_expr",
]


class ParseError(SyntaxError):
    """Malformed input.  ``expected`` lists the tokens that would have been accepted."""

    def __init__(self, message: str, span: SourceSpan, expected: frozenset[str] = frozenset()) -> None:
        super().__init__(message)
        self.span = span
        self.expected = expected


class EmptyChoiceError(ParseError):
    pass


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<string>"(?:[^"\\\x00-\x1f]|\\.)*")
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?L?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>&&|\|\||==|[|&;=<>!()\[\]{},:@.])
    """,
    re.VERBOSE,
)

_VAR_RE = re.compile(r"x(0|[1-9][0-9]*)")

_TYPES = {t.value: t for t in NativeType}

_EOF = "end of input"


class _Token:
    __slots__ = ("kind", "text", "start", "end")

    def __init__(self, kind: str, text: str, start: int, end: int) -> None:
        self.kind = kind
        self.text = text
        self.start = start
        self.end = end

    def describe(self) -> str:
        return _EOF if self.kind == "eof" else repr(self.text)


def _tokenize(text: str) -> list[_Token]:
    if text.isascii():
        offs = None
    else:
        offs = [0]
        for ch in text:
            offs.append(offs[-1] + len(ch.encode("utf-8", "surrogatepass")))

    def at(i: int) -> int:
        return i if offs is None else offs[i]

    toks: list[_Token] = []
    pos, n = 0, len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}", SourceSpan(at(pos), at(pos + 1))
            )
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Token(kind, m.group(), at(m.start()), at(m.end())))
        pos = m.end()
    toks.append(_Token("eof", "", at(n), at(n)))
    return toks


class _Parser:
    def __init__(self, text: str, enumerator: Optional[A.VariableEnumerator]) -> None:
        self.toks = _tokenize(text)
        self.i = 0
        self.paths = enumerator

    # -- token plumbing --

    @property
    def tok(self) -> _Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("punct", "name") and t.text == text

    def fail(self, *expected: str, cls=ParseError):
        t = self.tok
        exp = ", ".join(sorted(expected))
        raise cls(
            f"expected {exp} but found {t.describe()}",
            SourceSpan(t.start, t.end),
            frozenset(expected),
        )

    def expect(self, text: str) -> _Token:
        if not self.at(text):
            self.fail(repr(text))
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def span_from(self, start: int) -> SourceSpan:
        return SourceSpan(start, self.toks[self.i - 1].end)

    def name(self, what: str) -> str:
        t = self.tok
        if t.kind != "name" or t.text in A.KEYWORDS:
            self.fail(what)
        self.i += 1
        return t.text

    def var(self) -> int:
        t = self.tok
        if self.paths is not None:
            return self.paths.index(self.path())
        if t.kind != "name" or not _VAR_RE.fullmatch(t.text):
            self.fail("variable")
        self.i += 1
        return int(t.text[1:])

    def path(self) -> A.VariablePath:
        segs = [self.name("variable path")]
        while self.accept("."):
            segs.append(self.name("path segment"))
        return A.VariablePath(tuple(segs))

    def end(self) -> None:
        if self.tok.kind != "eof":
            self.fail(_EOF)

    # -- behaviours --

    def behaviour(self) -> A.Behaviour:
        start = self.tok.start
        left = self.seq()
        if self.accept("|"):
            right = self.behaviour()
            return A.Par(left, right, span=self.span_from(start))
        return left

    def seq(self) -> A.Behaviour:
        start = self.tok.start
        first = self.atom()
        if self.accept(";"):
            second = self.seq()
            return A.Seq(first, second, span=self.span_from(start))
        return first

    def atom(self) -> A.Behaviour:
        t = self.tok
        start = t.start
        if self.accept("nil"):
            return A.Nil(span=self.span_from(start))
        if self.accept("if"):
            cond = self.expr()
            self.expect("then")
            then = self.atom()
            self.expect("else")
            orelse = self.atom()
            return A.If(cond, then, orelse, span=self.span_from(start))
        if self.accept("while"):
            self.expect("[")
            cond = self.expr()
            self.expect("]")
            body = self.atom()
            return A.While(cond, body, span=self.span_from(start))
        if self.accept("("):
            b = self.behaviour()
            self.expect(")")
            return b
        if self.accept("inputchoice"):
            return self.inputchoice(start)
        if self.accept("wait"):
            self.expect("(")
            chan = self.name("channel")
            self.expect(",")
            op = self.name("operation")
            self.expect(",")
            loc = self.name("location")
            self.expect(",")
            x = self.var()
            self.expect(")")
            return A.Wait(chan, op, loc, x, span=self.span_from(start))
        if self.accept("exec"):
            self.expect("(")
            chan = self.name("channel")
            self.expect(",")
            op = self.name("operation")
            self.expect(",")
            x = self.var()
            self.expect(")")
            body = self.block()
            return A.Exec(chan, op, x, body, span=self.span_from(start))
        if t.kind == "name" and t.text not in A.KEYWORDS:
            nxt = self.peek().text if self.peek().kind == "punct" else None
            if nxt == "(":
                return A.Input(self.input(), span=self.span_from(start))
            if nxt == "@":
                return A.Output(self.output(), span=self.span_from(start))
            if self.paths is not None or _VAR_RE.fullmatch(t.text):
                x = self.var()
                self.expect("=")
                e = self.expr()
                return A.Assign(x, e, span=self.span_from(start))
            self.i += 1
            self.fail("'('", "'@'")
        self.fail("behaviour")

    def block(self) -> A.Behaviour:
        self.expect("{")
        b = self.behaviour()
        self.expect("}")
        return b

    def inputchoice(self, start: int) -> A.Behaviour:
        branches = []
        while self.accept("["):
            if self.at("]"):
                self.fail("input", cls=EmptyChoiceError)
            eta = self.input()
            self.expect("]")
            branches.append((eta, self.block()))
        if not branches:
            self.fail("'['", cls=EmptyChoiceError)
        return A.InputChoice(tuple(branches), span=self.span_from(start))

    def input(self) -> A.Eta:
        start = self.tok.start
        op = self.name("operation")
        self.expect("(")
        x = self.var()
        self.expect(")")
        if self.accept("("):
            out = self.var()
            self.expect(")")
            body = self.block()
            return A.RequestResponse(op, x, out, body, span=self.span_from(start))
        return A.OneWay(op, x, span=self.span_from(start))

    def output(self) -> A.EtaHat:
        start = self.tok.start
        op = self.name("operation")
        self.expect("@")
        loc = self.name("location")
        self.expect("(")
        e = self.expr()
        self.expect(")")
        if self.accept("("):
            x = self.var()
            self.expect(")")
            return A.SolicitResponse(op, loc, e, x, span=self.span_from(start))
        return A.Notification(op, loc, e, span=self.span_from(start))

    # -- expressions --

    def expr(self) -> A.Expr:
        e = self.conj()
        while self.accept("||"):
            e = A.BinOp("or", e, self.conj())
        return e

    def conj(self) -> A.Expr:
        e = self.comparison()
        while self.accept("&&"):
            e = A.BinOp("and", e, self.comparison())
        return e

    def comparison(self) -> A.Expr:
        e = self.unary()
        while True:
            if self.accept("=="):
                e = A.BinOp("eq", e, self.unary())
            elif self.accept("<"):
                e = A.BinOp("lt", e, self.unary())
            else:
                return e

    def unary(self) -> A.Expr:
        if self.accept("!"):
            return A.Not(self.unary())
        return self.primary()

    def primary(self) -> A.Expr:
        t = self.tok
        if self.accept("true"):
            return A.BoolLit(True)
        if self.accept("false"):
            return A.BoolLit(False)
        if t.kind == "number":
            self.i += 1
            return _number(t)
        if t.kind == "string":
            self.i += 1
            try:
                return A.StringLit(json.loads(t.text))
            except ValueError as exc:
                raise ParseError(f"bad string literal: {exc}", SourceSpan(t.start, t.end)) from None
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name" and t.text not in A.KEYWORDS and (
            self.paths is not None or _VAR_RE.fullmatch(t.text)
        ):
            return A.Var(self.var())
        self.fail("expression")

    # -- contexts --

    def context(self) -> Context:
        g = self.context_atom()
        while self.accept("&"):
            g = Fork(g, self.context_atom())
        return g

    def context_atom(self) -> Context:
        if self.accept("("):
            g = self.context()
            self.expect(")")
            return g
        if not self.at("{"):
            self.fail("'{'", "'('")
        start = self.tok.start
        self.i += 1
        decls: list[TypeDecl] = []
        if not self.at("}"):
            decls.append(self.decl())
            while self.accept(","):
                decls.append(self.decl())
        self.expect("}")
        try:
            return Leaf(tuple(decls))
        except DuplicateDeclError as exc:
            raise DuplicateDeclError(str(exc), self.span_from(start)) from None

    def decl(self) -> TypeDecl:
        t = self.tok
        if t.kind != "name" or t.text in A.KEYWORDS:
            self.fail("declaration")
        nxt = self.peek()
        if nxt.text == "@":
            op = self.name("operation")
            self.expect("@")
            loc = self.name("location")
            self.expect(":")
            ts = self.payload()
            return OutputOneWay(op, loc, ts[0]) if len(ts) == 1 else OutputReqRes(op, loc, *ts)
        if nxt.text == ":" and self.peek(2).text == "<":
            op = self.name("operation")
            self.expect(":")
            ts = self.payload()
            return InputOneWay(op, ts[0]) if len(ts) == 1 else InputReqRes(op, *ts)
        x = self.var()
        self.expect(":")
        return VarDecl(x, self.type())

    def payload(self) -> tuple[NativeType, ...]:
        self.expect("<")
        ts = [self.type()]
        if self.accept(","):
            ts.append(self.type())
        self.expect(">")
        return tuple(ts)

    def type(self) -> NativeType:
        t = self.tok
        if t.kind == "name" and t.text in _TYPES:
            self.i += 1
            return _TYPES[t.text]
        self.fail(*(repr(k) for k in _TYPES))


def _number(t: _Token) -> A.Expr:
    text = t.text
    span = SourceSpan(t.start, t.end)
    if text.endswith("L"):
        if "." in text or "e" in text or "E" in text:
            raise ParseError(f"long literal must be an integer: {text}", span)
        return A.LongLit(int(text[:-1]))
    if "." in text or "e" in text or "E" in text:
        v = float(text)
        if not math.isfinite(v):
            raise ParseError(f"double literal out of range: {text}", span)
        return A.DoubleLit(v)
    return A.IntLit(int(text))


def _run(text: str | bytes, enumerator, rule):
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc.reason}", SourceSpan(exc.start, exc.end)) from None
    p = _Parser(text, enumerator)
    try:
        result = rule(p)
        p.end()
    except RecursionError:
        raise ParseError("input nested too deeply", SourceSpan(0, len(text.encode("utf-8", "surrogatepass")))) from None
    return result


def parse_behaviour(text: str | bytes, enumerator: Optional[A.VariableEnumerator] = None) -> A.Behaviour:
    """Parse a program.  Pass an enumerator to accept dotted variable paths."""
    return _run(text, enumerator, _Parser.behaviour)


def parse_context(text: str | bytes, enumerator: Optional[A.VariableEnumerator] = None) -> Context:
    return _run(text, enumerator, _Parser.context)


def parse_expr(text: str | bytes, enumerator: Optional[A.VariableEnumerator] = None) -> A.Expr:
    return _run(text, enumerator, _Parser.expr)


# -- pretty printing ---------------------------------------------------------

_OP_SYMBOL = {"or": "||", "and": "&&", "eq": "==", "lt": "<"}
_OP_LEVEL = {"or": 1, "and": 2, "eq": 3, "lt": 3}


def _var(x: int, names: Optional[dict[int, str]]) -> str:
    if names is not None and x in names:
        return names[x]
    return f"x{x}"


def pretty_expr(e: A.Expr, names: Optional[dict[int, str]] = None) -> str:
    return _pp_expr(e, 0, names)


def _pp_expr(e: A.Expr, need: int, names) -> str:
    match e:
        case A.BinOp(op, l, r):
            lvl = _OP_LEVEL[op]
            s = f"{_pp_expr(l, lvl, names)} {_OP_SYMBOL[op]} {_pp_expr(r, lvl + 1, names)}"
            return f"({s})" if lvl < need else s
        case A.Not(a):
            s = "!" + _pp_expr(a, 4, names)
            return f"({s})" if 4 < need else s
        case A.BoolLit(v):
            return "true" if v else "false"
        case A.IntLit(v):
            return str(v)
        case A.LongLit(v):
            return f"{v}L"
        case A.DoubleLit(v):
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"double literal {v} has no concrete syntax")
            return repr(v)
        case A.StringLit(v):
            return json.dumps(v, ensure_ascii=False)
        case A.Var(x):
            return _var(x, names)
    raise TypeError(f"not an expression: {e!r}")


def pretty_behaviour(b: A.Behaviour, names: Optional[dict[int, str]] = None) -> str:
    return _pp(b, 0, names)


def _pp_eta(eta: A.Eta | A.EtaHat, names) -> str:
    match eta:
        case A.OneWay(o, x):
            return f"{o}({_var(x, names)})"
        case A.RequestResponse(o, x, y, body):
            return f"{o}({_var(x, names)})({_var(y, names)}) {{ {_pp(body, 0, names)} }}"
        case A.Notification(o, l, e):
            return f"{o} @ {l}({_pp_expr(e, 0, names)})"
        case A.SolicitResponse(o, l, e, x):
            return f"{o} @ {l}({_pp_expr(e, 0, names)})({_var(x, names)})"
    raise TypeError(f"not a port action: {eta!r}")


def _pp(b: A.Behaviour, need: int, names) -> str:
    # levels: 1 = parallel, 2 = sequence, 3 = atom
    match b:
        case A.Par(l, r):
            lvl, s = 1, f"{_pp(l, 2, names)} | {_pp(r, 1, names)}"
        case A.Seq(l, r):
            lvl, s = 2, f"{_pp(l, 3, names)} ; {_pp(r, 2, names)}"
        case A.Nil():
            return "nil"
        case A.If(e, t, f):
            return f"if {_pp_expr(e, 0, names)} then {_pp(t, 3, names)} else {_pp(f, 3, names)}"
        case A.While(e, body):
            return f"while [ {_pp_expr(e, 0, names)} ] {_pp(body, 3, names)}"
        case A.Assign(x, e):
            return f"{_var(x, names)} = {_pp_expr(e, 0, names)}"
        case A.Input(eta) | A.Output(eta):
            return _pp_eta(eta, names)
        case A.InputChoice(branches):
            parts = [f"[{_pp_eta(eta, names)}] {{ {_pp(body, 0, names)} }}" for eta, body in branches]
            return "inputchoice " + " ".join(parts)
        case A.Wait(c, o, l, x):
            return f"wait({c}, {o}, {l}, {_var(x, names)})"
        case A.Exec(c, o, x, body):
            return f"exec({c}, {o}, {_var(x, names)}) {{ {_pp(body, 0, names)} }}"
        case _:
            raise TypeError(f"not a behaviour: {b!r}")
    return f"({s})" if lvl < need else s


def pretty_decl(d: TypeDecl, names: Optional[dict[int, str]] = None) -> str:
    match d:
        case VarDecl(x, t):
            return f"{_var(x, names)} : {t}"
        case InputOneWay(o, t):
            return f"{o} : <{t}>"
        case InputReqRes(o, t1, t2):
            return f"{o} : <{t1}, {t2}>"
        case OutputOneWay(o, l, t):
            return f"{o} @ {l} : <{t}>"
        case OutputReqRes(o, l, t1, t2):
            return f"{o} @ {l} : <{t1}, {t2}>"
    raise TypeError(f"not a declaration: {d!r}")


def pretty_context(g: Context, names: Optional[dict[int, str]] = None) -> str:
    return _pp_ctx(g, False, names)


def _pp_ctx(g: Context, grouped: bool, names) -> str:
    if isinstance(g, Leaf):
        if not g.decls:
            return "{ }"
        return "{ " + ", ".join(pretty_decl(d, names) for d in g.decls) + " }"
    s = f"{_pp_ctx(g.left, False, names)} & {_pp_ctx(g.right, True, names)}"
    return f"({s})" if grouped else s
