"""Abstract syntax of the behavioural layer.

Variables are plain natural numbers.  Dotted variable paths from the surface
language are flattened to indices by :func:`enumerate_variables` before any
typing happens.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from typing import Optional, Union

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

KEYWORDS = frozenset(
    {"nil", "if", "then", "else", "while", "inputchoice", "wait", "exec", "true", "false"}
)

Variable = int
Operation = str
Location = str
Channel = str


def _check_var(x: int) -> None:
    if not isinstance(x, int) or isinstance(x, bool) or x < 0:
        raise ValueError(f"variable index must be a natural number, got {x!r}")


def _check_name(name: str, what: str) -> None:
    if not isinstance(name, str) or not IDENT_RE.fullmatch(name) or name in KEYWORDS:
        raise ValueError(f"invalid {what} name {name!r}")


@dataclass(frozen=True)
class SourceSpan:
    """Half-open byte range ``[start, end)`` into the parsed source."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not 0 <= self.start <= self.end:
            raise ValueError(f"bad span {self.start}..{self.end}")


@dataclass(frozen=True)
class VariablePath:
    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("variable path needs at least one segment")
        for seg in self.segments:
            if not isinstance(seg, str) or not IDENT_RE.fullmatch(seg):
                raise ValueError(f"invalid path segment {seg!r}")

    @classmethod
    def parse(cls, text: str) -> VariablePath:
        return cls(tuple(text.split(".")))

    def __str__(self) -> str:
        return ".".join(self.segments)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class DoubleLit:
    value: float


@dataclass(frozen=True)
class LongLit:
    value: int


@dataclass(frozen=True)
class StringLit:
    value: str


@dataclass(frozen=True)
class Var:
    index: Variable

    def __post_init__(self) -> None:
        _check_var(self.index)


@dataclass(frozen=True)
class Not:
    operand: Expr


BINARY_OPS = ("and", "or", "eq", "lt")


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr

    def __post_init__(self) -> None:
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")


Expr = Union[BoolLit, IntLit, DoubleLit, LongLit, StringLit, Var, Not, BinOp]


def expr_variables(e: Expr) -> Iterator[Variable]:
    match e:
        case Var(x):
            yield x
        case Not(a):
            yield from expr_variables(a)
        case BinOp(_, a, b):
            yield from expr_variables(a)
            yield from expr_variables(b)


# -- behaviours --------------------------------------------------------------
#
# Every syntax node carries an optional source span.  Spans never take part in
# equality or hashing, so parsed and hand-built trees compare structurally.


@dataclass(frozen=True)
class Node:
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class OneWay(Node):
    """Input ``o(x)``."""

    op: Operation
    var: Variable

    def __post_init__(self) -> None:
        _check_name(self.op, "operation")
        _check_var(self.var)


@dataclass(frozen=True)
class RequestResponse(Node):
    """Input ``o(x)(x'){B}``: receive into ``var``, run ``body``, reply with ``out``."""

    op: Operation
    var: Variable
    out: Variable
    body: Behaviour

    def __post_init__(self) -> None:
        _check_name(self.op, "operation")
        _check_var(self.var)
        _check_var(self.out)


@dataclass(frozen=True)
class Notification(Node):
    """Output ``o@l(e)``."""

    op: Operation
    loc: Location
    expr: Expr

    def __post_init__(self) -> None:
        _check_name(self.op, "operation")
        _check_name(self.loc, "location")


@dataclass(frozen=True)
class SolicitResponse(Node):
    """Output ``o@l(e)(x)``; the response lands in ``var``."""

    op: Operation
    loc: Location
    expr: Expr
    var: Variable

    def __post_init__(self) -> None:
        _check_name(self.op, "operation")
        _check_name(self.loc, "location")
        _check_var(self.var)


Eta = Union[OneWay, RequestResponse]
EtaHat = Union[Notification, SolicitResponse]


@dataclass(frozen=True)
class Nil(Node):
    pass


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then: Behaviour
    orelse: Behaviour


@dataclass(frozen=True)
class While(Node):
    cond: Expr
    body: Behaviour


@dataclass(frozen=True)
class Seq(Node):
    first: Behaviour
    second: Behaviour


@dataclass(frozen=True)
class Par(Node):
    left: Behaviour
    right: Behaviour


@dataclass(frozen=True)
class Assign(Node):
    var: Variable
    expr: Expr

    def __post_init__(self) -> None:
        _check_var(self.var)


@dataclass(frozen=True)
class InputChoice(Node):
    branches: tuple[tuple[Eta, Behaviour], ...]

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("inputchoice needs at least one branch")


@dataclass(frozen=True)
class Wait(Node):
    chan: Channel
    op: Operation
    loc: Location
    var: Variable

    def __post_init__(self) -> None:
        _check_name(self.chan, "channel")
        _check_name(self.op, "operation")
        _check_name(self.loc, "location")
        _check_var(self.var)


@dataclass(frozen=True)
class Exec(Node):
    chan: Channel
    op: Operation
    var: Variable
    body: Behaviour

    def __post_init__(self) -> None:
        _check_name(self.chan, "channel")
        _check_name(self.op, "operation")
        _check_var(self.var)


@dataclass(frozen=True)
class Input(Node):
    eta: Eta


@dataclass(frozen=True)
class Output(Node):
    eta: EtaHat


Behaviour = Union[If, While, Seq, Par, Assign, Nil, InputChoice, Wait, Exec, Input, Output]


def size(b: Behaviour) -> int:
    """Number of behaviour nodes; expressions and port payloads count as part of their node."""
    match b:
        case Nil() | Assign() | Wait() | Output():
            return 1
        case Seq(x, y) | Par(x, y):
            return 1 + size(x) + size(y)
        case If(_, x, y):
            return 1 + size(x) + size(y)
        case While(_, x) | Exec(_, _, _, x):
            return 1 + size(x)
        case Input(RequestResponse(body=body)):
            return 1 + size(body)
        case Input():
            return 1
        case InputChoice(branches):
            n = 1
            for eta, body in branches:
                n += 1 + size(body)
                if isinstance(eta, RequestResponse):
                    n += size(eta.body)
            return n
    raise TypeError(f"not a behaviour: {b!r}")


def free_variables(b: Behaviour) -> frozenset[Variable]:
    """Every variable index mentioned anywhere in ``b``."""
    out: set[Variable] = set()
    _collect(b, out)
    return frozenset(out)


def _collect_eta(eta: Eta | EtaHat, out: set[Variable]) -> None:
    match eta:
        case OneWay(_, x):
            out.add(x)
        case RequestResponse(_, x, y, body):
            out.update((x, y))
            _collect(body, out)
        case Notification(_, _, e):
            out.update(expr_variables(e))
        case SolicitResponse(_, _, e, x):
            out.update(expr_variables(e))
            out.add(x)


def _collect(b: Behaviour, out: set[Variable]) -> None:
    match b:
        case Nil():
            pass
        case If(e, x, y):
            out.update(expr_variables(e))
            _collect(x, out)
            _collect(y, out)
        case While(e, x):
            out.update(expr_variables(e))
            _collect(x, out)
        case Seq(x, y) | Par(x, y):
            _collect(x, out)
            _collect(y, out)
        case Assign(x, e):
            out.add(x)
            out.update(expr_variables(e))
        case InputChoice(branches):
            for eta, body in branches:
                _collect_eta(eta, out)
                _collect(body, out)
        case Wait(_, _, _, x):
            out.add(x)
        case Exec(_, _, x, body):
            out.add(x)
            _collect(body, out)
        case Input(eta) | Output(eta):
            _collect_eta(eta, out)
        case _:
            raise TypeError(f"not a behaviour: {b!r}")


class VariableEnumerator:
    """Hands out indices 0, 1, 2, ... to paths in order of first sighting."""

    def __init__(self) -> None:
        self.mapping: dict[VariablePath, Variable] = {}

    def index(self, path: VariablePath) -> Variable:
        try:
            return self.mapping[path]
        except KeyError:
            n = self.mapping[path] = len(self.mapping)
            return n

    def names(self) -> dict[Variable, str]:
        return {i: str(p) for p, i in self.mapping.items()}


def enumerate_variables(paths: Iterable[VariablePath]) -> dict[VariablePath, Variable]:
    en = VariableEnumerator()
    for p in paths:
        en.index(p)
    return en.mapping
