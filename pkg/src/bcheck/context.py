"""Native types, typed declarations and parallel typing contexts.

A :class:`Context` is a binary tree: :class:`Leaf` holds the ordered
declarations of one sequential process, :class:`Fork` composes two contexts
for a parallel behaviour.  Positions inside a context are addressed by
:data:`MemberPath` witnesses.
"""

from __future__ import annotations

import enum
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from typing import Optional, Union

from .ast import Location, Operation, Variable


class NativeType(enum.Enum):
    BOOL = "bool"
    INT = "int"
    DOUBLE = "double"
    LONG = "long"
    STRING = "string"
    RAW = "raw"
    VOID = "void"

    def __str__(self) -> str:
        return self.value


NUMERIC = frozenset({NativeType.INT, NativeType.DOUBLE, NativeType.LONG})


@dataclass(frozen=True)
class OutputOneWay:
    """``o@l : <T>``"""

    op: Operation
    loc: Location
    type: NativeType


@dataclass(frozen=True)
class OutputReqRes:
    """``o@l : <T, T'>``"""

    op: Operation
    loc: Location
    request: NativeType
    response: NativeType


@dataclass(frozen=True)
class InputOneWay:
    """``o : <T>``"""

    op: Operation
    type: NativeType


@dataclass(frozen=True)
class InputReqRes:
    """``o : <T, T'>``"""

    op: Operation
    request: NativeType
    response: NativeType


@dataclass(frozen=True)
class VarDecl:
    """``x : T``"""

    var: Variable
    type: NativeType


TypeDecl = Union[OutputOneWay, OutputReqRes, InputOneWay, InputReqRes, VarDecl]


class DuplicateDeclError(ValueError):
    def __init__(self, message: str, span=None) -> None:
        super().__init__(message)
        self.span = span


def _decl_key(d: TypeDecl) -> tuple:
    match d:
        case VarDecl(x, _):
            return ("var", x)
        case OutputOneWay(o, l, _) | OutputReqRes(o, l, _, _):
            return (type(d).__name__, o, l)
        case InputOneWay(o, _) | InputReqRes(o, _, _):
            return (type(d).__name__, o)
    raise TypeError(f"not a declaration: {d!r}")


@dataclass(frozen=True)
class Leaf:
    decls: tuple[TypeDecl, ...] = ()

    def __post_init__(self) -> None:
        seen: dict[tuple, TypeDecl] = {}
        for d in self.decls:
            key = _decl_key(d)
            if key not in seen:
                seen[key] = d
                continue
            prev = seen[key]
            if key[0] == "var":
                raise DuplicateDeclError(f"variable x{d.var} declared twice in one block")
            if prev != d:
                raise DuplicateDeclError(f"operation {d.op!r} declared with conflicting payloads")


@dataclass(frozen=True)
class Fork:
    left: Context
    right: Context


Context = Union[Leaf, Fork]

EMPTY = Leaf()


class Step(enum.Enum):
    HERE = "here"
    THERE = "there"
    LEFT = "left"
    RIGHT = "right"


MemberPath = tuple[Step, ...]


class BadPath(LookupError):
    pass


def replay(path: MemberPath, g: Context) -> TypeDecl:
    """Follow ``path`` through ``g`` and return the declaration it lands on."""
    i = 0
    for k, step in enumerate(path):
        match step, g:
            case Step.LEFT, Fork(left, _):
                g = left
            case Step.RIGHT, Fork(_, right):
                g = right
            case Step.THERE, Leaf(decls) if i < len(decls):
                i += 1
            case Step.HERE, Leaf(decls) if i < len(decls) and k == len(path) - 1:
                return decls[i]
            case _:
                raise BadPath(f"path {_fmt_path(path)} does not fit the context")
    raise BadPath(f"path {_fmt_path(path)} stops before reaching a declaration")


def _fmt_path(path: MemberPath) -> str:
    return "[" + ", ".join(s.value for s in path) + "]"


def find_first(pred: Callable[[TypeDecl], bool], g: Context) -> Optional[tuple[MemberPath, TypeDecl]]:
    """First declaration satisfying ``pred``: left subtree before right, front to back in a leaf."""
    match g:
        case Leaf(decls):
            for i, d in enumerate(decls):
                if pred(d):
                    return (Step.THERE,) * i + (Step.HERE,), d
            return None
        case Fork(left, right):
            hit = find_first(pred, left)
            if hit is not None:
                return (Step.LEFT,) + hit[0], hit[1]
            hit = find_first(pred, right)
            if hit is not None:
                return (Step.RIGHT,) + hit[0], hit[1]
            return None
    raise TypeError(f"not a context: {g!r}")


def member(d: TypeDecl, g: Context) -> Optional[MemberPath]:
    hit = find_first(lambda e: e == d, g)
    return None if hit is None else hit[0]


def lookup_var(x: Variable, g: Context) -> Optional[tuple[NativeType, MemberPath]]:
    hit = find_first(lambda e: isinstance(e, VarDecl) and e.var == x, g)
    if hit is None:
        return None
    path, d = hit
    return d.type, path


def _replace_at(g: Context, path: MemberPath, new: TypeDecl) -> Context:
    match g:
        case Fork(left, right):
            if path[0] is Step.LEFT:
                return Fork(_replace_at(left, path[1:], new), right)
            return Fork(left, _replace_at(right, path[1:], new))
        case Leaf(decls):
            i = len(path) - 1
            return Leaf(decls[:i] + (new,) + decls[i + 1:])
    raise TypeError(f"not a context: {g!r}")


def _append_leftmost(g: Context, new: TypeDecl) -> Context:
    match g:
        case Leaf(decls):
            return Leaf(decls + (new,))
        case Fork(left, right):
            return Fork(_append_leftmost(left, new), right)
    raise TypeError(f"not a context: {g!r}")


def update_var(x: Variable, t: NativeType, g: Context) -> Context:
    """Retype the first declaration of ``x``, or declare it in the leftmost leaf."""
    found = lookup_var(x, g)
    if found is None:
        return _append_leftmost(g, VarDecl(x, t))
    return _replace_at(g, found[1], VarDecl(x, t))


def context_equal(g1: Context, g2: Context) -> bool:
    return g1 == g2


def shape(g: Context) -> object:
    """The Fork/Leaf skeleton of ``g`` with leaves replaced by ``None``."""
    if isinstance(g, Leaf):
        return None
    return (shape(g.left), shape(g.right))


def leaves(g: Context) -> Iterator[Leaf]:
    if isinstance(g, Leaf):
        yield g
    else:
        yield from leaves(g.left)
        yield from leaves(g.right)
