"""Reference implementations used to cross-check the checker and congruence.

Nothing here calls :func:`bcheck.checker.check_behaviour`, the normal form or
``apply_rule``: the brute-force typer works relationally over sets of
candidate typings, and the rewrite search runs on its own hash-consed term
representation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional

from . import ast as A
from .checker import Derivation, ExprTyping, Rule
from .congruence import CongruenceRule, RewriteStep, Trace
from .context import (
    NUMERIC,
    Context,
    Fork,
    InputOneWay,
    InputReqRes,
    Leaf,
    NativeType,
    OutputOneWay,
    OutputReqRes,
    Step,
    VarDecl,
)

BOOL = NativeType.BOOL


# -- corpus ------------------------------------------------------------------


def default_leaves() -> tuple[Leaf, ...]:
    return (
        Leaf(()),
        Leaf((VarDecl(0, BOOL),)),
        Leaf((VarDecl(0, NativeType.INT),)),
        Leaf((InputOneWay("o", NativeType.INT), VarDecl(0, BOOL))),
    )


def context_pool(leaves: tuple[Leaf, ...] = (), max_leaves: int = 2) -> tuple[Context, ...]:
    """Every tree with 1..``max_leaves`` leaves drawn from ``leaves``."""
    leaves = leaves or default_leaves()

    @lru_cache(maxsize=None)
    def trees(n: int) -> tuple[Context, ...]:
        if n == 1:
            return leaves
        return tuple(Fork(l, r) for k in range(1, n) for l in trees(k) for r in trees(n - k))

    return tuple(g for n in range(1, max_leaves + 1) for g in trees(n))


@dataclass(frozen=True)
class EnumConfig:
    max_size: int
    variables: int = 1
    exprs: tuple[A.Expr, ...] = (A.BoolLit(True), A.Var(0))
    operations: tuple[str, ...] = ("o",)
    locations: tuple[str, ...] = ("l",)
    include_comm: bool = False
    contexts: tuple[Context, ...] = field(default_factory=context_pool)

    def __post_init__(self) -> None:
        if self.max_size < 0 or self.variables < 0:
            raise ValueError("enumeration bounds must be non-negative")


def _by_size(cfg: EnumConfig) -> list[list[A.Behaviour]]:
    xs = range(cfg.variables)
    table: list[list[A.Behaviour]] = [[]]
    for n in range(1, cfg.max_size + 1):
        out: list[A.Behaviour] = []
        if n == 1:
            out.append(A.Nil())
            out.extend(A.Assign(x, e) for x in xs for e in cfg.exprs)
            if cfg.include_comm:
                out.extend(A.Input(A.OneWay(o, x)) for o in cfg.operations for x in xs)
                for o, l, e in itertools.product(cfg.operations, cfg.locations, cfg.exprs):
                    out.append(A.Output(A.Notification(o, l, e)))
                    out.extend(A.Output(A.SolicitResponse(o, l, e, x)) for x in xs)
        else:
            out.extend(A.While(e, b) for e in cfg.exprs for b in table[n - 1])
            for i in range(1, n - 1):
                for a, b in itertools.product(table[i], table[n - 1 - i]):
                    out.append(A.Seq(a, b))
                    out.append(A.Par(a, b))
                    out.extend(A.If(e, a, b) for e in cfg.exprs)
            if cfg.include_comm:
                for o, x, y in itertools.product(cfg.operations, xs, xs):
                    out.extend(A.Input(A.RequestResponse(o, x, y, b)) for b in table[n - 1])
        table.append(out)
    return table


def enumerate_behaviours(cfg: EnumConfig) -> Iterator[A.Behaviour]:
    """Every behaviour with at most ``cfg.max_size`` nodes, once each, smallest first."""
    for level in _by_size(cfg):
        yield from level


# -- brute-force typing ------------------------------------------------------


def _entries(g: Context, path=()) -> Iterator[tuple[tuple, object]]:
    if isinstance(g, Leaf):
        for i, d in enumerate(g.decls):
            yield path + (Step.THERE,) * i + (Step.HERE,), d
    else:
        yield from _entries(g.left, path + (Step.LEFT,))
        yield from _entries(g.right, path + (Step.RIGHT,))


def _first(g: Context, pred):
    return next(((p, d) for p, d in _entries(g) if pred(d)), None)


def _var_types(g: Context, x: int) -> frozenset[NativeType]:
    hit = _first(g, lambda d: isinstance(d, VarDecl) and d.var == x)
    return frozenset() if hit is None else frozenset({hit[1].type})


def _expr_types(g: Context, e: A.Expr) -> frozenset[NativeType]:
    """All types ``e`` can be given in ``g`` (at most one for this grammar)."""
    match e:
        case A.BoolLit():
            return frozenset({BOOL})
        case A.IntLit():
            return frozenset({NativeType.INT})
        case A.DoubleLit():
            return frozenset({NativeType.DOUBLE})
        case A.LongLit():
            return frozenset({NativeType.LONG})
        case A.StringLit():
            return frozenset({NativeType.STRING})
        case A.Var(x):
            return _var_types(g, x)
        case A.Not(a):
            return frozenset({BOOL}) if BOOL in _expr_types(g, a) else frozenset()
        case A.BinOp(op, a, b):
            ta, tb = _expr_types(g, a), _expr_types(g, b)
            if op in ("and", "or"):
                ok = BOOL in ta and BOOL in tb
            elif op == "eq":
                ok = bool(ta & tb)
            else:
                ok = bool(ta & tb & NUMERIC)
            return frozenset({BOOL}) if ok else frozenset()
    raise TypeError(f"not an expression: {e!r}")


def _set_var(g: Context, x: int, t: NativeType) -> Context:
    paths = [p for p, d in _entries(g) if isinstance(d, VarDecl) and d.var == x]

    def go(g: Context, path) -> Context:
        if isinstance(g, Fork):
            if path and path[0] is Step.LEFT:
                return Fork(go(g.left, path[1:]), g.right)
            if path:
                return Fork(g.left, go(g.right, path[1:]))
            return Fork(go(g.left, path), g.right)
        if path:
            i = len(path) - 1
            return Leaf(g.decls[:i] + (VarDecl(x, t),) + g.decls[i + 1:])
        return Leaf(g.decls + (VarDecl(x, t),))

    return go(g, paths[0] if paths else ())


Typing = tuple[Context, Derivation]


@lru_cache(maxsize=1 << 18)
def _bf(g: Context, b: A.Behaviour, core: bool) -> frozenset[Typing]:
    out: set[Typing] = set()
    ext = not core
    match b:
        case A.Nil():
            out.add((g, Derivation(Rule.NIL, g, b, g)))
        case A.If(e, t, f):
            if BOOL in _expr_types(g, e):
                et = ExprTyping(g, e, BOOL)
                for (g1, d1), (g2, d2) in itertools.product(_bf(g, t, core), _bf(g, f, core)):
                    if g1 == g2:
                        out.add((g1, Derivation(Rule.IF, g, b, g1, (d1, d2), (et,))))
        case A.While(e, body):
            if BOOL in _expr_types(g, e):
                et = ExprTyping(g, e, BOOL)
                for g1, d1 in _bf(g, body, core):
                    if g1 == g:
                        out.add((g, Derivation(Rule.WHILE, g, b, g, (d1,), (et,))))
        case A.Seq(x, y):
            for g1, d1 in _bf(g, x, core):
                for g2, d2 in _bf(g1, y, core):
                    out.add((g2, Derivation(Rule.SEQ, g, b, g2, (d1, d2))))
        case A.Par(x, y) if isinstance(g, Fork):
            for (g1, d1), (g2, d2) in itertools.product(_bf(g.left, x, core), _bf(g.right, y, core)):
                post = Fork(g1, g2)
                out.add((post, Derivation(Rule.PAR, g, b, post, (d1, d2))))
        case A.Assign(x, e) if ext:
            for t in _expr_types(g, e):
                post = _set_var(g, x, t)
                out.add((post, Derivation(Rule.ASSIGN, g, b, post, (), (ExprTyping(g, e, t),))))
        case A.Input(eta) if ext:
            out.update(_bf_input(g, b, eta, core))
        case A.Output(A.Notification(o, l, e)) if ext:
            hit = _first(g, lambda d: type(d) is OutputOneWay and d.op == o and d.loc == l)
            if hit is not None and hit[1].type in _expr_types(g, e):
                et = ExprTyping(g, e, hit[1].type)
                out.add((g, Derivation(Rule.OUT_NOTIFY, g, b, g, (), (et,), hit[0])))
        case A.Output(A.SolicitResponse(o, l, e, x)) if ext:
            hit = _first(g, lambda d: type(d) is OutputReqRes and d.op == o and d.loc == l)
            if hit is not None and hit[1].request in _expr_types(g, e):
                post = _set_var(g, x, hit[1].response)
                et = ExprTyping(g, e, hit[1].request)
                out.add((post, Derivation(Rule.OUT_SOLICIT, g, b, post, (), (et,), hit[0])))
        case A.InputChoice(branches) if ext:
            per_branch = []
            for eta, body in branches:
                inp = A.Input(eta)
                opts = set()
                for g1, d1 in _bf_input(g, inp, eta, core):
                    for g2, d2 in _bf(g1, body, core):
                        opts.add((g2, Derivation(Rule.SEQ, g, A.Seq(inp, body), g2, (d1, d2))))
                per_branch.append(opts)
            for combo in itertools.product(*per_branch):
                posts = {p for p, _ in combo}
                if len(posts) == 1:
                    (post,) = posts
                    out.add((post, Derivation(Rule.CHOICE, g, b, post, tuple(d for _, d in combo))))
    return frozenset(out)


def _bf_input(g: Context, b: A.Behaviour, eta: A.Eta, core: bool) -> set[Typing]:
    out: set[Typing] = set()
    match eta:
        case A.OneWay(o, x):
            hit = _first(g, lambda d: type(d) is InputOneWay and d.op == o)
            if hit is not None:
                post = _set_var(g, x, hit[1].type)
                out.add((post, Derivation(Rule.IN_ONEWAY, g, b, post, witness=hit[0])))
        case A.RequestResponse(o, x, y, body):
            hit = _first(g, lambda d: type(d) is InputReqRes and d.op == o)
            if hit is not None:
                for g1, d1 in _bf(_set_var(g, x, hit[1].request), body, core):
                    if hit[1].response in _var_types(g1, y):
                        out.add((g1, Derivation(Rule.IN_REQRES, g, b, g1, (d1,), witness=hit[0])))
    return out


def brute_force_check(g: Context, b: A.Behaviour, *, paper_core: bool = False) -> frozenset[Typing]:
    """Every ``(output context, derivation)`` the rule system admits for ``g |- b``."""
    return _bf(g, b, paper_core)


# -- rewrite search on hash-consed terms ---------------------------------------

R = CongruenceRule

# node tuples: (tag, payload id, child id, ...)
_NIL, _SEQ, _PAR, _OTHER = 0, 1, 2, 3


class TermStore:
    """Hash-consing table; a term is an ``int``, equal terms get equal ids."""

    def __init__(self) -> None:
        self.ids: dict[tuple, int] = {}
        self.nodes: list[tuple] = []
        self._payload_ids: dict[object, int] = {}
        self._payloads: list[object] = []
        self._succ: dict[int, list[tuple[tuple[str, ...], CongruenceRule, int]]] = {}
        self.nil = self._intern((_NIL, 0))

    def _intern(self, node: tuple) -> int:
        i = self.ids.get(node)
        if i is None:
            i = self.ids[node] = len(self.nodes)
            self.nodes.append(node)
        return i

    def _payload(self, p: object) -> int:
        i = self._payload_ids.get(p)
        if i is None:
            i = self._payload_ids[p] = len(self._payloads)
            self._payloads.append(p)
        return i

    # Behaviour <-> id.  ``payload`` is the node with its children stripped,
    # together with the selector names of those children.
    def encode(self, b: A.Behaviour) -> int:
        match b:
            case A.Nil():
                return self.nil
            case A.Seq(x, y):
                return self._intern((_SEQ, 0, self.encode(x), self.encode(y)))
            case A.Par(x, y):
                return self._intern((_PAR, 0, self.encode(x), self.encode(y)))
        kids = _kids(b)
        skeleton = (_strip(b), tuple(s for s, _ in kids))
        return self._intern((_OTHER, self._payload(skeleton)) + tuple(self.encode(c) for _, c in kids))

    def decode(self, t: int) -> A.Behaviour:
        node = self.nodes[t]
        tag = node[0]
        if tag == _NIL:
            return A.Nil()
        if tag == _SEQ:
            return A.Seq(self.decode(node[2]), self.decode(node[3]))
        if tag == _PAR:
            return A.Par(self.decode(node[2]), self.decode(node[3]))
        skel, sels = self._payloads[node[1]]
        return _refill(skel, dict(zip(sels, (self.decode(c) for c in node[2:]))))

    def _selectors(self, node: tuple) -> tuple[str, ...]:
        tag = node[0]
        if tag == _SEQ:
            return ("seq.1", "seq.2")
        if tag == _PAR:
            return ("par.L", "par.R")
        if tag == _OTHER:
            return self._payloads[node[1]][1]
        return ()

    def _root_rewrites(self, t: int) -> Iterator[tuple[CongruenceRule, int]]:
        node = self.nodes[t]
        yield R.REFL, t
        yield R.NIL_SEQ_INTRO, self._intern((_SEQ, 0, self.nil, t))
        yield R.PAR_NIL_INTRO, self._intern((_PAR, 0, t, self.nil))
        if node[0] == _SEQ and node[2] == self.nil:
            yield R.NIL_SEQ_ELIM, node[3]
        if node[0] == _PAR:
            x, y = node[2], node[3]
            if y == self.nil:
                yield R.PAR_NIL_ELIM, x
            yield R.PAR_COMM, self._intern((_PAR, 0, y, x))
            ny = self.nodes[y]
            if ny[0] == _PAR:
                yield R.PAR_ASSOC_L, self._intern((_PAR, 0, self._intern((_PAR, 0, x, ny[2])), ny[3]))
            nx = self.nodes[x]
            if nx[0] == _PAR:
                yield R.PAR_ASSOC_R, self._intern((_PAR, 0, nx[2], self._intern((_PAR, 0, nx[3], y))))

    def successors(self, t: int) -> list[tuple[tuple[str, ...], CongruenceRule, int]]:
        """Every single-step rewrite of ``t`` (Refl excluded), with its position."""
        hit = self._succ.get(t)
        if hit is not None:
            return hit
        out = [((), r, u) for r, u in self._root_rewrites(t) if r is not R.REFL]
        node = self.nodes[t]
        for k, sel in enumerate(self._selectors(node)):
            for pos, r, c in self.successors(node[2 + k]):
                new = node[: 2 + k] + (c,) + node[3 + k:]
                out.append(((sel,) + pos, r, self._intern(new)))
        self._succ[t] = out
        return out

    def ball(self, t: int, radius: int) -> dict[int, int]:
        """Distance of every term reachable from ``t`` in at most ``radius`` steps."""
        dist = {t: 0}
        frontier = [t]
        for r in range(1, radius + 1):
            nxt = []
            for u in frontier:
                for _, _, v in self.successors(u):
                    if v not in dist:
                        dist[v] = r
                        nxt.append(v)
            frontier = nxt
        return dist


def _kids(b: A.Behaviour) -> list[tuple[str, A.Behaviour]]:
    match b:
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


def _strip(b: A.Behaviour) -> A.Behaviour:
    return _refill(b, {s: A.Nil() for s, _ in _kids(b)})


def _refill(b: A.Behaviour, kids: dict[str, A.Behaviour]) -> A.Behaviour:
    match b:
        case A.If(e, x, y):
            return A.If(e, kids["if.then"], kids["if.else"])
        case A.While(e, x):
            return A.While(e, kids["while.body"])
        case A.Exec(c, o, x, _):
            return A.Exec(c, o, x, kids["exec.body"])
        case A.Input(A.RequestResponse(o, x, y, _)):
            return A.Input(A.RequestResponse(o, x, y, kids["input.body"]))
        case A.InputChoice(branches):
            out = []
            for i, (eta, body) in enumerate(branches):
                if isinstance(eta, A.RequestResponse):
                    eta = A.RequestResponse(eta.op, eta.var, eta.out, kids[f"eta.{i}"])
                out.append((eta, kids[f"choice.{i}"]))
            return A.InputChoice(tuple(out))
    return b


def _path_to(parent: dict[int, tuple[int, RewriteStep]], t: int) -> list[RewriteStep]:
    steps = []
    while t in parent:
        t, step = parent[t]
        steps.append(step)
    steps.reverse()
    return steps


def _bfs_tree(store: TermStore, t: int, radius: int):
    dist = {t: 0}
    parent: dict[int, tuple[int, RewriteStep]] = {}
    frontier = [t]
    for r in range(1, radius + 1):
        nxt = []
        for u in frontier:
            for pos, rule, v in store.successors(u):
                if v not in dist:
                    dist[v] = r
                    parent[v] = (u, RewriteStep(pos, rule))
                    nxt.append(v)
        frontier = nxt
    return dist, parent


def exhaustive_congruence_search(
    b1: A.Behaviour, b2: A.Behaviour, depth: int = 8, store: Optional[TermStore] = None
) -> Optional[Trace]:
    """A shortest rewrite trace of length at most ``depth`` from ``b1`` to ``b2``, or ``None``.

    Searches breadth-first from both ends; every rule has an inverse at the
    same position, so the half from ``b2`` is reversed into forward steps.
    """
    store = store or TermStore()
    s, t = store.encode(b1), store.encode(b2)
    if s == t:
        return ()
    d1, p1 = _bfs_tree(store, s, (depth + 1) // 2)
    d2, p2 = _bfs_tree(store, t, depth // 2)
    meet = [(d1[m] + d2[m], m) for m in d1.keys() & d2.keys()]
    if not meet:
        return None
    _, m = min(meet)
    forward = _path_to(p1, m)
    backward = [RewriteStep(pos, rule.inverse) for pos, rule in reversed(_path_to(p2, m))]
    return tuple(forward + backward)


def congruence_classes(terms: list[A.Behaviour], depth: int = 8) -> list[set[int]]:
    """For each term index ``i``, the indices ``j`` with a path of length at most ``depth``.

    Pairs meet in the middle: ``j`` is listed iff the radius-``ceil(depth/2)``
    ball around ``i`` meets the radius-``floor(depth/2)`` ball around ``j``.
    Terms are first split by :func:`rewrite_invariant`, which no rule changes.
    """
    buckets: dict[object, list[int]] = {}
    for i, b in enumerate(terms):
        buckets.setdefault(rewrite_invariant(b), []).append(i)
    reach: list[set[int]] = [{i} for i in range(len(terms))]
    for members in buckets.values():
        if len(members) == 1:
            continue
        store = TermStore()
        ids = [store.encode(terms[i]) for i in members]
        hi, lo = (depth + 1) // 2, depth // 2
        small = {}
        for i, t in zip(members, ids):
            small[i] = set(store.ball(t, lo))
        for i, t in zip(members, ids):
            big = store.ball(t, hi).keys() if hi != lo else small[i]
            for j in members:
                if j != i and not small[j].isdisjoint(big):
                    reach[i].add(j)
    return reach


def rewrite_invariant(b: A.Behaviour) -> tuple:
    """Sorted payloads of every node other than nil, ``;`` and ``|``."""
    out = []
    stack = [b]
    while stack:
        x = stack.pop()
        match x:
            case A.Nil():
                continue
            case A.Seq(p, q) | A.Par(p, q):
                stack += [p, q]
                continue
        out.append(repr(_strip(x)))
        stack.extend(c for _, c in _kids(x))
    return tuple(sorted(out))


# -- fault injection ---------------------------------------------------------

FAULT_KINDS = ("if-branch-swap", "seq-threading", "par-comm-no-swap")


def _replace_node(d: Derivation, target: Derivation, new: Derivation) -> Derivation:
    if d is target:
        return new
    ps = tuple(_replace_node(p, target, new) for p in d.premises)
    if all(a is b for a, b in zip(ps, d.premises)):
        return d
    return Derivation(d.rule, d.pre, d.subject, d.post, ps, d.exprs, d.witness)


def _corrupt_node(n: Derivation, kind: str) -> Optional[Derivation]:
    if kind == "if-branch-swap" and n.rule is Rule.IF:
        t, e = n.premises
        if t.pre == t.post:
            return None
        bad = Derivation(t.rule, t.post, t.subject, t.pre, t.premises, t.exprs, t.witness)
        return Derivation(n.rule, n.pre, n.subject, n.post, (bad, e), n.exprs, n.witness)
    if kind == "seq-threading" and n.rule is Rule.SEQ:
        first, second = n.premises
        if second.pre == n.pre:
            return None
        bad = Derivation(second.rule, n.pre, second.subject, second.post, second.premises, second.exprs, second.witness)
        return Derivation(n.rule, n.pre, n.subject, n.post, (first, bad), n.exprs, n.witness)
    if kind == "par-comm-no-swap" and n.rule is Rule.PAR:
        t1, t2 = n.premises
        if t1.pre == t2.pre and t1.post == t2.post:
            return None
        return Derivation(n.rule, n.pre, A.Par(t2.subject, t1.subject), n.post, (t2, t1), n.exprs, n.witness)
    return None


def inject_faults(d: Derivation, kind: str) -> Iterator[Derivation]:
    """Every single-node corruption of ``kind`` that genuinely changes ``d``."""
    if kind not in FAULT_KINDS:
        raise ValueError(f"unknown fault kind {kind!r}")
    for n in d.nodes():
        bad = _corrupt_node(n, kind)
        if bad is not None:
            yield _replace_node(d, n, bad)


# -- self-test suites --------------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failed: int = 0
    # first failure in corpus order, i.e. a smallest one
    example: Optional[str] = None

    def record(self, ok: bool, describe) -> None:
        self.checked += 1
        if not ok:
            self.failed += 1
            if self.example is None:
                self.example = describe()


def expected_root_contexts(rule: CongruenceRule, pre: Context, post: Context, aux: Context = Leaf()):
    """Root contexts after transporting a root step, per the rule's case."""

    def move(g: Context) -> Context:
        match rule, g:
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
        return g

    return move(pre), move(post)


def run_selftest(max_size: int, fault: Optional[str] = None, pair_max: Optional[int] = None) -> list[SuiteResult]:
    from .checker import TypeCheckError, check_behaviour, verify_derivation
    from .congruence import (
        CongruenceError,
        apply_rule,
        congruent,
        normalize,
        positions,
        replay_trace,
        transport,
    )
    from .parser import parse_behaviour, parse_context, pretty_behaviour, pretty_context

    cfg = EnumConfig(max_size)
    corpus = list(enumerate_behaviours(cfg))
    pool = cfg.contexts

    def judgment(g: Context, b: A.Behaviour) -> str:
        return f"{pretty_context(g)} ⊢ {pretty_behaviour(b)}"

    agree = SuiteResult("oracle agreement")
    determinism = SuiteResult("oracle determinism")
    validity = SuiteResult("derivation validity")
    trans = SuiteResult("transport validity")
    fidelity = SuiteResult("transport root contexts")
    for b in corpus:
        for g in pool:
            found = brute_force_check(g, b)
            determinism.record(len(found) <= 1, lambda: f"{judgment(g, b)} has {len(found)} typings")
            try:
                post, d = check_behaviour(g, b)
                mine = {post}
            except TypeCheckError:
                d, mine = None, set()
            agree.record({p for p, _ in found} == mine, lambda: f"{judgment(g, b)}: checker and oracle disagree")
            if d is None:
                continue
            if fault is not None:
                d = next(inject_faults(d, fault), d)
            validity.record(verify_derivation(d), lambda: f"{judgment(g, b)}: derivation rejected")
            for pos in positions(b):
                for rule in CongruenceRule:
                    try:
                        apply_rule(b, pos, rule)
                    except CongruenceError:
                        continue
                    step = f"{'.'.join(pos) or 'root'} {rule}"
                    try:
                        d2 = transport(d, (pos, rule))
                        ok = verify_derivation(d2)
                        why = "result rejected by the verifier"
                    except CongruenceError as exc:
                        d2, ok, why = None, False, str(exc)
                    trans.record(ok, lambda: f"{judgment(g, b)}, step {step}: {why}")
                    if not pos and d2 is not None:
                        want = expected_root_contexts(rule, d.pre, d.post)
                        fidelity.record(
                            (d2.pre, d2.post) == want, lambda: f"{judgment(g, b)}, step {step}: root contexts wrong"
                        )

    laws = SuiteResult("normal form laws")
    trip = SuiteResult("parser round trip")
    for b in corpus:
        n = normalize(b)
        tr = congruent(b, n)
        laws.record(
            normalize(n) == n and tr is not None and replay_trace(b, tr) == n,
            lambda: f"{pretty_behaviour(b)}: normal form law broken",
        )
        trip.record(parse_behaviour(pretty_behaviour(b)) == b, lambda: f"{pretty_behaviour(b)} does not round-trip")
    # contexts only accompany a non-empty corpus, so size 0 stays vacuous
    for g in pool if corpus else ():
        trip.record(parse_context(pretty_context(g)) == g, lambda: f"{pretty_context(g)} does not round-trip")

    pairs = SuiteResult("congruence agreement")
    small = [b for b in corpus if A.size(b) <= (min(max_size, 4) if pair_max is None else pair_max)]
    reach = congruence_classes(small)
    for i, b1 in enumerate(small):
        for j, b2 in enumerate(small):
            tr = congruent(b1, b2)
            ok = (tr is not None) == (j in reach[i]) and (tr is None or replay_trace(b1, tr) == b2)
            pairs.record(ok, lambda: f"{pretty_behaviour(b1)} vs {pretty_behaviour(b2)}: decision differs from search")

    return [agree, determinism, validity, trans, fidelity, laws, trip, pairs]
