"""Acceptance criteria, one test each.  Every test records a PASS/FAIL line.

Pinned tolerances: runtime budgets are 60 s wall clock for criteria 1 and 2;
every other comparison is exact equality with zero allowed failures.
"""

import random
import time
from collections import Counter
from pathlib import Path

from bcheck import ast as A
from bcheck.checker import Rule, TypeCheckError, check_behaviour, verify_derivation
from bcheck.congruence import (
    CongruenceError,
    CongruenceRule as C,
    apply_rule,
    congruent,
    normalize,
    positions,
    replay_trace,
    transport,
)
from bcheck.context import Fork, Leaf, NativeType, VarDecl, InputOneWay, OutputReqRes
from bcheck.oracle import (
    FAULT_KINDS,
    EnumConfig,
    brute_force_check,
    congruence_classes,
    exhaustive_congruence_search,
    context_pool,
    enumerate_behaviours,
    expected_root_contexts,
    inject_faults,
)
from bcheck.parser import parse_behaviour, parse_context, pretty_behaviour, pretty_context

GOLDEN = Path(__file__).parent / "golden"
TIME_BUDGET = 60.0

POOL = context_pool()
CONTEXT_PRESERVING = {C.REFL, C.NIL_SEQ_ELIM, C.NIL_SEQ_INTRO}


def corpus(n):
    return list(enumerate_behaviours(EnumConfig(n)))


def test_criterion_1_transport_lemma(report):
    start = time.perf_counter()
    checked = 0
    failures = Counter()
    fidelity_bad = 0
    example = None
    for b in corpus(5):
        for g in POOL:
            try:
                _, d = check_behaviour(g, b)
            except TypeCheckError:
                continue
            for pos in positions(b):
                for rule in C:
                    try:
                        apply_rule(b, pos, rule)
                    except CongruenceError:
                        continue
                    checked += 1
                    try:
                        out = transport(d, (pos, rule))
                        ok = verify_derivation(out)
                    except CongruenceError:
                        out, ok = None, False
                    if ok and not pos:
                        want = expected_root_contexts(rule, d.pre, d.post)
                        if rule in CONTEXT_PRESERVING:
                            ok = (out.pre, out.post) == (d.pre, d.post)
                        else:
                            ok = (out.pre, out.post) == want
                        fidelity_bad += not ok
                    if not ok:
                        failures[rule.value, "root" if not pos else "nested"] += 1
                        if example is None:
                            example = f"{pretty_context(g)} ⊢ {pretty_behaviour(b)} at {'.'.join(pos) or 'root'} {rule}"
    elapsed = time.perf_counter() - start
    total = sum(failures.values())
    root_fail = sum(n for (r, where), n in failures.items() if where == "root")
    preserving_fail = sum(n for (r, where), n in failures.items() if r in {x.value for x in CONTEXT_PRESERVING})
    breakdown = ", ".join(f"{r}@{w}={n}" for (r, w), n in sorted(failures.items())) or "none"
    ok = total == 0 and elapsed <= TIME_BUDGET
    report(
        1,
        ok,
        f"{checked} transports, {total} failures ({breakdown}); root-step failures {root_fail}, "
        f"context-preserving-step failures {preserving_fail}, root-context mismatches {fidelity_bad}; "
        f"{elapsed:.1f}s (budget {TIME_BUDGET:.0f}s); first failure: {example}",
    )
    assert elapsed <= TIME_BUDGET
    assert total == 0, f"{total} transport failures, first: {example}"


def test_criterion_2_oracle_equivalence(report):
    start = time.perf_counter()
    instances = disagreements = nondeterministic = 0
    for b in corpus(6):
        for g in POOL:
            instances += 1
            found = brute_force_check(g, b)
            nondeterministic += len(found) > 1
            try:
                post, _ = check_behaviour(g, b)
                mine = {post}
            except TypeCheckError:
                mine = set()
            disagreements += {p for p, _ in found} != mine
    elapsed = time.perf_counter() - start
    ok = disagreements == 0 and nondeterministic == 0 and elapsed <= TIME_BUDGET
    report(2, ok, f"{instances} instances, {disagreements} disagreements, {nondeterministic} with >1 typing; {elapsed:.1f}s")
    assert disagreements == 0 and nondeterministic == 0
    assert elapsed <= TIME_BUDGET


def test_criterion_3_congruence_decision(report):
    terms = corpus(5)
    reach = congruence_classes(terms, depth=8)
    pairs = positive = disagreements = bad_replay = 0
    for i, b1 in enumerate(terms):
        for j in range(i, len(terms)):
            b2 = terms[j]
            pairs += 1
            trace = congruent(b1, b2)
            searched = j in reach[i]
            if (trace is not None) != searched:
                disagreements += 1
            if trace is not None:
                positive += 1
                bad_replay += replay_trace(b1, trace) != b2
    # Seq(b, nil) vs b: the decision must agree with search; the only congruent
    # fixtures are those where b itself collapses to nil.
    fixtures = [b for b in terms if A.size(b) <= 4 and b != A.Nil()]
    fixture_hits = fixture_bad = 0
    for b in fixtures:
        mine = congruent(A.Seq(b, A.Nil()), b) is not None
        searched = exhaustive_congruence_search(A.Seq(b, A.Nil()), b, depth=6) is not None
        fixture_hits += mine
        fixture_bad += mine != searched or (mine and congruent(b, A.Nil()) is None)
    ok = disagreements == 0 and bad_replay == 0 and fixture_bad == 0
    report(
        3,
        ok,
        f"{pairs} unordered pairs ({positive} congruent), {disagreements} disagreements with depth-8 search, "
        f"{bad_replay} bad replays; Seq(b, nil) vs b: {fixture_hits}/{len(fixtures)} congruent (all with b ~ nil), "
        f"{fixture_bad} fixture disagreements with depth-6 search",
    )
    assert ok


def test_criterion_4_normalization_laws(report):
    terms = corpus(6)
    not_idem = bad_trace = 0
    for b in terms:
        n = normalize(b)
        not_idem += normalize(n) != n
        tr = congruent(b, n)
        bad_trace += tr is None or replay_trace(b, tr) != n
    x, y, z = A.Assign(0, A.BoolLit(True)), A.Assign(0, A.Var(0)), A.While(A.BoolLit(True), A.Nil())
    multiset = normalize(A.Par(A.Par(z, x), y)) == normalize(A.Par(x, A.Par(y, z)))
    ok = not_idem == 0 and bad_trace == 0 and multiset
    report(4, ok, f"{len(terms)} terms: {not_idem} not idempotent, {bad_trace} without replayable trace; Par multiset canonical: {multiset}")
    assert ok


def _random_context(rng, depth=0):
    if depth < 3 and rng.random() < 0.4:
        return Fork(_random_context(rng, depth + 1), _random_context(rng, depth + 1))
    decls = {}
    for _ in range(rng.randrange(4)):
        t = rng.choice(list(NativeType))
        d = rng.choice(
            [VarDecl(rng.randrange(5), t), InputOneWay(rng.choice("op"), t), OutputReqRes("o", "l", t, t)]
        )
        key = ("v", d.var) if isinstance(d, VarDecl) else (type(d), d.op)
        decls.setdefault(key, d)
    return Leaf(tuple(decls.values()))


def test_criterion_5_reference_examples(report):
    paths = [A.VariablePath.parse(s) for s in ("amount", "amount.fruit.apple", "amount.fruit.description")]
    enum_ok = list(A.enumerate_variables(paths).values()) == [0, 1, 2]

    rng = random.Random(2024)
    samples = [_random_context(rng) for _ in range(100)]
    nil_ok = sum(
        post is g and d.rule is Rule.NIL and d.pre is g and d.post is g
        for g in samples
        for post, d in [check_behaviour(g, A.Nil())]
    )

    golden_ok = 0
    cases = [
        ("nil_seq_elim", "{ x0 : int }", "nil ; x0 = true", C.NIL_SEQ_ELIM, lambda d: d.premises[1]),
        ("par_comm", "{ x0 : bool } & { x1 : int }", "x0 = x0 | x1 = true", C.PAR_COMM, None),
        ("par_assoc", "({ x0 : bool } & { }) & { x0 : int }", "(x0 = false | nil) | while [ x0 < 3 ] nil", C.PAR_ASSOC_R, None),
    ]
    from bcheck.checker import format_derivation
    from bcheck.congruence import RewriteStep, format_trace

    for name, g, b, rule, _ in cases:
        _, d = check_behaviour(parse_context(g), parse_behaviour(b))
        out = transport(d, ((), rule))
        text = f"{format_derivation(d)}--- {format_trace((RewriteStep((), rule),))}{format_derivation(out)}"
        same_text = text == (GOLDEN / f"transport_{name}.txt").read_text(encoding="utf-8")
        if rule is C.NIL_SEQ_ELIM:
            # t-seq t-nil x = x
            body = d.premises[0].rule is Rule.NIL and out is d.premises[1]
        elif rule is C.PAR_COMM:
            # t-par t1 t2 = t-par t2 t1
            t1, t2 = d.premises
            body = out.rule is Rule.PAR and out.premises[0] is t2 and out.premises[1] is t1
        else:
            # t-par (t-par t1 t2) t3 = t-par t1 (t-par t2 t3)
            (t1, t2), t3 = d.premises[0].premises, d.premises[1]
            inner = out.premises[1]
            body = out.premises[0] is t1 and inner.rule is Rule.PAR and inner.premises == (t2, t3)
        golden_ok += same_text and body and verify_derivation(out)
    ok = enum_ok and nil_ok == 100 and golden_ok == 3
    report(5, ok, f"enumeration example {'matches' if enum_ok else 'differs'}; t-nil identity {nil_ok}/100; transport goldens {golden_ok}/3")
    assert ok


def test_criterion_6_round_trip(report):
    terms = corpus(7)
    bad_b = sum(parse_behaviour(pretty_behaviour(b)) != b for b in terms)
    bad_g = sum(parse_context(pretty_context(g)) != g for g in POOL)
    ok = bad_b == 0 and bad_g == 0
    report(6, ok, f"{len(terms)} behaviours ({bad_b} mismatches), {len(POOL)} contexts ({bad_g} mismatches)")
    assert ok


def test_criterion_7_fault_injection(report):
    injected = Counter()
    accepted = Counter()
    for b in corpus(5):
        for g in POOL:
            try:
                _, d = check_behaviour(g, b)
            except TypeCheckError:
                continue
            for kind in FAULT_KINDS:
                for bad in inject_faults(d, kind):
                    injected[kind] += 1
                    accepted[kind] += verify_derivation(bad)
    ok = all(injected[k] > 0 for k in FAULT_KINDS) and sum(accepted.values()) == 0
    detail = ", ".join(f"{k}: {injected[k] - accepted[k]}/{injected[k]} rejected" for k in FAULT_KINDS)
    report(7, ok, detail)
    assert ok
