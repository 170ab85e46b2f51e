import random
from fractions import Fraction

import pytest

from mergedse.analysis import build_call_graph
from mergedse.partition import (
    INF_BANDWIDTH, PartitionError, PartitionProblem, PartitionSolution,
    build_problem, check_solution, solve, solve_bruteforce,
)


def make_problem(n_orig, merged_spec, rng, budget_frac=0.4, latency=25,
                 bandwidth=INF_BANDWIDTH, call_prob=0.25):
    """Random instance. merged_spec: list of (child, parent, parent) tuples;
    parents may themselves be merged (depth 2)."""
    names = [f"f{i}" for i in range(n_orig)]
    merged = {c: (a, b) for c, a, b in merged_spec}
    allnames = names + [c for c, _, _ in merged_spec]

    callees = {x: set() for x in allnames}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if rng.random() < call_prob:
                callees[a].add(b)
    for a in reversed(names):
        for b in list(callees[a]):
            callees[a] |= callees[b]

    def merged_callees(mn):
        out = set()
        for p in merged[mn]:
            out |= merged_callees(p) if p in merged else callees[p]
        return out

    for mn in merged:
        callees[mn] = merged_callees(mn)

    sw = {x: Fraction(rng.randrange(0, 100), 10 ** 6) for x in allnames}
    hw = {x: Fraction(rng.randrange(0, 60), 10 ** 6) for x in allnames}
    for mn in merged:
        sw[mn] = Fraction(0)
    area = {x: float(rng.randrange(5, 50)) for x in allnames}
    calls, bts = {}, {}
    for a in allnames:
        for b in callees[a]:
            if rng.random() < 0.6:
                calls[(a, b)] = rng.randrange(1, 50)
                bts[(a, b)] = Fraction(rng.randrange(0, 4096))

    children = {x: set() for x in allnames}
    for c, a, b in merged_spec:
        children[a].add(c)
        children[b].add(c)
    descend = {}

    def desc(x):
        if x not in descend:
            out = set()
            for c in children[x]:
                out.add(c)
                out |= desc(c)
            descend[x] = out
        return descend[x]

    for x in allnames:
        desc(x)
    roots = {x for x in allnames if x not in merged}
    return PartitionProblem(
        allnames, sw, hw, area, callees, calls, bts, descend, roots,
        set(merged), latency=latency, bandwidth=bandwidth,
        clock=Fraction(1, 10 ** 9),
        area_budget=budget_frac * sum(area.values()))


def rand_problem(rng, n_orig=None, n_merged=None):
    n_orig = n_orig if n_orig is not None else rng.randrange(3, 10)
    n_merged = n_merged if n_merged is not None else rng.randrange(0, 4)
    names = [f"f{i}" for i in range(n_orig)]
    spec = []
    avail = list(names)
    for k in range(n_merged):
        if len(avail) < 2:
            break
        a, b = rng.sample(avail, 2)
        child = f"m{k}"
        spec.append((child, a, b))
        if rng.random() < 0.4:
            avail.append(child)  # enables depth-2 merge graphs
    return make_problem(n_orig, spec, rng,
                        budget_frac=rng.choice([0.0, 0.2, 0.4, 0.7, 1.0]),
                        latency=rng.choice([0, 25, 500]),
                        bandwidth=rng.choice([INF_BANDWIDTH, Fraction(10 ** 9),
                                              Fraction(4 * 10 ** 9)]))


def test_budget_zero_forces_software():
    rng = random.Random(0)
    p = make_problem(6, [("m0", "f0", "f1")], rng, budget_frac=0.0)
    s = solve(p)
    assert all(v == 0 for v in s.hwv.values())
    assert s.objective == sum((p.sw[r] for r in p.roots), Fraction(0))
    assert s.frontier == {}
    assert check_solution(p, s) == []


def test_generous_budget_dominant_hardware():
    rng = random.Random(1)
    p = make_problem(6, [], rng, budget_frac=1.0, latency=0)
    for x in p.names:
        p.hw[x] = p.sw[x] / 2 if p.sw[x] > 0 else Fraction(0)
        p.sw[x] = p.sw[x] + Fraction(1, 10 ** 6)
    s = solve(p)
    assert all(s.hwv.get(x, 0) == 1 for x in p.names)
    assert check_solution(p, s) == []


def test_single_function_prefers_cheap_hardware():
    p = PartitionProblem(
        ["f0"], {"f0": Fraction(10, 10 ** 6)}, {"f0": Fraction(2, 10 ** 6)},
        {"f0": 10.0}, {"f0": set()}, {}, {}, {"f0": set()}, {"f0"}, set(),
        latency=0, area_budget=20.0)
    s = solve_bruteforce(p)
    assert s.hwv == {"f0": 1}
    assert s.objective == Fraction(2, 10 ** 6)


def _merged_pair_problem(budget, hw_m, hw_parents):
    sw = {"f0": Fraction(40, 10 ** 6), "f1": Fraction(30, 10 ** 6),
          "m0": Fraction(0)}
    hw = {"f0": hw_parents[0], "f1": hw_parents[1], "m0": hw_m}
    area = {"f0": 30.0, "f1": 30.0, "m0": 35.0}
    return PartitionProblem(
        ["f0", "f1", "m0"], sw, hw, area,
        {"f0": set(), "f1": set(), "m0": set()}, {}, {},
        {"f0": {"m0"}, "f1": {"m0"}, "m0": set()},
        {"f0", "f1"}, {"m0"}, latency=0, area_budget=budget)


def test_merged_child_wins_under_tight_budget():
    # only the merged accelerator fits; it covers both parents
    p = _merged_pair_problem(40.0, hw_m=Fraction(20, 10 ** 6),
                             hw_parents=(Fraction(8, 10 ** 6),
                                         Fraction(6, 10 ** 6)))
    s = solve_bruteforce(p)
    assert s.hwv == {"m0": 1}
    assert s.swv == {}
    assert s.objective == Fraction(20, 10 ** 6)
    assert solve(p).objective == s.objective


def test_parents_win_at_larger_budget():
    # both parents fit and together beat the mux-burdened merged version
    p = _merged_pair_problem(70.0, hw_m=Fraction(20, 10 ** 6),
                             hw_parents=(Fraction(8, 10 ** 6),
                                         Fraction(6, 10 ** 6)))
    s = solve_bruteforce(p)
    assert s.hwv == {"f0": 1, "f1": 1}
    assert s.objective == Fraction(14, 10 ** 6)
    assert solve(p).objective == s.objective


def test_check_solution_reports_violations():
    rng = random.Random(5)
    p = make_problem(4, [("m0", "f0", "f1")], rng, budget_frac=1.0)
    # root doubly covered
    s = PartitionSolution({"f0": 1, "m0": 1}, {"f1": 1, "f2": 1, "f3": 1}, {},
                          Fraction(0))
    bad = check_solution(p, s)
    assert any("root-coverage" in b for b in bad)
    # hardware caller with an uncovered root callee
    caller = next((x for x in p.names if p.callees[x] & p.roots), None)
    if caller is not None:
        hwv = {caller: 1}
        swv = {x: 1 for x in p.roots if x != caller}
        s2 = PartitionSolution(hwv, swv, {}, Fraction(0))
        assert any("hw-callee" in b for b in check_solution(p, s2))
    # frontier below its lower bound
    s3 = PartitionSolution({"f1": 1}, {x: 1 for x in p.roots if x != "f1"}, {},
                           Fraction(0))
    callers = [x for x in p.names if "f1" in p.callees[x] and s3.swv.get(x)]
    if callers:
        assert any("frontier" in b for b in check_solution(p, s3))


def test_solver_matches_bruteforce_randomized():
    rng = random.Random(2024)
    for _ in range(300):
        p = rand_problem(rng)
        s1 = solve(p)
        s2 = solve_bruteforce(p)
        assert check_solution(p, s1) == []
        assert check_solution(p, s2) == []
        assert s1.objective == s2.objective
        assert s1.optimal


def test_budget_monotonicity():
    rng = random.Random(77)
    for _ in range(20):
        p = rand_problem(rng, n_orig=7, n_merged=2)
        total = sum(p.area.values())
        prev = None
        for frac in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
            p.area_budget = frac * total
            obj = solve(p).objective
            if prev is not None:
                assert obj <= prev
            prev = obj


def test_adding_merged_candidates_never_hurts():
    rng = random.Random(13)
    for _ in range(20):
        base = rand_problem(rng, n_orig=6, n_merged=0)
        with_merged = make_problem(
            6, [("m0", "f0", "f1"), ("m1", "f2", "f3")], rng,
            budget_frac=0.5)
        # align the shared constants so the instances differ only by M
        for x in base.names:
            with_merged.sw[x] = base.sw[x]
            with_merged.hw[x] = base.hw[x]
            with_merged.area[x] = base.area[x]
        with_merged.callees.update({x: set(base.callees[x]) for x in base.names})
        for mn in with_merged.merged:
            a, b = [p for p in ("f0", "f1")] if mn == "m0" else ["f2", "f3"]
            with_merged.callees[mn] = base.callees[a] | base.callees[b]
        with_merged.calls = dict(base.calls)
        with_merged.bytes_ = dict(base.bytes_)
        with_merged.latency = base.latency
        with_merged.bandwidth = base.bandwidth
        with_merged.area_budget = base.area_budget
        assert solve(with_merged).objective <= solve(base).objective


def test_frontier_exactly_on_paying_edges():
    rng = random.Random(31)
    for _ in range(40):
        p = rand_problem(rng, n_orig=6, n_merged=1)
        s = solve(p)
        expected = {}
        for i in p.names:
            if not s.swv.get(i, 0):
                continue
            for j in p.callees[i]:
                if s.hwv.get(j, 0):
                    expected[(i, j)] = 1
        assert s.frontier == expected


def test_zero_latency_infinite_bandwidth_knapsack_decomposition():
    # with no calls, no merges, free interconnect: a pure 0/1 knapsack over
    # per-function savings, checked against a direct dynamic program
    rng = random.Random(8)
    for _ in range(25):
        n = rng.randrange(3, 9)
        names = [f"f{i}" for i in range(n)]
        sw = {x: Fraction(rng.randrange(1, 60), 10 ** 6) for x in names}
        hw = {x: Fraction(rng.randrange(0, 60), 10 ** 6) for x in names}
        area = {x: float(rng.randrange(1, 20)) for x in names}
        budget = float(rng.randrange(0, 80))
        p = PartitionProblem(
            names, sw, hw, area, {x: set() for x in names}, {}, {},
            {x: set() for x in names}, set(names), set(),
            latency=0, bandwidth=INF_BANDWIDTH, area_budget=budget)
        got = solve(p).objective

        cap = int(budget)
        best = [Fraction(0)] * (cap + 1)
        for x in names:
            gain = max(sw[x] - hw[x], Fraction(0))
            w = int(area[x])
            if gain > 0:
                for c in range(cap, w - 1, -1):
                    cand = best[c - w] + gain
                    if cand > best[c]:
                        best[c] = cand
        expected = sum(sw.values()) - best[cap]
        assert got == expected


def test_build_problem_descend_and_roots(pair_module, area_model):
    from mergedse.merge import merge_functions
    m = pair_module.clone()
    mf = merge_functions(m, "sel_a", "sel_b")
    m.functions[mf.function.name] = mf.function
    cg = build_call_graph(m)
    from mergedse.cost import estimate_costs
    from mergedse.ir import interpret
    trace = interpret(pair_module, "sel_a", [2, 3, 1]).trace
    costs = estimate_costs(m, trace, area_model, cg)
    child = mf.function.name
    p = build_problem(m, costs, trace, {child: ("sel_a", "sel_b")},
                      area_budget=1000.0)
    assert p.descend["sel_a"] == {child}
    assert p.descend["sel_b"] == {child}
    assert child not in p.roots
    assert p.roots == set(m.functions) - {child}

    # no merged functions at all: descend empty, every function a root
    p2 = build_problem(pair_module, {n: costs[n] for n in pair_module.functions},
                       trace, {}, area_budget=10.0)
    assert all(not d for d in p2.descend.values())
    assert p2.roots == set(pair_module.functions)


def test_depth2_descend_transitive():
    rng = random.Random(4)
    p = make_problem(4, [("m0", "f0", "f1"), ("m1", "m0", "f2")], rng)
    assert p.descend["f0"] == {"m0", "m1"}
    assert p.descend["f2"] == {"m1"}
    assert "m1" in p.descend["f0"]
    s1, s2 = solve(p), solve_bruteforce(p)
    assert s1.objective == s2.objective


def test_bruteforce_rejects_large_instances():
    rng = random.Random(0)
    p = make_problem(21, [], rng)
    with pytest.raises(PartitionError, match="too large"):
        solve_bruteforce(p)
