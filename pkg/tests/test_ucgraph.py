import json

import pytest

from conftest import make
from relplan.errors import ConfigError, DataError
from relplan.modmath import mod_inv
from relplan.ucgraph import (
    ConversionGraph,
    ConversionRule,
    GenParams,
    GenerationExhausted,
    InsufficientEdges,
    NoPathOfLength,
    Presentation,
    TooManyEdges,
    bfs_distances,
    canonical_shortest_path,
    enumerate_paths,
    generate_graph,
    make_problem,
    problem_from_json,
    problem_to_json,
    sample_problem,
    solve,
    unit_labels,
    walk_quantity,
)
import relplan.ucgraph as ucgraph_mod


def params(n=10, e=12, L=5, p=5, seed=99, index=0) -> GenParams:
    return GenParams(
        n_nodes=n, n_edges=e, path_len=L, modulus=p, seed=seed, problem_index=index
    )


def test_unit_labels_disjoint_from_grammar():
    labs = unit_labels(40)
    assert len(set(labs)) == 40
    for lab in labs:
        assert lab.isalpha()
        assert not set(lab) & set("PQRS")
    assert labs[:3] == ("A", "B", "C")
    assert len(labs[25]) == 2


def test_param_validation():
    with pytest.raises(InsufficientEdges):
        generate_graph(params(n=5, e=3))
    with pytest.raises(TooManyEdges):
        generate_graph(params(n=5, e=11))
    with pytest.raises(ConfigError):
        generate_graph(params(n=5, e=5, L=5))  # path_len must be < n_nodes
    with pytest.raises(ConfigError):
        generate_graph(params(p=6))


def test_tree_when_edges_equal_nodes_minus_one():
    g = generate_graph(params(n=5, e=4, L=2))
    assert len(g.rules) == 4
    # connected with n-1 edges means acyclic
    assert all(d >= 0 for d in bfs_distances(g, 0))


def _fundamental_cycles_consistent(g: ConversionGraph) -> bool:
    """Tree path + non-tree edge product must be 1 for every extra edge."""
    parent = {0: None}
    order = [0]
    for u in order:
        for v in g.adjacency[u]:
            if v not in parent:
                parent[v] = u
                order.append(v)
    tree_edges = {frozenset((v, p)) for v, p in parent.items() if p is not None}

    def tree_path_factor(s, t):
        def path_to_root(x):
            out = [x]
            while parent[x] is not None:
                x = parent[x]
                out.append(x)
            return out
        sa, ta = path_to_root(s), path_to_root(t)
        common = set(sa) & set(ta)
        lca = next(x for x in sa if x in common)
        forward = sa[: sa.index(lca) + 1]
        back = ta[: ta.index(lca)]
        walk = forward + list(reversed(back))
        f = 1
        for a, b in zip(walk, walk[1:]):
            f = f * g.directed_factor(a, b) % g.modulus
        return f

    for r in g.rules:
        if frozenset((r.src, r.dst)) in tree_edges:
            continue
        around = tree_path_factor(r.src, r.dst) * g.directed_factor(r.dst, r.src)
        if around % g.modulus != 1:
            return False
    return True


def test_cycle_consistency_sample():
    for seed in range(40):
        g = generate_graph(params(seed=seed))
        assert all(d >= 0 for d in bfs_distances(g, 0)), "disconnected"
        assert _fundamental_cycles_consistent(g)


def test_factors_match_potentials():
    g = generate_graph(params(seed=7))
    phi = g.potentials
    for r in g.rules:
        assert r.factor == phi[r.dst] * mod_inv(phi[r.src], g.modulus) % g.modulus


def test_dense_graph_generation():
    g = generate_graph(params(n=6, e=15, L=2))  # complete graph
    pairs = {frozenset((r.src, r.dst)) for r in g.rules}
    assert len(pairs) == 15
    assert all(len(fs) == 2 for fs in pairs)


def test_presented_direction():
    g = generate_graph(params(seed=11))
    for r in g.rules:
        pu, pv, pf = g.presented(r)
        if r.presentation is Presentation.AS_IS:
            assert (pu, pv, pf) == (r.src, r.dst, r.factor)
        else:
            assert (pu, pv) == (r.dst, r.src)
            assert pf == mod_inv(r.factor, g.modulus)
        # presented factor always converts pu-quantities to pv-quantities
        assert pf == g.directed_factor(pu, pv)


def test_sample_problem_distance_and_plan():
    for seed in range(30):
        prob = make(seed=seed)
        g = prob.graph
        dist = bfs_distances(g, prob.source_unit)
        assert dist[prob.target_unit] == 5
        assert len(prob.canonical_plan) == 6
        assert prob.canonical_plan[0] == prob.source_unit
        assert prob.canonical_plan[-1] == prob.target_unit
        for u, v in zip(prob.canonical_plan, prob.canonical_plan[1:]):
            assert g.rule_between(u, v) is not None
        assert sorted(prob.rule_order) == list(range(len(g.rules)))
        assert 1 <= prob.source_qty <= 4


def test_canonical_plan_is_lex_smallest_shortest():
    for seed in range(20):
        prob = make(n=7, e=9, L=3, seed=seed)
        g = prob.graph
        shortest = [
            path
            for path, _ in enumerate_paths(g, prob.source_unit, prob.target_unit, 3)
            if len(path) == 4
        ]
        assert prob.canonical_plan == min(shortest)


def test_no_path_of_length():
    # path graph A-B-C-D has diameter 3
    g = ConversionGraph(
        modulus=5,
        labels=("A", "B", "C", "D"),
        rules=(
            ConversionRule(0, 1, 2),
            ConversionRule(1, 2, 3),
            ConversionRule(2, 3, 4),
        ),
    )
    with pytest.raises(NoPathOfLength):
        sample_problem(g, params(n=4, e=3, L=5))


def test_generation_exhausted(monkeypatch):
    monkeypatch.setattr(ucgraph_mod, "MAX_GENERATION_ATTEMPTS", 25)
    # complete graph on 3 nodes has diameter 1; distance-2 pairs never exist
    with pytest.raises(GenerationExhausted):
        make_problem(params(n=3, e=3, L=2))


def test_solve_worked_example(abc_problem):
    answer, plan = solve(abc_problem)
    assert answer == 4
    assert plan == (0, 1, 2)
    # step values: 2*3=6=1, then 1*4=4
    assert walk_quantity(abc_problem.graph, (0, 1), 2) == 1


def test_solve_degenerate_source_equals_target(abc_graph):
    assert walk_quantity(abc_graph, (1,), 3) == 3
    assert canonical_shortest_path(abc_graph, 1, 1) == (1,)


def test_solve_matches_potential_formula():
    for seed in range(60):
        prob = make(seed=seed)
        phi = prob.graph.potentials
        expected = (
            prob.source_qty
            * phi[prob.target_unit]
            * mod_inv(phi[prob.source_unit], prob.graph.modulus)
            % prob.graph.modulus
        )
        assert solve(prob)[0] == expected == prob.gt_answer


def test_path_independence():
    for seed in range(25):
        prob = make(seed=seed)
        paths = enumerate_paths(
            prob.graph, prob.source_unit, prob.target_unit,
            max_len=2 * prob.graph.n_units, start_qty=prob.source_qty,
        )
        assert paths, "no path found by oracle"
        assert {qty for _, qty in paths} == {prob.gt_answer}


def test_enumerate_paths_edge_cases(abc_graph):
    assert enumerate_paths(abc_graph, 0, 0, 4, start_qty=3) == [((0,), 3)]
    with pytest.raises(ConfigError):
        enumerate_paths(abc_graph, 0, 2, 100)
    two_comp = ConversionGraph(
        modulus=5,
        labels=("A", "B", "C", "D"),
        rules=(ConversionRule(0, 1, 2), ConversionRule(2, 3, 3)),
    )
    assert enumerate_paths(two_comp, 0, 3, 8) == []


def test_enumerate_paths_triangle_consistent():
    # triangle from potentials (1, 2, 3) mod 5
    phi = (1, 2, 3)
    p = 5
    rules = tuple(
        ConversionRule(u, v, phi[v] * mod_inv(phi[u], p) % p)
        for u, v in ((0, 1), (1, 2), (0, 2))
    )
    g = ConversionGraph(modulus=p, labels=("A", "B", "C"), rules=rules)
    paths = enumerate_paths(g, 0, 2, 2, start_qty=1)
    assert sorted(path for path, _ in paths) == [(0, 1, 2), (0, 2)]
    assert {qty for _, qty in paths} == {3}


def test_determinism_and_serialization_round_trip():
    a = make(seed=5, index=17)
    b = make(seed=5, index=17)
    assert problem_to_json(a) == problem_to_json(b)

    line = problem_to_json(a)
    back = problem_from_json(line)
    assert problem_to_json(back) == line
    assert back.gt_answer == a.gt_answer
    assert back.canonical_plan == a.canonical_plan
    assert back.graph.potentials is None  # hidden state never serialized

    obj = json.loads(line)
    assert list(obj) == [
        "problem_id", "modulus", "units", "rules", "rule_order",
        "source_unit", "source_qty", "target_unit", "canonical_plan", "gt_answer",
    ]


def test_distinct_indices_differ():
    lines = {problem_to_json(make(seed=5, index=i)) for i in range(8)}
    assert len(lines) == 8


def test_malformed_problem_record():
    with pytest.raises(DataError):
        problem_from_json("{not json")
    with pytest.raises(DataError):
        problem_from_json(json.dumps({"problem_id": "x"}))
