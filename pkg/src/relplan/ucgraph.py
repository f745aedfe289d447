"""Random conversion-graph and problem generation, solving, and path oracles.

A conversion graph is a connected simple graph whose units are nodes and
whose conversion rules are edges carrying factors in Z_p*. Factors are
derived from hidden per-unit potentials (factor(u->v) = phi(v)/phi(u)), so
the product around every cycle is 1 and the answer to any conversion is
independent of the path taken.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Iterator, Sequence

from .errors import ConfigError, DataError, RelplanError
from .modmath import Direction, check_modulus, mod_inv, traverse
from .rng import stream

# Single letters are preferred unit labels; P/Q/R/S are reserved for the
# sequence grammar and the answer markers.
_LABEL_ALPHABET = tuple(c for c in "ABCDEFGHIJKLMNOPQRSTUVWXYZ" if c not in "PQRS")

MAX_GENERATION_ATTEMPTS = 10_000


class InsufficientEdges(ConfigError):
    """Fewer edges than needed to span the nodes."""


class TooManyEdges(ConfigError):
    """More edges than a simple graph on n nodes can carry."""


class NoPathOfLength(RelplanError):
    """The graph has no node pair at the requested distance; resample."""


class GenerationExhausted(RelplanError):
    """Resampling cap hit without producing a valid problem."""


class Presentation(Enum):
    AS_IS = "asis"
    FLIPPED = "flipped"


def unit_labels(n: int) -> tuple[str, ...]:
    """Deterministic unit labels: single letters, then letter pairs."""
    out = list(_LABEL_ALPHABET[:n])
    i = 0
    while len(out) < n:
        a, b = divmod(i, len(_LABEL_ALPHABET))
        out.append(_LABEL_ALPHABET[a] + _LABEL_ALPHABET[b])
        i += 1
    return tuple(out[:n])


@dataclass(frozen=True)
class ConversionRule:
    """One undirected conversion edge, stored with a fixed orientation.

    ``factor`` converts src-quantities to dst-quantities; ``presentation``
    says which direction the prompt states (FLIPPED prompts state dst->src
    with the inverted factor).
    """

    src: int
    dst: int
    factor: int
    presentation: Presentation = Presentation.AS_IS


@dataclass
class ConversionGraph:
    modulus: int
    labels: tuple[str, ...]
    rules: tuple[ConversionRule, ...]
    # Hidden generation artifact; never serialized, absent on graphs read
    # back from disk or built by hand.
    potentials: tuple[int, ...] | None = None

    @property
    def n_units(self) -> int:
        return len(self.labels)

    @cached_property
    def label_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self.labels]
        for r in self.rules:
            adj[r.src].append(r.dst)
            adj[r.dst].append(r.src)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def edge_rules(self) -> dict[tuple[int, int], ConversionRule]:
        out: dict[tuple[int, int], ConversionRule] = {}
        for r in self.rules:
            out[(r.src, r.dst)] = r
            out[(r.dst, r.src)] = r
        return out

    def rule_between(self, u: int, v: int) -> ConversionRule | None:
        return self.edge_rules.get((u, v))

    def directed_factor(self, u: int, v: int) -> int:
        """Factor converting u-quantities to v-quantities over the (u, v) edge."""
        rule = self.rule_between(u, v)
        if rule is None:
            raise DataError(f"no rule between {self.labels[u]} and {self.labels[v]}")
        if (rule.src, rule.dst) == (u, v):
            return rule.factor
        return mod_inv(rule.factor, self.modulus)

    def presented(self, rule: ConversionRule) -> tuple[int, int, int]:
        """(src, dst, factor) as the prompt states the rule."""
        if rule.presentation is Presentation.AS_IS:
            return rule.src, rule.dst, rule.factor
        return rule.dst, rule.src, mod_inv(rule.factor, self.modulus)


@dataclass(frozen=True)
class GenParams:
    n_nodes: int
    n_edges: int
    path_len: int
    modulus: int
    seed: int
    problem_index: int = 0

    def validate(self) -> "GenParams":
        check_modulus(self.modulus)
        if self.n_nodes < 2:
            raise ConfigError("need at least 2 nodes", field="n_nodes")
        if self.n_edges < self.n_nodes - 1:
            raise InsufficientEdges(
                f"{self.n_edges} edges cannot span {self.n_nodes} nodes", field="n_edges"
            )
        if self.n_edges > self.n_nodes * (self.n_nodes - 1) // 2:
            raise TooManyEdges(
                f"{self.n_edges} edges exceed simple-graph capacity for {self.n_nodes} nodes",
                field="n_edges",
            )
        if not 1 <= self.path_len < self.n_nodes:
            raise ConfigError(
                f"path_len must be in [1, {self.n_nodes - 1}], got {self.path_len}",
                field="path_len",
            )
        return self


@dataclass
class ProblemInstance:
    graph: ConversionGraph
    source_unit: int
    target_unit: int
    source_qty: int
    rule_order: tuple[int, ...]
    canonical_plan: tuple[int, ...]
    gt_answer: int
    problem_id: str

    def plan_labels(self) -> tuple[str, ...]:
        return tuple(self.graph.labels[u] for u in self.canonical_plan)


def generate_graph(params: GenParams, salt: int = 0) -> ConversionGraph:
    """Connected random graph: random spanning tree plus extra edges.

    Deterministic function of (seed, problem_index, salt); the salt lets the
    resampling loop draw fresh graphs for the same problem index.
    """
    params.validate()
    n, e, p = params.n_nodes, params.n_edges, params.modulus
    rng = stream(params.seed, params.problem_index, f"graph:{salt}")

    perm = rng.permutation(n)
    edges: list[tuple[int, int]] = []
    edge_set: set[frozenset[int]] = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        u, v = int(perm[j]), int(perm[i])
        edges.append((u, v))
        edge_set.add(frozenset((u, v)))

    max_edges = n * (n - 1) // 2
    extra = e - (n - 1)
    if extra > 0 and extra > (max_edges - (n - 1)) // 2:
        # Dense regime: choose the extras without replacement from the
        # explicit complement to avoid rejection-sampling stalls.
        non_edges = [
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if frozenset((u, v)) not in edge_set
        ]
        for k in rng.choice(len(non_edges), size=extra, replace=False):
            u, v = non_edges[int(k)]
            edges.append((u, v))
            edge_set.add(frozenset((u, v)))
    else:
        while len(edges) < e:
            u = int(rng.integers(0, n))
            v = int(rng.integers(0, n))
            if u == v or frozenset((u, v)) in edge_set:
                continue
            edges.append((u, v))
            edge_set.add(frozenset((u, v)))

    potentials = tuple(int(x) for x in rng.integers(1, p, size=n))
    presentations = rng.integers(0, 2, size=e)
    rules = tuple(
        ConversionRule(
            src=u,
            dst=v,
            factor=potentials[v] * mod_inv(potentials[u], p) % p,
            presentation=Presentation.FLIPPED if presentations[i] else Presentation.AS_IS,
        )
        for i, (u, v) in enumerate(edges)
    )
    return ConversionGraph(
        modulus=p, labels=unit_labels(n), rules=rules, potentials=potentials
    )


def bfs_distances(graph: ConversionGraph, src: int) -> list[int]:
    """Hop distances from src; -1 where unreachable."""
    dist = [-1] * graph.n_units
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for v in graph.adjacency[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def canonical_shortest_path(graph: ConversionGraph, s: int, t: int) -> tuple[int, ...]:
    """Lexicographically smallest shortest path by unit index sequence."""
    dist_t = bfs_distances(graph, t)
    if dist_t[s] < 0:
        raise DataError(f"{graph.labels[s]} and {graph.labels[t]} are disconnected")
    plan = [s]
    cur = s
    while cur != t:
        cur = min(v for v in graph.adjacency[cur] if dist_t[v] == dist_t[cur] - 1)
        plan.append(cur)
    return tuple(plan)


def problem_id_for(params: GenParams) -> str:
    return (
        f"uc-n{params.n_nodes}e{params.n_edges}L{params.path_len}"
        f"p{params.modulus}-s{params.seed}-{params.problem_index:06d}"
    )


def sample_problem(graph: ConversionGraph, params: GenParams, salt: int = 0) -> ProblemInstance:
    """Draw one problem at distance exactly path_len from a generated graph.

    Raises NoPathOfLength when the graph has no ordered pair at that
    distance, which tells the generation loop to resample the graph.
    """
    L = params.path_len
    pairs = [
        (s, t)
        for s in range(graph.n_units)
        for t, d in enumerate(bfs_distances(graph, s))
        if d == L
    ]
    if not pairs:
        raise NoPathOfLength(f"no node pair at distance {L}")

    rng = stream(params.seed, params.problem_index, f"problem:{salt}")
    s, t = pairs[int(rng.integers(0, len(pairs)))]
    qty = int(rng.integers(1, params.modulus))
    rule_order = tuple(int(i) for i in rng.permutation(len(graph.rules)))

    plan = canonical_shortest_path(graph, s, t)
    if graph.potentials is not None:
        phi = graph.potentials
        answer = qty * phi[t] * mod_inv(phi[s], graph.modulus) % graph.modulus
    else:
        answer = walk_quantity(graph, plan, qty)
    return ProblemInstance(
        graph=graph,
        source_unit=s,
        target_unit=t,
        source_qty=qty,
        rule_order=rule_order,
        canonical_plan=plan,
        gt_answer=answer,
        problem_id=problem_id_for(params),
    )


def make_problem(params: GenParams) -> ProblemInstance:
    """Generate-and-resample until a problem at the requested distance exists."""
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        graph = generate_graph(params, salt=attempt)
        try:
            return sample_problem(graph, params, salt=attempt)
        except NoPathOfLength:
            continue
    raise GenerationExhausted(
        f"no graph with a distance-{params.path_len} pair in "
        f"{MAX_GENERATION_ATTEMPTS} attempts"
    )


def walk_quantity(graph: ConversionGraph, plan: Sequence[int], qty: int) -> int:
    """Carry a quantity along a unit walk, one edge traversal per hop."""
    q = qty
    for u, v in zip(plan, plan[1:]):
        rule = graph.rule_between(u, v)
        if rule is None:
            raise DataError(f"no rule between {graph.labels[u]} and {graph.labels[v]}")
        d = Direction.FORWARD if (rule.src, rule.dst) == (u, v) else Direction.BACKWARD
        q = traverse(q, rule.factor, d, graph.modulus)
    return q


def solve(problem: ProblemInstance) -> tuple[int, tuple[int, ...]]:
    """Walk the canonical plan; returns (final quantity, plan)."""
    return walk_quantity(problem.graph, problem.canonical_plan, problem.source_qty), (
        problem.canonical_plan
    )


def enumerate_paths(
    graph: ConversionGraph,
    s: int,
    t: int,
    max_len: int,
    start_qty: int = 1,
) -> list[tuple[tuple[int, ...], int]]:
    """All simple paths s->t with at most max_len edges, with end quantities.

    Brute-force oracle for path-independence checks; max_len is capped at
    2 * n_nodes to keep accidental blowups loud.
    """
    if max_len > 2 * graph.n_units:
        raise ConfigError(f"max_len {max_len} exceeds 2*n_nodes cap", field="max_len")
    out: list[tuple[tuple[int, ...], int]] = []
    path = [s]
    on_path = {s}

    def dfs(u: int, qty: int) -> None:
        if u == t:
            out.append((tuple(path), qty))
            return
        if len(path) - 1 >= max_len:
            return
        for v in graph.adjacency[u]:
            if v in on_path:
                continue
            rule = graph.rule_between(u, v)
            d = Direction.FORWARD if (rule.src, rule.dst) == (u, v) else Direction.BACKWARD
            path.append(v)
            on_path.add(v)
            dfs(v, traverse(qty, rule.factor, d, graph.modulus))
            path.pop()
            on_path.remove(v)

    dfs(s, start_qty)
    return out


# --- serialization -----------------------------------------------------------
# problems.jsonl is the inter-component contract; key order is fixed.

def problem_to_obj(problem: ProblemInstance) -> dict:
    g = problem.graph
    return {
        "problem_id": problem.problem_id,
        "modulus": g.modulus,
        "units": list(g.labels),
        "rules": [
            {
                "src": g.labels[r.src],
                "dst": g.labels[r.dst],
                "factor": r.factor,
                "presentation": r.presentation.value,
            }
            for r in g.rules
        ],
        "rule_order": list(problem.rule_order),
        "source_unit": g.labels[problem.source_unit],
        "source_qty": problem.source_qty,
        "target_unit": g.labels[problem.target_unit],
        "canonical_plan": [g.labels[u] for u in problem.canonical_plan],
        "gt_answer": problem.gt_answer,
    }


def problem_to_json(problem: ProblemInstance) -> str:
    return json.dumps(problem_to_obj(problem), separators=(",", ":"))


def problem_from_obj(obj: dict) -> ProblemInstance:
    try:
        labels = tuple(obj["units"])
        index = {lab: i for i, lab in enumerate(labels)}
        rules = tuple(
            ConversionRule(
                src=index[r["src"]],
                dst=index[r["dst"]],
                factor=int(r["factor"]),
                presentation=Presentation(r["presentation"]),
            )
            for r in obj["rules"]
        )
        graph = ConversionGraph(modulus=int(obj["modulus"]), labels=labels, rules=rules)
        return ProblemInstance(
            graph=graph,
            source_unit=index[obj["source_unit"]],
            target_unit=index[obj["target_unit"]],
            source_qty=int(obj["source_qty"]),
            rule_order=tuple(int(i) for i in obj["rule_order"]),
            canonical_plan=tuple(index[u] for u in obj["canonical_plan"]),
            gt_answer=int(obj["gt_answer"]),
            problem_id=str(obj["problem_id"]),
        )
    except (KeyError, ValueError) as exc:
        raise DataError(f"malformed problem record: {exc}") from exc


def problem_from_json(line: str) -> ProblemInstance:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc}") from exc
    return problem_from_obj(obj)


def load_problems(path) -> dict[str, ProblemInstance]:
    """Read a problems.jsonl file into an id-keyed map."""
    out: dict[str, ProblemInstance] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                prob = problem_from_json(line)
                out[prob.problem_id] = prob
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return out


def iter_problems(params_base: GenParams, count: int, start_index: int = 0) -> Iterator[ProblemInstance]:
    """Generate ``count`` problems with consecutive problem indices."""
    for k in range(start_index, start_index + count):
        yield make_problem(replace(params_base, problem_index=k))
