"""Computation graphs: validation, parts, defining formulas, bounded rel().

A computation graph over an alphabet extended with a reserved pairing label
nu is a graph with at least one nu-edge, no nu self-loop, and rectangular
closure of the nu-edges.  The nu-edge sources form the input node set, the
targets the output node set; the two are disjoint and the nu-edges are
exactly their full bipartite product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from .errors import (
    BudgetExceeded,
    EmptyMiddle,
    MissingClosureEdge,
    NoNuEdge,
    NuSelfLoop,
    ReservedLabelInUse,
)
from .formula import (
    EdgeAtom,
    Eq,
    ExistsNode,
    ForallNode,
    Formula,
    Iff,
    Implies,
    In,
    NodeVar,
    Not,
    SetVar,
    conj,
)
from .graph import (
    Alphabet,
    Edge,
    Graph,
    Label,
    Node,
    build_graph,
    disjoint_union,
    find_isomorphism,
    graph_fingerprint,
    induced_subgraph,
)
from .ground import GraphSearch, SearchSpace, solver_satisfies
from .semantics import Assignment, satisfies

DEFAULT_ENUMERATION_CAP = 10_000_000


@dataclass(frozen=True)
class ComputationGraph:
    """A validated computation graph with its cached in/out node sets."""

    graph: Graph
    nu: Label
    in_nodes: FrozenSet[Node]
    out_nodes: FrozenSet[Node]


def validate(g: Graph, nu: Label) -> ComputationGraph:
    """Check the computation-graph conditions; errors pinpoint a witness."""
    if nu not in g.alphabet:
        raise ReservedLabelInUse(f"pairing label {nu} is not in the graph's alphabet")
    nu_edges = [(u, v) for u, l, v in g.edges if l == nu]
    if not nu_edges:
        raise NoNuEdge("a computation graph needs at least one nu-edge")
    for u, v in nu_edges:
        if u == v:
            raise NuSelfLoop(u)
    nu_set = set(nu_edges)
    for (u, _), (_, v2) in itertools.product(nu_edges, repeat=2):
        if (u, v2) not in nu_set:
            raise MissingClosureEdge(u, v2)
    in_nodes = frozenset(u for u, _ in nu_edges)
    out_nodes = frozenset(v for _, v in nu_edges)
    # Disjointness follows from closure plus no-self-loop; keep the guard.
    assert not (in_nodes & out_nodes), "in/out overlap despite closure and no self-loop"
    return ComputationGraph(g, nu, in_nodes, out_nodes)


def input_graph(h: ComputationGraph) -> Graph:
    return induced_subgraph(h.graph, h.in_nodes)


def output_graph(h: ComputationGraph) -> Graph:
    return induced_subgraph(h.graph, h.out_nodes)


def middle_graph(h: ComputationGraph) -> Graph:
    mid = h.graph.nodes - h.in_nodes - h.out_nodes
    if not mid:
        raise EmptyMiddle("no nodes outside the nu-edge endpoints")
    return induced_subgraph(h.graph, mid)


def make_pair(g: Graph, g2: Graph, nu: Label) -> ComputationGraph:
    """Disjoint union of g and g2 joined by the full set of nu-edges."""
    if nu in g.alphabet or nu in g2.alphabet:
        raise ReservedLabelInUse(f"pairing label {nu} already occurs in an operand alphabet")
    union, emb1, emb2 = disjoint_union(g, g2)
    nu_edges = frozenset(
        (emb1[u], nu, emb2[v]) for u in g.nodes for v in g2.nodes
    )
    full = Graph(union.nodes, union.edges | nu_edges, union.alphabet.with_labels(nu))
    return validate(full, nu)


# ---------------------------------------------------------------------------
# Defining formulas
# ---------------------------------------------------------------------------

def computation_graph_formula(psi: Alphabet, nu: Label) -> Formula:
    """Closed formula satisfied exactly by the valid computation graphs."""
    if nu in psi:
        raise ReservedLabelInUse(f"pairing label {nu} must not be in the base alphabet")
    u, v = NodeVar("cg_u"), NodeVar("cg_v")
    u2, v2 = NodeVar("cg_u2"), NodeVar("cg_v2")
    some_nu = ExistsNode(u, ExistsNode(v, EdgeAtom(nu, u, v)))
    no_loop = ForallNode(u, Not(EdgeAtom(nu, u, u)))
    closure = ForallNode(
        u,
        ForallNode(
            v,
            ForallNode(
                u2,
                ForallNode(
                    v2,
                    Implies(
                        conj([EdgeAtom(nu, u, v), EdgeAtom(nu, u2, v2)]),
                        EdgeAtom(nu, u, v2),
                    ),
                ),
            ),
        ),
    )
    return conj([some_nu, no_loop, closure])


def in_set_formula(nu: Label, var: SetVar = SetVar("X")) -> Formula:
    """Free `var` holds exactly the nodes with an outgoing nu-edge."""
    u, v = NodeVar("ins_u"), NodeVar("ins_v")
    return ForallNode(u, Iff(In(u, var), ExistsNode(v, EdgeAtom(nu, u, v))))


def out_set_formula(nu: Label, var: SetVar = SetVar("X")) -> Formula:
    """Free `var` holds exactly the nodes with an incoming nu-edge."""
    u, v = NodeVar("outs_u"), NodeVar("outs_v")
    return ForallNode(u, Iff(In(u, var), ExistsNode(v, EdgeAtom(nu, v, u))))


# ---------------------------------------------------------------------------
# Bounded enumeration
# ---------------------------------------------------------------------------

def enumerate_graphs(
    psi: Alphabet, max_nodes: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[Graph]:
    """Every graph over psi with 1..max_nodes nodes, once up to isomorphism.

    Nodes are 1..n.  At n <= 6 only lexicographically minimal adjacency
    encodings are emitted; above that, generate-then-dedup.  The cap counts
    labeled candidates generated and raises BudgetExceeded when hit.
    """
    if max_nodes < 1:
        raise ValueError("max_nodes must be at least 1")
    labels = sorted(psi.members)
    generated = 0
    for n in range(1, max_nodes + 1):
        nodes = list(range(1, n + 1))
        cells = [(u, l, v) for u in nodes for v in nodes for l in labels]
        cell_index = {c: i for i, c in enumerate(cells)}
        perms = [p for p in itertools.permutations(nodes) if p != tuple(nodes)]
        # Per permutation: bit position i moves to bit_maps[p][i].
        bit_maps = []
        for p in perms:
            pm = {old: new for old, new in zip(nodes, p)}
            bit_maps.append([cell_index[(pm[u], l, pm[v])] for (u, l, v) in cells])
        seen_classes: Dict[Tuple, List[Graph]] = {}
        for mask in range(1 << len(cells)):
            generated += 1
            if generated > cap:
                raise BudgetExceeded(
                    f"graph enumeration exceeded the candidate cap of {cap}"
                )
            if n <= 6:
                if not _lex_minimal(mask, bit_maps):
                    continue
                edges = [c for i, c in enumerate(cells) if mask >> i & 1]
                yield build_graph(nodes, edges, psi)
            else:
                edges = [c for i, c in enumerate(cells) if mask >> i & 1]
                g = build_graph(nodes, edges, psi)
                key = graph_fingerprint(g)
                bucket = seen_classes.setdefault(key, [])
                if any(find_isomorphism(g, other) for other in bucket):
                    continue
                bucket.append(g)
                yield g


def _lex_minimal(mask: int, bit_maps) -> bool:
    for bm in bit_maps:
        permuted = 0
        m = mask
        while m:
            low = m & -m
            permuted |= 1 << bm[low.bit_length() - 1]
            m ^= low
        if permuted < mask:
            return False
    return True


# ---------------------------------------------------------------------------
# rel(H) up to a node bound
# ---------------------------------------------------------------------------

class GraphPairSet:
    """Graph pairs deduplicated up to componentwise isomorphism."""

    def __init__(self):
        self._buckets: Dict[Tuple, List[Tuple[Graph, Graph]]] = {}
        self._count = 0
        self.diagnostics: List[str] = []

    def add(self, g: Graph, g2: Graph) -> bool:
        key = (graph_fingerprint(g), graph_fingerprint(g2))
        bucket = self._buckets.setdefault(key, [])
        for a, b in bucket:
            if find_isomorphism(g, a) and find_isomorphism(g2, b):
                return False
        bucket.append((g, g2))
        self._count += 1
        return True

    def contains(self, g: Graph, g2: Graph) -> bool:
        key = (graph_fingerprint(g), graph_fingerprint(g2))
        for a, b in self._buckets.get(key, []):
            if find_isomorphism(g, a) and find_isomorphism(g2, b):
                return True
        return False

    def __len__(self) -> int:
        return self._count

    def __iter__(self) -> Iterator[Tuple[Graph, Graph]]:
        for bucket in self._buckets.values():
            yield from bucket

    def issubset(self, other: "GraphPairSet") -> bool:
        return all(other.contains(a, b) for a, b in self)


def _is_pure(g: Graph, gamma: Alphabet) -> bool:
    return all(l in gamma for l in g.labels_used())


def rel_bounded(
    phi: Formula,
    gamma: Alphabet,
    delta: Alphabet,
    nu: Label,
    max_nodes: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
    method: str = "search",
) -> GraphPairSet:
    """All (input, output) pairs of models of phi with at most max_nodes nodes.

    method="enumerate" walks every graph over the combined alphabet (viable
    only at tiny sizes) and checks phi directly; method="search" enumerates
    candidate input/output pairs over gamma and asks the SAT engine whether
    some completion of the middle satisfies phi.  Both deduplicate up to
    componentwise isomorphism and agree where both are feasible.
    """
    if gamma.members & delta.members:
        raise ValueError("io and aux alphabets must be disjoint")
    if nu in gamma or nu in delta:
        raise ReservedLabelInUse(f"pairing label {nu} must be outside both alphabets")
    if method == "enumerate":
        return _rel_by_enumeration(phi, gamma, delta, nu, max_nodes, cap)
    if method == "search":
        return _rel_by_search(phi, gamma, delta, nu, max_nodes, cap)
    raise ValueError(f"unknown method {method!r}")


def _rel_by_enumeration(phi, gamma, delta, nu, max_nodes, cap) -> GraphPairSet:
    full = Alphabet(gamma.members | delta.members | {nu})
    out = GraphPairSet()
    for g in enumerate_graphs(full, max_nodes, cap=cap):
        if not solver_satisfies(g, phi):
            continue
        try:
            h = validate(g, nu)
        except Exception as exc:  # noqa: BLE001 - diagnostic, not failure
            out.diagnostics.append(f"model violates computation-graph axioms: {exc}")
            continue
        gi, go = input_graph(h), output_graph(h)
        if not (_is_pure(gi, gamma) and _is_pure(go, gamma)):
            out.diagnostics.append("model has an impure input or output graph")
            continue
        out.add(Graph(gi.nodes, gi.edges, gamma), Graph(go.nodes, go.edges, gamma))
    return out


def _pair_space(g: Graph, g2: Graph, delta: Alphabet, nu: Label, middle: int) -> SearchSpace:
    """Search space fixing inn=g, out=g2, nu complete bipartite, free middle."""
    i_nodes = [("i", n) for n in g.sorted_nodes()]
    o_nodes = [("o", n) for n in g2.sorted_nodes()]
    m_nodes = [("m", j) for j in range(middle)]
    nodes = i_nodes + o_nodes + m_nodes
    full = Alphabet(g.alphabet.members | g2.alphabet.members | delta.members | {nu})
    known = set()
    for u, l, v in g.edges:
        known.add((("i", u), l, ("i", v)))
    for u, l, v in g2.edges:
        known.add((("o", u), l, ("o", v)))
    for u in i_nodes:
        for v in o_nodes:
            known.add((u, nu, v))
    labels = sorted(full.members - {nu})
    i_set, o_set = set(i_nodes), set(o_nodes)
    unknown = []
    for u in nodes:
        for v in nodes:
            both_in = u in i_set and v in i_set
            both_out = u in o_set and v in o_set
            if both_in or both_out:
                continue  # the induced parts are fixed to g and g2 exactly
            for l in labels:
                unknown.append((u, l, v))
    return SearchSpace.of(nodes, full, known_edges=known, unknown_edges=unknown)


def pair_completion_exists(
    phi: Formula,
    g: Graph,
    g2: Graph,
    delta: Alphabet,
    nu: Label,
    max_nodes: int,
    conflict_budget: Optional[int] = None,
) -> Optional[Graph]:
    """A model h of phi with inn(h)=g and out(h)=g2 and <= max_nodes nodes.

    Fixing the input and output parts literally is complete because phi is
    isomorphism-invariant.  Returns the witness graph or None.
    """
    base = len(g.nodes) + len(g2.nodes)
    for middle in range(0, max_nodes - base + 1):
        space = _pair_space(g, g2, delta, nu, middle)
        search = GraphSearch(space)
        search.require(phi)
        witness = search.find(conflict_budget=conflict_budget)
        if witness is not None:
            return witness
    return None


def _rel_by_search(phi, gamma, delta, nu, max_nodes, cap) -> GraphPairSet:
    out = GraphPairSet()
    if max_nodes < 2:
        return out  # a nu-edge needs two distinct nodes
    attempts = 0
    inputs = list(enumerate_graphs(gamma, max_nodes - 1, cap=cap))
    for g in inputs:
        for g2 in inputs:
            if len(g.nodes) + len(g2.nodes) > max_nodes:
                continue
            attempts += 1
            if attempts > cap:
                raise BudgetExceeded(f"pair search exceeded the candidate cap of {cap}")
            witness = pair_completion_exists(phi, g, g2, delta, nu, max_nodes)
            if witness is None:
                continue
            try:
                h = validate(witness, nu)
                if not (_is_pure(input_graph(h), gamma) and _is_pure(output_graph(h), gamma)):
                    raise ValueError("impure input or output graph")
            except Exception as exc:  # noqa: BLE001
                out.diagnostics.append(f"witness failed validation: {exc}")
            out.add(g, g2)
    return out
