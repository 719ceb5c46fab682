"""Finite edge-labeled directed graphs over finite alphabets.

Nodes are opaque hashable identifiers (small integers internally, strings
after file ingestion).  Graphs are immutable; every operation returns a new
value, so sharing across threads is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, Mapping, Optional, Tuple

from .errors import (
    DanglingEndpoint,
    EmptyNodeSet,
    EmptySelection,
    NodeNotInGraph,
    UnknownLabel,
    UnmappedLabel,
)

Node = Hashable


@dataclass(frozen=True, order=True)
class Label:
    """An edge label; equality and ordering are by name."""

    name: str

    def __post_init__(self):
        if not self.name or any(c.isspace() for c in self.name):
            raise ValueError(f"label name must be a nonempty token: {self.name!r}")

    def __repr__(self):
        return f"Label({self.name!r})"

    def __str__(self):
        return self.name


def labels(*names: str) -> Tuple[Label, ...]:
    return tuple(Label(n) for n in names)


@dataclass(frozen=True)
class Alphabet:
    """A finite nonempty set of labels."""

    members: FrozenSet[Label]

    def __init__(self, members: Iterable[Label]):
        ms = frozenset(Label(m) if isinstance(m, str) else m for m in members)
        if not ms:
            raise ValueError("alphabet must be nonempty")
        object.__setattr__(self, "members", ms)

    def __contains__(self, label) -> bool:
        if isinstance(label, str):
            label = Label(label)
        return label in self.members

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self):
        return len(self.members)

    def union(self, other: "Alphabet") -> "Alphabet":
        return Alphabet(self.members | other.members)

    def with_labels(self, *extra: Label) -> "Alphabet":
        return Alphabet(self.members | frozenset(extra))


Edge = Tuple[Node, Label, Node]


def _node_key(n: Node):
    return (0, n, "") if isinstance(n, int) else (1, 0, str(n))


def _edge_key(e: Edge):
    u, l, v = e
    return (_node_key(u), l, _node_key(v))


@dataclass(frozen=True)
class Graph:
    """A finite graph: nonempty node set plus a set of labeled edges."""

    nodes: FrozenSet[Node]
    edges: FrozenSet[Edge]
    alphabet: Alphabet

    def __len__(self):
        return len(self.nodes)

    def sorted_nodes(self):
        return sorted(self.nodes, key=_node_key)

    def sorted_edges(self):
        return sorted(self.edges, key=_edge_key)

    def has_edge(self, src: Node, label: Label, dst: Node) -> bool:
        return (src, label, dst) in self.edges

    def out_edges(self, node: Node):
        return [e for e in self.edges if e[0] == node]

    def in_edges(self, node: Node):
        return [e for e in self.edges if e[2] == node]

    def labels_used(self) -> FrozenSet[Label]:
        return frozenset(l for _, l, _ in self.edges)


@dataclass(frozen=True)
class IsoWitness:
    """A node bijection carrying one graph's edges exactly onto another's."""

    mapping: Mapping[Node, Node]

    def apply(self, node: Node) -> Node:
        return self.mapping[node]

    def inverse(self) -> "IsoWitness":
        return IsoWitness({v: k for k, v in self.mapping.items()})


def build_graph(nodes: Iterable[Node], edges: Iterable[Edge], alphabet: Alphabet) -> Graph:
    """Construct a validated graph; duplicate edge triples collapse."""
    node_set = frozenset(nodes)
    if not node_set:
        raise EmptyNodeSet("a graph needs at least one node")
    edge_set = set()
    for src, label, dst in edges:
        if isinstance(label, str):
            label = Label(label)
        if src not in node_set:
            raise DanglingEndpoint((src, label, dst))
        if dst not in node_set:
            raise DanglingEndpoint((src, label, dst))
        if label not in alphabet:
            raise UnknownLabel(label)
        edge_set.add((src, label, dst))
    return Graph(node_set, frozenset(edge_set), alphabet)


def induced_subgraph(g: Graph, selection: Iterable[Node]) -> Graph:
    """The subgraph induced by a nonempty subset of the nodes."""
    sel = frozenset(selection)
    if not sel:
        raise EmptySelection("cannot induce on an empty node set")
    for n in sel:
        if n not in g.nodes:
            raise NodeNotInGraph(n)
    kept = frozenset(e for e in g.edges if e[0] in sel and e[2] in sel)
    return Graph(sel, kept, g.alphabet)


def disjoint_union(g1: Graph, g2: Graph):
    """Disjoint union; returns the union plus the two node embeddings."""
    emb1 = {n: (0, n) for n in g1.nodes}
    emb2 = {n: (1, n) for n in g2.nodes}
    nodes = frozenset(emb1.values()) | frozenset(emb2.values())
    edges = frozenset((emb1[u], l, emb1[v]) for u, l, v in g1.edges) | frozenset(
        (emb2[u], l, emb2[v]) for u, l, v in g2.edges
    )
    return Graph(nodes, edges, g1.alphabet.union(g2.alphabet)), emb1, emb2


def relabel_edges(g: Graph, mapping: Mapping[Label, Label]) -> Graph:
    """Rename edge labels; the map must cover every label occurring in g."""
    for l in g.labels_used():
        if l not in mapping:
            raise UnmappedLabel(l)
    new_edges = frozenset((u, mapping[l], v) for u, l, v in g.edges)
    new_alpha = Alphabet(
        frozenset(mapping.get(l, l) for l in g.alphabet.members) | frozenset(mapping.values())
    )
    return Graph(g.nodes, new_edges, new_alpha)


def renumber(g: Graph) -> Graph:
    """Isomorphic copy on nodes 0..n-1 in deterministic order."""
    order = {n: i for i, n in enumerate(g.sorted_nodes())}
    return Graph(
        frozenset(order.values()),
        frozenset((order[u], l, order[v]) for u, l, v in g.edges),
        g.alphabet,
    )


def nodes_with(g: Graph, label: Label, direction: str) -> FrozenSet[Node]:
    """Nodes with at least one incident `label`-edge in the given direction."""
    if direction not in ("outgoing", "incoming"):
        raise ValueError(f"direction must be 'outgoing' or 'incoming', got {direction!r}")
    idx = 0 if direction == "outgoing" else 2
    return frozenset(e[idx] for e in g.edges if e[1] == label)


def _degree_profile(g: Graph, labs: Optional[Tuple[Label, ...]] = None) -> Dict[Node, Tuple]:
    """Per-node (out, in) degree counts per label, used to prune iso search.

    Profiles range over the labels actually used (not the declared alphabet)
    so that structurally equal graphs compare equal across alphabets.
    """
    if labs is None:
        labs = tuple(sorted(g.labels_used()))
    out: Dict[Node, Dict[Label, int]] = {n: {} for n in g.nodes}
    inc: Dict[Node, Dict[Label, int]] = {n: {} for n in g.nodes}
    for u, l, v in g.edges:
        out[u][l] = out[u].get(l, 0) + 1
        inc[v][l] = inc[v].get(l, 0) + 1
    return {
        n: (
            tuple(out[n].get(l, 0) for l in labs),
            tuple(inc[n].get(l, 0) for l in labs),
        )
        for n in g.nodes
    }


def graph_fingerprint(g: Graph) -> Tuple:
    """Isomorphism-invariant hash key (node count, sorted degree profiles)."""
    prof = _degree_profile(g)
    return (len(g.nodes), len(g.edges), tuple(sorted(prof.values())))


def find_isomorphism(g1: Graph, g2: Graph) -> Optional[IsoWitness]:
    """Backtracking isomorphism search with degree-profile pruning.

    Returns a witness mapping g1's nodes onto g2's, or None.  Only edge
    structure is compared; the declared alphabets may differ.
    """
    if len(g1.nodes) != len(g2.nodes) or len(g1.edges) != len(g2.edges):
        return None
    labs = tuple(sorted(g1.labels_used() | g2.labels_used()))
    prof1 = _degree_profile(g1, labs)
    prof2 = _degree_profile(g2, labs)
    if sorted(prof1.values()) != sorted(prof2.values()):
        return None

    # Most-constrained-first: rare profiles and high degrees up front.
    from collections import Counter

    freq = Counter(prof1.values())
    order = sorted(
        g1.nodes,
        key=lambda n: (freq[prof1[n]], tuple(-d for d in prof1[n][0] + prof1[n][1]), _node_key(n)),
    )
    candidates = {n: [m for m in g2.sorted_nodes() if prof2[m] == prof1[n]] for n in order}

    out1: Dict[Node, set] = {n: set() for n in g1.nodes}
    in1: Dict[Node, set] = {n: set() for n in g1.nodes}
    for u, l, v in g1.edges:
        out1[u].add((l, v))
        in1[v].add((l, u))

    e2 = g2.edges
    mapping: Dict[Node, Node] = {}
    used = set()

    def consistent(n: Node, m: Node) -> bool:
        for l, v in out1[n]:
            if v in mapping and (m, l, mapping[v]) not in e2:
                return False
        for l, u in in1[n]:
            if u in mapping and (mapping[u], l, m) not in e2:
                return False
        # Edge counts match, so checking preservation one way per mapped pair
        # plus the reverse direction below keeps the search sound.
        for u, l, v in e2:
            if u == m and v in used and (n, l, _preimage(v)) not in g1.edges:
                return False
            if v == m and u in used and (_preimage(u), l, n) not in g1.edges:
                return False
        return True

    inv: Dict[Node, Node] = {}

    def _preimage(m: Node) -> Node:
        return inv[m]

    def search(i: int) -> bool:
        if i == len(order):
            return True
        n = order[i]
        for m in candidates[n]:
            if m in used:
                continue
            if consistent(n, m):
                mapping[n] = m
                inv[m] = n
                used.add(m)
                if search(i + 1):
                    return True
                del mapping[n]
                del inv[m]
                used.remove(m)
        return False

    if search(0):
        witness = IsoWitness(dict(mapping))
        return witness
    return None


def isomorphic(g1: Graph, g2: Graph) -> bool:
    return find_isomorphism(g1, g2) is not None
