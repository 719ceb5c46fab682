"""Line-oriented text format for graphs.

    # comment
    alphabet alpha beta gamma
    node a
    node b
    edge a gamma b

The alphabet line is optional; without it the alphabet is inferred from the
edge labels.  `parse_graph(print_graph(g))` returns a graph with identical
node names and the same edge set.
"""

from __future__ import annotations

from typing import Dict

from .errors import FormatError
from .graph import Alphabet, Graph, Label, build_graph


def print_graph(g: Graph) -> str:
    lines = ["alphabet " + " ".join(l.name for l in sorted(g.alphabet.members))]
    for n in g.sorted_nodes():
        lines.append(f"node {_node_name(n)}")
    for u, l, v in g.sorted_edges():
        lines.append(f"edge {_node_name(u)} {l.name} {_node_name(v)}")
    return "\n".join(lines) + "\n"


def _node_name(n) -> str:
    s = str(n)
    if not s or any(c.isspace() for c in s):
        raise FormatError(f"node id {n!r} has no printable name")
    return s


def parse_graph(text: str) -> Graph:
    nodes = []
    edges = []
    alphabet_line = None
    seen: Dict[str, bool] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind, args = parts[0], parts[1:]
        if kind == "alphabet":
            if not args:
                raise FormatError("alphabet line needs at least one label", line=lineno)
            alphabet_line = [Label(a) for a in args]
        elif kind == "node":
            if len(args) != 1:
                raise FormatError("node line takes exactly one name", line=lineno)
            if args[0] in seen:
                raise FormatError(f"duplicate node {args[0]!r}", line=lineno)
            seen[args[0]] = True
            nodes.append(args[0])
        elif kind == "edge":
            if len(args) != 3:
                raise FormatError("edge line takes src label dst", line=lineno)
            edges.append((args[0], Label(args[1]), args[2]))
        else:
            raise FormatError(f"unknown directive {kind!r}", line=lineno)
    for src, _, dst in edges:
        for endpoint in (src, dst):
            if endpoint not in seen:
                raise FormatError(f"edge endpoint {endpoint!r} was never declared as a node")
    if alphabet_line is None:
        used = {l for _, l, _ in edges}
        if not used:
            raise FormatError("cannot infer an alphabet from an edgeless graph; add an alphabet line")
        alphabet = Alphabet(used)
    else:
        alphabet = Alphabet(alphabet_line)
    if not nodes:
        raise FormatError("graph file declares no nodes")
    return build_graph(nodes, edges, alphabet)
