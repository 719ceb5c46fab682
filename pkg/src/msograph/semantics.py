"""Model checking of MSO formulas on finite graphs.

Two evaluators ship permanently:

* `naive_evaluate` — direct recursive semantics over frozensets.  It is the
  semantic anchor every other engine is tested against.
* `evaluate` — bitmask sets, Gray-code subset enumeration with early exit,
  and a bounded memo cache keyed on (subformula, relevant bindings).

Both range node quantifiers over the graph's nodes and set quantifiers over
all subsets of the node set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import chain, combinations
from typing import Dict, FrozenSet, Mapping, Optional

from .errors import ForeignNode, NotClosed, UnboundVariable
from .formula import (
    And,
    Annotated,
    EdgeAtom,
    Eq,
    ExistsNode,
    ExistsSet,
    ForallNode,
    ForallSet,
    Formula,
    Iff,
    Implies,
    In,
    Not,
    NodeVar,
    Or,
    SetVar,
    free_vars,
)
from .graph import Graph, Node


@dataclass
class Assignment:
    """Bindings for the free variables of an open formula."""

    nodes: Dict[NodeVar, Node] = field(default_factory=dict)
    sets: Dict[SetVar, FrozenSet[Node]] = field(default_factory=dict)

    @staticmethod
    def of(node_bindings: Optional[Mapping] = None, set_bindings: Optional[Mapping] = None):
        a = Assignment()
        for k, v in (node_bindings or {}).items():
            a.nodes[NodeVar(k) if isinstance(k, str) else k] = v
        for k, v in (set_bindings or {}).items():
            a.sets[SetVar(k) if isinstance(k, str) else k] = frozenset(v)
        return a


def _check_assignment(g: Graph, phi: Formula, a: Assignment):
    fn, fs = free_vars(phi)
    for v in fn:
        if v not in a.nodes:
            raise UnboundVariable(f"node variable {v.name} is unbound")
        if a.nodes[v] not in g.nodes:
            raise ForeignNode(f"{v.name} is bound to a node outside the graph")
    for v in fs:
        if v not in a.sets:
            raise UnboundVariable(f"set variable {v.name} is unbound")
        if not a.sets[v] <= g.nodes:
            raise ForeignNode(f"{v.name} is bound to a set outside the graph")


def _powerset(items):
    items = list(items)
    return chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))


def naive_evaluate(g: Graph, phi: Formula, a: Optional[Assignment] = None) -> bool:
    """Reference evaluator: literal recursive semantics, no optimizations."""
    a = a or Assignment()
    _check_assignment(g, phi, a)
    nodes = g.sorted_nodes()
    edges = g.edges

    def ev(f: Formula, env_n: dict, env_s: dict) -> bool:
        if isinstance(f, Eq):
            return env_n[f.x] == env_n[f.y]
        if isinstance(f, In):
            return env_n[f.x] in env_s[f.X]
        if isinstance(f, EdgeAtom):
            return (env_n[f.x], f.label, env_n[f.y]) in edges
        if isinstance(f, Not):
            return not ev(f.body, env_n, env_s)
        if isinstance(f, And):
            return all(ev(p, env_n, env_s) for p in f.parts)
        if isinstance(f, Or):
            return any(ev(p, env_n, env_s) for p in f.parts)
        if isinstance(f, Implies):
            return (not ev(f.lhs, env_n, env_s)) or ev(f.rhs, env_n, env_s)
        if isinstance(f, Iff):
            return ev(f.lhs, env_n, env_s) == ev(f.rhs, env_n, env_s)
        if isinstance(f, ExistsNode):
            return any(ev(f.body, {**env_n, f.var: n}, env_s) for n in nodes)
        if isinstance(f, ForallNode):
            return all(ev(f.body, {**env_n, f.var: n}, env_s) for n in nodes)
        if isinstance(f, ExistsSet):
            return any(
                ev(f.body, env_n, {**env_s, f.var: frozenset(s)}) for s in _powerset(nodes)
            )
        if isinstance(f, ForallSet):
            return all(
                ev(f.body, env_n, {**env_s, f.var: frozenset(s)}) for s in _powerset(nodes)
            )
        if isinstance(f, Annotated):
            return ev(f.body, env_n, env_s)
        raise TypeError(f"not a formula: {f!r}")

    return ev(phi, dict(a.nodes), {k: frozenset(v) for k, v in a.sets.items()})


class _CompiledGraph:
    """Node indexing and per-label adjacency masks for one graph."""

    def __init__(self, g: Graph):
        self.graph = g
        self.nodes = g.sorted_nodes()
        self.index = {n: i for i, n in enumerate(self.nodes)}
        self.n = len(self.nodes)
        self.full_mask = (1 << self.n) - 1
        self.edge_set = {(self.index[u], l, self.index[v]) for u, l, v in g.edges}


_MEMO_LIMIT = 200_000


class Evaluator:
    """Optimized evaluator bound to one graph; reusable across formulas."""

    def __init__(self, g: Graph):
        self.cg = _CompiledGraph(g)
        self._memo: Dict = {}
        self._fv_cache: Dict[int, tuple] = {}

    def _free(self, f: Formula):
        key = id(f)
        got = self._fv_cache.get(key)
        if got is None:
            got = free_vars(f)
            self._fv_cache[key] = (got, f)  # keep f alive so id() stays valid
        else:
            got = got[0]
        return got

    def evaluate(self, phi: Formula, a: Optional[Assignment] = None) -> bool:
        a = a or Assignment()
        _check_assignment(self.cg.graph, phi, a)
        idx = self.cg.index
        env_n = {v: idx[n] for v, n in a.nodes.items()}
        env_s = {v: self._mask(s) for v, s in a.sets.items()}
        return self._ev(phi, env_n, env_s)

    def _mask(self, nodes) -> int:
        m = 0
        for n in nodes:
            m |= 1 << self.cg.index[n]
        return m

    def _ev(self, f: Formula, env_n: dict, env_s: dict) -> bool:
        cg = self.cg
        if isinstance(f, Eq):
            return env_n[f.x] == env_n[f.y]
        if isinstance(f, In):
            return bool(env_s[f.X] >> env_n[f.x] & 1)
        if isinstance(f, EdgeAtom):
            return (env_n[f.x], f.label, env_n[f.y]) in cg.edge_set

        # Non-atomic: memoize on the subformula and its relevant bindings.
        fn, fs = self._free(f)
        key = (
            id(f),
            tuple(env_n[v] for v in sorted(fn)),
            tuple(env_s[v] for v in sorted(fs)),
        )
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        val = self._ev_inner(f, env_n, env_s)
        if len(self._memo) >= _MEMO_LIMIT:
            self._memo.clear()
        self._memo[key] = val
        return val

    def _ev_inner(self, f: Formula, env_n: dict, env_s: dict) -> bool:
        cg = self.cg
        if isinstance(f, Not):
            return not self._ev(f.body, env_n, env_s)
        if isinstance(f, And):
            return all(self._ev(p, env_n, env_s) for p in f.parts)
        if isinstance(f, Or):
            return any(self._ev(p, env_n, env_s) for p in f.parts)
        if isinstance(f, Implies):
            return (not self._ev(f.lhs, env_n, env_s)) or self._ev(f.rhs, env_n, env_s)
        if isinstance(f, Iff):
            return self._ev(f.lhs, env_n, env_s) == self._ev(f.rhs, env_n, env_s)
        if isinstance(f, ExistsNode):
            env = dict(env_n)
            for i in range(cg.n):
                env[f.var] = i
                if self._ev(f.body, env, env_s):
                    return True
            return False
        if isinstance(f, ForallNode):
            env = dict(env_n)
            for i in range(cg.n):
                env[f.var] = i
                if not self._ev(f.body, env, env_s):
                    return False
            return True
        if isinstance(f, (ExistsSet, ForallSet)):
            want = isinstance(f, ExistsSet)
            env = dict(env_s)
            # Gray-code walk over all subsets: mask(i) = i ^ (i >> 1).
            for i in range(1 << cg.n):
                env[f.var] = i ^ (i >> 1)
                if self._ev(f.body, env_n, env) == want:
                    return want
            return not want
        if isinstance(f, Annotated):
            return self._ev(f.body, env_n, env_s)
        raise TypeError(f"not a formula: {f!r}")


def evaluate(g: Graph, phi: Formula, a: Optional[Assignment] = None) -> bool:
    """Optimized evaluation; agrees with `naive_evaluate` by contract."""
    return Evaluator(g).evaluate(phi, a)


def satisfies(g: Graph, phi: Formula) -> bool:
    """Evaluate a closed formula with the empty assignment."""
    fn, fs = free_vars(phi)
    if fn or fs:
        names = ", ".join(v.name for v in sorted(fn) + sorted(fs))
        raise NotClosed(f"formula has free variables: {names}")
    return evaluate(g, phi, Assignment())
