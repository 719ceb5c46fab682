"""Grounding MSO formulas over partially-unknown graphs into SAT.

The search space fixes a node set and alphabet, marks some edges as present
and some as undetermined (one boolean variable each); every other edge is
absent.  A formula is grounded to a hash-consed boolean circuit:

* node quantifiers expand over the node list;
* a set quantifier that is effectively existential (ExistsSet in positive
  position, ForallSet in negative position) becomes one fresh bit per node;
* a set quantifier in the wrong or mixed polarity expands over all subsets,
  subject to a configurable limit;
* annotated reachability / path-language subformulas become layered
  transitive-closure tables.  The tables are functionally determined by the
  edge and set bits, so they are sound in any polarity and avoid the
  exponential set quantifier inside the annotation body.

The circuit is clausified with Tseitin equivalences and handed to the CDCL
solver; model enumeration blocks repeats on the undetermined-edge bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from .builders import PathLangHint, ReachHint
from .errors import BudgetExceeded, ForeignNode, NotClosed, UnboundVariable
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
from .graph import Alphabet, Edge, Graph, Label, Node
from .sat import SatSolver
from .semantics import Assignment

TRUE_LIT = 1
FALSE_LIT = -1


class Circuit:
    """Hash-consed and/inverter circuit; literals are signed gate ids."""

    def __init__(self):
        self.kind: Dict[int, Tuple] = {1: ("true",)}
        self.next_id = 2
        self._cache: Dict[Tuple, int] = {}

    def var(self) -> int:
        g = self.next_id
        self.next_id += 1
        self.kind[g] = ("var",)
        return g

    def AND(self, lits: Iterable[int]) -> int:
        flat = set()
        for l in lits:
            if l == FALSE_LIT:
                return FALSE_LIT
            if l == TRUE_LIT:
                continue
            if -l in flat:
                return FALSE_LIT
            flat.add(l)
        if not flat:
            return TRUE_LIT
        if len(flat) == 1:
            return next(iter(flat))
        key = ("and", tuple(sorted(flat)))
        g = self._cache.get(key)
        if g is None:
            g = self.next_id
            self.next_id += 1
            self.kind[g] = key
            self._cache[key] = g
        return g

    def OR(self, lits: Iterable[int]) -> int:
        return -self.AND(-l for l in lits)

    def IMPLIES(self, a: int, b: int) -> int:
        return self.OR([-a, b])

    def IFF(self, a: int, b: int) -> int:
        return self.AND([self.IMPLIES(a, b), self.IMPLIES(b, a)])


@dataclass(frozen=True)
class SearchSpace:
    """Node set, alphabet, and the present / undetermined edge sets.

    Edges not listed in either set are absent.  An edge may not be both
    present and undetermined.
    """

    nodes: Tuple[Node, ...]
    alphabet: Alphabet
    known_edges: FrozenSet[Edge]
    unknown_edges: Tuple[Edge, ...]

    @staticmethod
    def of(nodes, alphabet, known_edges=(), unknown_edges=()) -> "SearchSpace":
        nodes = tuple(nodes)
        node_set = set(nodes)
        if len(nodes) != len(node_set):
            raise ValueError("duplicate nodes in search space")
        known = frozenset(tuple(e) for e in known_edges)
        unknown = tuple(dict.fromkeys(tuple(e) for e in unknown_edges))
        for u, l, v in list(known) + list(unknown):
            if u not in node_set or v not in node_set:
                raise ForeignNode(f"edge endpoint outside the node set: {(u, l, v)}")
            if l not in alphabet:
                raise ValueError(f"edge label {l} outside the alphabet")
        overlap = known & set(unknown)
        if overlap:
            raise ValueError(f"edges both present and undetermined: {sorted(overlap, key=str)[:3]}")
        return SearchSpace(nodes, alphabet, known, unknown)


# Set bindings during grounding: ("const", frozenset of node indices) or
# ("bits", tuple of circuit literals indexed by node position).
_SetBinding = Tuple


class GraphSearch:
    """Grounds required formulas over a search space and runs SAT on them."""

    def __init__(self, space: SearchSpace, subset_limit: int = 256):
        self.space = space
        self.subset_limit = subset_limit
        self.circuit = Circuit()
        self.roots: List[int] = []
        self.n = len(space.nodes)
        self.index = {node: i for i, node in enumerate(space.nodes)}
        self.edge_lits: Dict[Tuple[int, Label, int], int] = {}
        self.unknown_vars: List[Tuple[Edge, int]] = []
        for u, l, v in space.known_edges:
            self.edge_lits[(self.index[u], l, self.index[v])] = TRUE_LIT
        for e in space.unknown_edges:
            u, l, v = e
            g = self.circuit.var()
            self.edge_lits[(self.index[u], l, self.index[v])] = g
            self.unknown_vars.append((e, g))
        self._memo: Dict[Tuple, int] = {}
        self._tables: Dict[Tuple, Dict] = {}
        self._solver: Optional[SatSolver] = None

    # -- grounding ----------------------------------------------------------

    def require(self, phi: Formula, assignment: Optional[Assignment] = None) -> None:
        """Conjoin `phi` (closed, or closed under `assignment`) to the query."""
        a = assignment or Assignment()
        fn, fs = free_vars(phi)
        env_n: Dict[NodeVar, int] = {}
        env_s: Dict[SetVar, _SetBinding] = {}
        for v in fn:
            if v not in a.nodes:
                raise UnboundVariable(f"node variable {v.name} is unbound")
            env_n[v] = self.index[a.nodes[v]]
        for v in fs:
            if v not in a.sets:
                raise UnboundVariable(f"set variable {v.name} is unbound")
            env_s[v] = ("const", frozenset(self.index[n] for n in a.sets[v]))
        self.roots.append(self._g(phi, env_n, env_s, +1))
        self._solver = None

    def _edge_lit(self, u: int, label: Label, v: int) -> int:
        return self.edge_lits.get((u, label, v), FALSE_LIT)

    def _member(self, idx: int, binding: _SetBinding) -> int:
        tag, payload = binding
        if tag == "const":
            return TRUE_LIT if idx in payload else FALSE_LIT
        return payload[idx]

    def _g(self, f: Formula, env_n, env_s, pol: int) -> int:
        fn, fs = free_vars(f)
        key = (
            id(f),
            pol,
            tuple(env_n[v] for v in sorted(fn)),
            tuple(env_s[v] for v in sorted(fs)),
        )
        hit = self._memo.get(key)
        if hit is None:
            hit = self._g_inner(f, env_n, env_s, pol)
            self._memo[key] = hit
            self._memo_anchor = getattr(self, "_memo_anchor", [])
            self._memo_anchor.append(f)  # keep id(f) stable
        return hit

    def _g_inner(self, f: Formula, env_n, env_s, pol: int) -> int:
        c = self.circuit
        if isinstance(f, Eq):
            return TRUE_LIT if env_n[f.x] == env_n[f.y] else FALSE_LIT
        if isinstance(f, In):
            return self._member(env_n[f.x], env_s[f.X])
        if isinstance(f, EdgeAtom):
            return self._edge_lit(env_n[f.x], f.label, env_n[f.y])
        if isinstance(f, Not):
            return -self._g(f.body, env_n, env_s, -pol)
        if isinstance(f, And):
            return c.AND(self._g(p, env_n, env_s, pol) for p in f.parts)
        if isinstance(f, Or):
            return c.OR(self._g(p, env_n, env_s, pol) for p in f.parts)
        if isinstance(f, Implies):
            return c.IMPLIES(self._g(f.lhs, env_n, env_s, -pol), self._g(f.rhs, env_n, env_s, pol))
        if isinstance(f, Iff):
            return c.IFF(self._g(f.lhs, env_n, env_s, 0), self._g(f.rhs, env_n, env_s, 0))
        if isinstance(f, ExistsNode):
            env = dict(env_n)
            lits = []
            for i in range(self.n):
                env[f.var] = i
                lits.append(self._g(f.body, env, env_s, pol))
            return c.OR(lits)
        if isinstance(f, ForallNode):
            env = dict(env_n)
            lits = []
            for i in range(self.n):
                env[f.var] = i
                lits.append(self._g(f.body, env, env_s, pol))
            return c.AND(lits)
        if isinstance(f, ExistsSet):
            if pol > 0:
                env = dict(env_s)
                env[f.var] = ("bits", tuple(c.var() for _ in range(self.n)))
                return self._g(f.body, env_n, env, pol)
            return self._expand_set(f, env_n, env_s, pol, exists=True)
        if isinstance(f, ForallSet):
            if pol < 0:
                env = dict(env_s)
                env[f.var] = ("bits", tuple(c.var() for _ in range(self.n)))
                return self._g(f.body, env_n, env, pol)
            return self._expand_set(f, env_n, env_s, pol, exists=False)
        if isinstance(f, Annotated):
            if isinstance(f.hint, ReachHint):
                return self._reach_lit(f.hint, env_n, env_s)
            if isinstance(f.hint, PathLangHint):
                return self._plang_lit(f.hint, env_n, env_s)
            return self._g(f.body, env_n, env_s, pol)
        raise TypeError(f"not a formula: {f!r}")

    def _expand_set(self, f, env_n, env_s, pol: int, exists: bool) -> int:
        if (1 << self.n) > self.subset_limit:
            raise BudgetExceeded(
                f"set quantifier over {self.n} nodes in a non-existential position "
                f"needs {1 << self.n} subsets (limit {self.subset_limit}); "
                "annotate the subformula or raise the limit"
            )
        env = dict(env_s)
        lits = []
        for mask in range(1 << self.n):
            env[f.var] = ("const", frozenset(i for i in range(self.n) if mask >> i & 1))
            lits.append(self._g(f.body, env_n, env, pol))
        return self.circuit.OR(lits) if exists else self.circuit.AND(lits)

    # -- annotated subformulas ----------------------------------------------

    def _region_lits(self, within: Tuple[SetVar, ...], env_s) -> Tuple[int, ...]:
        c = self.circuit
        return tuple(
            c.AND(self._member(i, env_s[S]) for S in within) for i in range(self.n)
        )

    def _reach_lit(self, hint: ReachHint, env_n, env_s) -> int:
        c = self.circuit
        x, y = env_n[hint.x], env_n[hint.y]
        region = self._region_lits(hint.within, env_s)
        labels = tuple(sorted(hint.labels))
        key = ("reach", labels, x, region)
        table = self._tables.get(key)
        if table is None:
            cur = [TRUE_LIT if v == x else FALSE_LIT for v in range(self.n)]
            for _ in range(self.n - 1):
                nxt = []
                for v in range(self.n):
                    terms = [cur[v]]
                    for u in range(self.n):
                        e = c.OR(self._edge_lit(u, l, v) for l in labels)
                        terms.append(c.AND([cur[u], region[u], region[v], e]))
                    nxt.append(c.OR(terms))
                if nxt == cur:
                    break
                cur = nxt
            table = cur
            self._tables[key] = table
        return table[y]

    def _plang_lit(self, hint: PathLangHint, env_n, env_s) -> int:
        c = self.circuit
        dfa = hint.dfa
        x, y = env_n[hint.x], env_n[hint.y]
        region = self._region_lits(hint.within, env_s)
        key = ("plang", dfa, x, region)
        table = self._tables.get(key)
        if table is None:
            cur = {
                (v, q): TRUE_LIT if (v == x and q == dfa.start) else FALSE_LIT
                for v in range(self.n)
                for q in range(dfa.n_states)
            }
            for _ in range(self.n * dfa.n_states - 1):
                nxt = dict(cur)
                grouped: Dict[Tuple[int, int], List[int]] = {}
                for q, l, q2 in dfa.transitions:
                    for u in range(self.n):
                        src = cur[(u, q)]
                        if src == FALSE_LIT:
                            continue
                        for v in range(self.n):
                            e = self._edge_lit(u, l, v)
                            grouped.setdefault((v, q2), []).append(
                                c.AND([src, region[u], region[v], e])
                            )
                for (v, q2), terms in grouped.items():
                    nxt[(v, q2)] = c.OR([cur[(v, q2)]] + terms)
                if nxt == cur:
                    break
                cur = nxt
            table = cur
            self._tables[key] = table
        return c.OR(table[(y, q)] for q in sorted(dfa.accepting))

    # -- solving ------------------------------------------------------------

    def _build_solver(self) -> SatSolver:
        s = SatSolver()
        sat_var: Dict[int, int] = {}

        def lit_of(l: int) -> int:
            g = abs(l)
            v = sat_var.get(g)
            if v is None:
                v = s.new_var()
                sat_var[g] = v
            return v if l > 0 else -v

        # Clausify every gate reachable from the roots.
        seen = set()
        stack = [abs(r) for r in self.roots]
        order = []
        while stack:
            g = stack.pop()
            if g in seen:
                continue
            seen.add(g)
            order.append(g)
            kind = self.circuit.kind[g]
            if kind[0] == "and":
                stack.extend(abs(ch) for ch in kind[1])
        for g in order:
            kind = self.circuit.kind[g]
            if kind[0] == "true":
                s.add_clause([lit_of(g)])
            elif kind[0] == "and":
                gl = lit_of(g)
                children = [lit_of(ch) for ch in kind[1]]
                for ch in children:
                    s.add_clause([-gl, ch])
                s.add_clause([gl] + [-ch for ch in children])
        for r in self.roots:
            s.add_clause([lit_of(r)])
        # Give every undetermined edge a solver variable even when the
        # circuit simplified it away, so model enumeration stays one model
        # per graph rather than one per don't-care class.
        for _, gate in self.unknown_vars:
            lit_of(gate)
        self._sat_var = sat_var
        return s

    def _edge_sat_lit(self, gate: int) -> Optional[int]:
        return self._sat_var.get(gate)

    def _graph_of(self, model: Dict[int, bool]) -> Graph:
        edges = set(self.space.known_edges)
        for e, gate in self.unknown_vars:
            v = self._edge_sat_lit(gate)
            if v is not None and model.get(v, False):
                edges.add(e)
        return Graph(frozenset(self.space.nodes), frozenset(edges), self.space.alphabet)

    def find(self, conflict_budget: Optional[int] = None) -> Optional[Graph]:
        """One graph satisfying every required formula, or None."""
        s = self._build_solver()
        model = s.solve(conflict_budget=conflict_budget)
        return None if model is None else self._graph_of(model)

    def models(
        self, limit: Optional[int] = None, conflict_budget: Optional[int] = None
    ) -> Iterator[Graph]:
        """All satisfying graphs, distinct on the undetermined edges."""
        s = self._build_solver()
        count = 0
        while True:
            if limit is not None and count >= limit:
                return
            model = s.solve(conflict_budget=conflict_budget)
            if model is None:
                return
            yield self._graph_of(model)
            count += 1
            block = []
            for _, gate in self.unknown_vars:
                v = self._edge_sat_lit(gate)
                if v is None:
                    continue
                block.append(-v if model.get(v, False) else v)
            if not block:
                return  # no projection variables: the one model is unique
            s._backtrack(0)
            s.add_clause(block)


def solver_satisfies(
    g: Graph,
    phi: Formula,
    assignment: Optional[Assignment] = None,
    subset_limit: int = 256,
    conflict_budget: Optional[int] = None,
) -> bool:
    """Evaluate via grounding + SAT; the third engine next to the two walkers.

    On a fully concrete graph the circuit usually folds to a constant; fresh
    bits from effectively-existential set quantifiers are left to the solver.
    """
    fn, fs = free_vars(phi)
    if assignment is None and (fn or fs):
        names = ", ".join(v.name for v in sorted(fn) + sorted(fs))
        raise NotClosed(f"formula has free variables: {names}")
    space = SearchSpace.of(g.sorted_nodes(), g.alphabet, known_edges=g.edges)
    search = GraphSearch(space, subset_limit=subset_limit)
    search.require(phi, assignment)
    return search.find(conflict_budget=conflict_budget) is not None
