"""Derived-formula builders: reachability, path languages, path shapes.

Each builder returns a plain MSO formula wrapped in an `Annotated` node whose
hint records the intended meaning (label set, automaton).  Engines that
recognize the hint may use an equivalent polynomial check; engines that do
not simply evaluate the underlying formula.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

from .formula import (
    And,
    Annotated,
    EdgeAtom,
    Eq,
    ExistsNode,
    ForallNode,
    ForallSet,
    Formula,
    Hint,
    Implies,
    In,
    Not,
    NodeVar,
    Or,
    SetVar,
    conj,
    disj,
    neg,
)
from .graph import Label
from .regular import Dfa, Regex, compile_regex

_fresh_counter = itertools.count(1)


def _fresh(stem: str) -> str:
    return f"{stem}~{next(_fresh_counter)}"


# ---------------------------------------------------------------------------
# Small predicate helpers shared by all construction modules
# ---------------------------------------------------------------------------

def edge_any(labels: Iterable[Label], x: NodeVar, y: NodeVar) -> Formula:
    return disj(EdgeAtom(l, x, y) for l in sorted(set(labels)))


def has_out(labels: Iterable[Label], x: NodeVar) -> Formula:
    v = NodeVar(_fresh("ho"))
    return ExistsNode(v, edge_any(labels, x, v))


def has_in(labels: Iterable[Label], x: NodeVar) -> Formula:
    v = NodeVar(_fresh("hi"))
    return ExistsNode(v, edge_any(labels, v, x))


def no_out(labels: Iterable[Label], x: NodeVar) -> Formula:
    return neg(has_out(labels, x))


def no_in(labels: Iterable[Label], x: NodeVar) -> Formula:
    return neg(has_in(labels, x))


def at_most_one_out(labels: Sequence[Label]) -> Formula:
    """No node has two outgoing edges within the label family."""
    labels = sorted(set(labels))
    u, v, w = (NodeVar(_fresh(s)) for s in ("amu", "amv", "amw"))
    parts = []
    for l in labels:
        parts.append(Implies(conj([EdgeAtom(l, u, v), EdgeAtom(l, u, w)]), Eq(v, w)))
    for l1, l2 in itertools.combinations(labels, 2):
        parts.append(neg(conj([EdgeAtom(l1, u, v), EdgeAtom(l2, u, w)])))
    return ForallNode(u, ForallNode(v, ForallNode(w, conj(parts))))


def at_most_one_in(labels: Sequence[Label]) -> Formula:
    labels = sorted(set(labels))
    u, v, w = (NodeVar(_fresh(s)) for s in ("aiu", "aiv", "aiw"))
    parts = []
    for l in labels:
        parts.append(Implies(conj([EdgeAtom(l, v, u), EdgeAtom(l, w, u)]), Eq(v, w)))
    for l1, l2 in itertools.combinations(labels, 2):
        parts.append(neg(conj([EdgeAtom(l1, v, u), EdgeAtom(l2, w, u)])))
    return ForallNode(u, ForallNode(v, ForallNode(w, conj(parts))))


def functional(label: Label) -> Formula:
    u, v, w = (NodeVar(_fresh(s)) for s in ("fu", "fv", "fw"))
    return ForallNode(
        u,
        ForallNode(
            v,
            ForallNode(w, Implies(conj([EdgeAtom(label, u, v), EdgeAtom(label, u, w)]), Eq(v, w))),
        ),
    )


def injective(label: Label) -> Formula:
    u, v, w = (NodeVar(_fresh(s)) for s in ("ju", "jv", "jw"))
    return ForallNode(
        u,
        ForallNode(
            v,
            ForallNode(w, Implies(conj([EdgeAtom(label, v, u), EdgeAtom(label, w, u)]), Eq(v, w))),
        ),
    )


# ---------------------------------------------------------------------------
# Reachability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReachHint(Hint):
    """Directed reachability from x to y over the given edge labels.

    `within` lists set variables (bound in an enclosing scope) that every
    path node must belong to; it accumulates under relativization.
    """

    labels: FrozenSet[Label]
    x: NodeVar
    y: NodeVar
    within: Tuple[SetVar, ...] = ()

    def map_labels(self, mapping: Mapping[Label, Label]) -> "ReachHint":
        return ReachHint(
            frozenset(mapping.get(l, l) for l in self.labels), self.x, self.y, self.within
        )

    def reverse_label(self, label: Label) -> Optional[Hint]:
        # Reversing an edge direction changes what is reachable; drop the hint
        # and let engines fall back to the rewritten body.
        if label in self.labels:
            return None
        return self

    def restrict(self, region: SetVar, banned: FrozenSet[Label]) -> Optional[Hint]:
        return ReachHint(self.labels - banned, self.x, self.y, self.within + (region,))


def reach_formula(labels: Iterable[Label], x: NodeVar, y: NodeVar) -> Formula:
    """True iff a directed path (length >= 0) over `labels` leads x to y.

    Set-saturation encoding: every successor-closed set containing x also
    contains y.
    """
    labels = frozenset(labels)
    if not labels:
        raise ValueError("reach_formula needs a nonempty label set")
    X = SetVar(_fresh("Reach"))
    u, v = NodeVar(_fresh("ru")), NodeVar(_fresh("rv"))
    closed = ForallNode(
        u,
        ForallNode(v, Implies(conj([In(u, X), edge_any(labels, u, v)]), In(v, X))),
    )
    body = ForallSet(X, Implies(conj([In(x, X), closed]), In(y, X)))
    return Annotated(ReachHint(labels, x, y), body)


# ---------------------------------------------------------------------------
# Path languages (walks whose label word lies in a regular language)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathLangHint(Hint):
    """Existence of a walk from x to y whose label word the DFA accepts."""

    dfa: Dfa
    x: NodeVar
    y: NodeVar
    within: Tuple[SetVar, ...] = ()

    def map_labels(self, mapping: Mapping[Label, Label]) -> "PathLangHint":
        if any(l in mapping and mapping[l] != l for l in self.dfa.alphabet):
            remapped = Dfa(
                alphabet=frozenset(mapping.get(l, l) for l in self.dfa.alphabet),
                start=self.dfa.start,
                accepting=self.dfa.accepting,
                transitions=tuple((s, mapping.get(l, l), t) for s, l, t in self.dfa.transitions),
                n_states=self.dfa.n_states,
            )
            return PathLangHint(remapped, self.x, self.y, self.within)
        return self

    def reverse_label(self, label: Label) -> Optional[Hint]:
        if label in self.dfa.alphabet:
            return None
        return self

    def restrict(self, region: SetVar, banned: FrozenSet[Label]) -> Optional[Hint]:
        if banned & self.dfa.alphabet:
            dfa = Dfa(
                alphabet=self.dfa.alphabet - banned,
                start=self.dfa.start,
                accepting=self.dfa.accepting,
                transitions=tuple(t for t in self.dfa.transitions if t[1] not in banned),
                n_states=self.dfa.n_states,
            )
        else:
            dfa = self.dfa
        return PathLangHint(dfa, self.x, self.y, self.within + (region,))


def path_language_formula(pattern: Regex, x: NodeVar, y: NodeVar) -> Formula:
    """True iff some directed walk from x to y spells a word in the language.

    Encoding: a closure family, one node set per DFA state.  A family is
    closed when it respects every DFA transition along graph edges; if every
    closed family that holds (x, start) also holds (y, accepting), then the
    product state (y, accepting) is reachable, i.e. an accepted walk exists.
    """
    dfa = compile_regex(pattern) if isinstance(pattern, Regex) else pattern
    state_sets = {q: SetVar(_fresh(f"Q{q}")) for q in range(dfa.n_states)}
    u, v = NodeVar(_fresh("pu")), NodeVar(_fresh("pv"))
    closure_parts = [
        ForallNode(
            u,
            ForallNode(
                v,
                Implies(conj([In(u, state_sets[q]), EdgeAtom(l, u, v)]), In(v, state_sets[q2])),
            ),
        )
        for q, l, q2 in dfa.transitions
    ]
    accept = disj(In(y, state_sets[q]) for q in sorted(dfa.accepting))
    body = Implies(conj([In(x, state_sets[dfa.start])] + closure_parts), accept)
    for q in sorted(state_sets, reverse=True):
        body = ForallSet(state_sets[q], body)
    return Annotated(PathLangHint(dfa, x, y), body)


# ---------------------------------------------------------------------------
# Path-shaped graphs and whole-string languages
# ---------------------------------------------------------------------------

def string_graph_formula(omega: Iterable[Label]) -> Formula:
    """Closed formula: the graph's `omega`-part is a single directed path.

    Edges with labels outside `omega` are invisible to every conjunct, so the
    formula can be used on enriched graphs as well.
    """
    labels = sorted(set(omega))
    s, u, v = NodeVar(_fresh("ss")), NodeVar(_fresh("su")), NodeVar(_fresh("sv"))
    unique_source = ExistsNode(
        s,
        conj(
            [
                no_in(labels, s),
                ForallNode(v, Implies(no_in(labels, v), Eq(v, s))),
                ForallNode(u, reach_formula(labels, s, u)),
            ]
        ),
    )
    t = NodeVar(_fresh("st"))
    unique_sink = ExistsNode(
        t, conj([no_out(labels, t), ForallNode(v, Implies(no_out(labels, v), Eq(v, t)))])
    )
    return conj([at_most_one_out(labels), at_most_one_in(labels), unique_source, unique_sink])


@dataclass(frozen=True)
class StringLangHint(Hint):
    """The omega-part is a path spelling a word accepted by the DFA."""

    dfa: Dfa
    omega: FrozenSet[Label]

    def map_labels(self, mapping: Mapping[Label, Label]) -> "StringLangHint":
        base = PathLangHint(self.dfa, NodeVar("_"), NodeVar("_")).map_labels(mapping)
        return StringLangHint(base.dfa, frozenset(mapping.get(l, l) for l in self.omega))

    def reverse_label(self, label: Label) -> Optional[Hint]:
        if label in self.omega or label in self.dfa.alphabet:
            return None
        return self


def string_language_formula(pattern: Regex, omega: Optional[Iterable[Label]] = None) -> Formula:
    """Closed formula: the graph is gr(w) for some w in the language.

    `omega` is the label set that counts as string structure; it defaults to
    the pattern's own labels.  The path constraint runs end to end, from the
    unique source to the unique sink.
    """
    dfa = compile_regex(pattern)
    labels = frozenset(omega) if omega is not None else dfa.alphabet
    if not labels:
        raise ValueError("string_language_formula needs a nonempty structure alphabet")
    shape = string_graph_formula(labels)
    x, y = NodeVar(_fresh("wx")), NodeVar(_fresh("wy"))
    end_to_end = ExistsNode(
        x,
        conj(
            [
                no_in(labels, x),
                ExistsNode(y, conj([no_out(labels, y), path_language_formula(dfa_regex(dfa), x, y)])),
            ]
        ),
    )
    return Annotated(StringLangHint(dfa, labels), conj([shape, end_to_end]))


def dfa_regex(dfa: Dfa) -> Dfa:
    """Pass-through so path_language_formula can take a prebuilt DFA."""
    return dfa
