"""MSO formula AST (node-set MSO only), s-expression syntax, transformers.

Atoms are node equality, set membership, and labeled-edge adjacency;
implication and iff are primitive connectives so printed formulas stay close
to their prose reading.  `Annotated` wraps a subformula with a semantic hint
(reachability, path language) that evaluation engines may exploit; the hint
never changes the meaning, and printing ignores it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Mapping, Optional, Tuple, Union

from .errors import FormatError, IllScoped
from .graph import Label


@dataclass(frozen=True, order=True)
class NodeVar:
    name: str

    def __repr__(self):
        return f"NodeVar({self.name!r})"


@dataclass(frozen=True, order=True)
class SetVar:
    name: str

    def __repr__(self):
        return f"SetVar({self.name!r})"


class Formula:
    """Marker base class; all AST nodes are frozen dataclasses."""

    __slots__ = ()


@dataclass(frozen=True)
class Eq(Formula):
    x: NodeVar
    y: NodeVar


@dataclass(frozen=True)
class In(Formula):
    x: NodeVar
    X: SetVar


@dataclass(frozen=True)
class EdgeAtom(Formula):
    label: Label
    x: NodeVar
    y: NodeVar


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    parts: Tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    parts: Tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class ExistsNode(Formula):
    var: NodeVar
    body: Formula


@dataclass(frozen=True)
class ForallNode(Formula):
    var: NodeVar
    body: Formula


@dataclass(frozen=True)
class ExistsSet(Formula):
    var: SetVar
    body: Formula


@dataclass(frozen=True)
class ForallSet(Formula):
    var: SetVar
    body: Formula


class Hint:
    """Optional semantic annotation attached to a subformula.

    Subclasses must guarantee that the annotated body is logically equivalent
    to the hint's meaning, so engines may evaluate either.
    """

    def map_labels(self, mapping: Mapping[Label, Label]) -> "Hint":
        raise NotImplementedError

    def reverse_label(self, label: Label) -> Optional["Hint"]:
        """Hint after reversing all `label`-edges, or None to drop the hint."""
        return self

    def restrict(self, region: SetVar, banned: FrozenSet[Label]) -> Optional["Hint"]:
        """Hint after relativizing to `region` minus `banned` labels."""
        return None


@dataclass(frozen=True)
class Annotated(Formula):
    hint: Hint
    body: Formula


TRUE: Formula = And(())
FALSE: Formula = Or(())


def conj(parts: Iterable[Formula]) -> Formula:
    flat = []
    for p in parts:
        if p == TRUE:
            continue
        if p == FALSE:
            return FALSE
        if isinstance(p, And):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(parts: Iterable[Formula]) -> Formula:
    flat = []
    for p in parts:
        if p == FALSE:
            continue
        if p == TRUE:
            return TRUE
        if isinstance(p, Or):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def neg(p: Formula) -> Formula:
    if p == TRUE:
        return FALSE
    if p == FALSE:
        return TRUE
    if isinstance(p, Not):
        return p.body
    return Not(p)


class FreshVars:
    """Deterministic fresh-variable source for formula builders."""

    def __init__(self, prefix: str = "v"):
        self.prefix = prefix
        self.counter = 0

    def node(self, stem: str = "x") -> NodeVar:
        self.counter += 1
        return NodeVar(f"{stem}_{self.prefix}{self.counter}")

    def set(self, stem: str = "X") -> SetVar:
        self.counter += 1
        return SetVar(f"{stem}_{self.prefix}{self.counter}")


def free_vars(phi: Formula):
    """Free node and set variables; raises IllScoped on shadowed bindings."""
    free_n, free_s = set(), set()

    def go(f: Formula, bn: FrozenSet[NodeVar], bs: FrozenSet[SetVar]):
        if isinstance(f, Eq):
            for v in (f.x, f.y):
                if v not in bn:
                    free_n.add(v)
        elif isinstance(f, In):
            if f.x not in bn:
                free_n.add(f.x)
            if f.X not in bs:
                free_s.add(f.X)
        elif isinstance(f, EdgeAtom):
            for v in (f.x, f.y):
                if v not in bn:
                    free_n.add(v)
        elif isinstance(f, Not):
            go(f.body, bn, bs)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                go(p, bn, bs)
        elif isinstance(f, (Implies, Iff)):
            go(f.lhs, bn, bs)
            go(f.rhs, bn, bs)
        elif isinstance(f, (ExistsNode, ForallNode)):
            if f.var in bn:
                raise IllScoped(f"node variable {f.var.name} is shadowed")
            go(f.body, bn | {f.var}, bs)
        elif isinstance(f, (ExistsSet, ForallSet)):
            if f.var in bs:
                raise IllScoped(f"set variable {f.var.name} is shadowed")
            go(f.body, bn, bs | {f.var})
        elif isinstance(f, Annotated):
            go(f.body, bn, bs)
        else:
            raise TypeError(f"not a formula: {f!r}")

    go(phi, frozenset(), frozenset())
    return frozenset(free_n), frozenset(free_s)


def is_closed(phi: Formula) -> bool:
    fn, fs = free_vars(phi)
    return not fn and not fs


def formula_labels(phi: Formula) -> FrozenSet[Label]:
    out = set()

    def go(f):
        if isinstance(f, EdgeAtom):
            out.add(f.label)
        elif isinstance(f, Not):
            go(f.body)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                go(p)
        elif isinstance(f, (Implies, Iff)):
            go(f.lhs)
            go(f.rhs)
        elif isinstance(f, (ExistsNode, ForallNode, ExistsSet, ForallSet)):
            go(f.body)
        elif isinstance(f, Annotated):
            go(f.body)

    go(phi)
    return frozenset(out)


def map_labels(phi: Formula, mapping: Mapping[Label, Label]) -> Formula:
    """Rename edge labels throughout (identity for unmapped labels)."""

    def go(f):
        if isinstance(f, EdgeAtom):
            return EdgeAtom(mapping.get(f.label, f.label), f.x, f.y)
        if isinstance(f, (Eq, In)):
            return f
        if isinstance(f, Not):
            return Not(go(f.body))
        if isinstance(f, And):
            return And(tuple(go(p) for p in f.parts))
        if isinstance(f, Or):
            return Or(tuple(go(p) for p in f.parts))
        if isinstance(f, Implies):
            return Implies(go(f.lhs), go(f.rhs))
        if isinstance(f, Iff):
            return Iff(go(f.lhs), go(f.rhs))
        if isinstance(f, ExistsNode):
            return ExistsNode(f.var, go(f.body))
        if isinstance(f, ForallNode):
            return ForallNode(f.var, go(f.body))
        if isinstance(f, ExistsSet):
            return ExistsSet(f.var, go(f.body))
        if isinstance(f, ForallSet):
            return ForallSet(f.var, go(f.body))
        if isinstance(f, Annotated):
            return Annotated(f.hint.map_labels(mapping), go(f.body))
        raise TypeError(f"not a formula: {f!r}")

    return go(phi)


def reverse_label_edges(phi: Formula, label: Label) -> Formula:
    """Swap source and target in every `label`-edge atom."""

    def go(f):
        if isinstance(f, EdgeAtom):
            if f.label == label:
                return EdgeAtom(f.label, f.y, f.x)
            return f
        if isinstance(f, (Eq, In)):
            return f
        if isinstance(f, Not):
            return Not(go(f.body))
        if isinstance(f, And):
            return And(tuple(go(p) for p in f.parts))
        if isinstance(f, Or):
            return Or(tuple(go(p) for p in f.parts))
        if isinstance(f, Implies):
            return Implies(go(f.lhs), go(f.rhs))
        if isinstance(f, Iff):
            return Iff(go(f.lhs), go(f.rhs))
        if isinstance(f, ExistsNode):
            return ExistsNode(f.var, go(f.body))
        if isinstance(f, ForallNode):
            return ForallNode(f.var, go(f.body))
        if isinstance(f, ExistsSet):
            return ExistsSet(f.var, go(f.body))
        if isinstance(f, ForallSet):
            return ForallSet(f.var, go(f.body))
        if isinstance(f, Annotated):
            hint = f.hint.reverse_label(label)
            body = go(f.body)
            return Annotated(hint, body) if hint is not None else body
        raise TypeError(f"not a formula: {f!r}")

    return go(phi)


def relativize(phi: Formula, region: SetVar, banned: FrozenSet[Label] = frozenset()) -> Formula:
    """Bound every quantifier to `region` and kill `banned` edge atoms.

    Evaluating the result on h (with `region` bound to a node set S) matches
    evaluating `phi` on the subgraph of h induced by S minus banned-label
    edges, provided phi's free node variables are bound inside S.
    """

    def subset_of_region(S: SetVar) -> Formula:
        z = NodeVar(f"_rel_{S.name}_{region.name}")
        return ForallNode(z, Implies(In(z, S), In(z, region)))

    def go(f):
        if isinstance(f, EdgeAtom):
            return FALSE if f.label in banned else f
        if isinstance(f, (Eq, In)):
            return f
        if isinstance(f, Not):
            return neg(go(f.body))
        if isinstance(f, And):
            return conj(go(p) for p in f.parts)
        if isinstance(f, Or):
            return disj(go(p) for p in f.parts)
        if isinstance(f, Implies):
            return Implies(go(f.lhs), go(f.rhs))
        if isinstance(f, Iff):
            return Iff(go(f.lhs), go(f.rhs))
        if isinstance(f, ExistsNode):
            return ExistsNode(f.var, conj([In(f.var, region), go(f.body)]))
        if isinstance(f, ForallNode):
            return ForallNode(f.var, Implies(In(f.var, region), go(f.body)))
        if isinstance(f, ExistsSet):
            return ExistsSet(f.var, conj([subset_of_region(f.var), go(f.body)]))
        if isinstance(f, ForallSet):
            return ForallSet(f.var, Implies(subset_of_region(f.var), go(f.body)))
        if isinstance(f, Annotated):
            hint = f.hint.restrict(region, banned)
            body = go(f.body)
            return Annotated(hint, body) if hint is not None else body
        raise TypeError(f"not a formula: {f!r}")

    return go(phi)


# ---------------------------------------------------------------------------
# S-expression syntax
# ---------------------------------------------------------------------------

def to_sexpr(phi: Formula) -> str:
    if isinstance(phi, Eq):
        return f"(= {phi.x.name} {phi.y.name})"
    if isinstance(phi, In):
        return f"(in {phi.x.name} {phi.X.name})"
    if isinstance(phi, EdgeAtom):
        return f"(edge {phi.label.name} {phi.x.name} {phi.y.name})"
    if isinstance(phi, Not):
        return f"(not {to_sexpr(phi.body)})"
    if isinstance(phi, And):
        return "(and" + "".join(" " + to_sexpr(p) for p in phi.parts) + ")"
    if isinstance(phi, Or):
        return "(or" + "".join(" " + to_sexpr(p) for p in phi.parts) + ")"
    if isinstance(phi, Implies):
        return f"(implies {to_sexpr(phi.lhs)} {to_sexpr(phi.rhs)})"
    if isinstance(phi, Iff):
        return f"(iff {to_sexpr(phi.lhs)} {to_sexpr(phi.rhs)})"
    if isinstance(phi, ExistsNode):
        return f"(exists-node {phi.var.name} {to_sexpr(phi.body)})"
    if isinstance(phi, ForallNode):
        return f"(forall-node {phi.var.name} {to_sexpr(phi.body)})"
    if isinstance(phi, ExistsSet):
        return f"(exists-set {phi.var.name} {to_sexpr(phi.body)})"
    if isinstance(phi, ForallSet):
        return f"(forall-set {phi.var.name} {to_sexpr(phi.body)})"
    if isinstance(phi, Annotated):
        return to_sexpr(phi.body)
    raise TypeError(f"not a formula: {phi!r}")


def _tokenize(text: str):
    tokens = []
    i, line, col = 0, 1, 1
    while i < len(text):
        c = text[i]
        if c == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c in "()":
            tokens.append((c, line, col))
            i += 1
            col += 1
            continue
        j = i
        while j < len(text) and not text[j].isspace() and text[j] not in "();":
            j += 1
        tokens.append((text[i:j], line, col))
        col += j - i
        i = j
    return tokens


def from_sexpr(text: str) -> Formula:
    tokens = _tokenize(text)
    if not tokens:
        raise FormatError("empty formula text")
    pos = 0

    def peek():
        if pos >= len(tokens):
            raise FormatError("unexpected end of formula text")
        return tokens[pos]

    def take():
        nonlocal pos
        t = peek()
        pos += 1
        return t

    def atom_token():
        tok, line, col = take()
        if tok in ("(", ")"):
            raise FormatError("expected a bare token", line=line, column=col)
        return tok

    def parse() -> Formula:
        tok, line, col = take()
        if tok != "(":
            raise FormatError(f"expected '(', got {tok!r}", line=line, column=col)
        head, hline, hcol = take()
        if head == "=":
            f = Eq(NodeVar(atom_token()), NodeVar(atom_token()))
        elif head == "in":
            f = In(NodeVar(atom_token()), SetVar(atom_token()))
        elif head == "edge":
            f = EdgeAtom(Label(atom_token()), NodeVar(atom_token()), NodeVar(atom_token()))
        elif head == "not":
            f = Not(parse())
        elif head in ("and", "or"):
            parts = []
            while peek()[0] != ")":
                parts.append(parse())
            f = And(tuple(parts)) if head == "and" else Or(tuple(parts))
        elif head == "implies":
            f = Implies(parse(), parse())
        elif head == "iff":
            f = Iff(parse(), parse())
        elif head in ("exists-node", "forall-node", "exists-set", "forall-set"):
            name = atom_token()
            body = parse()
            if head == "exists-node":
                f = ExistsNode(NodeVar(name), body)
            elif head == "forall-node":
                f = ForallNode(NodeVar(name), body)
            elif head == "exists-set":
                f = ExistsSet(SetVar(name), body)
            else:
                f = ForallSet(SetVar(name), body)
        else:
            raise FormatError(f"unknown operator {head!r}", line=hline, column=hcol)
        tok, line, col = take()
        if tok != ")":
            raise FormatError(f"expected ')', got {tok!r}", line=line, column=col)
        return f

    f = parse()
    if pos != len(tokens):
        tok, line, col = tokens[pos]
        raise FormatError(f"trailing content {tok!r}", line=line, column=col)
    return f
