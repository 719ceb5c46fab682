"""Regular expressions over edge labels, compiled to DFAs.

The string syntax covers single-character labels with the usual operators
(concatenation by juxtaposition, union `|`, star `*`, parentheses); patterns
over multi-character labels or label classes are built with the AST
constructors directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

from .errors import FormatError
from .graph import Label


class Regex:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Regex):
    label: Label


@dataclass(frozen=True)
class Epsilon(Regex):
    pass


@dataclass(frozen=True)
class Nothing(Regex):
    pass


@dataclass(frozen=True)
class Cat(Regex):
    parts: Tuple[Regex, ...]


@dataclass(frozen=True)
class Alt(Regex):
    parts: Tuple[Regex, ...]


@dataclass(frozen=True)
class Star(Regex):
    body: Regex


def lit(name) -> Regex:
    return Lit(Label(name) if isinstance(name, str) else name)


def seq(*parts) -> Regex:
    return Cat(tuple(_coerce(p) for p in parts))


def alt(*parts) -> Regex:
    if not parts:
        return Nothing()
    return Alt(tuple(_coerce(p) for p in parts))


def star(body) -> Regex:
    return Star(_coerce(body))


def label_class(labels: Iterable[Label]) -> Regex:
    return alt(*[Lit(l) for l in labels])


def _coerce(p) -> Regex:
    if isinstance(p, Regex):
        return p
    if isinstance(p, (str, Label)):
        return lit(p)
    raise TypeError(f"cannot coerce {p!r} to a regex")


_SPECIAL = "()|*"


def parse_pattern(text: str) -> Regex:
    """Parse a pattern whose literals are single characters."""
    pos = 0

    def peek():
        return text[pos] if pos < len(text) else None

    def parse_alt() -> Regex:
        nonlocal pos
        parts = [parse_cat()]
        while peek() == "|":
            pos += 1
            parts.append(parse_cat())
        return parts[0] if len(parts) == 1 else Alt(tuple(parts))

    def parse_cat() -> Regex:
        parts = []
        while peek() is not None and peek() not in ")|":
            parts.append(parse_star())
        if not parts:
            return Epsilon()
        return parts[0] if len(parts) == 1 else Cat(tuple(parts))

    def parse_star() -> Regex:
        nonlocal pos
        base = parse_base()
        while peek() == "*":
            pos += 1
            base = Star(base)
        return base

    def parse_base() -> Regex:
        nonlocal pos
        c = peek()
        if c == "(":
            pos += 1
            inner = parse_alt()
            if peek() != ")":
                raise FormatError("unbalanced parenthesis in pattern", column=pos + 1)
            pos += 1
            return inner
        if c is None or c in _SPECIAL:
            raise FormatError(f"unexpected {c!r} in pattern", column=pos + 1)
        pos += 1
        if c.isspace():
            raise FormatError("whitespace is not a label", column=pos)
        return Lit(Label(c))

    r = parse_alt()
    if pos != len(text):
        raise FormatError("trailing content in pattern", column=pos + 1)
    return r


def regex_labels(r: Regex) -> FrozenSet[Label]:
    if isinstance(r, Lit):
        return frozenset([r.label])
    if isinstance(r, (Epsilon, Nothing)):
        return frozenset()
    if isinstance(r, (Cat, Alt)):
        out = frozenset()
        for p in r.parts:
            out |= regex_labels(p)
        return out
    if isinstance(r, Star):
        return regex_labels(r.body)
    raise TypeError(f"not a regex: {r!r}")


class Nfa:
    """Thompson construction NFA with epsilon moves."""

    def __init__(self):
        self.transitions: List[Dict[Label, set]] = []
        self.eps: List[set] = []

    def new_state(self) -> int:
        self.transitions.append({})
        self.eps.append(set())
        return len(self.transitions) - 1

    def add(self, src: int, label: Label, dst: int):
        self.transitions[src].setdefault(label, set()).add(dst)

    def add_eps(self, src: int, dst: int):
        self.eps[src].add(dst)

    def eps_closure(self, states: Iterable[int]) -> FrozenSet[int]:
        seen = set(states)
        work = list(seen)
        while work:
            s = work.pop()
            for t in self.eps[s]:
                if t not in seen:
                    seen.add(t)
                    work.append(t)
        return frozenset(seen)


def _thompson(r: Regex, nfa: Nfa) -> Tuple[int, int]:
    start, end = nfa.new_state(), nfa.new_state()
    if isinstance(r, Lit):
        nfa.add(start, r.label, end)
    elif isinstance(r, Epsilon):
        nfa.add_eps(start, end)
    elif isinstance(r, Nothing):
        pass
    elif isinstance(r, Cat):
        cur = start
        for p in r.parts:
            s, e = _thompson(p, nfa)
            nfa.add_eps(cur, s)
            cur = e
        nfa.add_eps(cur, end)
    elif isinstance(r, Alt):
        for p in r.parts:
            s, e = _thompson(p, nfa)
            nfa.add_eps(start, s)
            nfa.add_eps(e, end)
    elif isinstance(r, Star):
        s, e = _thompson(r.body, nfa)
        nfa.add_eps(start, end)
        nfa.add_eps(start, s)
        nfa.add_eps(e, s)
        nfa.add_eps(e, end)
    else:
        raise TypeError(f"not a regex: {r!r}")
    return start, end


@dataclass(frozen=True)
class Dfa:
    """Deterministic automaton; missing transitions are a dead state."""

    alphabet: FrozenSet[Label]
    start: int
    accepting: FrozenSet[int]
    transitions: Tuple[Tuple[int, Label, int], ...]
    n_states: int

    def step(self, state: int, label: Label):
        return self._table.get((state, label))

    @property
    def _table(self):
        table = getattr(self, "_table_cache", None)
        if table is None:
            table = {(s, l): t for s, l, t in self.transitions}
            object.__setattr__(self, "_table_cache", table)
        return table

    def accepts(self, word: Sequence[Label]) -> bool:
        state = self.start
        for label in word:
            state = self.step(state, label)
            if state is None:
                return False
        return state in self.accepting

    def accepts_empty(self) -> bool:
        return self.start in self.accepting


def compile_regex(r: Regex) -> Dfa:
    """Thompson NFA followed by subset construction."""
    nfa = Nfa()
    start, end = _thompson(r, nfa)
    alphabet = regex_labels(r)
    init = nfa.eps_closure([start])
    ids = {init: 0}
    order = [init]
    transitions = []
    i = 0
    while i < len(order):
        cur = order[i]
        for label in sorted(alphabet):
            nxt = set()
            for s in cur:
                nxt |= nfa.transitions[s].get(label, set())
            if not nxt:
                continue
            closed = nfa.eps_closure(nxt)
            if closed not in ids:
                ids[closed] = len(order)
                order.append(closed)
            transitions.append((ids[cur], label, ids[closed]))
        i += 1
    accepting = frozenset(ids[s] for s in order if end in s)
    return Dfa(
        alphabet=alphabet,
        start=0,
        accepting=accepting,
        transitions=tuple(transitions),
        n_states=len(order),
    )
