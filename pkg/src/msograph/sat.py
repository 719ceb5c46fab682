"""Conflict-driven clause-learning SAT solver.

Pure-Python CDCL with two-watched-literal propagation, first-UIP clause
learning, exponential VSIDS activity decay, phase saving, and Luby-series
restarts.  Variables are positive integers; a literal is +v or -v.  The
search accepts an optional conflict budget and raises BudgetExceeded when it
runs out, so callers can bound worst-case behavior.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Sequence

from .errors import BudgetExceeded


def _luby(i: int) -> int:
    # Luby sequence (1-indexed): 1 1 2 1 1 2 4 1 1 2 1 1 2 4 8 ...
    while True:
        k = i.bit_length()
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i = i - (1 << (k - 1)) + 1


class SatSolver:
    UNSAT = "unsat"
    SAT = "sat"

    def __init__(self):
        self.n_vars = 0
        self.clauses: List[List[int]] = []
        self.watches: Dict[int, List[List[int]]] = {}
        self.assign: Dict[int, bool] = {}
        self.level: Dict[int, int] = {}
        self.reason: Dict[int, Optional[List[int]]] = {}
        self.trail: List[int] = []
        self.trail_lim: List[int] = []
        self.activity: Dict[int, float] = {}
        self.var_inc = 1.0
        self.var_decay = 1.0 / 0.95
        self.saved_phase: Dict[int, bool] = {}
        self.ok = True
        self.conflicts = 0

    # -- construction -------------------------------------------------------

    def new_var(self) -> int:
        self.n_vars += 1
        v = self.n_vars
        self.activity[v] = 0.0
        return v

    def add_clause(self, lits: Iterable[int]) -> None:
        if not self.ok:
            return
        seen = {}
        clause = []
        for l in lits:
            if abs(l) > self.n_vars or l == 0:
                raise ValueError(f"literal {l} out of range")
            if -l in seen:
                return  # tautology
            if l not in seen:
                seen[l] = True
                clause.append(l)
        # Simplify against top-level assignments.
        simplified = []
        for l in clause:
            val = self._value(l)
            if val is True and self._lit_level(l) == 0:
                return
            if val is False and self._lit_level(l) == 0:
                continue
            simplified.append(l)
        clause = simplified
        if not clause:
            self.ok = False
            return
        if len(clause) == 1:
            if self._value(clause[0]) is None:
                self._enqueue(clause[0], None)
                if self._propagate() is not None:
                    self.ok = False
            elif self._value(clause[0]) is False:
                self.ok = False
            return
        self.clauses.append(clause)
        self._watch(clause)

    def _watch(self, clause: List[int]) -> None:
        self.watches.setdefault(-clause[0], []).append(clause)
        self.watches.setdefault(-clause[1], []).append(clause)

    # -- assignment helpers -------------------------------------------------

    def _value(self, lit: int) -> Optional[bool]:
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def _lit_level(self, lit: int) -> int:
        return self.level.get(abs(lit), 0)

    def _decision_level(self) -> int:
        return len(self.trail_lim)

    def _enqueue(self, lit: int, reason: Optional[List[int]]) -> None:
        v = abs(lit)
        self.assign[v] = lit > 0
        self.level[v] = self._decision_level()
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self) -> Optional[List[int]]:
        """Unit propagation; returns a conflicting clause or None."""
        i = len(self.trail) - 1 if self.trail else 0
        qhead = getattr(self, "_qhead", 0)
        while qhead < len(self.trail):
            lit = self.trail[qhead]
            qhead += 1
            watchers = self.watches.get(lit)
            if not watchers:
                continue
            keep = []
            j = 0
            while j < len(watchers):
                clause = watchers[j]
                j += 1
                # Ensure the falsified literal sits at slot 1.
                if clause[0] == -lit:
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                if self._value(first) is True:
                    keep.append(clause)
                    continue
                moved = False
                for k in range(2, len(clause)):
                    if self._value(clause[k]) is not False:
                        clause[1], clause[k] = clause[k], clause[1]
                        self.watches.setdefault(-clause[1], []).append(clause)
                        moved = True
                        break
                if moved:
                    continue
                keep.append(clause)
                if self._value(first) is False:
                    keep.extend(watchers[j:])
                    self.watches[lit] = keep
                    self._qhead = len(self.trail)
                    return clause
                self._enqueue(first, clause)
            self.watches[lit] = keep
        self._qhead = qhead
        return None

    # -- learning -----------------------------------------------------------

    def _bump(self, v: int) -> None:
        self.activity[v] = self.activity.get(v, 0.0) + self.var_inc
        if self.activity[v] > 1e100:
            for u in self.activity:
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100

    def _analyze(self, conflict: List[int]):
        """First-UIP learning; returns (learnt clause, backjump level)."""
        learnt = []
        seen = set()
        counter = 0
        lit = None
        reason = conflict
        idx = len(self.trail) - 1
        cur_level = self._decision_level()
        while True:
            for q in reason:
                if q == lit:
                    continue
                v = abs(q)
                if v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if self.level[v] == cur_level:
                    counter += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen.discard(abs(p))
            counter -= 1
            if counter == 0:
                lit = -p
                break
            lit = p
            reason = self.reason[abs(p)]
        learnt.insert(0, lit)
        if len(learnt) == 1:
            return learnt, 0
        back = max(self.level[abs(q)] for q in learnt[1:])
        # Put a literal of the backjump level in the second watch slot.
        for k in range(1, len(learnt)):
            if self.level[abs(learnt[k])] == back:
                learnt[1], learnt[k] = learnt[k], learnt[1]
                break
        return learnt, back

    def _backtrack(self, target_level: int) -> None:
        while self.trail_lim and len(self.trail_lim) > target_level:
            mark = self.trail_lim.pop()
            while len(self.trail) > mark:
                lit = self.trail.pop()
                v = abs(lit)
                self.saved_phase[v] = self.assign[v]
                del self.assign[v]
                del self.level[v]
                del self.reason[v]
        self._qhead = len(self.trail)

    def _pick_branch(self) -> Optional[int]:
        best, best_act = None, -1.0
        for v in range(1, self.n_vars + 1):
            if v not in self.assign and self.activity.get(v, 0.0) > best_act:
                best, best_act = v, self.activity.get(v, 0.0)
        if best is None:
            return None
        phase = self.saved_phase.get(best, False)
        return best if phase else -best

    # -- main search --------------------------------------------------------

    def solve(self, conflict_budget: Optional[int] = None) -> Optional[Dict[int, bool]]:
        """Model as {var: bool}, or None if unsatisfiable.

        Raises BudgetExceeded if the conflict budget runs out first.
        """
        if not self.ok:
            return None
        if self._assumption_floor == 0:
            self._backtrack(0)
            if self._propagate() is not None:
                self.ok = False
                return None
        restart_idx = 1
        restart_limit = 100 * _luby(restart_idx)
        conflicts_here = 0
        while True:
            conflict = self._propagate()
            if conflict is not None:
                self.conflicts += 1
                conflicts_here += 1
                if conflict_budget is not None and conflicts_here > conflict_budget:
                    self._backtrack(0)
                    raise BudgetExceeded(
                        f"SAT search exceeded the conflict budget of {conflict_budget}"
                    )
                if self._decision_level() == 0:
                    self.ok = False
                    return None
                learnt, back = self._analyze(conflict)
                # Never backjump past the assumption levels.
                back = max(back, self._assumption_floor)
                if back >= self._decision_level():
                    back = self._decision_level() - 1
                self._backtrack(back)
                if len(learnt) == 1:
                    if self._decision_level() == 0:
                        if self._value(learnt[0]) is False:
                            self.ok = False
                            return None
                        if self._value(learnt[0]) is None:
                            self._enqueue(learnt[0], None)
                    else:
                        # Unit learnt above the assumption floor: the learned
                        # fact contradicts or follows from the assumptions.
                        if self._value(learnt[0]) is False:
                            return None
                        if self._value(learnt[0]) is None:
                            self._enqueue(learnt[0], None)
                else:
                    self.clauses.append(learnt)
                    self._watch(learnt)
                    self._enqueue(learnt[0], learnt)
                self.var_inc *= self.var_decay
                if conflicts_here >= restart_limit:
                    restart_idx += 1
                    restart_limit = conflicts_here + 100 * _luby(restart_idx)
                    self._backtrack(self._assumption_floor)
                continue
            lit = self._pick_branch()
            if lit is None:
                return dict(self.assign)
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)

    @property
    def _assumption_floor(self) -> int:
        return getattr(self, "_assume_floor", 0)

    def solve_with_assumptions(
        self, assumptions: Sequence[int], conflict_budget: Optional[int] = None
    ) -> Optional[Dict[int, bool]]:
        """Solve under temporary unit assumptions (removed afterwards)."""
        if not self.ok:
            return None
        self._backtrack(0)
        if self._propagate() is not None:
            self.ok = False
            return None
        for lit in assumptions:
            if self._value(lit) is False:
                self._backtrack(0)
                return None
            if self._value(lit) is None:
                self.trail_lim.append(len(self.trail))
                self._enqueue(lit, None)
                if self._propagate() is not None:
                    self._backtrack(0)
                    return None
        self._assume_floor = self._decision_level()
        try:
            model = self.solve(conflict_budget=conflict_budget)
        finally:
            self._assume_floor = 0
            self._backtrack(0)
        return model


def solve_cnf(
    clauses: Iterable[Iterable[int]],
    n_vars: int,
    conflict_budget: Optional[int] = None,
) -> Optional[Dict[int, bool]]:
    """One-shot convenience wrapper around SatSolver."""
    s = SatSolver()
    for _ in range(n_vars):
        s.new_var()
    for c in clauses:
        s.add_clause(c)
    return s.solve(conflict_budget=conflict_budget)
