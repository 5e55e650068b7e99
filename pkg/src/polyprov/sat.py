"""DPLL satisfiability engine with two watched literals.

Clauses are lists of non-zero integers in DIMACS convention.  The solver
is chronological: unit propagation to fixpoint, then branch on the most
frequent unassigned variable, flipping the latest unflipped decision on
conflict.
"""

from __future__ import annotations

from collections import Counter

from .errors import ResourceBudgetExceeded

DEFAULT_DECISION_BUDGET = 2_000_000


class Solver:
    def __init__(self, num_vars: int, clauses: list[list[int]],
                 budget: int = DEFAULT_DECISION_BUDGET):
        self.num_vars = num_vars
        self.budget = budget
        self.decisions = 0
        self.propagations = 0
        self.value = [0] * (num_vars + 1)
        self.trail: list[int] = []
        self.qhead = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.units: list[int] = []
        self.trivially_unsat = False
        for clause in clauses:
            self._add(clause)
        freq = Counter(abs(l) for c in self.clauses for l in c)
        freq.update(abs(l) for l in self.units)
        # static branching order: most occurrences first, ties by index
        self.order = sorted(range(1, num_vars + 1), key=lambda v: (-freq[v], v))

    def _add(self, clause: list[int]):
        lits = sorted(set(clause), key=abs)
        if any(-l in lits for l in lits):
            return
        if not lits:
            self.trivially_unsat = True
            return
        if len(lits) == 1:
            self.units.append(lits[0])
            return
        idx = len(self.clauses)
        self.clauses.append(lits)
        self.watches.setdefault(lits[0], []).append(idx)
        self.watches.setdefault(lits[1], []).append(idx)

    def lit_value(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    def assign(self, lit: int) -> bool:
        cur = self.lit_value(lit)
        if cur == 1:
            return True
        if cur == -1:
            return False
        self.value[abs(lit)] = 1 if lit > 0 else -1
        self.trail.append(lit)
        return True

    def propagate(self) -> bool:
        """Unit propagation; False on conflict."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            false_lit = -lit
            watching = self.watches.get(false_lit, [])
            keep: list[int] = []
            i = 0
            while i < len(watching):
                ci = watching[i]
                i += 1
                clause = self.clauses[ci]
                if clause[0] == false_lit:
                    clause[0], clause[1] = clause[1], clause[0]
                if self.lit_value(clause[0]) == 1:
                    keep.append(ci)
                    continue
                for k in range(2, len(clause)):
                    if self.lit_value(clause[k]) != -1:
                        clause[1], clause[k] = clause[k], clause[1]
                        self.watches.setdefault(clause[1], []).append(ci)
                        break
                else:
                    keep.append(ci)
                    if not self.assign(clause[0]):
                        keep.extend(watching[i:])
                        self.watches[false_lit] = keep
                        return False
            self.watches[false_lit] = keep
        return True

    def _undo(self, size: int):
        while len(self.trail) > size:
            self.value[abs(self.trail.pop())] = 0
        self.qhead = min(self.qhead, size)

    def solve(self) -> dict[int, bool] | None:
        if self.trivially_unsat:
            return None
        for u in self.units:
            if not self.assign(u):
                return None
        if not self.propagate():
            return None
        stack: list[tuple[int, int, bool]] = []
        cursor = 0
        while True:
            while cursor < len(self.order) and self.value[self.order[cursor]] != 0:
                cursor += 1
            if cursor == len(self.order):
                return {v: self.value[v] == 1 for v in range(1, self.num_vars + 1)}
            self.decisions += 1
            if self.decisions > self.budget:
                raise ResourceBudgetExceeded("SAT decision budget exhausted", self.budget)
            var = self.order[cursor]
            stack.append((len(self.trail), cursor, False))
            self.assign(-var)
            ok = self.propagate()
            while not ok:
                while stack and stack[-1][2]:
                    stack.pop()
                if not stack:
                    return None
                size, cur, _ = stack.pop()
                lit = self.trail[size]
                self._undo(size)
                cursor = cur
                stack.append((size, cur, True))
                self.assign(-lit)
                ok = self.propagate()


def solve_clauses(num_vars: int, clauses: list[list[int]],
                  budget: int = DEFAULT_DECISION_BUDGET) -> dict[int, bool] | None:
    return Solver(num_vars, clauses, budget).solve()
