"""Oblivious machines on unary input, their SAT encoding, and pair experiments.

A machine reads the input tape ``1^n u _`` where ``u`` is a binary
witness of exactly ``p(n)`` cells and ``_`` is a blank end cell.  Head
positions on both tapes come from schedules, so the encoding never has
to track them.  Step ``i`` is described by a one-hot snapshot block over
(input symbol, work symbol, state).  The state of block ``i+1`` follows
from block ``i`` and the choice atoms of step ``i``; the work symbol of
block ``i+1`` is whatever was written at the latest earlier step with
the same work head position, or blank on a first visit.

The unary prefix contributes constants only.  Every atom of a compiled
formula lives under its namespace prefix, so two formulas compiled under
different prefixes never share an atom.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (BudgetExceeded, CoveringViolation, DisjointnessViolation,
                     MachineSpecError, ScheduleGap)
from .propositional import PAnd, PAtom, PNot, POr, sat_solve
from .sat import DEFAULT_DECISION_BUDGET

BLANK = "_"
WILDCARD = "*"
INPUT_ALPHABET = ("0", "1", BLANK)
DEFAULT_MAX_ATOMS = 200_000
MACHINE_PACKAGE = "polyprov.machines"


# ---------------------------------------------------------------------------
# Machine specifications
# ---------------------------------------------------------------------------

def zigzag(i: int, length: int) -> int:
    """Head position at step ``i`` sweeping cells ``0..length-1`` back and forth."""
    if length <= 1:
        return 0
    period = 2 * (length - 1)
    r = i % period
    return r if r < length else period - r


@dataclass(frozen=True)
class Schedule:
    """``builtin:zigzag`` over the input length, or an explicit position table."""
    table: tuple[int, ...] | None = None

    def positions(self, steps: int, length: int) -> list[int]:
        if self.table is None:
            return [zigzag(i, length) for i in range(steps)]
        if len(self.table) < steps:
            raise ScheduleGap(f"schedule table has {len(self.table)} entries, "
                              f"{steps} steps needed")
        return list(self.table[:steps])

    def describe(self) -> str:
        return "builtin:zigzag" if self.table is None else \
            "table " + " ".join(map(str, self.table))


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple[int, ...]

    def __call__(self, n: int) -> int:
        return sum(c * n ** k for k, c in enumerate(self.coeffs))


@dataclass
class MachineSpec:
    name: str
    states: tuple[str, ...]
    initial: str
    accepting: frozenset
    rejecting: frozenset
    work_alphabet: tuple[str, ...]
    rules: list[tuple[str, str, str, str, str]]
    input_schedule: Schedule = field(default_factory=Schedule)
    work_schedule: Schedule = field(default_factory=Schedule)
    q: Polynomial = field(default_factory=lambda: Polynomial((1, 1)))
    p: Polynomial = field(default_factory=lambda: Polynomial((0,)))

    def __post_init__(self):
        self._table = self._build_table()

    @property
    def halting(self) -> frozenset:
        return self.accepting | self.rejecting

    def _build_table(self) -> dict:
        st = set(self.states)
        if self.initial not in st:
            raise MachineSpecError(f"initial state {self.initial!r} is not declared")
        if not self.halting <= st:
            raise MachineSpecError("halting states must be declared")
        if self.accepting & self.rejecting:
            raise MachineSpecError("a state cannot both accept and reject")
        if BLANK not in self.work_alphabet:
            raise MachineSpecError("work alphabet must contain the blank '_'")
        for s, a, b, s2, w in self.rules:
            if s not in st or s2 not in st:
                raise MachineSpecError(f"undeclared state in rule {s} {a} {b} -> {s2} {w}")
            if a != WILDCARD and a not in INPUT_ALPHABET:
                raise MachineSpecError(f"input symbol {a!r} not in {INPUT_ALPHABET}")
            for sym in (b, w):
                if sym != WILDCARD and sym not in self.work_alphabet:
                    raise MachineSpecError(f"work symbol {sym!r} not declared")
            if s in self.halting:
                raise MachineSpecError(f"halting state {s!r} has outgoing rules")
        table = {}
        for s in self.states:
            for a in INPUT_ALPHABET:
                for b in self.work_alphabet:
                    if s in self.halting:
                        table[s, a, b] = ((s, b),)
                        continue
                    opts = self._options(s, a, b)
                    if not opts:
                        raise MachineSpecError(
                            f"no transition from state {s!r} reading ({a}, {b})")
                    table[s, a, b] = opts
        return table

    def _options(self, s: str, a: str, b: str) -> tuple:
        """Outputs of the most specific matching rules."""
        best, out = -1, []
        for rs, ra, rb, s2, w in self.rules:
            if rs != s or ra not in (a, WILDCARD) or rb not in (b, WILDCARD):
                continue
            spec = (ra != WILDCARD) + (rb != WILDCARD)
            opt = (s2, b if w == WILDCARD else w)
            if spec > best:
                best, out = spec, [opt]
            elif spec == best and opt not in out:
                out.append(opt)
        return tuple(out)

    def step(self, s: str, a: str, b: str) -> tuple[tuple[str, str], ...]:
        """Possible (next state, written symbol) pairs."""
        return self._table[s, a, b]

    @property
    def max_branching(self) -> int:
        return max(len(v) for v in self._table.values())

    def snapshot_alphabet(self) -> list[tuple[str, str, str]]:
        return list(itertools.product(INPUT_ALPHABET, self.work_alphabet, self.states))


_SECTIONS = ("STATES", "ALPHABET", "TRANSITIONS", "SCHEDULE", "BOUNDS")
_RULE = re.compile(r"^(\S+)\s+(\S+)\s+(\S+)\s*->\s*(\S+)\s+(\S+)$")


def parse_machine(text: str, name: str = "machine") -> MachineSpec:
    """Read the sectioned machine format; ``%`` starts a comment."""
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        if line in _SECTIONS:
            if line in sections:
                raise MachineSpecError(f"line {lineno}: section {line} repeated")
            current = line
            sections[current] = []
            continue
        if current is None:
            raise MachineSpecError(f"line {lineno}: content before the first section")
        sections[current].append((lineno, line))
    missing = [s for s in ("STATES", "ALPHABET", "TRANSITIONS", "BOUNDS") if s not in sections]
    if missing:
        raise MachineSpecError(f"missing section(s): {', '.join(missing)}")

    def keyed(sec: str) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for lineno, line in sections.get(sec, []):
            key, *rest = line.split()
            if key in out:
                raise MachineSpecError(f"line {lineno}: {sec} key {key!r} repeated")
            out[key] = rest
        return out

    st = keyed("STATES")
    try:
        states = tuple(st["states"])
        (initial,) = st["initial"]
    except (KeyError, ValueError) as e:
        raise MachineSpecError("STATES needs 'states' and a single 'initial'") from e
    accepting = frozenset(st.get("accept", []))
    rejecting = frozenset(st.get("reject", []))
    if "name" in st:
        name = " ".join(st["name"])

    al = keyed("ALPHABET")
    work = tuple(al.get("work", [BLANK]))

    rules = []
    for lineno, line in sections["TRANSITIONS"]:
        m = _RULE.match(line)
        if not m:
            raise MachineSpecError(f"line {lineno}: expected 'state in work -> state write'")
        rules.append(m.groups())

    sched = keyed("SCHEDULE")

    def schedule(key: str) -> Schedule:
        val = sched.get(key, ["builtin:zigzag"])
        if val == ["builtin:zigzag"]:
            return Schedule()
        if val and val[0] == "table":
            try:
                return Schedule(tuple(int(x) for x in val[1:]))
            except ValueError as e:
                raise MachineSpecError(f"bad {key} schedule table") from e
        raise MachineSpecError(f"unknown {key} schedule {' '.join(val)!r}")

    bounds = keyed("BOUNDS")

    def poly(key: str) -> Polynomial:
        if key not in bounds:
            raise MachineSpecError(f"BOUNDS needs {key!r}")
        try:
            coeffs = tuple(int(x) for x in bounds[key])
        except ValueError as e:
            raise MachineSpecError(f"bad coefficients for {key!r}") from e
        if not coeffs or any(c < 0 for c in coeffs):
            raise MachineSpecError(f"{key!r} needs non-negative coefficients")
        return Polynomial(coeffs)

    return MachineSpec(name, states, initial, accepting, rejecting, work, rules,
                       schedule("input"), schedule("work"), poly("q"), poly("p"))


def load_machine(path: str | Path) -> MachineSpec:
    p = Path(path)
    return parse_machine(p.read_text("utf-8"), name=p.stem)


def bundled_machines() -> list[str]:
    return sorted(f.name[:-3] for f in resources.files(MACHINE_PACKAGE).iterdir()
                  if f.name.endswith(".tm"))


def bundled_machine(name: str) -> MachineSpec:
    f = resources.files(MACHINE_PACKAGE).joinpath(f"{name}.tm")
    if not f.is_file():
        raise MachineSpecError(f"no bundled machine {name!r}")
    return parse_machine(f.read_text("utf-8"), name=name)


def resolve_machine(ref: str) -> MachineSpec:
    """A path to a ``.tm`` file, or the name of a bundled machine."""
    p = Path(ref)
    if p.suffix == ".tm" and p.exists():
        return load_machine(p)
    return bundled_machine(p.stem if p.suffix == ".tm" else ref)


# ---------------------------------------------------------------------------
# Layout shared by the compiler and the simulator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Layout:
    n: int
    steps: int              # q(n); blocks are numbered 0..steps
    witness_len: int
    input_pos: tuple[int, ...]
    work_pos: tuple[int, ...]

    @property
    def tape_length(self) -> int:
        return self.n + self.witness_len + 1


def layout(spec: MachineSpec, n: int) -> Layout:
    if n < 1:
        raise MachineSpecError("n must be at least 1")
    steps, wlen = spec.q(n), spec.p(n)
    length = n + wlen + 1
    return Layout(n, steps, wlen,
                  tuple(spec.input_schedule.positions(steps + 1, length)),
                  tuple(spec.work_schedule.positions(steps + 1, length)))


def pred_index(schedule: Sequence[int], i: int) -> int | None:
    """Latest step before ``i`` with the same head position."""
    if not 0 <= i < len(schedule):
        raise IndexError(f"step {i} outside the schedule")
    for j in range(i - 1, -1, -1):
        if schedule[j] == schedule[i]:
            return j
    return None


def _pred_table(schedule: Sequence[int]) -> list[int | None]:
    last: dict[int, int] = {}
    out: list[int | None] = []
    for i, pos in enumerate(schedule):
        out.append(last.get(pos))
        last[pos] = i
    return out


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

@dataclass
class CompiledFormula:
    formula: PAnd
    namespace: str
    n: int
    steps: int
    witness_atoms: list
    snapshot_atoms: list
    choice_atoms: list
    alphabet: list[tuple[str, str, str]]
    group_sizes: dict[str, int]

    @property
    def atoms(self) -> set:
        """Atom names; the formula is a flat clause list, so no general walk."""
        out = set()
        for clause in self.formula.items:
            for lit in clause.items:
                out.add(lit.arg.name if isinstance(lit, PNot) else lit.name)
        return out

    @property
    def clause_count(self) -> int:
        return len(self.formula.items)

    def snapshot_at(self, model: dict, i: int) -> list[tuple[str, str, str]]:
        """Snapshots whose atom is true at block ``i`` (one, for a model)."""
        return [t for t in self.alphabet
                if model.get((self.namespace, "z", i) + t, False)]

    def witness_of(self, model: dict) -> str:
        return "".join("1" if model.get(a, False) else "0" for a in self.witness_atoms)


def _input_symbol_atom(ns: str, lay: Layout, pos: int):
    """(fixed symbol, None) for constant cells, (None, atom) for witness cells."""
    if pos < lay.n:
        return "1", None
    if pos < lay.n + lay.witness_len:
        return None, PAtom((ns, "w", pos - lay.n))
    return BLANK, None


def compile_machine(spec: MachineSpec, n: int, namespace: str = "M",
                    max_atoms: int = DEFAULT_MAX_ATOMS) -> CompiledFormula:
    """Conjunction of the four clause groups for ``spec`` at ``n``.

    ``input``: cells under the unary prefix read ``1`` and the end cell
    reads blank.  ``initial``: block 0 has the initial state and a blank
    work cell.  ``step``: one-hot blocks chained by the transition table.
    ``final``: the last block is in an accepting state.
    """
    lay = layout(spec, n)
    alphabet = spec.snapshot_alphabet()
    branching = spec.max_branching
    cbits = (branching - 1).bit_length()
    estimate = (lay.steps + 1) * len(alphabet) + lay.witness_len + lay.steps * cbits
    if estimate > max_atoms:
        raise BudgetExceeded(f"compiling {spec.name} at n={n} needs {estimate} atoms",
                             max_atoms)

    def z(i, t):
        return PAtom((namespace, "z", i) + t)

    def choice(i, k):
        return PAtom((namespace, "c", i, k))

    witness = [PAtom((namespace, "w", k)) for k in range(lay.witness_len)]
    chooses = [choice(i, k) for i in range(lay.steps) for k in range(cbits)]
    groups: dict[str, list] = {"input": [], "initial": [], "step": [], "final": []}
    by_state: dict[str, list] = {}
    by_work: dict[str, list] = {}
    for t in alphabet:
        by_state.setdefault(t[2], []).append(t)
        by_work.setdefault(t[1], []).append(t)

    def choice_lits(i: int, v: int | None) -> list:
        """Literals falsified exactly when the choice bits of step i spell v."""
        if v is None:
            return []
        return [PNot(choice(i, k)) if (v >> k) & 1 else choice(i, k) for k in range(cbits)]

    def branch_values(count: int) -> list[list[int] | None]:
        """Choice values selecting each branch; values past the end pick the last."""
        if count == 1:
            return [None]
        vals: list[list[int]] = [[] for _ in range(count)]
        for v in range(1 << cbits):
            vals[min(v, count - 1)].append(v)
        return vals

    preds = _pred_table(lay.work_pos)
    for i in range(lay.steps + 1):
        block = [z(i, t) for t in alphabet]
        groups["step"].append(POr(tuple(block)))
        for x, y in itertools.combinations(block, 2):
            groups["step"].append(POr((PNot(x), PNot(y))))
        fixed, atom = _input_symbol_atom(namespace, lay, lay.input_pos[i])
        group = "input" if fixed == "1" else "step"
        for t in alphabet:
            a = t[0]
            if fixed is not None:
                if a != fixed:
                    groups[group].append(POr((PNot(z(i, t)),)))
            elif a == BLANK:
                groups["step"].append(POr((PNot(z(i, t)),)))
            else:
                groups["step"].append(POr((PNot(z(i, t)), atom if a == "1" else PNot(atom))))
        if i == 0:
            for t in alphabet:
                if t[2] != spec.initial or t[1] != BLANK:
                    groups["initial"].append(POr((PNot(z(0, t)),)))
            continue
        # state of block i from block i-1
        for t in alphabet:
            opts = spec.step(t[2], t[0], t[1])
            for (s2, _), vals in zip(opts, branch_values(len(opts))):
                targets = tuple(z(i, u) for u in by_state[s2])
                for v in vals or [None]:
                    groups["step"].append(
                        POr((PNot(z(i - 1, t)),) + tuple(choice_lits(i - 1, v)) + targets))
        # work symbol of block i from the latest write at the same cell
        j = preds[i]
        if j is None:
            for t in alphabet:
                if t[1] != BLANK:
                    groups["step"].append(POr((PNot(z(i, t)),)))
            continue
        for t in alphabet:
            opts = spec.step(t[2], t[0], t[1])
            for (_, w), vals in zip(opts, branch_values(len(opts))):
                targets = tuple(z(i, u) for u in by_work[w])
                for v in vals or [None]:
                    groups["step"].append(
                        POr((PNot(z(j, t)),) + tuple(choice_lits(j, v)) + targets))
    groups["final"].append(POr(tuple(z(lay.steps, t) for t in alphabet
                                     if t[2] in spec.accepting)))
    clauses = [c for g in ("input", "initial", "step", "final") for c in groups[g]]
    snaps = [z(i, t).name for i in range(lay.steps + 1) for t in alphabet]
    return CompiledFormula(PAnd(tuple(clauses)), namespace, n, lay.steps,
                           [a.name for a in witness], snaps, [c.name for c in chooses],
                           alphabet, {g: len(v) for g, v in groups.items()})


def decide_membership(spec: MachineSpec, n: int,
                      budget: int = DEFAULT_DECISION_BUDGET,
                      max_atoms: int = DEFAULT_MAX_ATOMS) -> bool:
    """Whether the compiled formula at ``n`` is satisfiable."""
    return sat_solve(compile_machine(spec, n, max_atoms=max_atoms).formula, budget) is not None


def compile_pair(spec_a: MachineSpec, spec_b: MachineSpec, n: int,
                 max_atoms: int = DEFAULT_MAX_ATOMS) -> tuple[CompiledFormula, CompiledFormula]:
    """Both machines compiled under the prefixes ``A`` and ``B``."""
    fa = compile_machine(spec_a, n, "A", max_atoms)
    fb = compile_machine(spec_b, n, "B", max_atoms)
    return fa, fb


def pair_is_disjoint_at(spec_a: MachineSpec, spec_b: MachineSpec, n: int,
                        budget: int = DEFAULT_DECISION_BUDGET) -> bool:
    """``not A or not B`` is a tautology, i.e. ``A and B`` is unsatisfiable."""
    fa, fb = compile_pair(spec_a, spec_b, n)
    return sat_solve(PAnd(fa.formula.items + fb.formula.items), budget) is None


# ---------------------------------------------------------------------------
# Direct simulation
# ---------------------------------------------------------------------------

def simulate(spec: MachineSpec, n: int, witness: str) -> bool:
    """Run every nondeterministic branch on ``1^n witness _``."""
    lay = layout(spec, n)
    if len(witness) != lay.witness_len or set(witness) - {"0", "1"}:
        raise ValueError(f"witness must be {lay.witness_len} binary digits")
    tape = "1" * n + witness + BLANK
    configs = {(spec.initial, ())}
    for i in range(lay.steps):
        a = tape[lay.input_pos[i]] if lay.input_pos[i] < len(tape) else BLANK
        pos = lay.work_pos[i]
        nxt = set()
        for state, work in configs:
            cells = dict(work)
            b = cells.get(pos, BLANK)
            for s2, w in spec.step(state, a, b):
                cells2 = dict(cells)
                cells2[pos] = w
                nxt.add((s2, tuple(sorted(cells2.items()))))
        configs = nxt
    return any(state in spec.accepting for state, _ in configs)


def simulate_membership(spec: MachineSpec, n: int) -> bool:
    """Brute force over every witness of length ``p(n)``."""
    wlen = spec.p(n)
    return any(simulate(spec, n, "".join(bits))
               for bits in itertools.product("01", repeat=wlen))


# ---------------------------------------------------------------------------
# Pair experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparatorRow:
    n: int
    sat_a: bool
    sat_b: bool

    @property
    def in_c(self) -> bool:
        return not self.sat_a

    def tsv(self) -> str:
        return f"{self.n}\t{int(self.sat_a)}\t{int(self.sat_b)}\t{'C' if self.in_c else '-'}"


def separate(spec_a: MachineSpec, spec_b: MachineSpec, n_range: Iterable[int],
             budget: int = DEFAULT_DECISION_BUDGET) -> list[SeparatorRow]:
    """Separator table with ``n in C`` iff the A-formula is unsatisfiable."""
    rows = []
    for n in n_range:
        sat_a = decide_membership(spec_a, n, budget)
        sat_b = decide_membership(spec_b, n, budget)
        if sat_a and sat_b:
            raise DisjointnessViolation(n)
        rows.append(SeparatorRow(n, sat_a, sat_b))
    return rows


def select(spec1: MachineSpec, spec2: MachineSpec, n: int,
           budget: int = DEFAULT_DECISION_BUDGET) -> int:
    """An index ``i`` with ``n`` in the i-th language, preferring 1."""
    if decide_membership(spec1, n, budget):
        return 1
    if decide_membership(spec2, n, budget):
        return 2
    raise CoveringViolation(n)


def parse_range(text: str) -> range:
    """``a..b`` inclusive."""
    m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", text)
    if not m:
        raise ValueError(f"expected a..b, got {text!r}")
    a, b = int(m.group(1)), int(m.group(2))
    if a > b:
        raise ValueError(f"empty range {text!r}")
    return range(a, b + 1)
