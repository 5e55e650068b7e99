"""Propositional formulas, evaluation traces, clause conversion and SAT.

Atoms carry structured names (tuples such as ``("P", 3)`` or
``("A", "z", 4, 17)``) so that namespaces stay explicit.  An optional
existential atom-block prefix (:class:`PQuant`) gives the one-block
quantified form used for translated set quantifiers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Union

from .errors import PartialAssignment, UnsupportedConstruct
from .sat import DEFAULT_DECISION_BUDGET, solve_clauses


@dataclass(frozen=True)
class PConst:
    value: bool


@dataclass(frozen=True)
class PAtom:
    name: Hashable


@dataclass(frozen=True)
class PNot:
    arg: "PropFormula"


@dataclass(frozen=True)
class PAnd:
    items: tuple


@dataclass(frozen=True)
class POr:
    items: tuple


@dataclass(frozen=True)
class PQuant:
    """Existential block over ``atoms`` (a frozenset of atom names)."""
    atoms: frozenset
    body: "PropFormula"


PropFormula = Union[PConst, PAtom, PNot, PAnd, POr, PQuant]

TRUE = PConst(True)
FALSE = PConst(False)


def p_and(*items) -> PropFormula:
    return PAnd(tuple(items))


def p_or(*items) -> PropFormula:
    return POr(tuple(items))


def p_imp(a, b) -> PropFormula:
    return POr((PNot(a), b))


def atoms(phi: PropFormula) -> set:
    """Atoms occurring in ``phi`` (bound prefix atoms included)."""
    out: set = set()
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, PAtom):
            out.add(f.name)
        elif isinstance(f, PNot):
            stack.append(f.arg)
        elif isinstance(f, (PAnd, POr)):
            stack.extend(f.items)
        elif isinstance(f, PQuant):
            out |= set(f.atoms)
            stack.append(f.body)
    return out


def free_atoms(phi: PropFormula) -> set:
    if isinstance(phi, PQuant):
        return free_atoms(phi.body) - set(phi.atoms)
    if isinstance(phi, PAtom):
        return {phi.name}
    if isinstance(phi, PNot):
        return free_atoms(phi.arg)
    if isinstance(phi, (PAnd, POr)):
        out: set = set()
        for g in phi.items:
            out |= free_atoms(g)
        return out
    return set()


def subformulas(phi: PropFormula) -> list:
    out = []

    def walk(f):
        out.append(f)
        if isinstance(f, PNot):
            walk(f.arg)
        elif isinstance(f, (PAnd, POr)):
            for g in f.items:
                walk(g)
        elif isinstance(f, PQuant):
            walk(f.body)
    walk(phi)
    return out


def size(phi: PropFormula) -> int:
    return len(subformulas(phi))


def evaluate(phi: PropFormula, eta: Mapping) -> tuple[bool, list]:
    """Value of ``phi`` under ``eta`` and the per-subformula trace.

    The trace lists ``(subformula, value)`` in preorder, one entry per
    node.  A quantified block is decided by enumerating its atoms.
    """
    trace: list = []

    def ev(f, env) -> bool:
        slot = len(trace)
        trace.append(None)
        if isinstance(f, PConst):
            v = f.value
        elif isinstance(f, PAtom):
            if f.name not in env:
                raise PartialAssignment(f"no value for atom {f.name!r}")
            v = bool(env[f.name])
        elif isinstance(f, PNot):
            v = not ev(f.arg, env)
        elif isinstance(f, PAnd):
            v = True
            for g in f.items:
                v = ev(g, env) and v
        elif isinstance(f, POr):
            v = False
            for g in f.items:
                v = ev(g, env) or v
        elif isinstance(f, PQuant):
            bound = sorted(f.atoms, key=repr)
            model = sat_solve(_restrict(f.body, env, set(bound)))
            v = model is not None
            inner = dict(env)
            for a in bound:
                inner[a] = model.get(a, False) if model else False
            ev(f.body, inner)
        else:
            raise TypeError(f"not a propositional formula: {f!r}")
        trace[slot] = (f, v)
        return v

    value = ev(phi, eta)
    return value, trace


def _restrict(f, env, bound):
    """Plug ``env`` into every atom outside ``bound``."""
    if isinstance(f, PAtom):
        if f.name in bound:
            return f
        if f.name not in env:
            raise PartialAssignment(f"no value for atom {f.name!r}")
        return PConst(bool(env[f.name]))
    if isinstance(f, PNot):
        return PNot(_restrict(f.arg, env, bound))
    if isinstance(f, (PAnd, POr)):
        return type(f)(tuple(_restrict(g, env, bound) for g in f.items))
    if isinstance(f, PQuant):
        return PQuant(f.atoms, _restrict(f.body, env, bound | set(f.atoms)))
    return f


def simplify(phi: PropFormula) -> PropFormula:
    """Constant folding and flattening; atoms are left untouched."""
    if isinstance(phi, (PConst, PAtom)):
        return phi
    if isinstance(phi, PNot):
        a = simplify(phi.arg)
        if isinstance(a, PConst):
            return PConst(not a.value)
        if isinstance(a, PNot):
            return a.arg
        return PNot(a)
    if isinstance(phi, (PAnd, POr)):
        unit, zero = (True, False) if isinstance(phi, PAnd) else (False, True)
        items = []
        for g in phi.items:
            s = simplify(g)
            if isinstance(s, PConst):
                if s.value == zero:
                    return PConst(zero)
                continue
            if type(s) is type(phi):
                items.extend(s.items)
            else:
                items.append(s)
        if not items:
            return PConst(unit)
        if len(items) == 1:
            return items[0]
        return type(phi)(tuple(items))
    if isinstance(phi, PQuant):
        body = simplify(phi.body)
        if isinstance(body, PConst):
            return body
        return PQuant(phi.atoms, body)
    raise TypeError(phi)


# ---------------------------------------------------------------------------
# Definitional clause form
# ---------------------------------------------------------------------------

class CNF:
    """Clause set plus the map between atom names and DIMACS variables."""

    def __init__(self):
        self.var_of: dict = {}
        self.atom_of: dict[int, Hashable] = {}
        self.num_vars = 0
        self.clauses: list[list[int]] = []

    def atom_var(self, name) -> int:
        v = self.var_of.get(name)
        if v is None:
            v = self.fresh()
            self.var_of[name] = v
            self.atom_of[v] = name
        return v

    def fresh(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def to_dimacs(self) -> str:
        lines = [f"c atom {v} {self.atom_of[v]!r}" for v in sorted(self.atom_of)]
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        lines.extend(" ".join(map(str, c)) + " 0" for c in self.clauses)
        return "\n".join(lines) + "\n"


def _literal(f, cnf: CNF) -> int | None:
    if isinstance(f, PAtom):
        return cnf.atom_var(f.name)
    if isinstance(f, PNot) and isinstance(f.arg, PAtom):
        return -cnf.atom_var(f.arg.name)
    return None


def _encode(f, cnf: CNF, memo: dict) -> int:
    """Return a literal equivalent to ``f``, adding defining clauses."""
    lit = _literal(f, cnf)
    if lit is not None:
        return lit
    key = id(f)
    if key in memo:
        return memo[key][0]
    if isinstance(f, PConst):
        v = cnf.fresh()
        cnf.clauses.append([v] if f.value else [-v])
        out = v
    elif isinstance(f, PNot):
        out = -_encode(f.arg, cnf, memo)
    elif isinstance(f, (PAnd, POr)):
        kids = [_encode(g, cnf, memo) for g in f.items]
        v = cnf.fresh()
        if isinstance(f, PAnd):
            for k in kids:
                cnf.clauses.append([-v, k])
            cnf.clauses.append([v] + [-k for k in kids])
        else:
            for k in kids:
                cnf.clauses.append([v, -k])
            cnf.clauses.append([-v] + kids)
        out = v
    elif isinstance(f, PQuant):
        raise UnsupportedConstruct("nested atom-block quantifier in clause conversion")
    else:
        raise TypeError(f)
    memo[key] = (out, f)
    return out


def to_cnf(phi: PropFormula) -> CNF:
    """Definitional clause form; top-level conjuncts of literals stay direct."""
    cnf = CNF()
    memo: dict = {}
    if isinstance(phi, PQuant):
        phi = phi.body
    for a in sorted(atoms(phi), key=repr):
        cnf.atom_var(a)
    conjuncts = list(phi.items) if isinstance(phi, PAnd) else [phi]
    while conjuncts:
        c = conjuncts.pop(0)
        if isinstance(c, PAnd):
            conjuncts[0:0] = list(c.items)
            continue
        if isinstance(c, PConst):
            if not c.value:
                cnf.clauses.append([])
            continue
        if isinstance(c, POr):
            lits = [_literal(g, cnf) for g in c.items]
            if all(l is not None for l in lits):
                cnf.clauses.append(lits)
                continue
            cnf.clauses.append([_encode(g, cnf, memo) for g in c.items])
            continue
        cnf.clauses.append([_encode(c, cnf, memo)])
    return cnf


def sat_solve(phi: PropFormula, budget: int = DEFAULT_DECISION_BUDGET) -> dict | None:
    """A satisfying assignment of the atoms of ``phi`` or None.

    A leading existential block is absorbed into the search; the model
    then includes values for the bound atoms as well.
    """
    cnf = to_cnf(phi)
    model = solve_clauses(cnf.num_vars, cnf.clauses, budget)
    if model is None:
        return None
    return {name: model[v] for name, v in cnf.var_of.items()}


def is_tautology(phi: PropFormula, budget: int = DEFAULT_DECISION_BUDGET) -> bool:
    if isinstance(phi, PQuant):
        raise UnsupportedConstruct("tautology check of an atom-block formula")
    return sat_solve(PNot(phi), budget) is None


def format_prop(phi: PropFormula) -> str:
    if isinstance(phi, PConst):
        return "T" if phi.value else "F"
    if isinstance(phi, PAtom):
        n = phi.name
        if isinstance(n, tuple):
            return n[0] + "[" + ",".join(map(str, n[1:])) + "]"
        return str(n)
    if isinstance(phi, PNot):
        return "-" + format_prop(phi.arg)
    if isinstance(phi, PAnd):
        return "(" + " & ".join(format_prop(g) for g in phi.items) + ")"
    if isinstance(phi, POr):
        return "(" + " | ".join(format_prop(g) for g in phi.items) + ")"
    if isinstance(phi, PQuant):
        names = ",".join(format_prop(PAtom(a)) for a in sorted(phi.atoms, key=repr))
        return f"E[{names}]. {format_prop(phi.body)}"
    raise TypeError(phi)


def parse_dimacs(text: str) -> tuple[int, list[list[int]], dict[int, str]]:
    """Read clauses and the optional ``c atom`` variable map."""
    num_vars = 0
    clauses: list[list[int]] = []
    names: dict[int, str] = {}
    current: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split(None, 3)
            if len(parts) == 4 and parts[1] == "atom":
                names[int(parts[2])] = parts[3]
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {line}")
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                num_vars = max(num_vars, abs(lit))
                current.append(lit)
    if current:
        clauses.append(current)
    return num_vars, clauses, names


def conj_all(items: Iterable) -> PropFormula:
    return PAnd(tuple(items))
