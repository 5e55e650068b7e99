"""Lambda-formulas: indexed provability boxes over sequents.

The module provides the immutable syntax tree (index terms, formulas,
sequents), the seven-clause grammar check, substitution, and a text
parser/printer for the concrete notation::

    ^i[ G => D ]      triangle box with index i
    #i[ G => D ]      black-triangle box
    ^i@S{p}[ ... ]    box over system S relativized by p
    ^i A              shorthand for ^i[ => A ]
    ~  \\/  /\\  ->   negation, disjunction, conjunction, implication
    bot top           constants

Index terms are naturals, identifiers, ``t+k`` and ``max(t,u)``.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .errors import GrammarViolation, ParseError, RelativizerViolation

BASE_SYSTEM = "base"
TRIANGLE = "tri"
BLACK = "black"


# ---------------------------------------------------------------------------
# Index terms
# ---------------------------------------------------------------------------

class IndexTerm:
    """Symbolic exponent. Equality is decided on a normal form."""

    def normal(self) -> tuple:
        return _normalize(_flatten_max(self))

    def __eq__(self, other):
        if not isinstance(other, IndexTerm):
            return NotImplemented
        return self.normal() == other.normal()

    def __hash__(self):
        return hash(self.normal())

    def __add__(self, k: int) -> "IndexTerm":
        return plus(self, k)

    def __str__(self):
        return format_index(self)

    def __repr__(self):
        return f"IndexTerm({format_index(self)})"


class INat(IndexTerm):
    __slots__ = ("value",)

    def __init__(self, value: int):
        if value < 0:
            raise ValueError("index literals are natural numbers")
        self.value = value


class IVar(IndexTerm):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name


class ISum(IndexTerm):
    __slots__ = ("term", "offset")

    def __init__(self, term: IndexTerm, offset: int):
        if offset < 0:
            raise ValueError("index offsets are natural numbers")
        self.term = term
        self.offset = offset


class IMax(IndexTerm):
    __slots__ = ("left", "right")

    def __init__(self, left: IndexTerm, right: IndexTerm):
        self.left = left
        self.right = right


def plus(t: IndexTerm, k: int) -> IndexTerm:
    if k == 0:
        return t
    if isinstance(t, INat):
        return INat(t.value + k)
    if isinstance(t, ISum):
        return ISum(t.term, t.offset + k)
    return ISum(t, k)


def _flatten_max(t: IndexTerm, offset: int = 0) -> list[tuple[str, int]]:
    # A term is a max over (variable-or-empty, offset) atoms.
    if isinstance(t, INat):
        return [("", t.value + offset)]
    if isinstance(t, IVar):
        return [(t.name, offset)]
    if isinstance(t, ISum):
        return _flatten_max(t.term, offset + t.offset)
    if isinstance(t, IMax):
        return _flatten_max(t.left, offset) + _flatten_max(t.right, offset)
    raise TypeError(f"not an index term: {t!r}")


def _normalize(atoms: list[tuple[str, int]]) -> tuple:
    best: dict[str, int] = {}
    for var, off in atoms:
        best[var] = max(best.get(var, off), off)
    # variables range over naturals, so v+o dominates any constant <= o
    if "" in best and any(v and o >= best[""] for v, o in best.items()):
        del best[""]
    return tuple(sorted(best.items()))


def eval_index(t: IndexTerm, env: Mapping[str, int]) -> int:
    vals = []
    for var, off in t.normal():
        if var == "":
            vals.append(off)
        else:
            if var not in env:
                raise KeyError(var)
            vals.append(env[var] + off)
    return max(vals)


def index_vars(t: IndexTerm) -> set[str]:
    return {v for v, _ in t.normal() if v}


def rename_index(t: IndexTerm, mapping: Mapping[str, IndexTerm]) -> IndexTerm:
    if isinstance(t, INat):
        return t
    if isinstance(t, IVar):
        return mapping.get(t.name, t)
    if isinstance(t, ISum):
        return plus(rename_index(t.term, mapping), t.offset)
    if isinstance(t, IMax):
        return IMax(rename_index(t.left, mapping), rename_index(t.right, mapping))
    raise TypeError(t)


def format_index(t: IndexTerm) -> str:
    if isinstance(t, INat):
        return str(t.value)
    if isinstance(t, IVar):
        return t.name
    if isinstance(t, ISum):
        return f"{format_index(t.term)}+{t.offset}"
    if isinstance(t, IMax):
        return f"max({format_index(t.left)},{format_index(t.right)})"
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Formulas and sequents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    name: str
    positive: bool = True


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Box:
    strength: str
    index: IndexTerm
    body: "Sequent"
    system: str = BASE_SYSTEM
    relativizer: "Formula | None" = None

    @property
    def relativized(self) -> bool:
        return self.relativizer is not None


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Imp:
    left: "Formula"
    right: "Formula"


Formula = Union[Lit, Bot, Top, Box, Not, Or, And, Imp]


def skey(f) -> tuple:
    """Structural sort key; sequent members are compared as multisets."""
    if isinstance(f, Lit):
        return (0, f.name, f.positive)
    if isinstance(f, Bot):
        return (1,)
    if isinstance(f, Top):
        return (2,)
    if isinstance(f, Box):
        rel = skey(f.relativizer) if f.relativizer is not None else ()
        return (3, f.strength, f.index.normal(), f.system, rel, f.body.key())
    if isinstance(f, Not):
        return (4, skey(f.arg))
    if isinstance(f, Or):
        return (5, skey(f.left), skey(f.right))
    if isinstance(f, And):
        return (6, skey(f.left), skey(f.right))
    if isinstance(f, Imp):
        return (7, skey(f.left), skey(f.right))
    raise TypeError(f"not a formula: {f!r}")


@dataclass(frozen=True, eq=False)
class Sequent:
    antecedent: tuple = ()
    succedent: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "antecedent", tuple(self.antecedent))
        object.__setattr__(self, "succedent", tuple(self.succedent))

    def key(self) -> tuple:
        return (tuple(sorted(skey(f) for f in self.antecedent)),
                tuple(sorted(skey(f) for f in self.succedent)))

    def __eq__(self, other):
        if not isinstance(other, Sequent):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __str__(self):
        return format_sequent(self)

    def __repr__(self):
        return f"Sequent({format_sequent(self)!r})"

    def formulas(self) -> Iterable:
        yield from self.antecedent
        yield from self.succedent


def seq(ant: Iterable = (), suc: Iterable = ()) -> Sequent:
    return Sequent(tuple(ant), tuple(suc))


def counter(formulas: Iterable) -> Counter:
    return Counter(skey(f) for f in formulas)


def negate(f):
    """Classical negation that never stacks: literals flip, ~~A is A."""
    if isinstance(f, Lit):
        return Lit(f.name, not f.positive)
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, Bot):
        return Top()
    if isinstance(f, Top):
        return Bot()
    return Not(f)


def is_box(f) -> bool:
    return isinstance(f, Box)


def is_negated_box(f) -> bool:
    return isinstance(f, Not) and isinstance(f.arg, Box)


def conj(formulas: Iterable):
    """Left-nested conjunction; top for the empty list."""
    items = list(formulas)
    if not items:
        return Top()
    out = items[0]
    for g in items[1:]:
        out = And(out, g)
    return out


# ---------------------------------------------------------------------------
# Grammar
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Derivation:
    """Witness that a formula is generated by the grammar clauses."""
    clause: int
    formula: object
    children: tuple = field(default=())


def lambda_derivation(f) -> Derivation | None:
    """Reconstruct the clause derivation of ``f`` or return None.

    Clause numbering: 1 literals (and the constants), 2 triangle boxes,
    3 connectives over two boxes, 4 negated triangle box, 5 connectives
    over two negated boxes, 6 black-triangle boxes, 7 negated black box.
    """
    if isinstance(f, (Lit, Bot, Top)):
        return Derivation(1, f)
    if isinstance(f, Box):
        kids = []
        for g in f.body.formulas():
            d = lambda_derivation(g)
            if d is None:
                return None
            kids.append(d)
        if f.relativizer is not None:
            r = f.relativizer
            if not (isinstance(r, Lit) and r.positive):
                d = lambda_derivation(r)
                if d is None:
                    return None
                kids.append(d)
        return Derivation(2 if f.strength == TRIANGLE else 6, f, tuple(kids))
    if isinstance(f, Not):
        if isinstance(f.arg, Box):
            d = lambda_derivation(f.arg)
            if d is None:
                return None
            return Derivation(4 if f.arg.strength == TRIANGLE else 7, f, (d,))
        return None
    if isinstance(f, (Or, And)):
        l, r = f.left, f.right
        if isinstance(l, Box) and isinstance(r, Box):
            clause = 3
        elif is_negated_box(l) and is_negated_box(r):
            clause = 5
        else:
            return None
        dl, dr = lambda_derivation(l), lambda_derivation(r)
        if dl is None or dr is None:
            return None
        return Derivation(clause, f, (dl, dr))
    return None


def wf_lambda(f) -> bool:
    return lambda_derivation(f) is not None


def wf_sequent(s: Sequent) -> bool:
    return all(wf_lambda(f) for f in s.formulas())


# ---------------------------------------------------------------------------
# Traversals and substitution
# ---------------------------------------------------------------------------

def atoms_of(f) -> set[str]:
    if isinstance(f, Lit):
        return {f.name}
    if isinstance(f, (Bot, Top)):
        return set()
    if isinstance(f, Box):
        out = set().union(*(atoms_of(g) for g in f.body.formulas())) if (
            f.body.antecedent or f.body.succedent) else set()
        if f.relativizer is not None:
            out |= atoms_of(f.relativizer)
        return out
    if isinstance(f, Not):
        return atoms_of(f.arg)
    if isinstance(f, (Or, And, Imp)):
        return atoms_of(f.left) | atoms_of(f.right)
    raise TypeError(f)


def sequent_atoms(s: Sequent) -> set[str]:
    out: set[str] = set()
    for g in s.formulas():
        out |= atoms_of(g)
    return out


def formula_index_vars(f) -> set[str]:
    if isinstance(f, (Lit, Bot, Top)):
        return set()
    if isinstance(f, Box):
        out = index_vars(f.index) | sequent_index_vars(f.body)
        if f.relativizer is not None:
            out |= formula_index_vars(f.relativizer)
        return out
    if isinstance(f, Not):
        return formula_index_vars(f.arg)
    return formula_index_vars(f.left) | formula_index_vars(f.right)


def sequent_index_vars(s: Sequent) -> set[str]:
    out: set[str] = set()
    for g in s.formulas():
        out |= formula_index_vars(g)
    return out


def formula_systems(f) -> set[str]:
    if isinstance(f, (Lit, Bot, Top)):
        return set()
    if isinstance(f, Box):
        out = {f.system} | sequent_systems(f.body)
        if f.relativizer is not None:
            out |= formula_systems(f.relativizer)
        return out
    if isinstance(f, Not):
        return formula_systems(f.arg)
    return formula_systems(f.left) | formula_systems(f.right)


def sequent_systems(s: Sequent) -> set[str]:
    out: set[str] = set()
    for g in s.formulas():
        out |= formula_systems(g)
    return out


def map_formula(f, *, index=None, system=None):
    """Rewrite every box index and/or system label."""
    if isinstance(f, (Lit, Bot, Top)):
        return f
    if isinstance(f, Box):
        return Box(
            f.strength,
            index(f.index) if index else f.index,
            map_sequent(f.body, index=index, system=system),
            system(f.system) if system else f.system,
            map_formula(f.relativizer, index=index, system=system)
            if f.relativizer is not None else None,
        )
    if isinstance(f, Not):
        return Not(map_formula(f.arg, index=index, system=system))
    return type(f)(map_formula(f.left, index=index, system=system),
                   map_formula(f.right, index=index, system=system))


def map_sequent(s: Sequent, *, index=None, system=None) -> Sequent:
    return Sequent(tuple(map_formula(g, index=index, system=system) for g in s.antecedent),
                   tuple(map_formula(g, index=index, system=system) for g in s.succedent))


def rename_indices(s: Sequent, mapping: Mapping[str, IndexTerm]) -> Sequent:
    return map_sequent(s, index=lambda t: rename_index(t, mapping))


def rename_systems(s: Sequent, mapping: Mapping[str, str]) -> Sequent:
    return map_sequent(s, system=lambda name: mapping.get(name, name))


def _subst(f, mapping, allow_compound_relativizer):
    if isinstance(f, Lit):
        if f.name in mapping:
            a = mapping[f.name]
            return a if f.positive else negate(a)
        return f
    if isinstance(f, (Bot, Top)):
        return f
    if isinstance(f, Box):
        rel = f.relativizer
        if rel is not None:
            if isinstance(rel, Lit) and rel.positive and rel.name in mapping:
                new = mapping[rel.name]
                compound = not (isinstance(new, Lit) and new.positive)
                if compound and not allow_compound_relativizer(rel.name, new):
                    raise RelativizerViolation(
                        f"relativizer {rel.name} cannot be replaced by {format_formula(new)}")
                rel = new
            else:
                rel = _subst(rel, mapping, allow_compound_relativizer)
        body = Sequent(tuple(_subst(g, mapping, allow_compound_relativizer) for g in f.body.antecedent),
                       tuple(_subst(g, mapping, allow_compound_relativizer) for g in f.body.succedent))
        return Box(f.strength, f.index, body, f.system, rel)
    if isinstance(f, Not):
        return negate(_subst(f.arg, mapping, allow_compound_relativizer))
    return type(f)(_subst(f.left, mapping, allow_compound_relativizer),
                   _subst(f.right, mapping, allow_compound_relativizer))


def _never(name, formula):
    return False


def substitute_many(b, mapping: Mapping[str, object], *, strict: bool = True,
                    allow_compound_relativizer=_never):
    """Simultaneous substitution of formulas for atoms.

    ``allow_compound_relativizer(atom, formula)`` decides whether a box
    relativized by ``atom`` may receive a non-atomic relativizer.  With
    ``strict`` the result must stay inside the grammar.
    """
    if isinstance(b, Sequent):
        out = Sequent(tuple(_subst(g, mapping, allow_compound_relativizer) for g in b.antecedent),
                      tuple(_subst(g, mapping, allow_compound_relativizer) for g in b.succedent))
        if strict and not wf_sequent(out):
            raise GrammarViolation(f"substitution leaves the grammar: {format_sequent(out)}")
        return out
    out = _subst(b, mapping, allow_compound_relativizer)
    if strict and not wf_lambda(out):
        raise GrammarViolation(f"substitution leaves the grammar: {format_formula(out)}")
    return out


def substitute(b, p: str, a, *, strict: bool = True, allow_compound_relativizer=_never):
    return substitute_many(b, {p: a}, strict=strict,
                           allow_compound_relativizer=allow_compound_relativizer)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _box_head(f: Box) -> str:
    head = ("^" if f.strength == TRIANGLE else "#") + format_index(f.index)
    if f.system != BASE_SYSTEM:
        head += "@" + f.system
    if f.relativizer is not None:
        head += "{" + format_formula(f.relativizer) + "}"
    return head


def _atomic_text(f) -> bool:
    return isinstance(f, (Lit, Bot, Top, Box)) or (isinstance(f, Not) and _atomic_text(f.arg))


def format_formula(f) -> str:
    if isinstance(f, Lit):
        return f.name if f.positive else "~" + f.name
    if isinstance(f, Bot):
        return "bot"
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Box):
        return f"{_box_head(f)}[ {format_sequent(f.body, inner=True)} ]"
    if isinstance(f, Not):
        inner = format_formula(f.arg)
        return "~" + (inner if _atomic_text(f.arg) else f"({inner})")
    op = {Or: "\\/", And: "/\\", Imp: "->"}[type(f)]

    def side(g):
        s = format_formula(g)
        return s if _atomic_text(g) else f"({s})"
    return f"{side(f.left)} {op} {side(f.right)}"


def format_sequent(s: Sequent, inner: bool = False) -> str:
    arrow = "=>" if inner else "|-"
    ant = ", ".join(format_formula(g) for g in s.antecedent)
    suc = ", ".join(format_formula(g) for g in s.succedent)
    parts = [p for p in (ant, arrow, suc) if p]
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<arrow>=>|\|-)
  | (?P<imp>->)
  | (?P<or>\\/)
  | (?P<and>/\\)
  | (?P<nat>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>[\^\#\[\]\(\)\{\}@,~+])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1, col: int = 1) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            out.append(Token(kind if kind != "sym" else chunk, chunk, line, col))
        for ch in chunk:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


class Parser:
    def __init__(self, text: str, line: int = 1, col: int = 1):
        self.toks = tokenize(text, line, col)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str):
        raise ParseError(message, self.tok.line, self.tok.col)

    def eat(self, kind: str) -> Token:
        if self.tok.kind != kind:
            self.error(f"expected {kind!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def at(self, *kinds: str) -> bool:
        return self.tok.kind in kinds

    def done(self):
        if not self.at("eof"):
            self.error(f"unexpected {self.tok.text!r}")

    # index terms
    def index(self) -> IndexTerm:
        if self.at("nat"):
            t: IndexTerm = INat(int(self.eat("nat").text))
        elif self.at("ident") and self.tok.text == "max":
            self.eat("ident")
            self.eat("(")
            a = self.index()
            self.eat(",")
            b = self.index()
            self.eat(")")
            t = IMax(a, b)
        elif self.at("ident"):
            t = IVar(self.eat("ident").text)
        elif self.at("("):
            self.eat("(")
            t = self.index()
            self.eat(")")
        else:
            self.error("expected an index term")
        while self.at("+"):
            self.eat("+")
            t = plus(t, int(self.eat("nat").text))
        return t

    # formulas
    def formula(self):
        left = self.disjunction()
        if self.at("imp"):
            self.eat("imp")
            return Imp(left, self.formula())
        return left

    def disjunction(self):
        f = self.conjunction()
        while self.at("or"):
            self.eat("or")
            f = Or(f, self.conjunction())
        return f

    def conjunction(self):
        f = self.unary()
        while self.at("and"):
            self.eat("and")
            f = And(f, self.unary())
        return f

    def unary(self):
        if self.at("~"):
            self.eat("~")
            arg = self.unary()
            if isinstance(arg, Lit) and arg.positive:
                return Lit(arg.name, False)
            return Not(arg)
        if self.at("^", "#"):
            return self.box()
        if self.at("("):
            self.eat("(")
            f = self.formula()
            self.eat(")")
            return f
        if self.at("ident"):
            name = self.eat("ident").text
            if name == "bot":
                return Bot()
            if name == "top":
                return Top()
            return Lit(name)
        self.error(f"expected a formula, found {self.tok.text or 'end of input'!r}")

    def box(self):
        strength = TRIANGLE if self.eat(self.tok.kind).kind == "^" else BLACK
        idx = self.index()
        system = BASE_SYSTEM
        rel = None
        if self.at("@"):
            self.eat("@")
            system = self.eat("ident").text
        if self.at("{"):
            self.eat("{")
            rel = self.formula()
            self.eat("}")
        if self.at("["):
            self.eat("[")
            body = self.sequent(closing="]")
            self.eat("]")
        else:
            body = Sequent((), (self.unary(),))
        return Box(strength, idx, body, system, rel)

    def formula_list(self, stop: tuple) -> list:
        items = []
        if self.at(*stop):
            return items
        items.append(self.formula())
        while self.at(","):
            self.eat(",")
            items.append(self.formula())
        return items

    def sequent(self, closing: str = "eof") -> Sequent:
        ant = self.formula_list(("arrow", closing))
        if not self.at("arrow"):
            self.error("expected '=>' or '|-'")
        self.eat("arrow")
        suc = self.formula_list((closing,))
        return Sequent(tuple(ant), tuple(suc))


def parse_formula(text: str, strict: bool = True, line: int = 1, col: int = 1):
    p = Parser(text, line, col)
    f = p.formula()
    p.done()
    if strict and not wf_lambda(f):
        raise GrammarViolation(f"not a Lambda-formula: {format_formula(f)}")
    return f


def parse_sequent(text: str, strict: bool = True, line: int = 1, col: int = 1) -> Sequent:
    p = Parser(text, line, col)
    s = p.sequent()
    p.done()
    if strict and not wf_sequent(s):
        raise GrammarViolation(f"not a Lambda-sequent: {format_sequent(s)}")
    return s


def parse_index(text: str) -> IndexTerm:
    p = Parser(text)
    t = p.index()
    p.done()
    return t
