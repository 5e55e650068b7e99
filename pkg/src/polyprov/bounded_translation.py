"""Bounded-arithmetic formulas and their propositional translation.

Number terms are built from 0, 1, 2, variables, ``+`` and ``*``.  A
formula's propositional image at parameter n is obtained by fixing the
free number variable ``x`` to n, evaluating closed relations to
constants, unfolding bounded quantifiers into finite conjunctions and
disjunctions, and turning memberships ``t in P`` into atoms ``(P, t)``.

The modal layer is interpreted symbolically: boxes become an
existential set quantifier over a proof object guarding a ``Prf`` node
that is never translated further.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

from . import lambda_core as lc
from .errors import (ClassViolation, ParseError, UnboundVariable,
                     UnsupportedConstruct)
from .propositional import (PAnd, PAtom, PConst, PNot, POr,
                            PQuant, PropFormula, atoms, evaluate, free_atoms,
                            is_tautology, sat_solve, simplify, to_cnf)

__all__ = [
    "NConst", "NVar", "NAdd", "NMul", "NPow", "numeral", "eval_term", "term_size",
    "bitlength", "Eq", "Le", "Mem", "BNot", "BAnd", "BOr", "BImp", "BExists",
    "BForall", "SetExists", "SetForall", "Prf", "QuotedSequent", "classify",
    "translate_formula", "translate_sequent", "eval_bounded", "interpret_modal",
    "parse_bounded", "format_bounded", "format_term", "evaluate", "sat_solve",
    "is_tautology", "simplify", "atoms", "free_atoms", "to_cnf",
    "PAnd", "PAtom", "PConst", "PNot", "POr", "PQuant", "PropFormula",
]

X = "x"


# ---------------------------------------------------------------------------
# Number terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NConst:
    value: int

    def __post_init__(self):
        if self.value not in (0, 1, 2):
            raise ValueError("number constants are 0, 1 and 2")


@dataclass(frozen=True)
class NVar:
    name: str


@dataclass(frozen=True)
class NAdd:
    left: "NumTerm"
    right: "NumTerm"


@dataclass(frozen=True)
class NMul:
    left: "NumTerm"
    right: "NumTerm"


@dataclass(frozen=True)
class NPow:
    """Symbolic ``base ^ index``; appears only as a proof-length bound."""
    base: "NumTerm"
    exponent: lc.IndexTerm


NumTerm = Union[NConst, NVar, NAdd, NMul, NPow]


def bitlength(n: int) -> int:
    return max(1, n.bit_length())


def numeral(n: int) -> NumTerm:
    """Horner-form closed term over the binary digits of ``n``."""
    if n < 0:
        raise ValueError("numerals denote naturals")
    if n == 0:
        return NConst(0)
    bits = bin(n)[2:]
    t: NumTerm = NConst(int(bits[0]))
    for b in bits[1:]:
        t = NAdd(NMul(t, NConst(2)), NConst(int(b)))
    return t


def term_size(t: NumTerm) -> int:
    if isinstance(t, (NConst, NVar)):
        return 1
    if isinstance(t, NPow):
        return 1 + term_size(t.base)
    return 1 + term_size(t.left) + term_size(t.right)


def eval_term(t: NumTerm, env: Mapping[str, int]) -> int:
    if isinstance(t, NConst):
        return t.value
    if isinstance(t, NVar):
        if t.name not in env:
            raise UnboundVariable(f"number variable {t.name} is unbound")
        return env[t.name]
    if isinstance(t, NAdd):
        return eval_term(t.left, env) + eval_term(t.right, env)
    if isinstance(t, NMul):
        return eval_term(t.left, env) * eval_term(t.right, env)
    if isinstance(t, NPow):
        if lc.index_vars(t.exponent):
            raise UnboundVariable(f"symbolic exponent {t.exponent}")
        return eval_term(t.base, env) ** lc.eval_index(t.exponent, {})
    raise TypeError(f"not a number term: {t!r}")


def term_vars(t: NumTerm) -> set[str]:
    if isinstance(t, NConst):
        return set()
    if isinstance(t, NVar):
        return {t.name}
    if isinstance(t, NPow):
        return term_vars(t.base)
    return term_vars(t.left) | term_vars(t.right)


def format_term(t: NumTerm, top: bool = True) -> str:
    if isinstance(t, NConst):
        return str(t.value)
    if isinstance(t, NVar):
        return t.name
    if isinstance(t, NPow):
        return f"{format_term(t.base, False)}^{t.exponent}"
    op = "+" if isinstance(t, NAdd) else "*"
    s = f"{format_term(t.left, False)}{op}{format_term(t.right, False)}"
    return s if top else f"({s})"


# ---------------------------------------------------------------------------
# Bounded formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Eq:
    left: NumTerm
    right: NumTerm


@dataclass(frozen=True)
class Le:
    left: NumTerm
    right: NumTerm


@dataclass(frozen=True)
class Mem:
    term: NumTerm
    setvar: str


@dataclass(frozen=True)
class BNot:
    arg: "BoundedFormula"


@dataclass(frozen=True)
class BAnd:
    left: "BoundedFormula"
    right: "BoundedFormula"


@dataclass(frozen=True)
class BOr:
    left: "BoundedFormula"
    right: "BoundedFormula"


@dataclass(frozen=True)
class BImp:
    left: "BoundedFormula"
    right: "BoundedFormula"


@dataclass(frozen=True)
class BExists:
    var: str
    bound: NumTerm
    body: "BoundedFormula"


@dataclass(frozen=True)
class BForall:
    var: str
    bound: NumTerm
    body: "BoundedFormula"


@dataclass(frozen=True)
class SetExists:
    setvar: str
    body: "BoundedFormula"


@dataclass(frozen=True)
class SetForall:
    setvar: str
    body: "BoundedFormula"


@dataclass(frozen=True)
class QuotedSequent:
    """Goedel quotation of a translated sequent; opaque to evaluation."""
    antecedent: tuple
    succedent: tuple


@dataclass(frozen=True)
class Prf:
    """``proofvar`` is a proof in ``system`` (+ ``extension``) of length <= ``bound``."""
    system: str
    extension: object
    bound: NumTerm
    quoted: QuotedSequent
    proofvar: str
    algorithmic: bool = False


BoundedFormula = Union[Eq, Le, Mem, BNot, BAnd, BOr, BImp, BExists, BForall,
                       SetExists, SetForall, Prf]

SIGMA0, SIGMA1, PI1, MIXED = "Sigma0", "Sigma1", "Pi1", "mixed"


def classify(phi: BoundedFormula) -> str:
    """Computed class: Sigma0, Sigma1, Pi1, or mixed."""
    if isinstance(phi, (Eq, Le, Mem, Prf)):
        return SIGMA0
    if isinstance(phi, BNot):
        c = classify(phi.arg)
        return {SIGMA1: PI1, PI1: SIGMA1}.get(c, c)
    if isinstance(phi, BImp):
        return _join(classify(BNot(phi.left)), classify(phi.right))
    if isinstance(phi, (BAnd, BOr)):
        return _join(classify(phi.left), classify(phi.right))
    if isinstance(phi, (BExists, BForall)):
        c = classify(phi.body)
        # bounded number quantifiers in front of set quantifiers are not
        # strict prefix form
        return c if c == SIGMA0 else MIXED
    if isinstance(phi, SetExists):
        return SIGMA1 if classify(phi.body) in (SIGMA0, SIGMA1) else MIXED
    if isinstance(phi, SetForall):
        return PI1 if classify(phi.body) in (SIGMA0, PI1) else MIXED
    raise TypeError(f"not a bounded formula: {phi!r}")


def _join(a: str, b: str) -> str:
    if a == SIGMA0:
        return b
    if b == SIGMA0:
        return a
    return a if a == b else MIXED


def free_set_vars(phi) -> set[str]:
    if isinstance(phi, Mem):
        return {phi.setvar}
    if isinstance(phi, (Eq, Le, Prf)):
        return set()
    if isinstance(phi, BNot):
        return free_set_vars(phi.arg)
    if isinstance(phi, (BAnd, BOr, BImp)):
        return free_set_vars(phi.left) | free_set_vars(phi.right)
    if isinstance(phi, (BExists, BForall)):
        return free_set_vars(phi.body)
    if isinstance(phi, (SetExists, SetForall)):
        return free_set_vars(phi.body) - {phi.setvar}
    raise TypeError(phi)


def free_num_vars(phi) -> set[str]:
    if isinstance(phi, (Eq, Le)):
        return term_vars(phi.left) | term_vars(phi.right)
    if isinstance(phi, Mem):
        return term_vars(phi.term)
    if isinstance(phi, Prf):
        return term_vars(phi.bound)
    if isinstance(phi, BNot):
        return free_num_vars(phi.arg)
    if isinstance(phi, (BAnd, BOr, BImp)):
        return free_num_vars(phi.left) | free_num_vars(phi.right)
    if isinstance(phi, (BExists, BForall)):
        return term_vars(phi.bound) | (free_num_vars(phi.body) - {phi.var})
    if isinstance(phi, (SetExists, SetForall)):
        return free_num_vars(phi.body)
    raise TypeError(phi)


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------

def translate_formula(phi: BoundedFormula, n: int, namespace: str = "") -> PropFormula:
    """Propositional image of ``phi`` with ``x := n``.

    Set-variable atoms are named ``(namespace + P, value)``.
    """
    return _tr(phi, {X: n}, namespace)


def _tr(phi, env, ns) -> PropFormula:
    if isinstance(phi, Eq):
        return PConst(eval_term(phi.left, env) == eval_term(phi.right, env))
    if isinstance(phi, Le):
        return PConst(eval_term(phi.left, env) <= eval_term(phi.right, env))
    if isinstance(phi, Mem):
        return PAtom((ns + phi.setvar, eval_term(phi.term, env)))
    if isinstance(phi, BNot):
        return PNot(_tr(phi.arg, env, ns))
    if isinstance(phi, BAnd):
        return PAnd((_tr(phi.left, env, ns), _tr(phi.right, env, ns)))
    if isinstance(phi, BOr):
        return POr((_tr(phi.left, env, ns), _tr(phi.right, env, ns)))
    if isinstance(phi, BImp):
        return POr((PNot(_tr(phi.left, env, ns)), _tr(phi.right, env, ns)))
    if isinstance(phi, (BExists, BForall)):
        bound = eval_term(phi.bound, env)
        parts = tuple(_tr(phi.body, {**env, phi.var: v}, ns) for v in range(bound + 1))
        return POr(parts) if isinstance(phi, BExists) else PAnd(parts)
    if isinstance(phi, Prf):
        raise UnsupportedConstruct("Prf has no propositional translation")
    if isinstance(phi, (SetExists, SetForall)):
        raise UnsupportedConstruct("set quantifiers are translated as atom-block prefixes")
    raise TypeError(f"not a bounded formula: {phi!r}")


def _translate_prefixed(phi, n, ns) -> PropFormula:
    bound_exist: list[str] = []
    while isinstance(phi, (SetExists, SetForall)):
        if isinstance(phi, SetExists):
            bound_exist.append(phi.setvar)
        # a universal set prefix leaves its atoms free: validity of the
        # translation already quantifies them universally
        phi = phi.body
    body = _tr(phi, {X: n}, ns)
    if not bound_exist:
        return body
    names = {ns + p for p in bound_exist}
    block = frozenset(a for a in atoms(body) if isinstance(a, tuple) and a[0] in names)
    return PQuant(block, body)


def translate_sequent(antecedent, succedent, n: int, namespaces=None):
    """Componentwise translation of a sequent of bounded formulas.

    ``namespaces`` optionally gives one prefix per formula (antecedent
    first) so that free set variables of distinct formulas stay apart.
    """
    formulas = list(antecedent) + list(succedent)
    if namespaces is None:
        namespaces = [""] * len(formulas)
    if len(namespaces) != len(formulas):
        raise ValueError("one namespace per formula")
    out = [_translate_prefixed(f, n, ns) for f, ns in zip(formulas, namespaces)]
    k = len(antecedent)
    return tuple(out[:k]), tuple(out[k:])


def eval_bounded(phi: BoundedFormula, env: Mapping[str, int],
                 sets: Mapping[str, set] | None = None) -> bool:
    """Direct arithmetic evaluation; the oracle for the translation."""
    sets = sets or {}
    if isinstance(phi, Eq):
        return eval_term(phi.left, env) == eval_term(phi.right, env)
    if isinstance(phi, Le):
        return eval_term(phi.left, env) <= eval_term(phi.right, env)
    if isinstance(phi, Mem):
        if phi.setvar not in sets:
            raise UnboundVariable(f"set variable {phi.setvar} is unbound")
        return eval_term(phi.term, env) in sets[phi.setvar]
    if isinstance(phi, BNot):
        return not eval_bounded(phi.arg, env, sets)
    if isinstance(phi, BAnd):
        return eval_bounded(phi.left, env, sets) and eval_bounded(phi.right, env, sets)
    if isinstance(phi, BOr):
        return eval_bounded(phi.left, env, sets) or eval_bounded(phi.right, env, sets)
    if isinstance(phi, BImp):
        return (not eval_bounded(phi.left, env, sets)) or eval_bounded(phi.right, env, sets)
    if isinstance(phi, (BExists, BForall)):
        bound = eval_term(phi.bound, env)
        vals = (eval_bounded(phi.body, {**env, phi.var: v}, sets) for v in range(bound + 1))
        return any(vals) if isinstance(phi, BExists) else all(vals)
    raise UnsupportedConstruct(f"direct evaluation of {type(phi).__name__}")


# ---------------------------------------------------------------------------
# Arithmetic interpretation of the modal layer
# ---------------------------------------------------------------------------

BOTTOM = Eq(NVar(X), NAdd(NVar(X), NConst(1)))
TOP = Eq(NVar(X), NVar(X))
ALLOWED_ATOM_CLASSES = (SIGMA0, SIGMA1, PI1)


def _check_atom_image(name: str, phi, relativizer: bool, relclass):
    cls = classify(phi)
    if cls not in ALLOWED_ATOM_CLASSES:
        raise ClassViolation(f"atom {name} maps to a formula of class {cls}")
    extra = free_num_vars(phi) - {X}
    if extra:
        raise ClassViolation(f"atom {name} has free number variables {sorted(extra)}")
    if relativizer:
        if free_set_vars(phi):
            raise ClassViolation(f"relativizer {name} has free set variables")
        want = (relclass or {}).get(name)
        if want is not None and cls not in (want, SIGMA0):
            raise ClassViolation(f"relativizer {name} is {cls}, declared {want}")


def interpret_modal(f, atom_map: Mapping[str, BoundedFormula],
                    relclass: Mapping[str, str] | None = None) -> BoundedFormula:
    """Symbolic arithmetic interpretation of a modal formula.

    ``relclass`` optionally pins the class (``Sigma1`` or ``Pi1``) that a
    relativizer's image must have.
    """
    if isinstance(f, lc.Bot):
        return BOTTOM
    if isinstance(f, lc.Top):
        return TOP
    if isinstance(f, lc.Lit):
        if f.name not in atom_map:
            raise UnboundVariable(f"atom {f.name} has no interpretation")
        phi = atom_map[f.name]
        _check_atom_image(f.name, phi, False, relclass)
        return phi if f.positive else BNot(phi)
    if isinstance(f, lc.Not):
        return BNot(interpret_modal(f.arg, atom_map, relclass))
    if isinstance(f, lc.Or):
        return BOr(interpret_modal(f.left, atom_map, relclass),
                   interpret_modal(f.right, atom_map, relclass))
    if isinstance(f, lc.And):
        return BAnd(interpret_modal(f.left, atom_map, relclass),
                    interpret_modal(f.right, atom_map, relclass))
    if isinstance(f, lc.Imp):
        return BImp(interpret_modal(f.left, atom_map, relclass),
                    interpret_modal(f.right, atom_map, relclass))
    if isinstance(f, lc.Box):
        ext = None
        if f.relativizer is not None:
            rel = f.relativizer
            if isinstance(rel, lc.Lit) and rel.positive:
                if rel.name not in atom_map:
                    raise UnboundVariable(f"atom {rel.name} has no interpretation")
                _check_atom_image(rel.name, atom_map[rel.name], True, relclass)
                ext = atom_map[rel.name]
            else:
                ext = interpret_modal(rel, atom_map, relclass)
        quoted = QuotedSequent(
            tuple(interpret_modal(g, atom_map, relclass) for g in f.body.antecedent),
            tuple(interpret_modal(g, atom_map, relclass) for g in f.body.succedent))
        prf = Prf(f.system, ext, NPow(NVar(X), f.index), quoted, "pi",
                  algorithmic=f.strength == lc.BLACK)
        return SetExists("pi", prf)
    raise TypeError(f"not a modal formula: {f!r}")


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_BTOKEN = re.compile(r"\s*(?:(<=|->|[()|&!=,.*+])|(\d+)|([A-Za-z_][A-Za-z0-9_]*))")


def _btokens(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _BTOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", 1, pos + 1)
        tok = m.group(1) or m.group(2) or m.group(3)
        out.append((tok, m.start(m.lastindex) + 1))
        pos = m.end()
    out.append(("", len(text) + 1))
    return out


class _BParser:
    def __init__(self, text):
        self.toks = _btokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def eat(self, want=None):
        tok, col = self.toks[self.i]
        if want is not None and tok != want:
            raise ParseError(f"expected {want!r}, found {tok or 'end of input'!r}", 1, col)
        self.i += 1
        return tok

    def ident(self):
        tok, col = self.toks[self.i]
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok or "-"):
            raise ParseError(f"expected an identifier, found {tok!r}", 1, col)
        self.i += 1
        return tok

    def formula(self):
        tok = self.peek()
        if tok in ("exists", "forall"):
            self.eat()
            var = self.ident()
            self.eat("<=")
            bound = self.term()
            self.eat(".")
            body = self.formula()
            return (BExists if tok == "exists" else BForall)(var, bound, body)
        if tok in ("Exists", "Forall"):
            self.eat()
            var = self.ident()
            self.eat(".")
            body = self.formula()
            return (SetExists if tok == "Exists" else SetForall)(var, body)
        left = self.disj()
        if self.peek() == "->":
            self.eat()
            return BImp(left, self.formula())
        return left

    def disj(self):
        f = self.conj()
        while self.peek() == "|":
            self.eat()
            f = BOr(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek() == "&":
            self.eat()
            f = BAnd(f, self.unary())
        return f

    def unary(self):
        tok = self.peek()
        if tok == "!":
            self.eat()
            return BNot(self.unary())
        if tok in ("exists", "forall", "Exists", "Forall"):
            return self.formula()
        if tok == "in":
            self.eat()
            self.eat("(")
            t = self.term()
            self.eat(",")
            p = self.ident()
            self.eat(")")
            return Mem(t, p)
        if tok == "(":
            # either a parenthesised formula or a term starting a relation
            save = self.i
            self.eat()
            try:
                f = self.formula()
                self.eat(")")
                if self.peek() not in ("=", "<=", "+", "*"):
                    return f
            except ParseError:
                pass
            self.i = save
        left = self.term()
        op = self.peek()
        if op == "=":
            self.eat()
            return Eq(left, self.term())
        if op == "<=":
            self.eat()
            return Le(left, self.term())
        self.eat("=")

    def term(self):
        t = self.product()
        while self.peek() == "+":
            self.eat()
            t = NAdd(t, self.product())
        return t

    def product(self):
        t = self.primary()
        while self.peek() == "*":
            self.eat()
            t = NMul(t, self.primary())
        return t

    def primary(self):
        tok, col = self.toks[self.i]
        if tok == "(":
            self.eat()
            t = self.term()
            self.eat(")")
            return t
        if tok.isdigit():
            self.eat()
            v = int(tok)
            return NConst(v) if v <= 2 else numeral(v)
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok or "-"):
            self.eat()
            return NVar(tok)
        raise ParseError(f"expected a term, found {tok or 'end of input'!r}", 1, col)


def parse_bounded(text: str) -> BoundedFormula:
    p = _BParser(text)
    f = p.formula()
    if p.peek() != "":
        tok, col = p.toks[p.i]
        raise ParseError(f"unexpected {tok!r}", 1, col)
    return f


def format_bounded(phi) -> str:
    if isinstance(phi, Eq):
        return f"{format_term(phi.left)} = {format_term(phi.right)}"
    if isinstance(phi, Le):
        return f"{format_term(phi.left)} <= {format_term(phi.right)}"
    if isinstance(phi, Mem):
        return f"in({format_term(phi.term)}, {phi.setvar})"
    if isinstance(phi, BNot):
        return f"!({format_bounded(phi.arg)})"
    if isinstance(phi, (BAnd, BOr, BImp)):
        op = {BAnd: "&", BOr: "|", BImp: "->"}[type(phi)]
        return f"({format_bounded(phi.left)} {op} {format_bounded(phi.right)})"
    if isinstance(phi, (BExists, BForall)):
        q = "exists" if isinstance(phi, BExists) else "forall"
        return f"({q} {phi.var} <= {format_term(phi.bound)}. {format_bounded(phi.body)})"
    if isinstance(phi, (SetExists, SetForall)):
        q = "Exists" if isinstance(phi, SetExists) else "Forall"
        return f"({q} {phi.setvar}. {format_bounded(phi.body)})"
    if isinstance(phi, Prf):
        ext = "none" if phi.extension is None else format_bounded(phi.extension)
        quoted = (", ".join(format_bounded(g) for g in phi.quoted.antecedent) + " => "
                  + ", ".join(format_bounded(g) for g in phi.quoted.succedent))
        tag = "PrfAlg" if phi.algorithmic else "Prf"
        return f"{tag}[{phi.system}; {ext}]({format_term(phi.bound)}, <{quoted}>, {phi.proofvar})"
    raise TypeError(phi)


