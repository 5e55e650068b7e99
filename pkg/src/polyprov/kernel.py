"""Proof-checking kernel for the polynomial-provability sequent calculus.

A proof script is a linear list of steps.  Each step states its
conclusion and names the rule that justifies it; the kernel re-derives
nothing and only validates.  Hypotheses (properties of the base proof
system that the calculus cannot prove) enter through ``hyp`` steps and
are tracked in a per-step ledger that follows the dependency chain.

Box bodies are compared up to propositional equivalence over opaque box
atoms (``canonical key``), so a body may be written as ``(A => B)`` or
``(~B => ~A)`` interchangeably.  Everything else is compared as
multisets of canonical keys.
"""

from __future__ import annotations

import re
from functools import lru_cache
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path
from typing import Callable, Iterable, Mapping

from . import lambda_core as lc
from .errors import (AtomBudgetExceeded, ConnectiveRestriction, FreshnessError,
                     GrammarViolation, IndexConstraintViolation,
                     MissingHypothesis, NotTautology, ParseError,
                     RelativizerViolation, RuleShapeError, ScriptError,
                     SideConditionViolation, StepError, UnknownScheme)
from .lambda_core import (BLACK, BASE_SYSTEM, TRIANGLE, And, Bot, Box, Imp,
                          IndexTerm, IVar, Lit, Not, Or, Sequent, Top)
from .propositional import PAnd, PAtom, PConst, PNot, POr, sat_solve

PROPTAUT_ATOM_BUDGET = 20

PI1_UNIVERSAL = "pi1-universal"
SIGMA1_EXISTENTIAL = "sigma1-existential"
REL_CLASSES = (PI1_UNIVERSAL, SIGMA1_EXISTENTIAL)


# ---------------------------------------------------------------------------
# Canonical keys
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def ckey(f) -> tuple:
    """Structural key in which box bodies are replaced by their truth tables."""
    if isinstance(f, Lit):
        return ("L", f.name, f.positive)
    if isinstance(f, Bot):
        return ("F",)
    if isinstance(f, Top):
        return ("T",)
    if isinstance(f, Box):
        rel = ckey(f.relativizer) if f.relativizer is not None else None
        return ("X", f.strength, f.index.normal(), f.system, rel, body_key(f.body))
    if isinstance(f, Not):
        return ("N", ckey(f.arg))
    if isinstance(f, (Or, And, Imp)):
        return (type(f).__name__, ckey(f.left), ckey(f.right))
    raise TypeError(f"not a formula: {f!r}")


def _opaque_atoms(f, out: dict):
    if isinstance(f, Lit):
        out.setdefault(("L", f.name, True), None)
    elif isinstance(f, Box):
        out.setdefault(ckey(f), None)
    elif isinstance(f, Not):
        _opaque_atoms(f.arg, out)
    elif isinstance(f, (Or, And, Imp)):
        _opaque_atoms(f.left, out)
        _opaque_atoms(f.right, out)


def _value(f, row: dict) -> bool:
    if isinstance(f, Lit):
        return row[("L", f.name, True)] == f.positive
    if isinstance(f, Box):
        return row[ckey(f)]
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Not):
        return not _value(f.arg, row)
    if isinstance(f, And):
        return _value(f.left, row) and _value(f.right, row)
    if isinstance(f, Or):
        return _value(f.left, row) or _value(f.right, row)
    if isinstance(f, Imp):
        return (not _value(f.left, row)) or _value(f.right, row)
    raise TypeError(f)


BODY_ATOM_LIMIT = 16


@lru_cache(maxsize=None)
def body_key(s: Sequent) -> tuple:
    """Propositional meaning of ``/\\ antecedent -> \\/ succedent``.

    Maximal box-rooted subformulas and literals are opaque atoms.  The key
    lists the atoms the body actually depends on, in a fixed order, with
    the set of rows on which it is true, so equivalent bodies get equal keys.
    """
    found: dict = {}
    for g in s.formulas():
        _opaque_atoms(g, found)
    names = sorted(found, key=repr)
    if len(names) > BODY_ATOM_LIMIT:
        raise AtomBudgetExceeded(f"box body has {len(names)} opaque atoms")
    table = []
    for bits in range(1 << len(names)):
        row = {a: bool(bits >> k & 1) for k, a in enumerate(names)}
        value = (not all(_value(g, row) for g in s.antecedent)
                 or any(_value(g, row) for g in s.succedent))
        table.append(value)
    relevant = [k for k in range(len(names))
                if any(table[b] != table[b ^ (1 << k)] for b in range(len(table)))]
    rows = frozenset(tuple(bool(b >> k & 1) for k in relevant)
                     for b in range(len(table)) if table[b])
    return tuple(names[k] for k in relevant), rows


def side_counter(formulas: Iterable) -> Counter:
    return Counter(ckey(f) for f in formulas)


def seq_equal(a: Sequent, b: Sequent) -> bool:
    return (side_counter(a.antecedent) == side_counter(b.antecedent)
            and side_counter(a.succedent) == side_counter(b.succedent))


def body_formula(s: Sequent):
    """A single formula equivalent to a sequent body."""
    if not s.antecedent and len(s.succedent) == 1:
        return s.succedent[0]
    ant = lc.conj(s.antecedent)
    suc = s.succedent[0] if len(s.succedent) == 1 else None
    if suc is None:
        suc = Bot()
        for g in s.succedent:
            suc = g if isinstance(suc, Bot) else Or(suc, g)
    return Imp(ant, suc)


def remove_one(items: tuple, f) -> tuple | None:
    k = ckey(f)
    for i, g in enumerate(items):
        if ckey(g) == k:
            return items[:i] + items[i + 1:]
    return None


# ---------------------------------------------------------------------------
# Script data
# ---------------------------------------------------------------------------

@dataclass
class ProofStep:
    label: str
    conclusion: Sequent
    rule: str
    args: str
    line: int

    @property
    def auxiliary(self) -> bool:
        return not self.label.isdigit()


@dataclass
class Requirement:
    left: IndexTerm
    op: str
    right: IndexTerm

    def holds(self, env: Mapping[str, int]) -> bool:
        a, b = lc.eval_index(self.left, env), lc.eval_index(self.right, env)
        return {">": a > b, ">=": a >= b, "<": a < b, "<=": a <= b, "=": a == b}[self.op]

    def rename(self, mapping) -> "Requirement":
        return Requirement(lc.rename_index(self.left, mapping), self.op,
                           lc.rename_index(self.right, mapping))

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass
class ProofScript:
    name: str
    goal: Sequent
    steps: list[ProofStep]
    systems: list[str] = field(default_factory=lambda: [BASE_SYSTEM])
    atoms: list[str] = field(default_factory=list)
    params: list[str] = field(default_factory=list)
    exists: list[str] = field(default_factory=list)
    vars: list[str] = field(default_factory=list)
    requires: list[Requirement] = field(default_factory=list)
    relclass: dict[str, str] = field(default_factory=dict)
    hypotheses: list[str] = field(default_factory=list)
    witness: dict[str, int] = field(default_factory=dict)
    anchor: str = ""
    expect: list[str] | None = None
    source: str = ""

    @property
    def index_vars(self) -> list[str]:
        return self.params + self.exists + self.vars


@dataclass
class CheckReport:
    script: str
    status: str
    failed_step: str | None = None
    reason: str = ""
    error: str = ""
    ledger: list[str] = field(default_factory=list)
    ledger_instances: list[str] = field(default_factory=list)
    schemes: list[str] = field(default_factory=list)
    constraints: list[str] = field(default_factory=list)
    steps: int = 0
    numbered_steps: int = 0
    auxiliary_steps: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def summary(self) -> str:
        if self.ok:
            return (f"{self.script}: ok ({self.steps} steps, {self.numbered_steps} numbered); "
                    f"ledger = {{{', '.join(self.ledger)}}}")
        return f"{self.script}: failed at step {self.failed_step}: {self.error}: {self.reason}"


# ---------------------------------------------------------------------------
# Script parsing
# ---------------------------------------------------------------------------

_HEADER_KEYS = {"script", "systems", "atoms", "params", "exists", "vars", "require",
                "relclass", "hypotheses", "witness", "goal", "anchor", "expect"}
_STEP = re.compile(r"^([0-9]+[a-z]*|[a-z][a-z0-9_]*)\.\s+(.*)$")


def _names(value: str) -> list[str]:
    return [v for v in re.split(r"[\s,]+", value.strip()) if v]


def _strip_comment(line: str) -> str:
    i = line.find("%")
    return line if i < 0 else line[:i]


def _parse_requirement(text: str, line: int) -> Requirement:
    m = re.fullmatch(r"\s*(.+?)\s*(>=|<=|>|<|=)\s*(.+?)\s*", text)
    if not m:
        raise ScriptError(f"line {line}: bad requirement {text!r}")
    try:
        return Requirement(lc.parse_index(m.group(1)), m.group(2), lc.parse_index(m.group(3)))
    except ParseError as e:
        raise ParseError(e.message, line, e.column) from None


def parse_script(text: str, source: str = "") -> ProofScript:
    header: dict[str, list[tuple[str, int]]] = {}
    steps_raw: list[tuple[str, int]] = []
    in_steps = False
    for no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        if in_steps:
            if line[0].isspace() and steps_raw and not _STEP.match(line.strip()):
                text_, at = steps_raw[-1]
                steps_raw[-1] = (text_ + " " + line.strip(), at)
            else:
                steps_raw.append((line.strip(), no))
            continue
        if line.strip() == "steps:":
            in_steps = True
            continue
        if line[0].isspace():
            last = list(header)[-1] if header else None
            if last is None:
                raise ScriptError(f"line {no}: continuation without a header field")
            v, at = header[last][-1]
            header[last][-1] = (v + " " + line.strip(), at)
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep or key not in _HEADER_KEYS:
            raise ScriptError(f"line {no}: unknown header line {line.strip()!r}")
        header.setdefault(key, []).append((value.strip(), no))

    def one(key, default=None):
        vals = header.get(key)
        if not vals:
            if default is None:
                raise ScriptError(f"missing header field {key!r}")
            return default, 0
        return vals[-1]

    name, _ = one("script")
    goal_text, goal_line = one("goal")
    goal = lc.parse_sequent(goal_text, strict=False, line=goal_line)
    script = ProofScript(name=name.strip(), goal=goal, steps=[], source=source)
    script.systems = [BASE_SYSTEM] + [s for s in _names(one("systems", " ")[0]) if s != BASE_SYSTEM]
    script.atoms = _names(one("atoms", " ")[0])
    script.params = _names(one("params", " ")[0])
    script.exists = _names(one("exists", " ")[0])
    script.vars = _names(one("vars", " ")[0])
    script.anchor = one("anchor", " ")[0].strip()
    if "expect" in header:
        script.expect = sorted(_names(one("expect")[0]))
    for value, no in header.get("require", []):
        for part in value.split(","):
            if part.strip():
                script.requires.append(_parse_requirement(part, no))
    for value, no in header.get("relclass", []):
        toks = _names(value)
        if len(toks) % 2:
            raise ScriptError(f"line {no}: relclass expects atom/class pairs")
        for atom, cls in zip(toks[::2], toks[1::2]):
            if cls not in REL_CLASSES:
                raise ScriptError(f"line {no}: unknown relativizer class {cls!r}")
            script.relclass[atom] = cls
    for value, _ in header.get("hypotheses", []):
        script.hypotheses.extend(re.findall(r"[A-Za-z0-9_]+(?:\([^)]*\))?", value))
    for value, no in header.get("witness", []):
        for item in _names(value):
            k, eq, v = item.partition("=")
            if not eq or not v.isdigit():
                raise ScriptError(f"line {no}: bad witness entry {item!r}")
            script.witness[k] = int(v)
    for text_, no in steps_raw:
        m = _STEP.match(text_)
        if not m:
            raise ScriptError(f"line {no}: expected 'label. sequent ; rule'")
        body = m.group(2)
        seq_text, semi, rule_text = body.rpartition(";")
        if not semi:
            raise ScriptError(f"line {no}: step has no rule annotation")
        col = len(m.group(1)) + 3
        conclusion = lc.parse_sequent(seq_text, strict=False, line=no, col=col)
        rule, _, args = rule_text.strip().partition(" ")
        if not rule:
            raise ScriptError(f"line {no}: empty rule annotation")
        script.steps.append(ProofStep(m.group(1), conclusion, rule, args.strip(), no))
    labels = [s.label for s in script.steps]
    if len(set(labels)) != len(labels):
        raise ScriptError("duplicate step labels")
    return script


def load_script(path) -> ProofScript:
    p = Path(path)
    return parse_script(p.read_text(encoding="utf-8"), source=str(p))


# ---------------------------------------------------------------------------
# Initial sequents
# ---------------------------------------------------------------------------

SCHEME_NAMES = {
    "id": "Identity", "ax4": "Ax4", "ax4b": "Ax4b", "axT": "AxT", "axK": "AxK",
    "axKb": "AxKb", "swapL": "SwapLeft", "swapR": "SwapRight", "weakTp": "WeakT_p",
}


def _same_frame(a: Box, b: Box) -> bool:
    """Same strength, system and relativizer."""
    return (a.strength == b.strength and a.system == b.system
            and _rel_key(a) == _rel_key(b))


def _rel_key(b: Box):
    return ckey(b.relativizer) if b.relativizer is not None else None


def _single(s: Sequent) -> tuple:
    return len(s.antecedent), len(s.succedent)


def _match_identity(s: Sequent) -> list[Box]:
    if _single(s) != (1, 1) or ckey(s.antecedent[0]) != ckey(s.succedent[0]):
        raise RuleShapeError("identity needs A => A")
    return []


def _match_ax4(s: Sequent, outer: str) -> list[Box]:
    if _single(s) != (1, 1):
        raise RuleShapeError("axiom 4 has one formula on each side")
    prem, concl = s.antecedent[0], s.succedent[0]
    if not (isinstance(prem, Box) and isinstance(concl, Box)):
        raise RuleShapeError("axiom 4 relates two boxes")
    if prem.strength != outer or concl.strength != outer:
        raise RuleShapeError(f"axiom 4 variant needs {outer} boxes")
    if concl.system != prem.system or _rel_key(concl) != _rel_key(prem):
        raise RuleShapeError("axiom 4 keeps system and relativizer")
    inner = body_formula(concl.body)
    if not isinstance(inner, Box) or concl.body.antecedent:
        raise RuleShapeError("axiom 4 conclusion must box a single box")
    want = Box(TRIANGLE, prem.index, prem.body, prem.system, prem.relativizer)
    if ckey(inner) != ckey(want):
        raise RuleShapeError("inner box must be the triangle form of the premise box")
    if concl.index != lc.plus(prem.index, 1):
        raise IndexConstraintViolation(
            f"axiom 4 index must be {lc.plus(prem.index, 1)}, found {concl.index}")
    return [prem]


def _match_axT(s: Sequent) -> list[Box]:
    if _single(s) != (1, 1):
        raise RuleShapeError("axiom T has one formula on each side")
    prem, concl = s.antecedent[0], s.succedent[0]
    if not isinstance(prem, Box) or prem.strength != TRIANGLE:
        raise RuleShapeError("axiom T needs a triangle box in the antecedent")
    if prem.relativizer is not None:
        raise RuleShapeError("axiom T has no relativized variant; use weakTp")
    if body_key(prem.body) != body_key(Sequent((), (concl,))):
        raise RuleShapeError("axiom T conclusion must be the box body")
    return [prem]


def _match_weakTp(s: Sequent) -> list[Box]:
    if _single(s) != (0, 1):
        raise RuleShapeError("weak T_p has shape => #i+1{p}[ ^i{p} A => A ]")
    outer = s.succedent[0]
    if not isinstance(outer, Box) or outer.strength != BLACK or outer.relativizer is None:
        raise RuleShapeError("weak T_p needs a relativized black-triangle box")
    body = outer.body
    if _single(body) != (1, 1):
        raise RuleShapeError("weak T_p body has shape ^i{p} A => A")
    inner = body.antecedent[0]
    if not (isinstance(inner, Box) and inner.strength == TRIANGLE
            and inner.system == outer.system and _rel_key(inner) == _rel_key(outer)):
        raise RuleShapeError("weak T_p inner box must be a triangle box with the same relativizer")
    if body_key(inner.body) != body_key(Sequent((), (body.succedent[0],))):
        raise RuleShapeError("weak T_p body must read ^i{p} A => A")
    if outer.index != lc.plus(inner.index, 1):
        raise IndexConstraintViolation(
            f"weak T_p outer index must be {lc.plus(inner.index, 1)}, found {outer.index}")
    return [outer]


def _match_axK(s: Sequent, strength: str) -> list[Box]:
    if len(s.succedent) != 1 or not s.antecedent:
        raise RuleShapeError("axiom K has boxes on the left and one box on the right")
    concl = s.succedent[0]
    boxes = list(s.antecedent)
    if not all(isinstance(b, Box) for b in boxes + [concl]):
        raise RuleShapeError("axiom K relates boxes only")
    if not all(b.strength == strength and _same_frame(b, concl) for b in boxes):
        raise RuleShapeError("axiom K boxes must share strength, system and relativizer")
    target = concl.body
    errors = []
    for mi, main in enumerate(boxes):
        others = boxes[:mi] + boxes[mi + 1:]
        combined = Sequent(tuple(body_formula(o.body) for o in others) + target.antecedent,
                           target.succedent)
        if body_key(combined) != body_key(main.body):
            continue
        if len(others) == 1:
            want = lc.plus(lc.IMax(main.index, others[0].index), 1)
            if concl.index == want:
                return boxes
            errors.append(f"index must be {want}, found {concl.index}")
            continue
        if all(o.index == main.index for o in others):
            if concl.index == lc.plus(main.index, 1):
                return boxes
            errors.append(f"index must be {lc.plus(main.index, 1)}, found {concl.index}")
        else:
            errors.append("uniform form needs equal indices")
    if errors:
        raise IndexConstraintViolation("axiom K: " + "; ".join(errors))
    raise RuleShapeError("axiom K: no antecedent box has body (Gamma => Delta) matching the rest")


def _match_swap(s: Sequent, left: bool) -> list[Box]:
    if _single(s) != (1, 1):
        raise RuleShapeError("swap sequents have one formula on each side")
    a, b = s.antecedent[0], s.succedent[0]
    if not (isinstance(a, Box) and isinstance(b, Box) and _same_frame(a, b)):
        raise RuleShapeError("swap relates two boxes of the same kind")
    if a.index != b.index:
        raise IndexConstraintViolation("swap sequents keep the index")
    src, dst = (a.body, b.body)
    for f in (src.antecedent if left else src.succedent):
        if left:
            want = Sequent(remove_one(src.antecedent, f), src.succedent + (lc.negate(f),))
        else:
            want = Sequent(src.antecedent + (lc.negate(f),), remove_one(src.succedent, f))
        if seq_equal(want, dst):
            return [a]
    raise RuleShapeError("swap: no formula moves across with a negation")


def match_initial(s: Sequent, scheme: str, witness: Mapping[str, int] | None = None) -> bool:
    """Does ``s`` instantiate the named initial-sequent scheme?

    ``scheme`` is a script rule name (``ax4``) or a scheme name (``Ax4``).
    Index relations are decided symbolically, so the witness only has to
    cover the variables of ``s``.
    """
    rule = {v: k for k, v in SCHEME_NAMES.items()}.get(scheme, scheme)
    try:
        _match_scheme(rule, s)
    except StepError:
        return False
    if witness is not None:
        try:
            env = dict(witness)
            for v in lc.sequent_index_vars(s):
                env[v]
        except KeyError:
            return False
    return True


def _match_scheme(rule: str, s: Sequent) -> list[Box]:
    if rule == "id":
        return _match_identity(s)
    if rule == "ax4":
        return _match_ax4(s, TRIANGLE)
    if rule == "ax4b":
        return _match_ax4(s, BLACK)
    if rule == "axT":
        return _match_axT(s)
    if rule == "axK":
        return _match_axK(s, TRIANGLE)
    if rule == "axKb":
        return _match_axK(s, BLACK)
    if rule == "swapL":
        return _match_swap(s, True)
    if rule == "swapR":
        return _match_swap(s, False)
    if rule == "weakTp":
        return _match_weakTp(s)
    raise UnknownScheme(f"unknown initial sequent {rule!r}")


# ---------------------------------------------------------------------------
# Structural rules
# ---------------------------------------------------------------------------

def _principal_pair(a, b, rule: str):
    if isinstance(a, Box) and isinstance(b, Box):
        ia, ib = a.index, b.index
    elif lc.is_negated_box(a) and lc.is_negated_box(b):
        ia, ib = a.arg.index, b.arg.index
    else:
        raise ConnectiveRestriction(f"{rule} joins two boxes or two negated boxes")
    if ia != ib:
        raise ConnectiveRestriction(f"{rule} needs boxes with the same index ({ia} vs {ib})")


def apply_structural(rule: str, premises: list[Sequent], principal=None,
                     extra: Iterable = ()) -> Sequent:
    """Build the conclusion of a structural rule.

    ``principal`` is the cut formula for ``cut``, the formula to negate
    for the negation rules, the pair ``(A, B)`` for the connective rules.
    Binary rules merge contexts multiplicatively.  ``extra`` lists the
    formulas ``(antecedent, succedent)`` added by weakening.
    """
    need = {"cut": 2, "orL": 2, "andR": 2, "impL": 2}.get(rule, 1)
    if len(premises) != need:
        raise RuleShapeError(f"{rule} takes {need} premise(s), got {len(premises)}")
    p = premises[0]
    if rule == "cut":
        left = remove_one(p.succedent, principal)
        right = remove_one(premises[1].antecedent, principal)
        if left is None or right is None:
            raise RuleShapeError("cut formula must occur on the right of the first premise "
                                 "and on the left of the second")
        return Sequent(p.antecedent + right, left + premises[1].succedent)
    if rule == "negR":
        rest = remove_one(p.antecedent, principal)
        if rest is None:
            raise RuleShapeError("negR principal must be in the antecedent")
        return Sequent(rest, (lc.negate(principal),) + p.succedent)
    if rule == "negL":
        rest = remove_one(p.succedent, principal)
        if rest is None:
            raise RuleShapeError("negL principal must be in the succedent")
        return Sequent(p.antecedent + (lc.negate(principal),), rest)
    if rule in ("orR", "andL"):
        a, b = principal
        _principal_pair(a, b, rule)
        side = p.succedent if rule == "orR" else p.antecedent
        rest = remove_one(side, a)
        rest = remove_one(rest, b) if rest is not None else None
        if rest is None:
            raise RuleShapeError(f"{rule} principals missing from the premise")
        joined = (Or if rule == "orR" else And)(a, b)
        if rule == "orR":
            return Sequent(p.antecedent, rest + (joined,))
        return Sequent(rest + (joined,), p.succedent)
    if rule in ("orL", "andR"):
        a, b = principal
        _principal_pair(a, b, rule)
        q = premises[1]
        if rule == "orL":
            r1, r2 = remove_one(p.antecedent, a), remove_one(q.antecedent, b)
            if r1 is None or r2 is None:
                raise RuleShapeError("orL principals missing")
            return Sequent(r1 + r2 + (Or(a, b),), p.succedent + q.succedent)
        r1, r2 = remove_one(p.succedent, a), remove_one(q.succedent, b)
        if r1 is None or r2 is None:
            raise RuleShapeError("andR principals missing")
        return Sequent(p.antecedent + q.antecedent, r1 + r2 + (And(a, b),))
    if rule == "impR":
        a, b = principal
        r1, r2 = remove_one(p.antecedent, a), remove_one(p.succedent, b)
        if r1 is None or r2 is None:
            raise RuleShapeError("impR principals missing")
        return Sequent(r1, r2 + (Imp(a, b),))
    if rule == "impL":
        a, b = principal
        q = premises[1]
        r1, r2 = remove_one(p.succedent, a), remove_one(q.antecedent, b)
        if r1 is None or r2 is None:
            raise RuleShapeError("impL principals missing")
        return Sequent(p.antecedent + r2 + (Imp(a, b),), r1 + q.succedent)
    if rule == "weaken":
        ant, suc = extra if extra else ((), ())
        return Sequent(p.antecedent + tuple(ant), p.succedent + tuple(suc))
    if rule == "contract":
        ant = {ckey(f): f for f in p.antecedent}
        suc = {ckey(f): f for f in p.succedent}
        return Sequent(tuple(ant.values()), tuple(suc.values()))
    raise UnknownScheme(f"unknown structural rule {rule!r}")


def _merge_ok(a: Counter, b: Counter, c: Counter) -> bool:
    """Context ``c`` lies between the additive and multiplicative merge."""
    for k in set(a) | set(b) | set(c):
        lo, hi = max(a[k], b[k]), a[k] + b[k]
        if not lo <= c[k] <= hi:
            return False
    return True


def _check_binary(conclusion: Sequent, left: tuple, right: tuple,
                  extra_ant: tuple = (), extra_suc: tuple = ()) -> bool:
    """``left``/``right`` are premise contexts as (ant, suc) after removal."""
    ant = side_counter(conclusion.antecedent)
    suc = side_counter(conclusion.succedent)
    for f in extra_ant:
        k = ckey(f)
        if ant[k] == 0:
            return False
        ant[k] -= 1
    for f in extra_suc:
        k = ckey(f)
        if suc[k] == 0:
            return False
        suc[k] -= 1
    ant, suc = +ant, +suc
    return (_merge_ok(side_counter(left[0]), side_counter(right[0]), ant)
            and _merge_ok(side_counter(left[1]), side_counter(right[1]), suc))


def _dedupe(formulas: Iterable) -> list:
    seen = {}
    for f in formulas:
        seen.setdefault(ckey(f), f)
    return list(seen.values())


def check_structural(rule: str, premises: list[Sequent], conclusion: Sequent) -> None:
    need = {"cut": 2, "orL": 2, "andR": 2, "impL": 2}.get(rule, 1)
    if len(premises) != need:
        raise RuleShapeError(f"{rule} takes {need} premise(s), got {len(premises)}")
    p = premises[0]
    if rule == "cut":
        for p, q in (premises, premises[::-1]):
            for a in _dedupe(p.succedent):
                r = remove_one(q.antecedent, a)
                if r is None:
                    continue
                if _check_binary(conclusion, (p.antecedent, remove_one(p.succedent, a)),
                                 (r, q.succedent)):
                    return
        raise RuleShapeError("no cut formula yields the stated conclusion")
    if rule in ("negL", "negR"):
        side = conclusion.antecedent if rule == "negL" else conclusion.succedent
        for f in _dedupe(side):
            a = lc.negate(f)
            try:
                built = apply_structural(rule, [p], a)
            except RuleShapeError:
                continue
            if seq_equal(built, conclusion):
                return
        raise RuleShapeError(f"{rule} does not yield the stated conclusion")
    if rule in ("orR", "andL"):
        cls = Or if rule == "orR" else And
        side = conclusion.succedent if rule == "orR" else conclusion.antecedent
        cands = [f for f in _dedupe(side) if isinstance(f, cls)]
        if not cands:
            raise RuleShapeError(f"{rule} conclusion has no {cls.__name__} formula")
        for f in cands:
            _principal_pair(f.left, f.right, rule)
            try:
                built = apply_structural(rule, [p], (f.left, f.right))
            except RuleShapeError:
                continue
            if seq_equal(built, conclusion):
                return
        raise RuleShapeError(f"{rule} does not yield the stated conclusion")
    if rule in ("orL", "andR", "impL"):
        q = premises[1]
        cls = {"orL": Or, "andR": And, "impL": Imp}[rule]
        side = conclusion.antecedent if rule in ("orL", "impL") else conclusion.succedent
        cands = [f for f in _dedupe(side) if isinstance(f, cls)]
        if not cands:
            raise RuleShapeError(f"{rule} conclusion has no {cls.__name__} formula")
        for f in cands:
            if rule != "impL":
                _principal_pair(f.left, f.right, rule)
            if rule == "orL":
                r1, r2 = remove_one(p.antecedent, f.left), remove_one(q.antecedent, f.right)
                ctx = ((r1, p.succedent), (r2, q.succedent))
                extra = ((f,), ())
            elif rule == "andR":
                r1, r2 = remove_one(p.succedent, f.left), remove_one(q.succedent, f.right)
                ctx = ((p.antecedent, r1), (q.antecedent, r2))
                extra = ((), (f,))
            else:
                r1, r2 = remove_one(p.succedent, f.left), remove_one(q.antecedent, f.right)
                ctx = ((p.antecedent, r1), (r2, q.succedent))
                extra = ((f,), ())
            if r1 is None or r2 is None:
                continue
            if _check_binary(conclusion, ctx[0], ctx[1], *extra):
                return
        raise RuleShapeError(f"{rule} does not yield the stated conclusion")
    if rule == "impR":
        for f in _dedupe(conclusion.succedent):
            if not isinstance(f, Imp):
                continue
            try:
                built = apply_structural(rule, [p], (f.left, f.right))
            except RuleShapeError:
                continue
            if seq_equal(built, conclusion):
                return
        raise RuleShapeError("impR does not yield the stated conclusion")
    if rule == "weaken":
        pa, ps = side_counter(p.antecedent), side_counter(p.succedent)
        ca, cs = side_counter(conclusion.antecedent), side_counter(conclusion.succedent)
        if pa - ca or ps - cs:
            raise RuleShapeError("weakening may only add formulas")
        return
    if rule == "contract":
        pa, ps = side_counter(p.antecedent), side_counter(p.succedent)
        ca, cs = side_counter(conclusion.antecedent), side_counter(conclusion.succedent)
        if ca - pa or cs - ps or set(pa) != set(ca) or set(ps) != set(cs):
            raise RuleShapeError("contraction may only merge duplicate formulas")
        return
    raise UnknownScheme(f"unknown structural rule {rule!r}")


# ---------------------------------------------------------------------------
# Necessitation, propositional tautologies, transfer
# ---------------------------------------------------------------------------

def apply_necessitation(premise: Sequent, var: str, strength: str = TRIANGLE,
                        relativizer=None, system: str = BASE_SYSTEM,
                        used: Iterable[str] = ()) -> Sequent:
    """``=> box^var(premise)`` with ``var`` fresh with respect to ``used``."""
    if var in set(used) or var in lc.sequent_index_vars(premise):
        raise FreshnessError(f"necessitation index {var} is not fresh")
    return Sequent((), (Box(strength, IVar(var), premise, system, relativizer),))


class _Opaque:
    """Assigns propositional atoms to maximal box-rooted subformulas."""

    def __init__(self):
        self.names: dict = {}
        self.shown: dict = {}

    def atom(self, key, text):
        if key not in self.names:
            self.names[key] = len(self.names)
            self.shown[len(self.shown)] = text
        return PAtom(self.names[key])

    def encode(self, f):
        if isinstance(f, Lit):
            a = self.atom(("L", f.name, True), f.name)
            return a if f.positive else PNot(a)
        if isinstance(f, Box):
            return self.atom(ckey(f), lc.format_formula(f))
        if isinstance(f, Top):
            return PConst(True)
        if isinstance(f, Bot):
            return PConst(False)
        if isinstance(f, Not):
            return PNot(self.encode(f.arg))
        if isinstance(f, And):
            return PAnd((self.encode(f.left), self.encode(f.right)))
        if isinstance(f, Or):
            return POr((self.encode(f.left), self.encode(f.right)))
        if isinstance(f, Imp):
            return POr((PNot(self.encode(f.left)), self.encode(f.right)))
        raise TypeError(f)


def opaque_atom_count(s: Sequent) -> int:
    o = _Opaque()
    for g in s.formulas():
        o.encode(g)
    return len(o.names)


def apply_proptaut(s: Sequent, budget: int = PROPTAUT_ATOM_BUDGET) -> Sequent:
    """Accept ``s`` iff it is a tautology over opaque box atoms."""
    o = _Opaque()
    ant = [o.encode(g) for g in s.antecedent]
    suc = [o.encode(g) for g in s.succedent]
    if len(o.names) > budget:
        raise AtomBudgetExceeded(f"{len(o.names)} opaque atoms exceed the budget of {budget}")
    negation = PAnd(tuple(ant) + tuple(PNot(g) for g in suc))
    model = sat_solve(negation)
    if model is not None:
        cm = {o.shown[a]: model.get(a, False) for a in sorted(o.shown)}
        raise NotTautology("sequent is not a propositional tautology", cm)
    return s


def apply_simulation_transfer(premise: Sequent, target: str, var: str,
                              has_simulation: bool = False,
                              used: Iterable[str] = ()) -> Sequent:
    """Move the outer black boxes of ``=> #m[..], ...`` to system ``target``."""
    if not has_simulation:
        raise MissingHypothesis(f"no SimulationPremise(base<={target}) is declared")
    if premise.antecedent or not premise.succedent:
        raise RuleShapeError("transfer needs a sequent with an empty antecedent")
    boxes = premise.succedent
    if not all(isinstance(b, Box) and b.strength == BLACK and b.system == BASE_SYSTEM
               and b.relativizer is None for b in boxes):
        raise RuleShapeError("transfer acts on plain black-triangle boxes over the base system")
    if len({b.index for b in boxes}) != 1:
        raise RuleShapeError("transfer needs a common outer index")
    if var in set(used) or var in lc.sequent_index_vars(premise):
        raise FreshnessError(f"transfer index {var} is not fresh")
    return Sequent((), tuple(Box(BLACK, IVar(var), b.body, target, None) for b in boxes))


# ---------------------------------------------------------------------------
# Hypothesis schemes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisScheme:
    name: str
    template: str
    universal: tuple = ()
    existential: tuple = ()
    formulas: tuple = ()
    relativizers: tuple = ()
    systems: tuple = ()
    relclass: str | None = None
    note: str = ""

    def pattern(self) -> Sequent:
        return lc.parse_sequent(self.template, strict=False)


HYPOTHESES: dict[str, HypothesisScheme] = {h.name: h for h in [
    HypothesisScheme("Dot2", "|- ^j[ => ~^i[ => q ] ], ^j[ => ~^i[ => ~q ] ]",
                     ("i",), ("j",), ("q",), note=".2-property"),
    HypothesisScheme("AlgDot2", "|- #j[ => ~^i[ => q ] ], #j[ => ~^i[ => ~q ] ]",
                     ("i",), ("j",), ("q",), note="algorithmic .2-property"),
    HypothesisScheme("Dot3", "|- ^j[ ^i a => ^i b ], ^j[ ^i b => ^i a ]",
                     ("i",), ("j",), ("a", "b"), note=".3-property"),
    HypothesisScheme("AlgDot3", "|- #j[ ^i a => ^i b ], #j[ ^i b => ^i a ]",
                     ("i",), ("j",), ("a", "b"), note="algorithmic .3-property"),
    HypothesisScheme("Lemma19Disj",
                     "|- ^j{p}[ => ~^i[ => q ] ], ^j{p}[ => ~^k{p}[ => ~^i[ => q ] ] ]",
                     ("i", "k"), ("j",), ("q",), ("p",), relclass=PI1_UNIVERSAL,
                     note="uniform effective disjunction, relativized"),
    HypothesisScheme("Lemma19Interp",
                     "|- #j{p}[ => ~^i[ => q ] ], #j{p}[ => ~^k{p}[ => ~^i[ => q ] ] ]",
                     ("i", "k"), ("j",), ("q",), ("p",), relclass=PI1_UNIVERSAL,
                     note="uniform effective interpolation, relativized"),
    HypothesisScheme("Prop28Persistence", "^i@S[ => f ] |- ^j[ => ^i@S[ => f ] ]",
                     ("i",), ("j",), ("f",), systems=("S",),
                     note="provability in S is provable in the base system"),
    HypothesisScheme("DisjunctionPremise", "|- ^k[ => ~^i[ => A ], ~^i[ => B ] ]",
                     ("i",), ("k",), ("A", "B"),
                     note="bounded provability of a disjunction of unprovabilities"),
    HypothesisScheme("AlgDisjunctionPremise", "|- #k[ => ~^i[ => A ], ~^i[ => B ] ]",
                     ("i",), ("k",), ("A", "B"),
                     note="algorithmic form of DisjunctionPremise"),
]}

DECLARATIVE = ("SimulationPremise", "NormalSystemPremise")


def _split_bindings(text: str) -> list[tuple[str, str]]:
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur.strip():
        parts.append(cur)
    out = []
    for p in parts:
        name, sep, value = p.partition(":=")
        if not sep:
            raise RuleShapeError(f"binding {p.strip()!r} lacks ':='")
        out.append((name.strip(), value.strip()))
    return out


def formula_class(f) -> str | None:
    """Syntactic class of a formula used as a compound relativizer."""
    if lc.is_negated_box(f):
        return PI1_UNIVERSAL
    if isinstance(f, Box):
        return SIGMA1_EXISTENTIAL
    if isinstance(f, (Or, And)):
        a, b = formula_class(f.left), formula_class(f.right)
        return a if a == b else None
    return None


def instantiate_hypothesis(name: str, bindings: Mapping[str, object],
                           relclass: Mapping[str, str] | None = None) -> Sequent:
    """Instance of a hypothesis scheme.

    ``bindings`` maps index metavariables to :class:`IndexTerm`, formula
    metavariables to formulas, relativizer metavariables to atom names and
    system metavariables to system names.
    """
    if name not in HYPOTHESES:
        raise UnknownScheme(f"unknown hypothesis scheme {name!r}")
    h = HYPOTHESES[name]
    expected = set(h.universal + h.existential + h.formulas + h.relativizers + h.systems)
    if set(bindings) != expected:
        missing = sorted(expected - set(bindings))
        extra = sorted(set(bindings) - expected)
        raise SideConditionViolation(
            f"{name} bindings: missing {missing or '-'}, unexpected {extra or '-'}")
    relclass = relclass or {}
    for r in h.relativizers:
        atom = bindings[r]
        if not isinstance(atom, str):
            raise SideConditionViolation(f"relativizer {r} must be bound to an atom")
        if h.relclass and relclass.get(atom) != h.relclass:
            raise SideConditionViolation(
                f"{name} requires relativizer {atom} of class {h.relclass}, "
                f"declared {relclass.get(atom, 'none')}")
    s = h.pattern()
    s = lc.rename_indices(s, {k: bindings[k] for k in h.universal + h.existential})
    s = lc.rename_systems(s, {k: bindings[k] for k in h.systems})
    mapping = {k: bindings[k] for k in h.formulas}
    mapping.update({k: Lit(bindings[k]) for k in h.relativizers})
    return lc.substitute_many(s, mapping, strict=False)


# ---------------------------------------------------------------------------
# Monotonicity of boxes
# ---------------------------------------------------------------------------

def _weaker(p, c, out: list) -> bool:
    """Does ``p`` entail ``c`` by enlarging box indices or box systems?

    Appends the index obligations ``(c_index, p_index)`` to ``out``.
    """
    if ckey(p) == ckey(c):
        return True
    if isinstance(p, Box) and isinstance(c, Box):
        if p.system != c.system or body_key(p.body) != body_key(c.body):
            return False
        if not (p.strength == c.strength or (p.strength == BLACK and c.strength == TRIANGLE)):
            return False
        if p.relativizer is not None and _rel_key(p) != _rel_key(c):
            return False
        out.append((c.index, p.index))
        return True
    if isinstance(p, Not) and isinstance(c, Not):
        return _weaker(c.arg, p.arg, out)
    if type(p) is type(c) and isinstance(p, (Or, And)):
        return _weaker(p.left, c.left, out) and _weaker(p.right, c.right, out)
    return False


def _match_side(prem: tuple, concl: tuple, positive: bool):
    if len(prem) != len(concl):
        return None
    concl = list(concl)

    def go(i, used, acc):
        if i == len(prem):
            return acc
        for j, c in enumerate(concl):
            if j in used:
                continue
            out: list = []
            ok = _weaker(prem[i], c, out) if positive else _weaker(c, prem[i], out)
            if ok:
                r = go(i + 1, used | {j}, acc + out)
                if r is not None:
                    return r
        return None
    return go(0, frozenset(), [])


def check_mono(premise: Sequent, conclusion: Sequent, env: Mapping[str, int]) -> list[str]:
    """Validate a monotonicity step and return the index obligations."""
    obligations = []
    for prem, concl, pos in ((premise.antecedent, conclusion.antecedent, False),
                             (premise.succedent, conclusion.succedent, True)):
        best = None
        # prefer a matching whose obligations all hold under the witness
        for perm in _candidate_orders(prem):
            got = _match_side(perm, concl, pos)
            if got is None:
                continue
            if all(lc.eval_index(a, env) >= lc.eval_index(b, env) for a, b in got):
                best = got
                break
            best = best or got
        if best is None:
            raise RuleShapeError("mono: formulas do not correspond by index or strength weakening")
        obligations.extend(best)
    trace = []
    for a, b in obligations:
        va, vb = lc.eval_index(a, env), lc.eval_index(b, env)
        if va < vb:
            raise IndexConstraintViolation(f"mono needs {a} >= {b}, witness gives {va} < {vb}")
        if a != b:
            trace.append(f"{a} >= {b} [{va} >= {vb}]")
    return trace


def _candidate_orders(items: tuple):
    if len(items) <= 4:
        yield from permutations(items)
    else:
        yield items


# ---------------------------------------------------------------------------
# Checker
# ---------------------------------------------------------------------------

@dataclass
class _Line:
    conclusion: Sequent
    ledger: frozenset
    schemes: frozenset


Resolver = Callable[[str], "ProofScript"]


class Checker:
    """Validates one script; ``resolver`` loads imported lemmas by name."""

    def __init__(self, script: ProofScript, witness_shift: int = 0,
                 resolver: Resolver | None = None, cache: dict | None = None,
                 proptaut_budget: int = PROPTAUT_ATOM_BUDGET):
        self.s = script
        self.env = {k: v + witness_shift for k, v in script.witness.items()}
        self.resolver = resolver
        self.cache = cache if cache is not None else {}
        self.budget = proptaut_budget
        self.lines: dict[str, _Line] = {}
        self.used: set[str] = set()
        self.constraints: list[str] = []
        self.declared_hyp = {h.split("(")[0] for h in script.hypotheses}
        self.simulations = set()
        self.normal_systems = set()
        for h in script.hypotheses:
            m = re.fullmatch(r"SimulationPremise\((\w+)<=(\w+)\)", h)
            if m:
                self.simulations.add((m.group(1), m.group(2)))
            m = re.fullmatch(r"NormalSystemPremise\((\w+)\)", h)
            if m:
                self.normal_systems.add(m.group(1))

    # declarations -----------------------------------------------------
    def check_declarations(self):
        s = self.s
        names = s.index_vars
        if len(set(names)) != len(names):
            raise ScriptError("an index variable is declared twice")
        missing = [v for v in names if v not in self.env]
        if missing:
            raise ScriptError(f"witness lacks values for {', '.join(missing)}")
        for h in s.hypotheses:
            base = h.split("(")[0]
            if base not in HYPOTHESES and base not in DECLARATIVE:
                raise ScriptError(f"unknown hypothesis scheme {h!r}")
        for r in s.requires:
            if not r.holds(self.env):
                raise IndexConstraintViolation(f"witness violates requirement {r}")
            self.constraints.append(f"require {r}")
        self._check_vocabulary(s.goal, "goal")
        if not lc.wf_sequent(s.goal):
            raise GrammarViolation("goal is not a Lambda-sequent")

    def _check_vocabulary(self, seq: Sequent, where: str):
        undeclared = lc.sequent_index_vars(seq) - set(self.s.index_vars)
        if undeclared:
            raise ScriptError(f"{where}: undeclared index variables {sorted(undeclared)}")
        atoms = lc.sequent_atoms(seq) - set(self.s.atoms)
        if atoms:
            raise ScriptError(f"{where}: undeclared atoms {sorted(atoms)}")
        systems = lc.sequent_systems(seq) - set(self.s.systems)
        if systems:
            raise ScriptError(f"{where}: undeclared systems {sorted(systems)}")

    # helpers ----------------------------------------------------------
    def premise(self, label: str) -> _Line:
        if label not in self.lines:
            raise RuleShapeError(f"premise {label} is not an earlier step")
        return self.lines[label]

    def fresh(self, var: str, what: str):
        if var not in self.s.exists + self.s.vars:
            raise FreshnessError(f"{what} index {var} must be declared under exists or vars")
        if var in self.used:
            raise FreshnessError(f"{what} index {var} already occurs in an earlier step")

    def need_system(self, systems: Iterable[str]) -> set:
        out = set()
        for sysname in systems:
            if sysname == BASE_SYSTEM:
                continue
            if sysname not in self.normal_systems:
                raise MissingHypothesis(f"reasoning over {sysname} needs NormalSystemPremise({sysname})")
            out.add(f"NormalSystemPremise({sysname})")
        return out

    def parse_value(self, text: str, kind: str):
        try:
            if kind == "index":
                return lc.parse_index(text)
            if kind == "formula":
                return lc.parse_formula(text, strict=False)
        except ParseError as e:
            raise RuleShapeError(f"cannot read binding value {text!r}: {e.message}") from None
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", text):
            raise RuleShapeError(f"expected a name, found {text!r}")
        return text

    # main loop ----------------------------------------------------------
    def run(self) -> CheckReport:
        s = self.s
        report = CheckReport(script=s.name, status="ok", steps=len(s.steps),
                             numbered_steps=sum(not st.auxiliary for st in s.steps),
                             auxiliary_steps=sum(st.auxiliary for st in s.steps))
        try:
            self.check_declarations()
        except (StepError, ScriptError, GrammarViolation) as e:
            return self._fail(report, "header", e)
        last = None
        for st in s.steps:
            try:
                self._check_vocabulary(st.conclusion, f"step {st.label}")
                ledger, schemes = self.step(st)
            except (StepError, ScriptError, GrammarViolation, RelativizerViolation) as e:
                return self._fail(report, st.label, e)
            self.lines[st.label] = _Line(st.conclusion, frozenset(ledger), frozenset(schemes))
            self.used |= lc.sequent_index_vars(st.conclusion)
            last = st
        if last is None:
            return self._fail(report, "goal", RuleShapeError("script has no steps"))
        if not seq_equal(last.conclusion, s.goal):
            return self._fail(report, last.label,
                              RuleShapeError("final step does not match the goal"))
        line = self.lines[last.label]
        report.ledger_instances = sorted(line.ledger)
        report.ledger = sorted({re.split(r"[(\[]", h)[0] for h in line.ledger})
        report.schemes = sorted(line.schemes)
        report.constraints = list(self.constraints)
        return report

    def _fail(self, report, where, err) -> CheckReport:
        report.status = "failed"
        report.failed_step = where
        report.error = type(err).__name__
        report.reason = str(err)
        report.constraints = list(self.constraints)
        return report

    def step(self, st: ProofStep):
        rule, args, concl = st.rule, st.args, st.conclusion
        toks = args.split()
        if rule in SCHEME_NAMES:
            if toks:
                raise RuleShapeError(f"{rule} takes no premises")
            boxes = _match_scheme(rule, concl)
            ledger = self.need_system(b.system for b in boxes)
            return ledger, {SCHEME_NAMES[rule]}
        if rule == "proptaut":
            if toks:
                raise RuleShapeError("proptaut takes no premises")
            apply_proptaut(concl, self.budget)
            return set(), set()
        if rule in ("cut", "negL", "negR", "orL", "orR", "andL", "andR",
                    "contract", "weaken", "impL", "impR"):
            prem = [self.premise(t) for t in toks]
            check_structural(rule, [p.conclusion for p in prem], concl)
            return self._inherit(prem)
        if rule == "mono":
            prem = [self.premise(t) for t in toks]
            if len(prem) != 1:
                raise RuleShapeError("mono takes one premise")
            trace = check_mono(prem[0].conclusion, concl, self.env)
            self.constraints.extend(f"step {st.label}: {t}" for t in trace)
            return self._inherit(prem)
        if rule == "nec":
            return self.rule_nec(st, toks)
        if rule == "subst":
            return self.rule_subst(st, args)
        if rule == "deduct":
            return self.rule_deduct(st, toks)
        if rule == "transfer":
            return self.rule_transfer(st, toks)
        if rule in ("hyp", "hyp-unify"):
            return self.rule_hyp(st, args, unify=rule == "hyp-unify")
        if rule in ("lemma", "lemma-unify"):
            return self.rule_lemma(st, args, unify=rule == "lemma-unify")
        raise UnknownScheme(f"unknown rule {rule!r}")

    def _inherit(self, prem: list[_Line]):
        ledger, schemes = set(), set()
        for p in prem:
            ledger |= p.ledger
            schemes |= p.schemes
        return ledger, schemes

    # individual rules ---------------------------------------------------
    def rule_nec(self, st, toks):
        if len(toks) != 2:
            raise RuleShapeError("nec takes a premise and a fresh index variable")
        prem = self.premise(toks[0])
        var = toks[1]
        self.fresh(var, "necessitation")
        concl = st.conclusion
        if concl.antecedent or len(concl.succedent) != 1 or not isinstance(concl.succedent[0], Box):
            raise RuleShapeError("necessitation concludes => box(premise)")
        box = concl.succedent[0]
        if box.index != IVar(var):
            raise IndexConstraintViolation(f"necessitation index must be {var}, found {box.index}")
        built = apply_necessitation(prem.conclusion, var, box.strength, box.relativizer,
                                    box.system, self.used)
        if body_key(built.succedent[0].body) != body_key(box.body):
            raise RuleShapeError("necessitation body differs from the premise")
        ledger, schemes = self._inherit([prem])
        return ledger | self.need_system([box.system]), schemes

    def rule_subst(self, st, args):
        toks = args.split(None, 1)
        if len(toks) != 2:
            raise RuleShapeError("subst takes a premise and bindings")
        prem = self.premise(toks[0])
        mapping = {}
        for name, value in _split_bindings(toks[1]):
            if name not in self.s.atoms:
                raise RuleShapeError(f"subst target {name} is not a declared atom")
            mapping[name] = self.parse_value(value, "formula")

        def allow(atom, formula):
            want = self.s.relclass.get(atom)
            if want is None:
                return False
            return formula_class(formula) == want
        built = lc.substitute_many(prem.conclusion, mapping, strict=False,
                                   allow_compound_relativizer=allow)
        if not seq_equal(built, st.conclusion):
            raise RuleShapeError("substitution does not yield the stated conclusion")
        return self._inherit([prem])

    def rule_deduct(self, st, toks):
        if len(toks) != 1:
            raise RuleShapeError("deduct takes one premise")
        prem = self.premise(toks[0])
        rels = set()

        def conv(f):
            if isinstance(f, Box) and f.relativizer is not None:
                rels.add(ckey(f.relativizer))
                body = Sequent((f.relativizer,) + f.body.antecedent, f.body.succedent)
                return Box(f.strength, f.index, body, f.system, None)
            if isinstance(f, Not):
                return Not(conv(f.arg))
            return f
        p = prem.conclusion
        built = Sequent(tuple(conv(f) for f in p.antecedent), tuple(conv(f) for f in p.succedent))
        if not rels:
            raise RuleShapeError("deduct needs relativized boxes")
        if len(rels) > 1:
            raise RuleShapeError("deduct needs a single common relativizer")
        if not seq_equal(built, st.conclusion):
            raise RuleShapeError("deduct does not yield the stated conclusion")
        return self._inherit([prem])

    def rule_transfer(self, st, toks):
        if len(toks) != 3:
            raise RuleShapeError("transfer takes a premise, a target system and a fresh index")
        prem = self.premise(toks[0])
        target, var = toks[1], toks[2]
        if target not in self.s.systems:
            raise ScriptError(f"undeclared system {target}")
        self.fresh(var, "transfer")
        built = apply_simulation_transfer(prem.conclusion, target, var,
                                          (BASE_SYSTEM, target) in self.simulations, self.used)
        if not seq_equal(built, st.conclusion):
            raise RuleShapeError("transfer does not yield the stated conclusion")
        ledger, schemes = self._inherit([prem])
        return ledger | {f"SimulationPremise({BASE_SYSTEM}<={target})"}, schemes

    def rule_hyp(self, st, args, unify: bool):
        name, _, rest = args.partition(" ")
        if name not in HYPOTHESES:
            raise UnknownScheme(f"unknown hypothesis scheme {name!r}")
        if name not in self.declared_hyp:
            raise MissingHypothesis(f"{name} is not listed under hypotheses")
        h = HYPOTHESES[name]
        raw = dict(_split_bindings(rest)) if rest.strip() else {}
        bindings = {}
        for k, v in raw.items():
            if k in h.universal or k in h.existential:
                bindings[k] = self.parse_value(v, "index")
            elif k in h.formulas:
                bindings[k] = self.parse_value(v, "formula")
            else:
                bindings[k] = self.parse_value(v, "name")
        fresh_here = set()
        for k in h.existential:
            if k not in bindings or unify:
                continue
            t = bindings[k]
            if not isinstance(t, IVar):
                raise FreshnessError(f"{name}: existential {k} must be bound to a fresh variable")
            if t.name in fresh_here:
                raise FreshnessError(f"{name}: {t.name} bound twice")
            self.fresh(t.name, f"{name} existential")
            fresh_here.add(t.name)
        for k in h.systems:
            if bindings.get(k) not in self.s.systems:
                raise ScriptError(f"{name}: system {bindings.get(k)} is not declared")
        built = instantiate_hypothesis(name, bindings, self.s.relclass)
        if not seq_equal(built, st.conclusion):
            raise RuleShapeError(f"{name} instance does not match the stated conclusion")
        instance = f"{name}(" + ", ".join(f"{k}:={raw[k]}" for k in sorted(raw)) + ")"
        return {instance}, set()

    def rule_lemma(self, st, args, unify: bool):
        name, _, rest = args.partition(" ")
        if self.resolver is None:
            raise MissingHypothesis(f"no resolver to import {name}")
        key = name
        if key not in self.cache:
            try:
                lemma = self.resolver(name)
            except Exception as e:  # resolver errors surface as a failed step
                raise MissingHypothesis(f"cannot load lemma {name}: {e}") from None
            self.cache[key] = None  # guards against cyclic imports
            sub = Checker(lemma, resolver=self.resolver, cache=self.cache,
                          proptaut_budget=self.budget).run()
            self.cache[key] = (lemma, sub)
        entry = self.cache[key]
        if entry is None:
            raise RuleShapeError(f"cyclic import of {name}")
        lemma, sub = entry
        if not sub.ok:
            raise RuleShapeError(f"imported lemma {name} does not check: {sub.reason}")
        raw = _split_bindings(rest) if rest.strip() else []
        index_map, system_map = {}, {}
        for k, v in raw:
            if k in lemma.params or k in lemma.exists:
                index_map[k] = self.parse_value(v, "index")
            elif k in lemma.systems:
                system_map[k] = self.parse_value(v, "name")
                if system_map[k] not in self.s.systems:
                    raise ScriptError(f"undeclared system {system_map[k]}")
            else:
                raise RuleShapeError(f"{name} has no parameter {k}")
        unbound = [v for v in lemma.params + lemma.exists if v not in index_map]
        if unbound:
            raise RuleShapeError(f"{name}: unbound index parameters {unbound}")
        if not unify:
            seen = set()
            for v in lemma.exists:
                t = index_map[v]
                if not isinstance(t, IVar) or t.name in seen:
                    raise FreshnessError(f"{name}: existential {v} must map to a fresh variable")
                self.fresh(t.name, f"{name} existential")
                seen.add(t.name)
        for r in lemma.requires:
            inst = r.rename(index_map)
            if not inst.holds(self.env):
                raise IndexConstraintViolation(f"{name} requires {inst}")
            self.constraints.append(f"step {st.label}: {name} requires {inst}")
        for atom, cls in lemma.relclass.items():
            if self.s.relclass.get(atom) != cls:
                raise SideConditionViolation(f"{name} needs relativizer {atom} of class {cls}")
        missing = set(sub.ledger) - self.declared_hyp
        if missing:
            raise MissingHypothesis(f"{name} depends on undeclared {sorted(missing)}")
        goal = lc.rename_indices(lemma.goal, index_map)
        goal = lc.rename_systems(goal, system_map)
        if not seq_equal(goal, st.conclusion):
            raise RuleShapeError(f"{name} instance does not match the stated conclusion")
        ledger = set(sub.ledger_instances)
        if system_map:
            tag = ", ".join(f"{k}:={v}" for k, v in sorted(system_map.items()))
            ledger = {f"{h}[{tag}]" for h in ledger}
        ledger |= self.need_system(system_map.values())
        return ledger, set(sub.schemes)


def check_script(script: ProofScript, witness_shift: int = 0,
                 resolver: Resolver | None = None, cache: dict | None = None) -> CheckReport:
    """Validate every step; failures are reported, never raised."""
    return Checker(script, witness_shift, resolver, cache).run()
