import itertools

import pytest

from polyprov.errors import GrammarViolation, ParseError
from polyprov.lambda_core import (BLACK, TRIANGLE, And, Bot, Box, INat, IVar, Lit, Not, Or,
                                  Sequent, Top, eval_index, format_formula, format_sequent,
                                  lambda_derivation, negate, parse_formula, parse_index,
                                  parse_sequent, plus, substitute, wf_lambda)


def F(text, strict=True):
    return parse_formula(text, strict=strict)


# --- grammar --------------------------------------------------------------

@pytest.mark.parametrize("text", ["p", "~p", "bot", "top", "^1[ p => q ]", "#2[ => q ]",
                                  "~^1[ p => q ]", "^1 p \\/ ^2 q", "~^1 p /\\ ~#2 q",
                                  "^3@S{r}[ ^1 p => q ]", "#k{p}[ => ~^i A ]"])
def test_wellformed(text):
    assert wf_lambda(F(text))


@pytest.mark.parametrize("text", ["^1[ p => q ] \\/ q", "~~p", "p \\/ q", "~(p /\\ q)",
                                  "^1 p \\/ ~^1 q", "~~^1 p", "^1 p -> ^1 q"])
def test_not_wellformed(text):
    assert not wf_lambda(F(text, strict=False))
    with pytest.raises(GrammarViolation):
        F(text)


def _all_depth(depth):
    """Every formula over atom p and index 1 reachable in ``depth`` constructor steps."""
    layer = {Lit("p"), Lit("p", False)}
    for _ in range(depth):
        nxt = set(layer)
        for a in layer:
            nxt.add(Not(a))
            nxt.add(Box(TRIANGLE, INat(1), Sequent((), (a,))))
            nxt.add(Box(BLACK, INat(1), Sequent((), (a,))))
        for a, b in itertools.product(list(layer)[:6], repeat=2):
            nxt.add(Or(a, b))
            nxt.add(And(a, b))
        layer = nxt
    return layer


def _clauses_accept(f) -> bool:
    """Direct reading of the seven formation clauses."""
    if isinstance(f, (Lit, Bot, Top)):
        return True
    if isinstance(f, Box):
        return all(_clauses_accept(g) for g in f.body.formulas())
    if isinstance(f, Not):
        return isinstance(f.arg, Box) and _clauses_accept(f.arg)
    if isinstance(f, (Or, And)):
        both_boxes = isinstance(f.left, Box) and isinstance(f.right, Box)
        both_neg = all(isinstance(x, Not) and isinstance(x.arg, Box) for x in (f.left, f.right))
        return (both_boxes or both_neg) and _clauses_accept(f.left) and _clauses_accept(f.right)
    return False


def test_grammar_agrees_with_clause_enumeration():
    formulas = _all_depth(2)
    assert len(formulas) > 50
    for f in formulas:
        assert wf_lambda(f) == _clauses_accept(f), format_formula(f)


def test_derivation_reconstruction_clauses():
    d = lambda_derivation(F("~^1 p /\\ ~^1 q"))
    assert d.clause == 5
    assert [c.clause for c in d.children] == [4, 4]
    assert lambda_derivation(F("#2[ => p ]")).clause == 6
    assert lambda_derivation(F("~#2[ => p ]")).clause == 7
    assert lambda_derivation(F("^1 p \\/ ^2 q")).clause == 3


# --- substitution ---------------------------------------------------------

def test_substitute_inside_box():
    out = substitute(F("^1[ p => q ]"), "p", F("^2[ r => s ]"))
    assert out == F("^1[ ^2[ r => s ] => q ]")


def test_substitute_identity_case():
    a = F("^2[ r => s ]")
    assert substitute(F("p"), "p", a) == a


def test_substitute_negated_literal_negates_image():
    assert substitute(F("~p"), "p", F("^1 q")) == Not(F("^1 q"))


def test_substitute_compound_relativizer_needs_permission():
    b = F("#k{p}[ => q ]")
    a = F("~^i A \\/ ~^i B")
    with pytest.raises(Exception):
        substitute(b, "p", a)
    out = substitute(b, "p", a, allow_compound_relativizer=lambda name, f: True)
    assert out.relativizer == a
    assert wf_lambda(out)


# --- indices --------------------------------------------------------------

def test_index_normal_form():
    assert parse_index("i+1+1") == parse_index("i+2")
    assert parse_index("max(i, i+1)") == parse_index("i+1")
    assert parse_index("max(k, j)+1") == parse_index("max(j+1, k+1)")
    assert plus(INat(2), 1) == INat(3)
    assert parse_index("i+1") != parse_index("i")
    assert eval_index(parse_index("max(i, k)+2"), {"i": 1, "k": 4}) == 6
    assert IVar("i") + 0 == IVar("i")


# --- parsing and printing -------------------------------------------------

def test_parse_box_sequent():
    s = parse_sequent("|- ^1[ p => q ]")
    assert s.antecedent == ()
    assert len(s.succedent) == 1 and isinstance(s.succedent[0], Box)


def test_parse_two_antecedents():
    s = parse_sequent("p, q |- p")
    assert len(s.antecedent) == 2 and s.succedent == (Lit("p"),)


def test_sugar_matches_explicit_box():
    assert F("^i A") == F("^i[ => A ]")


def test_sequent_is_multiset():
    assert parse_sequent("p, q |- r, s") == parse_sequent("q, p |- s, r")
    assert parse_sequent("p, p |- q") != parse_sequent("p |- q")


def test_negate_involutive():
    for t in ["p", "~p", "^1 p", "~^1 p"]:
        assert negate(negate(F(t))) == F(t)


def test_parse_error_position():
    with pytest.raises(ParseError) as e:
        parse_sequent("p |- ^1[ q ")
    assert e.value.line == 1 and e.value.column > 1


def test_format_parse_round_trip_on_corpus():
    from polyprov.corpus import load_corpus
    count = 0
    for entry in load_corpus():
        for script in entry.scripts:
            for step in script.steps:
                text = format_sequent(step.conclusion)
                assert parse_sequent(text, strict=False) == step.conclusion
                count += 1
    assert count > 200
