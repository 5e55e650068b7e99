import pytest

from polyprov.bounded_translation import (BOTTOM, TOP, NAdd, NConst, NMul, NVar, Prf,
                                          SetExists, bitlength, classify, eval_bounded,
                                          eval_term, format_bounded, format_term,
                                          interpret_modal, numeral, parse_bounded, term_size,
                                          translate_formula, translate_sequent)
from polyprov.errors import ClassViolation, UnsupportedConstruct
from polyprov.lambda_core import parse_formula
from polyprov.propositional import PAtom, POr, PQuant, atoms, is_tautology, simplify


# --- numerals -------------------------------------------------------------

def test_numeral_five_binary_scheme():
    assert format_term(numeral(5)) == "(((1*2)+0)*2)+1"


def test_numeral_small():
    assert numeral(1) == NConst(1)
    assert numeral(0) == NConst(0)


@pytest.mark.parametrize("n", [2, 3, 12, 255, 256, 1000, 65535])
def test_numeral_evaluates_and_fits(n):
    assert eval_term(numeral(n), {}) == n
    assert term_size(numeral(n)) <= 4 * bitlength(n)


def test_eval_term():
    assert eval_term(NAdd(NMul(NConst(1), NConst(2)), NConst(1)), {}) == 3
    assert eval_term(NAdd(NVar("x"), NConst(1)), {"x": 4}) == 5


# --- translation ----------------------------------------------------------

def test_exists_unfolds_to_disjunction():
    phi = parse_bounded("exists y <= x. in(y, P)")
    out = translate_formula(phi, 2)
    assert out == POr((PAtom(("P", 0)), PAtom(("P", 1)), PAtom(("P", 2))))


def test_closed_relation():
    assert simplify(translate_formula(parse_bounded("2 <= 1+2"), 0)).value is True
    assert simplify(translate_formula(parse_bounded("x = x+1"), 3)).value is False


@pytest.mark.parametrize("n", [0, 1, 5, 16])
def test_excluded_middle_is_tautology(n):
    phi = parse_bounded("forall y <= x. (in(y, P) | !in(y, P))")
    assert is_tautology(translate_formula(phi, n))


def test_sequent_translation():
    alpha = parse_bounded("exists y <= x. in(y, P)")
    ant, suc = translate_sequent([alpha], [alpha], 3)
    assert ant == suc
    ant, suc = translate_sequent([alpha, alpha], [], 2)
    assert len(ant) == 2 and suc == ()


def test_sequent_namespaces_are_disjoint():
    alpha = parse_bounded("exists y <= x. in(y, P)")
    ant, suc = translate_sequent([alpha], [alpha], 3, namespaces=["A.", "B."])
    assert not atoms(ant[0]) & atoms(suc[0])


def test_set_prefix_becomes_atom_block():
    phi = parse_bounded("Exists P. forall y <= x. in(y, P)")
    assert classify(phi) == "Sigma1"
    (out,), _ = translate_sequent([phi], [], 2)
    assert isinstance(out, PQuant) and len(out.atoms) == 3


def test_prf_is_not_translated():
    phi = interpret_modal(parse_formula("^2 q"), {"q": TOP})
    with pytest.raises(UnsupportedConstruct):
        translate_formula(phi.body if isinstance(phi, SetExists) else phi, 1)


def test_monotone_atoms():
    phi = parse_bounded("forall y <= x. exists z <= y. in(z, P)")
    for n in range(6):
        assert atoms(translate_formula(phi, n)) <= atoms(translate_formula(phi, n + 1))


def test_direct_evaluation_agrees_on_fixed_formula():
    phi = parse_bounded("exists y <= x. x = y + y")
    for n in range(20):
        assert simplify(translate_formula(phi, n)).value == eval_bounded(phi, {"x": n}) \
            == (n % 2 == 0)


# --- arithmetic interpretation -------------------------------------------

def test_bottom_interpretation():
    assert interpret_modal(parse_formula("bot"), {}) == BOTTOM
    assert format_bounded(BOTTOM) == "x = x+1"


def test_box_interpretation_is_proof_predicate():
    out = interpret_modal(parse_formula("^2 q"), {"q": parse_bounded("x = x")})
    assert isinstance(out, SetExists) and isinstance(out.body, Prf)
    text = format_bounded(out)
    assert "x^2" in text and "base" in text


def test_interpretation_commutes_with_conjunction():
    m = {"q": parse_bounded("x = x")}
    f = parse_formula("~^2 q /\\ ~^1 q")
    out = interpret_modal(f, m)
    assert out.left == interpret_modal(f.left, m)
    assert out.right == interpret_modal(f.right, m)


def test_relativizer_class_checked():
    f = parse_formula("^1{p}[ => q ]")
    with pytest.raises(ClassViolation):
        interpret_modal(f, {"q": TOP, "p": parse_bounded("Exists P. in(0, P)")},
                        relclass={"p": "Pi1"})
