import pytest

from polyprov import kernel as K
from polyprov.corpus import load_bundled, script_text
from polyprov.errors import (AtomBudgetExceeded, ConnectiveRestriction, FreshnessError, MissingHypothesis,
                             NotTautology, RuleShapeError, SideConditionViolation,
                             UnknownScheme)
from polyprov.lambda_core import (BLACK, IVar, format_formula, parse_formula, parse_index,
                                  parse_sequent)


def S(text):
    return parse_sequent(text, strict=False)


def F(text):
    return parse_formula(text, strict=False)


def check(text):
    return K.check_script(K.parse_script(text), resolver=load_bundled)


# --- initial sequents -----------------------------------------------------

@pytest.mark.parametrize("text,scheme,ok", [
    ("^2[p => q] |- ^3 ^2[p => q]", "Ax4", True),
    ("^2[p => q] |- ^2 ^2[p => q]", "Ax4", False),
    ("^1 p |- ^2 ^1 p", "ax4", True),
    ("^2 ^1 p |- ^1 p", "AxT", True),
    ("^2{r} ^1 p |- ^1 p", "AxT", False),
    ("|- #2{p}[ ^1{p} q => q ]", "WeakT_p", True),
    ("|- #3{p}[ ^1{p} q => q ]", "WeakT_p", False),
    ("p |- p", "Identity", True),
])
def test_match_initial(text, scheme, ok):
    assert K.match_initial(S(text), scheme) is ok


def test_unknown_scheme_is_no_match():
    assert K.match_initial(S("p |- p"), "NoSuchScheme") is False


# --- structural rules -----------------------------------------------------

def test_cut():
    out = K.apply_structural("cut", [S("|- ^1 a"), S("^1 a |- ^1 b")], F("^1 a"))
    assert out == S("|- ^1 b")


def test_cut_needs_matching_formula():
    with pytest.raises(RuleShapeError):
        K.apply_structural("cut", [S("|- ^1 a"), S("^1 b |- ^1 b")], F("^1 a"))


def test_negation_right():
    out = K.apply_structural("negR", [S("^1 a |- ^1 b")], F("^1 a"))
    assert out == S("|- ~^1 a, ^1 b")


def test_weakening():
    out = K.apply_structural("weaken", [S("|- ^1 a")], extra=((F("^2 b"),), ()))
    assert out == S("^2 b |- ^1 a")


def test_connective_restriction():
    with pytest.raises(ConnectiveRestriction):
        K.check_structural("orR", [S("|- ^1 a, ^2 b")], S("|- ^1 a \\/ ^2 b"))
    K.check_structural("orR", [S("|- ^1 a, ^1 b")], S("|- ^1 a \\/ ^1 b"))


def test_wrong_premise_count():
    with pytest.raises(RuleShapeError):
        K.apply_structural("cut", [S("|- ^1 a")], F("^1 a"))


# --- necessitation --------------------------------------------------------

def test_necessitation():
    out = K.apply_necessitation(S("^1 p |- ^1 p"), "j")
    assert out == S("|- ^j[ ^1 p => ^1 p ]")


def test_necessitation_black_relativized():
    out = K.apply_necessitation(S("|- q"), "j", strength=BLACK, relativizer=F("r"))
    assert out == S("|- #j{r}[ => q ]")


def test_necessitation_freshness():
    with pytest.raises(FreshnessError):
        K.apply_necessitation(S("^1 p |- ^1 p"), "j", used=["j"])
    with pytest.raises(FreshnessError):
        K.apply_necessitation(S("^j p |- ^j p"), "j")


# --- propositional tautologies --------------------------------------------

def test_proptaut_accepts_contraposition_of_boxes():
    s = S("^1 a -> ^2 b |- ~^2 b -> ~^1 a")
    assert K.apply_proptaut(s) == s


def test_proptaut_exchange_shape():
    s = S("^1 b -> (^1 c -> a) , ^1 c -> ^1 e |- ^1 b -> (^1 e -> a), ^1 c -> ^1 e")
    assert K.apply_proptaut(s) == s


def test_proptaut_countermodel():
    with pytest.raises(NotTautology) as e:
        K.apply_proptaut(S("|- ^1 p \\/ ~^2 p"))
    cm = e.value.countermodel
    assert cm == {format_formula(F("^1 p")): False, format_formula(F("^2 p")): True}


def test_proptaut_atom_budget():
    big = S("|- " + ", ".join(f"^1 a{i}" for i in range(25)))
    with pytest.raises(AtomBudgetExceeded):
        K.apply_proptaut(big)


# --- transfer -------------------------------------------------------------

def test_transfer_needs_simulation():
    s = S("|- #3[ ^1 g => ^1 f ]")
    with pytest.raises(MissingHypothesis):
        K.apply_simulation_transfer(s, "S", "p")
    out = K.apply_simulation_transfer(s, "S", "p", has_simulation=True)
    box = out.succedent[0]
    assert box.system == "S" and box.index == IVar("p")
    assert box.body == s.succedent[0].body


def test_transfer_rejects_triangle():
    with pytest.raises(RuleShapeError):
        K.apply_simulation_transfer(S("|- ^3 a"), "S", "p", has_simulation=True)


# --- hypothesis schemes ---------------------------------------------------

def test_alg_dot3_instance():
    out = K.instantiate_hypothesis("AlgDot3", {"i": IVar("i"), "j": IVar("j"),
                                               "a": F("a"), "b": F("b")})
    assert out == S("|- #j[ ^i a => ^i b ], #j[ ^i b => ^i a ]")


def test_persistence_instance():
    out = K.instantiate_hypothesis("Prop28Persistence", {"i": IVar("i"), "j": IVar("j"),
                                                         "f": F("f"), "S": "S"})
    assert out == S("^i@S[ => f ] |- ^j[ => ^i@S[ => f ] ]")


def test_relativizer_class_side_condition():
    b = {"i": parse_index("1"), "k": parse_index("2"), "j": parse_index("5"),
         "q": F("A"), "p": "p"}
    with pytest.raises(SideConditionViolation):
        K.instantiate_hypothesis("Lemma19Interp", b)
    out = K.instantiate_hypothesis("Lemma19Interp", b, relclass={"p": K.PI1_UNIVERSAL})
    assert len(out.succedent) == 2


def test_unknown_hypothesis():
    with pytest.raises(UnknownScheme):
        K.instantiate_hypothesis("Dot9", {})


def test_missing_binding():
    with pytest.raises(SideConditionViolation):
        K.instantiate_hypothesis("AlgDot3", {"i": IVar("i")})


# --- whole scripts ----------------------------------------------------------

IDENTITY = """\
script: ident
atoms: p
params: i
witness: i=1
goal: ^i p |- ^i p
steps:
1. ^i p |- ^i p ; id
"""


def test_identity_script():
    r = check(IDENTITY)
    assert r.ok and r.ledger == [] and r.steps == 1 and r.numbered_steps == 1


def test_lemma20_ledger_and_schemes():
    r = K.check_script(load_bundled("lemma20"), resolver=load_bundled)
    assert r.ok, r.summary()
    assert r.ledger == ["Lemma19Interp"]
    assert "WeakT_p" in r.schemes


def test_axiom4_index_mutation_fails_at_that_step():
    text = script_text("inner_black").replace("a4.  ^i B |- ^i+1 ^i B",
                                              "a4.  ^i B |- ^i ^i B")
    r = check(text)
    assert not r.ok and r.failed_step == "a4"


def test_removing_imported_lemma_fails_at_consumer():
    lines = script_text("inner_black_rel").splitlines()
    text = "\n".join(l for l in lines if not l.startswith("a13."))
    r = check(text)
    assert not r.ok and r.failed_step == "g13"


def test_undeclared_hypothesis_fails():
    text = script_text("lemma26").replace("hypotheses: AlgDot3", "hypotheses:")
    r = check(text)
    assert not r.ok and r.error == "MissingHypothesis"


NEC_OVER_HYP = """\
script: dot3nec
atoms: a b
params: i
exists: j m
witness: i=1 j=2 m=3
hypotheses: AlgDot3
goal: |- ^m[ => #j[ ^i a => ^i b ], #j[ ^i b => ^i a ] ]
steps:
1. |- #j[ ^i a => ^i b ], #j[ ^i b => ^i a ] ; hyp AlgDot3 i:=i, j:=j, a:=a, b:=b
2. |- ^m[ => #j[ ^i a => ^i b ], #j[ ^i b => ^i a ] ] ; nec 1 m
"""


def test_ledger_propagates_through_necessitation():
    r = check(NEC_OVER_HYP)
    assert r.ok, r.summary()
    assert r.ledger == ["AlgDot3"]


def test_nec_reusing_index_fails():
    r = check(NEC_OVER_HYP.replace("nec 1 m", "nec 1 j").replace("^m[", "^j["))
    assert not r.ok and r.failed_step == "2" and r.error == "FreshnessError"


def test_goal_mismatch_fails():
    r = check(IDENTITY.replace("goal: ^i p |- ^i p", "goal: ^i p |- ^i p, ^i p"))
    assert not r.ok


@pytest.mark.parametrize("shift", [0, 1, 5])
def test_witness_shift_keeps_thm27_valid(shift):
    r = K.check_script(load_bundled("thm27"), witness_shift=shift, resolver=load_bundled)
    assert r.ok, r.summary()
