"""Property tests for the invariants of every module."""

import itertools

from hypothesis import assume, given
from hypothesis import strategies as st

from polyprov import kernel as K
from polyprov.bounded_translation import (BAnd, BExists, BForall, BImp, BNot, BOr, Eq, Le,
                                          NAdd, NConst, NMul, NVar, bitlength, eval_bounded,
                                          eval_term, numeral, term_size, translate_formula)
from polyprov.corpus import bundled_names, load_bundled
from polyprov.errors import NotTautology
from polyprov.lambda_core import (BLACK, TRIANGLE, And, Box, Imp, INat, Lit, Not, Or, Sequent,
                                  format_formula, substitute, wf_lambda)
from polyprov.ne_compiler import (bundled_machine, compile_machine, compile_pair, separate,
                                  simulate_membership)
from polyprov.propositional import (FALSE, TRUE, PAtom, PNot, evaluate, is_tautology, p_and,
                                    p_imp, p_or, sat_solve, simplify)


# --- strategies -------------------------------------------------------------

def lambda_formulas(names):
    leaves = st.builds(Lit, st.sampled_from(names), st.booleans())

    def extend(children):
        box = st.builds(lambda s, k, ant, suc: Box(s, INat(k), Sequent(tuple(ant), tuple(suc))),
                        st.sampled_from([TRIANGLE, BLACK]), st.integers(1, 3),
                        st.lists(children, max_size=1), st.lists(children, max_size=2))
        neg = box.map(Not)
        return st.one_of(
            box, neg,
            st.builds(Or, box, box), st.builds(And, box, box),
            st.builds(Or, neg, neg), st.builds(And, neg, neg))

    return st.recursive(leaves, extend, max_leaves=6)


def sequents(formulas):
    return st.builds(lambda a, s: Sequent(tuple(a), tuple(s)),
                     st.lists(formulas, max_size=3), st.lists(formulas, max_size=3))


# --- lambda_core --------------------------------------------------------------

@given(lambda_formulas(["p", "q", "r"]))
def test_generated_formulas_are_grammatical(f):
    assert wf_lambda(f)


# q must not occur in a and p must not occur in c
@given(lambda_formulas(["p", "q", "r"]), lambda_formulas(["r", "s"]),
       lambda_formulas(["q", "r", "s"]))
def test_substitution_composition(b, a, c):
    lhs = substitute(substitute(b, "p", a, strict=False), "q", c, strict=False)
    rhs = substitute(substitute(b, "q", c, strict=False), "p",
                     substitute(a, "q", c, strict=False), strict=False)
    assert lhs == rhs


@given(sequents(lambda_formulas(["p", "q"])), st.randoms(use_true_random=False))
def test_sequent_equality_ignores_order(s, rnd):
    ant, suc = list(s.antecedent), list(s.succedent)
    rnd.shuffle(ant)
    rnd.shuffle(suc)
    assert Sequent(tuple(ant), tuple(suc)) == s
    assert hash(Sequent(tuple(ant), tuple(suc))) == hash(s)


# --- kernel ---------------------------------------------------------------------

def _run_lines(name, shift=0):
    checker = K.Checker(load_bundled(name), witness_shift=shift, resolver=load_bundled)
    report = checker.run()
    return checker, report


@given(st.sampled_from(bundled_names()))
def test_ledger_grows_along_steps(name):
    checker, report = _run_lines(name)
    assert report.ok
    seen = []
    for step in checker.s.steps:
        line = checker.lines[step.label]
        for tok in step.args.replace(",", " ").split():
            if tok in seen:
                assert checker.lines[tok].ledger <= line.ledger, (name, step.label, tok)
        seen.append(step.label)


@given(st.sampled_from(bundled_names()), st.integers(0, 25))
def test_witness_shift_is_harmless(name, shift):
    report = K.check_script(load_bundled(name), witness_shift=shift, resolver=load_bundled)
    assert report.ok, report.summary()


# distinct box bodies, so boxes are propositionally independent
BOX_POOL = [Box(s, INat(k), Sequent((), (Lit(f"a{m}"),)))
            for s in (TRIANGLE, BLACK) for k in (1, 2) for m in range(3)]
ATOM_POOL = BOX_POOL + [Lit("b"), Lit("c")]


def prop_shapes():
    leaves = st.sampled_from(range(len(ATOM_POOL)))

    def extend(children):
        return st.one_of(st.tuples(st.just("not"), children),
                         st.tuples(st.sampled_from(["or", "and", "imp"]), children, children))

    return st.recursive(leaves, extend, max_leaves=6)


def _to_formula(shape):
    if isinstance(shape, int):
        return ATOM_POOL[shape]
    if shape[0] == "not":
        return Not(_to_formula(shape[1]))
    l, r = _to_formula(shape[1]), _to_formula(shape[2])
    return {"or": Or, "and": And, "imp": Imp}[shape[0]](l, r)


def _truth(shape, row):
    if isinstance(shape, int):
        return row[shape]
    if shape[0] == "not":
        return not _truth(shape[1], row)
    l, r = _truth(shape[1], row), _truth(shape[2], row)
    return {"or": l or r, "and": l and r, "imp": (not l) or r}[shape[0]]


def _used(shape, out):
    if isinstance(shape, int):
        out.add(shape)
    else:
        for s in shape[1:]:
            _used(s, out)
    return out


@given(st.lists(prop_shapes(), max_size=2), st.lists(prop_shapes(), min_size=1, max_size=2))
def test_proptaut_agrees_with_truth_tables(ant, suc):
    used = set()
    for s in ant + suc:
        _used(s, used)
    used = sorted(used)
    assert len(used) <= 12
    valid = True
    for bits in itertools.product((False, True), repeat=len(used)):
        row = dict(zip(used, bits))
        if all(_truth(s, row) for s in ant) and not any(_truth(s, row) for s in suc):
            valid = False
            break
    seq = Sequent(tuple(map(_to_formula, ant)), tuple(map(_to_formula, suc)))
    try:
        K.apply_proptaut(seq)
        accepted = True
    except NotTautology:
        accepted = False
    assert accepted == valid, format_formula(seq.succedent[0])


# --- propositional layer ------------------------------------------------------

def prop_formulas():
    leaves = st.sampled_from([PAtom(n) for n in "abcd"] + [TRUE, FALSE])

    def extend(children):
        return st.one_of(children.map(PNot),
                         st.builds(p_and, children, children),
                         st.builds(p_or, children, children),
                         st.builds(p_imp, children, children))

    return st.recursive(leaves, extend, max_leaves=10)


@given(prop_formulas())
def test_tautology_sat_duality(phi):
    taut = is_tautology(phi)
    assert taut == (sat_solve(PNot(phi)) is None)
    brute = all(evaluate(phi, dict(zip("abcd", bits)))[0]
                for bits in itertools.product((False, True), repeat=4))
    assert taut == brute


@given(prop_formulas())
def test_simplify_preserves_meaning(phi):
    psi = simplify(phi)
    for bits in itertools.product((False, True), repeat=4):
        row = dict(zip("abcd", bits))
        assert evaluate(phi, row)[0] == evaluate(psi, row)[0]


# --- bounded translation ----------------------------------------------------------

@given(st.integers(0, 2 ** 20))
def test_numeral_value_and_size(n):
    t = numeral(n)
    assert eval_term(t, {}) == n
    assert term_size(t) <= 4 * bitlength(n)


@st.composite
def bounded_formulas(draw, names=("x",), depth=3):
    def term():
        kind = draw(st.integers(0, 3))
        if kind == 0:
            c = draw(st.integers(0, 2))
            return NConst(c), (lambda env, c=c: c)
        v = draw(st.sampled_from(names))
        if kind == 1:
            return NVar(v), (lambda env, v=v: env[v])
        c = draw(st.integers(0, 2))
        if kind == 2:
            return NAdd(NVar(v), NConst(c)), (lambda env, v=v, c=c: env[v] + c)
        return NMul(NVar(v), NConst(c)), (lambda env, v=v, c=c: env[v] * c)

    if depth == 0 or draw(st.integers(0, 3)) == 0:
        (s, fs), (t, ft) = term(), term()
        if draw(st.booleans()):
            return Eq(s, t), (lambda env: fs(env) == ft(env))
        return Le(s, t), (lambda env: fs(env) <= ft(env))
    kind = draw(st.sampled_from(["not", "and", "or", "imp", "ex", "all"]))
    if kind == "not":
        f, ff = draw(bounded_formulas(names, depth - 1))
        return BNot(f), (lambda env: not ff(env))
    if kind in ("and", "or", "imp"):
        f, ff = draw(bounded_formulas(names, depth - 1))
        g, fg = draw(bounded_formulas(names, depth - 1))
        ctor = {"and": BAnd, "or": BOr, "imp": BImp}[kind]
        op = {"and": lambda a, b: a and b, "or": lambda a, b: a or b,
              "imp": lambda a, b: (not a) or b}[kind]
        return ctor(f, g), (lambda env: op(ff(env), fg(env)))
    var = f"y{depth}"
    bound = names[-1]
    body, fb = draw(bounded_formulas(names + (var,), depth - 1))
    ctor, agg = (BExists, any) if kind == "ex" else (BForall, all)
    return ctor(var, NVar(bound), body), \
        (lambda env: agg(fb({**env, var: y}) for y in range(env[bound] + 1)))


@given(bounded_formulas(), st.integers(0, 64))
def test_translation_matches_arithmetic(pair, n):
    phi, oracle = pair
    out = simplify(translate_formula(phi, n))
    assert out.value == oracle({"x": n}) == eval_bounded(phi, {"x": n})


# --- compiler -------------------------------------------------------------------

PAIRS = [("parity", "odds"), ("always_reject", "parity"), ("odds", "always_reject")]


@given(st.sampled_from(PAIRS), st.integers(1, 10))
def test_separator_never_misclassifies(pair, n):
    a, b = map(bundled_machine, pair)
    (row,) = separate(a, b, [n])
    if row.in_c:
        assert not simulate_membership(a, n)
    else:
        assert not simulate_membership(b, n)


@given(st.sampled_from(["always_accept", "parity", "odds", "mult2", "mod4nz"]),
       st.integers(1, 10))
def test_models_are_one_hot(name, n):
    f = compile_machine(bundled_machine(name), n)
    model = sat_solve(f.formula)
    assume(model is not None)
    for i in range(f.steps + 1):
        assert len(f.snapshot_at(model, i)) == 1
    assert evaluate(f.formula, {a: model.get(a, False) for a in f.atoms})[0]


@given(st.sampled_from(["parity", "odds", "mult2", "mod4nz"]), st.integers(1, 8))
def test_pair_namespaces_disjoint(name, n):
    fa, fb = compile_pair(bundled_machine(name), bundled_machine(name), n)
    assert not fa.atoms & fb.atoms
    assert {a[0] for a in fa.atoms} == {"A"} and {a[0] for a in fb.atoms} == {"B"}
