import itertools

import pytest

from polyprov.errors import PartialAssignment, ResourceBudgetExceeded
from polyprov.propositional import (FALSE, TRUE, PAtom, PNot, PQuant, evaluate, format_prop,
                                    is_tautology, p_and, p_imp, p_or, parse_dimacs, sat_solve,
                                    simplify, size, to_cnf)
from polyprov.sat import solve_clauses

a, b, c = PAtom("a"), PAtom("b"), PAtom("c")


def brute_sat(num_vars, clauses):
    for bits in itertools.product((False, True), repeat=num_vars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in cl) for cl in clauses):
            return True
    return False


def test_evaluate_constants_and_atoms():
    assert evaluate(TRUE, {})[0] is True
    v, _ = evaluate(p_or(PAtom(("P", 0)), PAtom(("P", 1))), {("P", 0): False, ("P", 1): False})
    assert v is False


def test_trace_has_one_entry_per_subformula():
    phi = p_and(p_or(a, PNot(b)), p_imp(c, a))
    _, trace = evaluate(phi, {"a": True, "b": False, "c": True})
    assert len(trace) == size(phi) == 9
    assert trace[0] == (phi, True)


def test_partial_assignment():
    with pytest.raises(PartialAssignment):
        evaluate(p_and(a, b), {"a": True})


def test_quantified_block():
    phi = PQuant(frozenset({"b"}), p_and(p_or(a, b), p_or(PNot(a), PNot(b))))
    assert evaluate(phi, {"a": True})[0] is True
    assert evaluate(PQuant(frozenset({"b"}), p_and(b, PNot(b))), {})[0] is False


def test_sat_unsat():
    assert sat_solve(p_and(a, PNot(a))) is None
    model = sat_solve(p_and(p_or(a, b), PNot(a)))
    assert model == {"a": False, "b": True}


def test_tautology():
    assert is_tautology(p_or(a, PNot(a)))
    assert not is_tautology(p_or(a, b))
    assert is_tautology(p_imp(p_and(a, b), a))


def test_simplify():
    assert simplify(p_and(TRUE, a)) == a
    assert simplify(p_or(FALSE, p_and(a, FALSE))) == FALSE
    assert simplify(PNot(PNot(a))) == a


def test_cnf_round_trip_through_dimacs():
    phi = p_and(p_or(a, b), p_or(PNot(a), c), PNot(b))
    cnf = to_cnf(phi)
    n, clauses, names = parse_dimacs(cnf.to_dimacs())
    assert n == cnf.num_vars and clauses == cnf.clauses
    assert set(names.values()) == {"'a'", "'b'", "'c'"}


def test_models_re_evaluate_true():
    phi = p_and(p_or(a, b, c), p_or(PNot(a), PNot(b)), p_imp(c, a))
    model = sat_solve(phi)
    assert evaluate(phi, model)[0] is True


def test_budget():
    # pigeonhole 5 into 4 needs many decisions
    var = {(i, j): i * 4 + j + 1 for i in range(5) for j in range(4)}
    clauses = [[var[i, j] for j in range(4)] for i in range(5)]
    clauses += [[-var[i, j], -var[k, j]] for j in range(4)
                for i, k in itertools.combinations(range(5), 2)]
    with pytest.raises(ResourceBudgetExceeded):
        solve_clauses(20, clauses, budget=3)
    assert solve_clauses(20, clauses) is None


def test_dpll_against_brute_force():
    import random
    rng = random.Random(7)
    for _ in range(300):
        n = rng.randint(1, 8)
        clauses = [[rng.choice((1, -1)) * rng.randint(1, n) for _ in range(rng.randint(1, 3))]
                   for _ in range(rng.randint(1, 14))]
        model = solve_clauses(n, clauses)
        assert (model is not None) == brute_sat(n, clauses)
        if model is not None:
            assert all(any(model[abs(l)] == (l > 0) for l in cl) for cl in clauses)


def test_format():
    assert format_prop(p_or(PAtom(("P", 0)), PNot(PAtom(("P", 1))))) == "(P[0] | -P[1])"
