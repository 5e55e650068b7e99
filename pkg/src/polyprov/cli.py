"""Command-line entry point.

Exit status: 0 on success, 1 on a verified negative verdict (script
rejected, formula unsatisfiable, violated pair premise), 2 on usage or
parse errors, 3 when a resource budget runs out.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus, mutations, ne_compiler as nec
from .bounded_translation import classify, parse_bounded, translate_sequent
from .errors import (CoveringViolation, DisjointnessViolation,
                     ResourceBudgetExceeded, WorkbenchError)
from .kernel import ProofScript, check_script, load_script
from .propositional import format_prop, parse_dimacs, simplify, to_cnf
from .sat import DEFAULT_DECISION_BUDGET, Solver

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _out(text: str = ""):
    print(text)


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------

def _resolver_for(path: Path | None):
    def resolve(name: str) -> ProofScript:
        if path is not None:
            local = path.parent / f"{name}.script"
            if local.exists():
                return load_script(local)
        return corpus.load_bundled(name)
    return resolve


def cmd_check(args) -> int:
    ref = Path(args.script)
    if ref.exists():
        script, where = load_script(ref), ref
    elif ref.suffix in ("", ".script") and ref.stem in corpus.bundled_names():
        script, where = corpus.load_bundled(ref.stem), None
    else:
        raise UsageError(f"no such script: {args.script}")
    report = check_script(script, args.witness_shift, resolver=_resolver_for(where))
    _out(report.summary())
    if report.ok and args.verbose:
        for inst in report.ledger_instances:
            _out(f"  hypothesis {inst}")
        for c in report.constraints:
            _out(f"  constraint {c}")
    if report.ok and script.expect is not None and report.ledger != list(script.expect):
        _out(f"ledger mismatch: expected {{{', '.join(script.expect)}}}")
        return EXIT_NEGATIVE
    return EXIT_OK if report.ok else EXIT_NEGATIVE


def cmd_corpus(args) -> int:
    summary = corpus.run_corpus(witness_shift=args.witness_shift)
    for line in summary.lines(timing=args.verbose):
        _out(line)
    ok = summary.ok
    if args.mutations:
        results = mutations.run_suite()
        for r in results:
            if args.verbose or not r.ok:
                _out(r.line())
        good = sum(r.ok for r in results)
        _out(f"mutations: {good}/{len(results)} rejected with a failing step")
        ok = ok and good == len(results)
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_translate(args) -> int:
    phi = parse_bounded(args.formula)
    (prop,) = translate_sequent((), (phi,), args.n)[1]
    prop = simplify(prop)
    if args.format == "tsv":
        _out(f"{args.n}\t{classify(phi)}\t{format_prop(prop)}")
    else:
        _out(f"class: {classify(phi)}")
        _out(f"n = {args.n}: {format_prop(prop)}")
    return EXIT_OK


def cmd_compile(args) -> int:
    spec = nec.resolve_machine(args.machine)
    compiled = nec.compile_machine(spec, args.n, args.namespace, args.budget_atoms)
    cnf = to_cnf(compiled.formula)
    sys.stdout.write(f"c machine {spec.name} n={args.n} steps={compiled.steps} "
                     f"witness={len(compiled.witness_atoms)}\n")
    sys.stdout.write(cnf.to_dimacs())
    return EXIT_OK


def cmd_sat(args) -> int:
    text = sys.stdin.read() if args.file in (None, "-") else Path(args.file).read_text("utf-8")
    try:
        num_vars, clauses, names = parse_dimacs(text)
    except ValueError as e:
        raise UsageError(str(e)) from e
    model = Solver(num_vars, clauses, args.budget_steps).solve()
    if model is None:
        _out("UNSAT")
        return EXIT_NEGATIVE
    _out("SAT")
    if args.verbose:
        true = [names.get(v, str(v)) for v in sorted(model) if model[v]]
        _out("true: " + " ".join(true))
    return EXIT_OK


def _pair(args):
    return nec.resolve_machine(args.first), nec.resolve_machine(args.second)


def _n_values(args) -> range:
    if args.n_range is not None:
        try:
            return nec.parse_range(args.n_range)
        except ValueError as e:
            raise UsageError(str(e)) from e
    if args.n is not None:
        return range(args.n, args.n + 1)
    raise UsageError("give --n or --n-range")


def cmd_separate(args) -> int:
    a, b = _pair(args)
    try:
        rows = nec.separate(a, b, _n_values(args), args.budget_steps)
    except DisjointnessViolation as e:
        _out(f"DisjointnessViolation: {e}")
        return EXIT_NEGATIVE
    if args.format == "tsv":
        _out("n\tsatA\tsatB\tverdict")
        for r in rows:
            _out(r.tsv())
    else:
        for r in rows:
            _out(f"n={r.n}: A {'sat' if r.sat_a else 'unsat'}, "
                 f"B {'sat' if r.sat_b else 'unsat'}, {'in' if r.in_c else 'not in'} C")
    return EXIT_OK


def cmd_select(args) -> int:
    a, b = _pair(args)
    rows = []
    for n in _n_values(args):
        try:
            rows.append((n, nec.select(a, b, n, args.budget_steps)))
        except CoveringViolation as e:
            _out(f"CoveringViolation: {e}")
            return EXIT_NEGATIVE
    if args.format == "tsv":
        _out("n\tindex")
    for n, i in rows:
        _out(f"{n}\t{i}" if args.format == "tsv" else f"n={n}: {i}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget-atoms", type=int, default=nec.DEFAULT_MAX_ATOMS,
                        help="largest atom count a compilation may produce")
    common.add_argument("--budget-steps", type=int, default=DEFAULT_DECISION_BUDGET,
                        help="SAT decision budget")
    common.add_argument("--format", choices=("text", "tsv"), default="text")
    common.add_argument("--verbose", "-v", action="store_true")

    p = _Parser(prog="polyprov", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", parser_class=_Parser)

    c = sub.add_parser("check", parents=[common], help="check one proof script")
    c.add_argument("script", help="script file or bundled script name")
    c.add_argument("--witness-shift", type=int, default=0)
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("corpus", parents=[common], help="check every bundled script")
    c.add_argument("--witness-shift", type=int, default=0)
    c.add_argument("--mutations", action="store_true",
                   help="also run the mutation suite")
    c.set_defaults(func=cmd_corpus)

    c = sub.add_parser("translate", parents=[common],
                       help="propositional translation of a bounded formula")
    c.add_argument("formula")
    c.add_argument("--n", type=int, required=True)
    c.set_defaults(func=cmd_translate)

    c = sub.add_parser("compile-tm", parents=[common],
                       help="compile a machine to DIMACS clauses")
    c.add_argument("machine", help=".tm file or bundled machine name")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--namespace", default="M")
    c.set_defaults(func=cmd_compile)

    c = sub.add_parser("sat", parents=[common], help="solve DIMACS clauses")
    c.add_argument("file", nargs="?", help="DIMACS file; standard input if omitted")
    c.set_defaults(func=cmd_sat)

    for verb, func, helptext in (("pair-separate", cmd_separate, "separator table"),
                                 ("pair-select", cmd_select, "selector indices")):
        c = sub.add_parser(verb, parents=[common], help=helptext)
        c.add_argument("first")
        c.add_argument("second")
        c.add_argument("--n", type=int)
        c.add_argument("--n-range")
        c.set_defaults(func=func)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb is None:
            raise UsageError("a verb is required")
        if getattr(args, "n", None) is not None and args.n < 1 and args.verb != "translate":
            raise UsageError("--n must be at least 1")
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceBudgetExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except WorkbenchError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
