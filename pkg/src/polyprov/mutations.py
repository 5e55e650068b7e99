"""Single-token mutations of the bundled scripts.

The suite is generated deterministically from the numbered steps of
every corpus script.  Three kinds are produced per step when they apply:

* ``index``: the first box index in the conclusion is raised by one;
* ``drop``: the first premise reference is removed from the rule;
* ``swap``: antecedent and succedent of the conclusion trade places.

Steps whose conclusion is symmetric, or whose rule is ``id`` or
``proptaut``, get no swap.  Lemma and hypothesis imports take bindings
instead of premises and get no drop.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import bundled_names, load_bundled, script_text
from .errors import WorkbenchError
from .kernel import check_script, parse_script

KINDS = ("index", "drop", "swap")

_NUMBERED = re.compile(r"^([0-9]+)\.\s")
_BOX_INDEX = re.compile(r"[\^#](max\([^)]*\)\+\d+|[A-Za-z0-9]+(?:\+\d+)?)")
_NO_PREMISES = ("hyp", "hyp-unify", "lemma", "lemma-unify")
_NO_SWAP = ("id", "proptaut")


@dataclass(frozen=True)
class Mutation:
    script: str
    label: str
    kind: str
    old: str
    new: str
    line: int
    text: str

    def describe(self) -> str:
        return f"{self.script} step {self.label} {self.kind}: {self.old!r} -> {self.new!r}"


@dataclass
class MutationResult:
    mutation: Mutation
    rejected: bool
    failed_step: str | None
    error: str

    @property
    def ok(self) -> bool:
        """Rejected with a named failing step."""
        return self.rejected and bool(self.failed_step)

    def line(self) -> str:
        verdict = (f"rejected at {self.failed_step} ({self.error})" if self.rejected
                   else "ACCEPTED")
        return f"{self.mutation.describe()}: {verdict}"


def _bump(token: str) -> str:
    if "+" in token:
        base, k = token.rsplit("+", 1)
        return f"{base}+{int(k) + 1}"
    return token + "+1"


def _step_mutations(name: str, lines: list[str], i: int) -> list[Mutation]:
    raw = lines[i]
    m = _NUMBERED.match(raw)
    if not m:
        return []
    seq_part, sep, rule = raw.rpartition(";")
    if not sep:
        return []
    label = m.group(1)
    toks = rule.split()
    out: list[tuple[str, str, str, str]] = []
    bm = _BOX_INDEX.search(seq_part)
    if bm:
        new = _bump(bm.group(1))
        out.append(("index", bm.group(1), new,
                    raw[:bm.start(1)] + new + raw[bm.end(1):]))
    if len(toks) >= 2 and toks[0] not in _NO_PREMISES:
        out.append(("drop", toks[1], "",
                    f"{seq_part}; {' '.join([toks[0]] + toks[2:])}"))
    if toks and toks[0] not in _NO_SWAP:
        body = seq_part.split(". ", 1)[1]
        left, _, right = body.partition("|-")
        if left.strip() != right.strip():
            out.append(("swap", "|-", "|-",
                        f"{label}. {right.strip()} |- {left.strip()} ;{rule}"))
    muts = []
    for kind, old, new, new_line in out:
        text = "\n".join(lines[:i] + [new_line] + lines[i + 1:])
        muts.append(Mutation(name, label, kind, old, new, i + 1, text))
    return muts


def generate(scripts: list[str] | None = None) -> list[Mutation]:
    """All suite mutations, in corpus order."""
    if scripts is None:
        scripts = bundled_names()
    muts: list[Mutation] = []
    for name in scripts:
        lines = script_text(name).split("\n")
        for i in range(len(lines)):
            muts.extend(_step_mutations(name, lines, i))
    return muts


def run_mutation(mut: Mutation, cache: dict | None = None) -> MutationResult:
    try:
        script = parse_script(mut.text, source=f"{mut.script}.script")
        report = check_script(script, resolver=load_bundled, cache=cache)
    except WorkbenchError as e:
        return MutationResult(mut, True, None, type(e).__name__)
    if report.ok:
        return MutationResult(mut, False, None, "")
    return MutationResult(mut, True, report.failed_step, report.error or "")


def run_suite(scripts: list[str] | None = None) -> list[MutationResult]:
    return [run_mutation(m) for m in generate(scripts)]
