"""Bundled proof scripts and batch verification.

Each entry groups one derivation with its variants (operator strength or
relativizer swapped).  Every script header carries an ``expect`` line
with the hypothesis schemes it is supposed to depend on; a run passes
only when the reported ledger equals that set exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources

from .errors import CorpusError, ParseError, ScriptError
from .kernel import CheckReport, ProofScript, check_script, parse_script

DATA_PACKAGE = "polyprov.corpus_data"

# (id, description, script names); the first script is the primary variant
ENTRIES: list[tuple[str, str, list[str]]] = [
    ("a", "unprovability lemma for relativized boxes",
     ["lemma20", "lemma20_disj"]),
    ("b", "disjunction lemma inside the logic, four operator variants",
     ["inner_black_rel", "inner_tri_rel", "inner_black", "inner_tri"]),
    ("c", "disjunction and interpolation cases, modal tail",
     ["case1", "case2"]),
    ("d", "algorithmic .3 property by substitution and deduction",
     ["case4"]),
    ("e", "exchange lemma under the algorithmic .3 property",
     ["lemma26"]),
    ("f", "transfer of the .3 property along a simulation",
     ["thm27"]),
    ("g", "algorithmic .2 property of a normal system",
     ["lemma31"]),
    ("h", "selector formula for a covering pair",
     ["prop41"]),
]


@dataclass
class CorpusEntry:
    id: str
    description: str
    scripts: list[ProofScript]

    @property
    def anchor(self) -> str:
        return self.scripts[0].anchor

    @property
    def expected_ledger(self) -> list[str]:
        return list(self.scripts[0].expect or [])


@dataclass
class ScriptResult:
    entry: str
    script: str
    expected: list[str]
    report: CheckReport
    seconds: float

    @property
    def ok(self) -> bool:
        return self.report.ok and self.report.ledger == self.expected

    def line(self) -> str:
        r = self.report
        if not r.ok:
            return (f"[{self.entry}] {self.script}: FAILED at step {r.failed_step} "
                    f"({r.error}: {r.reason})")
        status = "ok" if self.ok else "LEDGER MISMATCH"
        return (f"[{self.entry}] {self.script}: {status}; {r.steps} steps "
                f"({r.numbered_steps} numbered, {r.auxiliary_steps} auxiliary); "
                f"ledger = {{{', '.join(r.ledger)}}}"
                + ("" if self.ok else f", expected {{{', '.join(self.expected)}}}"))


@dataclass
class CorpusSummary:
    results: list[ScriptResult] = field(default_factory=list)
    entries: int = 0
    seconds: float = 0.0
    aborted: str | None = None

    @property
    def ok(self) -> bool:
        return self.aborted is None and all(r.ok for r in self.results)

    @property
    def passed_entries(self) -> int:
        by_entry: dict[str, bool] = {}
        for r in self.results:
            by_entry[r.entry] = by_entry.get(r.entry, True) and r.ok
        return sum(by_entry.values())

    def lines(self, timing: bool = False) -> list[str]:
        out = [r.line() for r in self.results]
        took = f", {self.seconds:.2f}s" if timing else ""
        out.append(f"{self.passed_entries}/{self.entries} entries ok "
                   f"({len(self.results)} scripts{took})")
        if self.aborted:
            out.append(f"aborted: {self.aborted}")
        return out


def bundled_names() -> list[str]:
    return [n for _, _, names in ENTRIES for n in names]


def script_text(name: str) -> str:
    try:
        return resources.files(DATA_PACKAGE).joinpath(f"{name}.script").read_text("utf-8")
    except (FileNotFoundError, OSError) as e:
        raise CorpusError(f"bundled script {name!r} is missing") from e


def load_bundled(name: str) -> ProofScript:
    """Parse one bundled script; also serves as the lemma resolver."""
    text = script_text(name)
    try:
        script = parse_script(text, source=f"{name}.script")
    except (ParseError, ScriptError) as e:
        raise CorpusError(f"bundled script {name!r} does not parse: {e}") from e
    if script.name != name:
        raise CorpusError(f"bundled script {name!r} declares name {script.name!r}")
    if script.expect is None:
        raise CorpusError(f"bundled script {name!r} has no expect line")
    return script


def load_corpus() -> list[CorpusEntry]:
    return [CorpusEntry(eid, desc, [load_bundled(n) for n in names])
            for eid, desc, names in ENTRIES]


def run_corpus(entries: list[CorpusEntry] | None = None,
               witness_shift: int = 0) -> CorpusSummary:
    """Check every script; stops at the first failure."""
    if entries is None:
        entries = load_corpus()
    summary = CorpusSummary(entries=len(entries))
    cache: dict = {}
    start = time.perf_counter()
    for entry in entries:
        for script in entry.scripts:
            t0 = time.perf_counter()
            report = check_script(script, witness_shift, resolver=load_bundled, cache=cache)
            res = ScriptResult(entry.id, script.name, list(script.expect or []), report,
                               time.perf_counter() - t0)
            summary.results.append(res)
            if not res.ok:
                where = report.failed_step if not report.ok else "ledger"
                summary.aborted = f"entry {entry.id} ({script.name}) at {where}"
                summary.seconds = time.perf_counter() - start
                return summary
    summary.seconds = time.perf_counter() - start
    return summary
