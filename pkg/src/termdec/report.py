"""JSON reports, the statistics row, and offline re-checking of a report."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema

from .automata import (Complement, MultiIntersection, Module, is_empty,
                       is_semi_deterministic, module_to_buchi, program_to_buchi,
                       quotient, render_automaton, trim)
from .certifier import CertifiedModule, check_certificate
from .driver import TERMINATING, AnalysisResult
from .frontend import parse_cfg, render_cfg
from .linear import LinearTerm
from .logic import Predicate
from .ranker import RankingFunction

REPORT_NAME = "report.json"

_STR_MAP = {"type": "object", "additionalProperties": {"type": "string"}}
_NONNEG = {"type": "number", "minimum": 0}

SCHEMA = {
    "type": "object",
    "required": ["file", "verdict", "reason", "iterations", "lasso", "program",
                 "modules", "times", "counts", "remainder"],
    "additionalProperties": False,
    "properties": {
        "file": {"type": "string"},
        "verdict": {"enum": ["TERMINATING", "UNKNOWN", "BUDGET_EXHAUSTED"]},
        "reason": {"type": "string"},
        "iterations": {"type": "integer", "minimum": 0},
        "lasso": {"type": ["string", "null"]},
        "program": {"type": "string"},
        "remainder": {"type": ["string", "null"]},
        "times": {
            "type": "object",
            "required": ["overall_s", "lasso_analysis_s", "module_construction_s", "inclusion_s"],
            "additionalProperties": False,
            "properties": {k: _NONNEG for k in ("overall_s", "lasso_analysis_s",
                                                 "module_construction_s", "inclusion_s")},
        },
        "counts": {
            "type": "object",
            "required": ["modules_trivial_rf", "modules_nontrivial_rf", "max_module_size"],
            "additionalProperties": False,
            "properties": {k: {"type": "integer", "minimum": 0}
                           for k in ("modules_trivial_rf", "modules_nontrivial_rf",
                                     "max_module_size")},
        },
        "modules": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "trivial", "ranking_function", "num_states",
                             "predicates", "final", "cfg", "certificate"],
                "additionalProperties": False,
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "trivial": {"type": "boolean"},
                    "ranking_function": {
                        "type": "object",
                        "required": ["coefficients", "constant"],
                        "additionalProperties": False,
                        "properties": {"coefficients": _STR_MAP, "constant": {"type": "string"}},
                    },
                    "num_states": {"type": "integer", "minimum": 1},
                    "predicates": _STR_MAP,
                    "final": {"type": "string"},
                    "cfg": {"type": "string"},
                    "certificate": {"type": "object", "additionalProperties": {"type": "array"}},
                },
            },
        },
    },
}


class ReportError(ValueError):
    """A report file is missing, unreadable or not schema-valid."""


@dataclass
class ModuleRecord:
    index: int
    trivial: bool
    ranking_function: dict
    num_states: int
    predicates: dict[str, str]
    final: str
    cfg: str
    certificate: dict[str, list]

    @staticmethod
    def of(index: int, cm: CertifiedModule) -> ModuleRecord:
        f = cm.rank
        locs = cm.module.program.locations
        return ModuleRecord(
            index=index,
            trivial=cm.trivial,
            ranking_function={"coefficients": {v: str(c) for v, c in f.coefficients.items()},
                              "constant": str(f.constant)},
            num_states=len(locs),
            predicates={l: str(cm.cert[l]) for l in locs},
            final=cm.module.final,
            cfg=render_cfg(cm.module.program),
            certificate={l: cm.cert[l].to_json() for l in locs},
        )

    def rank(self) -> RankingFunction:
        rf = self.ranking_function
        return RankingFunction(LinearTerm.of({v: Fraction(c) for v, c in rf["coefficients"].items()},
                                             Fraction(rf["constant"])))

    def certified_module(self) -> CertifiedModule:
        prog = parse_cfg(self.cfg)
        cert = {l: Predicate.from_json(p) for l, p in self.certificate.items()}
        return CertifiedModule(Module(prog, self.final), self.rank(), cert, self.trivial)


@dataclass
class Report:
    file: str
    verdict: str
    reason: str = ""
    iterations: int = 0
    lasso: str | None = None
    program: str = ""
    modules: list[ModuleRecord] = field(default_factory=list)
    times: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    remainder: str | None = None

    @staticmethod
    def from_result(res: AnalysisResult, file: str = "") -> Report:
        st = res.stats
        mods = [ModuleRecord.of(k, em.materialize()) for k, em in enumerate(res.modules)]
        rem = render_automaton(res.remainder) if res.remainder is not None else None
        return Report(
            file=file,
            verdict=res.verdict,
            reason=res.reason,
            iterations=st.iterations,
            lasso=str(res.lasso) if res.lasso is not None else None,
            program=render_cfg(res.program),
            modules=mods,
            times={"overall_s": st.overall, "lasso_analysis_s": st.lasso_analysis,
                   "module_construction_s": st.module_construction,
                   "inclusion_s": st.inclusion},
            counts={"modules_trivial_rf": st.modules_trivial_rf,
                    "modules_nontrivial_rf": st.modules_nontrivial_rf,
                    "max_module_size": st.max_module_size},
            remainder=rem,
        )

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(data: dict) -> Report:
        try:
            jsonschema.validate(data, SCHEMA)
        except jsonschema.ValidationError as e:
            raise ReportError(f"report does not match the schema: {e.message}") from None
        data = dict(data)
        data["modules"] = [ModuleRecord(**m) for m in data["modules"]]
        return Report(**data)

    @staticmethod
    def loads(text: str) -> Report:
        try:
            return Report.from_json(json.loads(text))
        except json.JSONDecodeError as e:
            raise ReportError(f"not JSON: {e}") from None

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        if path.is_dir():
            path = path / REPORT_NAME
        path.write_text(self.dumps())
        return path


def load_report(path: str | Path) -> Report:
    """Read a report file, or the ``report.json`` inside a directory."""
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_NAME
    try:
        text = path.read_text()
    except OSError as e:
        raise ReportError(f"cannot read {path}: {e}") from None
    return Report.loads(text)


STATS_COLUMNS = ("file", "overall", "lasso", "module constr.", "inclusion",
                 "trivial rf", "non-trivial rf", "max size")


def emit_stats_row(r: Report, header: bool = False) -> str:
    """One aligned row in the column order of the usual results table."""
    t, c = r.times, r.counts
    cells = [r.file or "-",
             f"{t['overall_s']:.2f}s", f"{t['lasso_analysis_s']:.2f}s",
             f"{t['module_construction_s']:.2f}s", f"{t['inclusion_s']:.2f}s",
             str(c["modules_trivial_rf"]), str(c["modules_nontrivial_rf"]),
             str(c["max_module_size"])]
    widths = [max(24, len(cells[0]))] + [max(10, len(h)) for h in STATS_COLUMNS[1:]]
    fmt = lambda row: "  ".join(x.ljust(w) if i == 0 else x.rjust(w)
                                for i, (x, w) in enumerate(zip(row, widths)))
    row = fmt(cells)
    return fmt(STATS_COLUMNS) + "\n" + row if header else row


def check_report(r: Report, state_budget: int = 200_000) -> list[str]:
    """Independently re-validate a report; empty means every claim holds.

    Every module certificate is checked from its serialized form.  For a
    TERMINATING verdict the program's traces must also all be covered by the
    module languages.
    """
    out: list[str] = []
    if len(r.modules) != r.counts["modules_trivial_rf"] + r.counts["modules_nontrivial_rf"]:
        out.append("module counts do not add up to the number of modules")
    if sum(m.trivial for m in r.modules) != r.counts["modules_trivial_rf"]:
        out.append("trivial module count does not match the modules")
    cms = []
    for m in r.modules:
        cm = m.certified_module()
        cms.append(cm)
        for p in check_certificate(cm):
            out.append(f"module {m.index}: {p}")
        for loc, text in m.predicates.items():
            if str(cm.cert[loc]) != text:
                out.append(f"module {m.index}: predicate text of {loc} does not match")
    if r.verdict == TERMINATING and not out:
        prog = parse_cfg(r.program)
        rem = quotient(trim(program_to_buchi(prog)))
        for cm in cms:
            b = module_to_buchi(cm.module, prog.alphabet)
            top = 3 if is_semi_deterministic(b) else None
            comp = Complement(b, budget=state_budget, max_rank=top)
            rem = quotient(trim(MultiIntersection(rem, [comp]), state_budget))
        lasso = is_empty(rem)
        if lasso is not None:
            out.append(f"trace {lasso} is not covered by any module")
    return out
