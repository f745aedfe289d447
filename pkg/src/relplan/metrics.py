"""Grading, the six-way accuracy decomposition, and multi-sample voting.

Grades are computed per prediction record and aggregated per condition.
The decomposition pairs two prompt variants: "own" (plain prompt) and
"gt_plan_prompted" (prompt carrying the reference plan), paired by
(model_seed, problem_id, sample_index).
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass

from .errors import DataError
from .ucformat import FormatSpec, format_for
from .ucgraph import ProblemInstance
from .ucparse import (
    FinalAnswer,
    ParsedSolution,
    ParseError,
    extract_final_answer,
    parse_solution,
    validate_plan,
)

OWN = "own"
GT_PLAN_PROMPTED = "gt_plan_prompted"
VARIANTS = (OWN, GT_PLAN_PROMPTED)


class IdMismatch(DataError):
    """Prediction and problem ids disagree."""


class EmptyBatch(DataError):
    pass


class MissingScores(DataError):
    pass


class NegativeScore(DataError):
    pass


class BadK(DataError):
    pass


@dataclass(frozen=True)
class GradeRecord:
    problem_id: str
    condition: str
    variant: str
    answer_correct: bool
    plan_valid: bool | None
    parse_ok: bool
    # Extensions beyond the core schema: sample/seed identity for pairing
    # and seed-level aggregation, plus the extracted answer and verifier
    # score so voting can run off grades directly.
    model_seed: str | None = None
    sample_index: int = 0
    answer_qty: int | None = None
    answer_unit: str | None = None
    score: float | None = None

    def to_obj(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "condition": self.condition,
            "variant": self.variant,
            "answer_correct": self.answer_correct,
            "plan_valid": self.plan_valid,
            "parse_ok": self.parse_ok,
            "model_seed": self.model_seed,
            "sample_index": self.sample_index,
            "answer_qty": self.answer_qty,
            "answer_unit": self.answer_unit,
            "score": self.score,
        }

    @staticmethod
    def from_obj(obj: dict) -> "GradeRecord":
        try:
            return GradeRecord(
                problem_id=str(obj["problem_id"]),
                condition=str(obj["condition"]),
                variant=str(obj["variant"]),
                answer_correct=bool(obj["answer_correct"]),
                plan_valid=obj.get("plan_valid"),
                parse_ok=bool(obj.get("parse_ok", False)),
                model_seed=obj.get("model_seed"),
                sample_index=int(obj.get("sample_index", 0)),
                answer_qty=obj.get("answer_qty"),
                answer_unit=obj.get("answer_unit"),
                score=obj.get("score"),
            )
        except KeyError as exc:
            raise DataError(f"grade record missing field {exc}") from exc


def grade(
    problem: ProblemInstance,
    result: ParsedSolution | ParseError,
    variant: str = OWN,
    *,
    condition: str,
    model_seed: str | None = None,
    sample_index: int = 0,
    score: float | None = None,
    problem_id: str | None = None,
) -> GradeRecord:
    """Grade one parse result against its problem.

    Answer correctness is marker-based (the <S> span of the raw tokens),
    so a malformed step body never flips a correct final answer. Plan
    validity applies only to conditions whose outputs carry units or a
    plan; for those, an unparseable output counts as plan-invalid.
    """
    if problem_id is not None and problem_id != problem.problem_id:
        raise IdMismatch(f"prediction {problem_id!r} graded against {problem.problem_id!r}")
    spec = format_for(condition)
    g = problem.graph

    ans = extract_final_answer(result.tokens, g)
    qty, unit = (ans.qty, ans.unit) if isinstance(ans, FinalAnswer) else (None, None)
    answer_correct = (
        qty == problem.gt_answer and unit == g.labels[problem.target_unit]
    )

    carries_plan = spec.plan_only or spec.plan_in_target or spec.steps_have_units
    plan_valid: bool | None
    if not carries_plan:
        plan_valid = None
    elif isinstance(result, ParseError) or result.plan_units is None:
        plan_valid = False
    else:
        plan_valid = validate_plan(
            result.plan_units, g,
            g.labels[problem.source_unit], g.labels[problem.target_unit],
        )

    return GradeRecord(
        problem_id=problem.problem_id,
        condition=condition,
        variant=variant,
        answer_correct=answer_correct,
        plan_valid=plan_valid,
        parse_ok=isinstance(result, ParsedSolution),
        model_seed=model_seed,
        sample_index=sample_index,
        answer_qty=qty,
        answer_unit=unit,
        score=score,
    )


def grade_output(
    problem: ProblemInstance,
    output: str,
    condition: str,
    variant: str = OWN,
    **kwargs,
) -> GradeRecord:
    """Parse then grade one raw output string."""
    spec = format_for(condition)
    parsed = parse_solution(output, spec, problem.graph)
    return grade(problem, parsed, variant, condition=condition, **kwargs)


# --- six-way decomposition ---------------------------------------------------

@dataclass(frozen=True)
class Frac:
    num: int
    den: int

    @property
    def value(self) -> float | None:
        return self.num / self.den if self.den else None

    def pct(self) -> str:
        return "n/a" if self.den == 0 else f"{100.0 * self.num / self.den:.2f}%"


def _frac(records, predicate) -> Frac:
    hits = sum(1 for r in records if predicate(r))
    return Frac(num=hits, den=len(records))


@dataclass(frozen=True)
class MetricReport:
    """Per-condition accuracy decomposition.

    1. overall_acc                      answer accuracy, plain prompts
    2. acc_given_gt_plan                answer accuracy, plan-carrying prompts
    3. plan_acc                         emitted-plan validity rate
    4. acc_when_plan_correct            (1) restricted to valid own plans
    5. acc_when_plan_incorrect          (1) restricted to invalid own plans
    6. acc_gt_plan_when_own_plan_incorrect
                                        (2) restricted to problems whose
                                        plain-prompt answer used an invalid plan
    """

    condition: str
    overall_acc: Frac
    acc_given_gt_plan: Frac
    plan_acc: Frac
    acc_when_plan_correct: Frac
    acc_when_plan_incorrect: Frac
    acc_gt_plan_when_own_plan_incorrect: Frac
    n_seeds: int = 1
    seed_mean: float | None = None
    seed_std: float | None = None

    def fracs(self) -> tuple[Frac, ...]:
        return (
            self.overall_acc,
            self.acc_given_gt_plan,
            self.plan_acc,
            self.acc_when_plan_correct,
            self.acc_when_plan_incorrect,
            self.acc_gt_plan_when_own_plan_incorrect,
        )


def _pair_key(r: GradeRecord) -> tuple:
    return (r.model_seed, r.problem_id, r.sample_index)


def _report_for(condition: str, records: list[GradeRecord]) -> MetricReport:
    own = [r for r in records if r.variant == OWN]
    gt = [r for r in records if r.variant == GT_PLAN_PROMPTED]

    correct = lambda r: r.answer_correct
    m1 = _frac(own, correct)
    m2 = _frac(gt, correct)
    m3 = _frac([r for r in own if r.plan_valid is not None], lambda r: r.plan_valid)
    m4 = _frac([r for r in own if r.plan_valid is True], correct)
    m5 = _frac([r for r in own if r.plan_valid is False], correct)

    own_by_key = {_pair_key(r): r for r in own}
    m6_pool = [
        r for r in gt
        if (mate := own_by_key.get(_pair_key(r))) is not None and mate.plan_valid is False
    ]
    m6 = _frac(m6_pool, correct)

    by_seed: dict[str | None, list[GradeRecord]] = defaultdict(list)
    for r in own:
        by_seed[r.model_seed].append(r)
    per_seed = [
        f.value for s in sorted(by_seed, key=lambda s: (s is None, str(s)))
        if (f := _frac(by_seed[s], correct)).value is not None
    ]
    n_seeds = len(by_seed)
    seed_mean = sum(per_seed) / len(per_seed) if per_seed else None
    seed_std = (
        math.sqrt(sum((x - seed_mean) ** 2 for x in per_seed) / (len(per_seed) - 1))
        if len(per_seed) >= 2
        else None
    )
    return MetricReport(
        condition=condition,
        overall_acc=m1,
        acc_given_gt_plan=m2,
        plan_acc=m3,
        acc_when_plan_correct=m4,
        acc_when_plan_incorrect=m5,
        acc_gt_plan_when_own_plan_incorrect=m6,
        n_seeds=n_seeds,
        seed_mean=seed_mean,
        seed_std=seed_std,
    )


def compute_metrics(grades: list[GradeRecord]) -> dict[str, MetricReport]:
    """Per-condition reports, conditions in sorted order."""
    by_cond: dict[str, list[GradeRecord]] = defaultdict(list)
    for r in grades:
        by_cond[r.condition].append(r)
    return {c: _report_for(c, by_cond[c]) for c in sorted(by_cond)}


_METRIC_COLS = [f"metric_{i}" for i in range(1, 7)]


def reports_to_csv(reports: dict[str, MetricReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["condition"]
    for m in _METRIC_COLS:
        header += [f"{m}_num", f"{m}_den", f"{m}_frac"]
    header += ["n_seeds", "mean", "std"]
    w.writerow(header)
    for cond in sorted(reports):
        rep = reports[cond]
        row: list = [cond]
        for f in rep.fracs():
            row += [f.num, f.den, "" if f.value is None else f"{f.value:.6f}"]
        row += [
            rep.n_seeds,
            "" if rep.seed_mean is None else f"{rep.seed_mean:.6f}",
            "" if rep.seed_std is None else f"{rep.seed_std:.6f}",
        ]
        w.writerow(row)
    return buf.getvalue()


_METRIC_LABELS = [
    "overall acc",
    "acc | gt plan",
    "plan validity",
    "acc | plan ok",
    "acc | plan bad",
    "gt-plan acc | plan bad",
]


def reports_to_table(reports: dict[str, MetricReport]) -> str:
    lines = []
    name_w = max([len("condition"), *(len(c) for c in reports)] or [9])
    header = "condition".ljust(name_w) + "".join(
        f"  {lab:>22}" for lab in _METRIC_LABELS
    ) + f"  {'seeds':>5}  {'mean':>8}  {'std':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for cond in sorted(reports):
        rep = reports[cond]
        cells = "".join(
            f"  {f.pct() + f' ({f.num}/{f.den})':>22}" for f in rep.fracs()
        )
        mean = "" if rep.seed_mean is None else f"{rep.seed_mean:.4f}"
        std = "" if rep.seed_std is None else f"{rep.seed_std:.4f}"
        lines.append(
            cond.ljust(name_w) + cells + f"  {rep.n_seeds:>5}  {mean:>8}  {std:>8}"
        )
    return "\n".join(lines) + "\n"


# --- voting ------------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    sample_index: int
    qty: int
    unit: str
    score: float | None = None

    @property
    def answer(self) -> tuple[int, str]:
        return (self.qty, self.unit)


@dataclass(frozen=True)
class VoteBatch:
    problem_id: str
    candidates: tuple[Candidate, ...]

    def __post_init__(self):
        if not self.candidates:
            raise EmptyBatch(f"no candidates for {self.problem_id}")


def _require_scores(batch: VoteBatch) -> None:
    if any(c.score is None for c in batch.candidates):
        raise MissingScores(f"unscored candidates in {batch.problem_id}")


def _plurality_over(cands) -> tuple[int, str]:
    counts = Counter(c.answer for c in cands)
    best = max(counts.values())
    return min(a for a, n in counts.items() if n == best)


def plurality(batch: VoteBatch) -> tuple[int, str]:
    """Most frequent answer; ties go to the smallest (qty, unit)."""
    return _plurality_over(batch.candidates)


def verifier_rerank(batch: VoteBatch) -> tuple[int, str]:
    """Answer of the highest-scoring candidate; ties to lowest sample index."""
    _require_scores(batch)
    return min(batch.candidates, key=lambda c: (-c.score, c.sample_index)).answer


def weighted_plurality(batch: VoteBatch) -> tuple[int, str]:
    """Answer with the largest score mass; ties as in plurality."""
    _require_scores(batch)
    if any(c.score < 0 for c in batch.candidates):
        raise NegativeScore(f"negative score in {batch.problem_id}")
    mass: dict[tuple[int, str], float] = defaultdict(float)
    for c in batch.candidates:
        mass[c.answer] += c.score
    best = max(mass.values())
    return min(a for a, m in mass.items() if m == best)


def top_k_vote(batch: VoteBatch, k: int) -> tuple[int, str]:
    """Plurality among the K highest-scoring candidates."""
    if not 1 <= k <= len(batch.candidates):
        raise BadK(f"K={k} outside [1, {len(batch.candidates)}]")
    _require_scores(batch)
    ranked = sorted(batch.candidates, key=lambda c: (-c.score, c.sample_index))
    return _plurality_over(ranked[:k])


VOTE_METHODS = {
    "plurality": lambda batch, k: plurality(batch),
    "verifier_rerank": lambda batch, k: verifier_rerank(batch),
    "weighted_plurality": lambda batch, k: weighted_plurality(batch),
    "top_k": top_k_vote,
}


def batches_from_grades(grades: list[GradeRecord]) -> dict[tuple, VoteBatch]:
    """Group extracted answers into per-problem vote batches.

    Records whose answer span failed to extract cannot vote and are
    dropped; a problem with no votable sample yields no batch. Grouping
    keys include condition, variant, and model seed so distinct runs
    never pool.
    """
    groups: dict[tuple, list[Candidate]] = defaultdict(list)
    for r in grades:
        if r.answer_qty is None or r.answer_unit is None:
            continue
        key = (r.condition, r.variant, r.model_seed, r.problem_id)
        groups[key].append(
            Candidate(
                sample_index=r.sample_index,
                qty=r.answer_qty,
                unit=r.answer_unit,
                score=r.score,
            )
        )
    return {
        key: VoteBatch(
            problem_id=key[3],
            candidates=tuple(sorted(cands, key=lambda c: c.sample_index)),
        )
        for key, cands in groups.items()
    }


def vote_decisions(
    grades: list[GradeRecord], method: str, k: int | None = None
) -> list[dict]:
    """One decision object per batch, in deterministic key order."""
    try:
        fn = VOTE_METHODS[method]
    except KeyError:
        raise DataError(
            f"unknown voting method {method!r}; expected one of {', '.join(VOTE_METHODS)}"
        ) from None
    if method == "top_k" and k is None:
        raise BadK("top_k requires K")
    batches = batches_from_grades(grades)
    out = []
    for key in sorted(batches, key=lambda t: tuple(map(str, t))):
        qty, unit = fn(batches[key], k)
        obj = {"problem_id": key[3], "method": method}
        if method == "top_k":
            obj["K"] = k
        obj.update({"chosen_qty": qty, "chosen_unit": unit})
        out.append(obj)
    return out


def decisions_to_jsonl(decisions: list[dict]) -> str:
    return "".join(json.dumps(d, separators=(",", ":")) + "\n" for d in decisions)
