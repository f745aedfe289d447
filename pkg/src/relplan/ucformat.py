"""Sequence formats: condition registry, prompt/target renderers, vocabulary.

Every prompt and target is a single line of whitespace-separated tokens.
The prompt lists the conversion rules in presentation order, then the
query, then (for calculation-half records) the plan, then a mode tag.
Targets spell out the worked solution step by step and end with the
answer bracketed by <S> and </S>.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError
from .ucgraph import ConversionGraph, ProblemInstance

K_RULE = "R"
K_QUERY = "Q"
K_PLAN = "P"
K_ARROW = ">"
K_COLON = ":"
K_SEMI = ";"
K_MUL = "*"
K_DIV = "/"
K_EQ = "="
K_TAG_PLAN = "#plan"
K_TAG_CALC = "#calc"
K_ANS_OPEN = "<S>"
K_ANS_CLOSE = "</S>"

KEYWORDS = (
    K_RULE, K_QUERY, K_PLAN, K_ARROW, K_COLON, K_SEMI,
    K_MUL, K_DIV, K_EQ, K_TAG_PLAN, K_TAG_CALC, K_ANS_OPEN, K_ANS_CLOSE,
)


class StepStyle(Enum):
    """How much relational context each calculation step carries."""

    NUMERIC_ONLY = "non"
    UNITS_THEN_NUMBERS = "utn"
    NUMBERS_THEN_UNITS = "ntu"
    INTEGRATED = "int"


@dataclass(frozen=True)
class FormatSpec:
    code: str
    step_style: StepStyle | None
    plan_in_prompt: bool = False
    plan_in_target: bool = False
    plan_only: bool = False
    mode_tag: str | None = None

    @property
    def has_plan(self) -> bool:
        return self.plan_in_prompt or self.plan_in_target or self.plan_only

    @property
    def steps_have_units(self) -> bool:
        return self.step_style not in (None, StepStyle.NUMERIC_ONLY)


def _interleaved(style: StepStyle) -> FormatSpec:
    return FormatSpec(code=f"RNRN-{style.value}", step_style=style)


def _plan_then_calc(style: StepStyle) -> FormatSpec:
    return FormatSpec(code=f"RRNN-{style.value}", step_style=style, plan_in_target=True)


def _split_calc(style: StepStyle) -> FormatSpec:
    return FormatSpec(
        code=f"RRxNN-{style.value}",
        step_style=style,
        plan_in_prompt=True,
        mode_tag=K_TAG_CALC,
    )


PLAN_CONDITION = "RRxNN-plan"

CONDITIONS: dict[str, FormatSpec] = {
    "NN": FormatSpec(code="NN", step_style=StepStyle.NUMERIC_ONLY),
    **{s.code: s for s in map(_interleaved, (
        StepStyle.UNITS_THEN_NUMBERS, StepStyle.NUMBERS_THEN_UNITS, StepStyle.INTEGRATED,
    ))},
    **{s.code: s for s in map(_plan_then_calc, StepStyle)},
    **{s.code: s for s in map(_split_calc, StepStyle)},
    PLAN_CONDITION: FormatSpec(
        code=PLAN_CONDITION, step_style=None, plan_only=True, mode_tag=K_TAG_PLAN,
    ),
}

# Codes a dataset may be generated under; the plan-half code only appears on
# records expanded from an RRxNN dataset code.
DATASET_CONDITIONS = tuple(c for c in CONDITIONS if c != PLAN_CONDITION)


def format_for(code: str) -> FormatSpec:
    try:
        return CONDITIONS[code]
    except KeyError:
        raise ConfigError(
            f"unknown condition {code!r}; expected one of {', '.join(CONDITIONS)}",
            field="condition",
        ) from None


def presented_step(graph: ConversionGraph, u: int, v: int) -> tuple[str, int]:
    """Operator and factor for traveling u->v, phrased as the prompt states the rule.

    Travel along the stated direction multiplies by the stated factor;
    travel against it divides by the same stated factor.
    """
    rule = graph.rule_between(u, v)
    pu, pv, pf = graph.presented(rule)
    if (pu, pv) == (u, v):
        return K_MUL, pf
    return K_DIV, pf


def _plan_tokens(problem: ProblemInstance) -> list[str]:
    return [K_PLAN, *problem.plan_labels(), K_SEMI]


def render_prompt(problem: ProblemInstance, spec: FormatSpec) -> str:
    g = problem.graph
    toks: list[str] = []
    for ri in problem.rule_order:
        pu, pv, pf = g.presented(g.rules[ri])
        toks += [K_RULE, g.labels[pu], g.labels[pv], str(pf), K_SEMI]
    toks += [
        K_QUERY, str(problem.source_qty),
        g.labels[problem.source_unit], K_ARROW, g.labels[problem.target_unit], K_COLON,
    ]
    if spec.plan_in_prompt:
        toks += _plan_tokens(problem)
    if spec.mode_tag:
        toks.append(spec.mode_tag)
    return " ".join(toks)


def _step_tokens(style: StepStyle, lu: str, lv: str, a: int, op: str, f: int, c: int) -> list[str]:
    num = [str(a), op, str(f), K_EQ, str(c)]
    if style is StepStyle.NUMERIC_ONLY:
        return [*num, K_SEMI]
    if style is StepStyle.UNITS_THEN_NUMBERS:
        return [lu, K_ARROW, lv, K_COLON, *num, K_SEMI]
    if style is StepStyle.NUMBERS_THEN_UNITS:
        return [*num, K_COLON, lu, K_ARROW, lv, K_SEMI]
    return [str(a), lu, op, str(f), K_EQ, str(c), lv, K_SEMI]


def render_target(problem: ProblemInstance, spec: FormatSpec) -> str:
    if spec.plan_only:
        return " ".join(_plan_tokens(problem))

    g = problem.graph
    p = g.modulus
    toks: list[str] = []
    if spec.plan_in_target:
        toks += _plan_tokens(problem)
    q = problem.source_qty
    for u, v in zip(problem.canonical_plan, problem.canonical_plan[1:]):
        op, f = presented_step(g, u, v)
        c = q * g.directed_factor(u, v) % p
        toks += _step_tokens(spec.step_style, g.labels[u], g.labels[v], q, op, f, c)
        q = c
    toks += [K_ANS_OPEN, str(q), g.labels[problem.target_unit], K_ANS_CLOSE]
    return " ".join(toks)


def render_pair(problem: ProblemInstance, code: str) -> tuple[str, str]:
    """(prompt, target) for one condition code."""
    spec = format_for(code)
    return render_prompt(problem, spec), render_target(problem, spec)


def records_for_condition(problem: ProblemInstance, code: str) -> list[dict]:
    """Dataset records for one problem under one dataset condition code.

    Single record for every condition except the split RRxNN codes, which
    expand into a plan-half record and a calculation-half record.
    """
    spec = format_for(code)
    if spec.plan_in_prompt:
        plan_spec = CONDITIONS[PLAN_CONDITION]
        halves = [(PLAN_CONDITION, plan_spec), (code, spec)]
    else:
        halves = [(code, spec)]
    return [
        {
            "problem_id": problem.problem_id,
            "condition": cond,
            "prompt": render_prompt(problem, s),
            "target": render_target(problem, s),
        }
        for cond, s in halves
    ]


def vocabulary(labels: tuple[str, ...] | list[str], modulus: int) -> list[str]:
    """Every token a prompt or target over these units can contain."""
    return [*KEYWORDS, *labels, *(str(i) for i in range(1, modulus))]
