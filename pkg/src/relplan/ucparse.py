"""Parsing and structural validation of model-emitted solution sequences.

Parsing is total: every input maps to exactly one ParsedSolution or
ParseError. Final-answer extraction is deliberately separate from the
structural parse so that a readable answer span is graded even when the
step body is malformed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .modmath import mod_inv
from .ucformat import (
    FormatSpec,
    K_ANS_CLOSE,
    K_ANS_OPEN,
    K_ARROW,
    K_COLON,
    K_DIV,
    K_EQ,
    K_MUL,
    K_PLAN,
    K_SEMI,
    KEYWORDS,
    StepStyle,
)
from .ucgraph import ConversionGraph

# ParseError kinds; exhaustive.
MISSING_ANSWER_MARKERS = "MissingAnswerMarkers"
MALFORMED_STEP = "MalformedStep"
UNKNOWN_UNIT = "UnknownUnit"
OUT_OF_RANGE_NUMBER = "OutOfRangeNumber"
MALFORMED_PLAN = "MalformedPlan"
TRAILING_GARBAGE = "TrailingGarbage"


@dataclass(frozen=True)
class Step:
    lhs: int
    op: str
    rhs: int
    result: int
    src_unit: str | None = None
    dst_unit: str | None = None


@dataclass(frozen=True)
class ParsedSolution:
    tokens: tuple[str, ...]
    plan_units: tuple[str, ...] | None
    steps: tuple[Step, ...]
    final_qty: int | None
    final_unit: str | None


@dataclass(frozen=True)
class ParseError:
    tokens: tuple[str, ...]
    kind: str
    position: int
    message: str


@dataclass(frozen=True)
class FinalAnswer:
    qty: int
    unit: str


@dataclass(frozen=True)
class StepReport:
    arith_ok: bool
    traversal_ok: bool
    chain_ok: bool


def tokenize(text: str | list[str] | tuple[str, ...]) -> tuple[str, ...]:
    if isinstance(text, str):
        return tuple(text.split())
    return tuple(text)


def extract_final_answer(
    text: str | list[str] | tuple[str, ...], graph: ConversionGraph
) -> FinalAnswer | ParseError:
    """The (quantity, unit) bracketed by the first <S> … </S> span.

    Exactly two tokens must sit between the markers; the quantity must be
    an integer in [1, p-1] and the unit a label of this graph.
    """
    toks = tokenize(text)
    try:
        i = toks.index(K_ANS_OPEN)
    except ValueError:
        return ParseError(toks, MISSING_ANSWER_MARKERS, len(toks), "no <S> marker")
    try:
        j = toks.index(K_ANS_CLOSE, i + 1)
    except ValueError:
        return ParseError(toks, MISSING_ANSWER_MARKERS, i, "unclosed <S> span")
    if j - i != 3:
        return ParseError(
            toks, MISSING_ANSWER_MARKERS, i,
            f"expected exactly 2 tokens inside <S> span, got {j - i - 1}",
        )
    qty_tok, unit_tok = toks[i + 1], toks[i + 2]
    if not qty_tok.isdigit() or not 1 <= int(qty_tok) <= graph.modulus - 1:
        return ParseError(
            toks, OUT_OF_RANGE_NUMBER, i + 1,
            f"quantity {qty_tok!r} not in [1, {graph.modulus - 1}]",
        )
    if unit_tok not in graph.label_index:
        return ParseError(toks, UNKNOWN_UNIT, i + 2, f"unknown unit {unit_tok!r}")
    return FinalAnswer(qty=int(qty_tok), unit=unit_tok)


class _Cursor:
    """Token stream with typed single-token consumers that raise _Halt."""

    def __init__(self, toks: tuple[str, ...], graph: ConversionGraph):
        self.toks = toks
        self.graph = graph
        self.pos = 0

    def peek(self) -> str | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def halt(self, kind: str, message: str) -> "_Halt":
        return _Halt(ParseError(self.toks, kind, self.pos, message))

    def literal(self, expected: str, kind: str = MALFORMED_STEP) -> None:
        tok = self.peek()
        if tok != expected:
            raise self.halt(kind, f"expected {expected!r}, got {tok!r}")
        self.pos += 1

    def number(self) -> int:
        tok = self.peek()
        if tok is None or not tok.isdigit():
            raise self.halt(MALFORMED_STEP, f"expected number, got {tok!r}")
        val = int(tok)
        if not 1 <= val <= self.graph.modulus - 1:
            raise self.halt(
                OUT_OF_RANGE_NUMBER, f"{val} not in [1, {self.graph.modulus - 1}]"
            )
        self.pos += 1
        return val

    def operator(self) -> str:
        tok = self.peek()
        if tok not in (K_MUL, K_DIV):
            raise self.halt(MALFORMED_STEP, f"expected * or /, got {tok!r}")
        self.pos += 1
        return tok

    def unit(self, kind: str = MALFORMED_STEP) -> str:
        tok = self.peek()
        if tok is None or tok in KEYWORDS or tok.isdigit():
            raise self.halt(kind, f"expected unit label, got {tok!r}")
        if tok not in self.graph.label_index:
            raise self.halt(UNKNOWN_UNIT, f"unknown unit {tok!r}")
        self.pos += 1
        return tok


class _Halt(Exception):
    def __init__(self, error: ParseError):
        self.error = error


def _parse_plan(cur: _Cursor) -> tuple[str, ...]:
    cur.literal(K_PLAN, kind=MALFORMED_PLAN)
    units: list[str] = []
    while cur.peek() is not None and cur.peek() != K_SEMI:
        units.append(cur.unit(kind=MALFORMED_PLAN))
    cur.literal(K_SEMI, kind=MALFORMED_PLAN)
    if not units:
        raise _Halt(
            ParseError(cur.toks, MALFORMED_PLAN, cur.pos, "empty plan")
        )
    return tuple(units)


def _parse_step(cur: _Cursor, style: StepStyle) -> Step:
    src = dst = None
    if style is StepStyle.UNITS_THEN_NUMBERS:
        src = cur.unit()
        cur.literal(K_ARROW)
        dst = cur.unit()
        cur.literal(K_COLON)
        lhs, op, rhs = cur.number(), cur.operator(), cur.number()
        cur.literal(K_EQ)
        result = cur.number()
        cur.literal(K_SEMI)
    elif style is StepStyle.NUMBERS_THEN_UNITS:
        lhs, op, rhs = cur.number(), cur.operator(), cur.number()
        cur.literal(K_EQ)
        result = cur.number()
        cur.literal(K_COLON)
        src = cur.unit()
        cur.literal(K_ARROW)
        dst = cur.unit()
        cur.literal(K_SEMI)
    elif style is StepStyle.INTEGRATED:
        lhs = cur.number()
        src = cur.unit()
        op, rhs = cur.operator(), cur.number()
        cur.literal(K_EQ)
        result = cur.number()
        dst = cur.unit()
        cur.literal(K_SEMI)
    else:
        lhs, op, rhs = cur.number(), cur.operator(), cur.number()
        cur.literal(K_EQ)
        result = cur.number()
        cur.literal(K_SEMI)
    return Step(lhs=lhs, op=op, rhs=rhs, result=result, src_unit=src, dst_unit=dst)


def _implied_plan(steps: tuple[Step, ...]) -> tuple[str, ...] | None:
    """Unit walk read off step units, or None when steps don't chain."""
    if not steps or steps[0].src_unit is None:
        return None
    units = [steps[0].src_unit]
    for prev, cur in zip(steps, steps[1:]):
        if cur.src_unit != prev.dst_unit:
            return None
        units.append(prev.dst_unit)
    units.append(steps[-1].dst_unit)
    return tuple(units)


def parse_solution(
    text: str | list[str] | tuple[str, ...],
    spec: FormatSpec,
    graph: ConversionGraph,
) -> ParsedSolution | ParseError:
    """Structural parse of one emitted sequence against one format.

    Never raises on input content; the result is a ParsedSolution exactly
    when the whole body (and, for calculation formats, the answer span)
    matches the format's grammar with no trailing tokens.
    """
    toks = tokenize(text)
    cur = _Cursor(toks, graph)
    try:
        if spec.plan_only:
            plan = _parse_plan(cur)
            if cur.peek() is not None:
                raise cur.halt(TRAILING_GARBAGE, f"unexpected {cur.peek()!r} after plan")
            return ParsedSolution(
                tokens=toks, plan_units=plan, steps=(), final_qty=None, final_unit=None
            )

        plan = _parse_plan(cur) if spec.plan_in_target else None
        steps: list[Step] = []
        while cur.peek() is not None and cur.peek() != K_ANS_OPEN:
            steps.append(_parse_step(cur, spec.step_style))
        if cur.peek() is None:
            raise cur.halt(MISSING_ANSWER_MARKERS, "no <S> marker")
        cur.literal(K_ANS_OPEN, kind=MISSING_ANSWER_MARKERS)
        qty = cur.number()
        unit = cur.unit()
        cur.literal(K_ANS_CLOSE, kind=MISSING_ANSWER_MARKERS)
        if cur.peek() is not None:
            raise cur.halt(TRAILING_GARBAGE, f"unexpected {cur.peek()!r} after </S>")
        all_steps = tuple(steps)
        return ParsedSolution(
            tokens=toks,
            plan_units=plan if plan is not None else _implied_plan(all_steps),
            steps=all_steps,
            final_qty=qty,
            final_unit=unit,
        )
    except _Halt as halt:
        return halt.error


def validate_plan(
    plan_units: tuple[str, ...] | list[str],
    graph: ConversionGraph,
    source: str,
    target: str,
) -> bool:
    """True iff the plan is a walk over existing edges from source to target.

    Revisits are allowed and the length is unconstrained; numeric content
    plays no part.
    """
    if not plan_units:
        return False
    idx = graph.label_index
    if any(u not in idx for u in plan_units):
        return False
    if plan_units[0] != source or plan_units[-1] != target:
        return False
    return all(
        graph.rule_between(idx[u], idx[v]) is not None
        for u, v in zip(plan_units, plan_units[1:])
    )


def verify_steps(
    parsed: ParsedSolution, graph: ConversionGraph, source_qty: int
) -> StepReport:
    """Arithmetic, edge-traversal, and chaining checks over parsed steps."""
    p = graph.modulus
    idx = graph.label_index

    arith_ok = True
    traversal_ok = True
    for st in parsed.steps:
        expected = st.lhs * (st.rhs if st.op == K_MUL else mod_inv(st.rhs, p)) % p
        if expected != st.result:
            arith_ok = False
        if st.src_unit is not None:
            u, v = idx.get(st.src_unit), idx.get(st.dst_unit)
            rule = None if u is None or v is None else graph.rule_between(u, v)
            if rule is None:
                traversal_ok = False
            elif st.op == K_MUL:
                traversal_ok &= st.rhs == graph.directed_factor(u, v)
            else:
                traversal_ok &= st.rhs == graph.directed_factor(v, u)

    chain_ok = True
    if parsed.steps:
        chain_ok &= parsed.steps[0].lhs == source_qty
        chain_ok &= all(
            nxt.lhs == prev.result for prev, nxt in zip(parsed.steps, parsed.steps[1:])
        )
        if parsed.final_qty is not None:
            chain_ok &= parsed.final_qty == parsed.steps[-1].result
    elif parsed.final_qty is not None:
        chain_ok = parsed.final_qty == source_qty
    return StepReport(arith_ok=arith_ok, traversal_ok=bool(traversal_ok), chain_ok=bool(chain_ok))
