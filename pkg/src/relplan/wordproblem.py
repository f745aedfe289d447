"""Word-problem solution composer, expression calculator, answer extraction.

Records carry per-step annotations (equation plus optional prose,
intermediate question, and relation lines). Composition rebuilds solution
text in a chosen layout; the calculator evaluates the <<expr=value>>
inline annotations with exact rational arithmetic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal, localcontext
from enum import Enum
from fractions import Fraction

from .errors import DataError

ANSWER_MARKER = "####"
TAG_PLAN = "#plan"
TAG_CALC = "#calc"


class ExprSyntaxError(DataError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class DivisionByZero(DataError):
    pass


class MissingAnnotation(DataError):
    def __init__(self, kind: str, step_index: int):
        super().__init__(f"step {step_index} lacks a {kind} annotation")
        self.kind = kind
        self.step_index = step_index


class NoAnswerMarker(DataError):
    pass


class UnparseableNumber(DataError):
    pass


class WpFormat(Enum):
    ANSWER_ONLY = "AnswerOnly"
    ORIGINAL = "Original"
    EQUATION_ONLY = "EquationOnly"
    SOCRATIC_AUX_FIRST = "SocraticEqnAuxFirst"
    SOCRATIC_INTERLEAVED = "SocraticEqnInterleaved"
    RELATION_AUX_FIRST = "RelationEqnAuxFirst"
    RELATION_INTERLEAVED = "RelationEqnInterleaved"
    RELATION_MULTITASK_PLAN = "RelationMultitaskPlan"
    RELATION_MULTITASK_CALC = "RelationMultitaskCalc"


_AUX_FIELD = {
    WpFormat.SOCRATIC_AUX_FIRST: "socratic",
    WpFormat.SOCRATIC_INTERLEAVED: "socratic",
    WpFormat.RELATION_AUX_FIRST: "relation",
    WpFormat.RELATION_INTERLEAVED: "relation",
    WpFormat.RELATION_MULTITASK_PLAN: "relation",
}

_MODE_TAG = {
    WpFormat.RELATION_MULTITASK_PLAN: TAG_PLAN,
    WpFormat.RELATION_MULTITASK_CALC: TAG_CALC,
}


@dataclass(frozen=True)
class StepAnnotation:
    equation: str
    socratic: str | None = None
    relation: str | None = None
    prose: str | None = None


@dataclass(frozen=True)
class AnnotatedProblem:
    question: str
    steps: tuple[StepAnnotation, ...]
    final_answer: str
    record_id: str | None = None

    @staticmethod
    def from_obj(obj: dict) -> "AnnotatedProblem":
        try:
            steps = tuple(
                StepAnnotation(
                    equation=str(s["equation"]),
                    socratic=s.get("socratic"),
                    relation=s.get("relation"),
                    prose=s.get("prose"),
                )
                for s in obj["steps"]
            )
            if not steps:
                raise DataError("record has no steps")
            return AnnotatedProblem(
                question=str(obj["question"]),
                steps=steps,
                final_answer=str(obj["final_answer"]),
                record_id=obj.get("record_id"),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed word-problem record: {exc}") from exc


def _aux_lines(record: AnnotatedProblem, field: str) -> list[str]:
    out = []
    for i, st in enumerate(record.steps):
        val = getattr(st, field)
        if not val:
            raise MissingAnnotation(field, i)
        out.append(val)
    return out


def _eqn_lines(record: AnnotatedProblem) -> list[str]:
    return [f"<<{st.equation}>>" for st in record.steps]


def compose(record: AnnotatedProblem, fmt: WpFormat) -> str:
    """Solution text for one record in one layout; lines joined by newlines."""
    answer = f"{ANSWER_MARKER} {record.final_answer}"
    if fmt is WpFormat.ANSWER_ONLY:
        return answer
    if fmt is WpFormat.ORIGINAL:
        return "\n".join([*_aux_lines(record, "prose"), answer])
    if fmt in (WpFormat.EQUATION_ONLY, WpFormat.RELATION_MULTITASK_CALC):
        return "\n".join([*_eqn_lines(record), answer])
    if fmt is WpFormat.RELATION_MULTITASK_PLAN:
        return "\n".join(_aux_lines(record, "relation"))
    aux = _aux_lines(record, _AUX_FIELD[fmt])
    eqns = _eqn_lines(record)
    if fmt in (WpFormat.SOCRATIC_AUX_FIRST, WpFormat.RELATION_AUX_FIRST):
        return "\n".join([*aux, *eqns, answer])
    interleaved = [line for pair in zip(aux, eqns) for line in pair]
    return "\n".join([*interleaved, answer])


def compose_prompt(record: AnnotatedProblem, fmt: WpFormat) -> str:
    tag = _MODE_TAG.get(fmt)
    return f"{record.question} {tag}" if tag else record.question


def wp_record(record: AnnotatedProblem, fmt: WpFormat, record_id: str) -> dict:
    return {
        "record_id": record.record_id or record_id,
        "format": fmt.value,
        "prompt": compose_prompt(record, fmt),
        "target": compose(record, fmt),
    }


# --- arithmetic expressions --------------------------------------------------

_NUM_RE = re.compile(r"\d+(?:\.\d+)?|\.\d+")


class _ExprParser:
    """Recursive descent over + - * / and parentheses, exact rationals."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Fraction:
        value = self._expr()
        self._skip_ws()
        if self.pos != len(self.text):
            raise ExprSyntaxError(
                f"unexpected {self.text[self.pos]!r}", self.pos
            )
        return value

    def _expr(self) -> Fraction:
        value = self._term()
        while self._peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self._term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def _term(self) -> Fraction:
        value = self._factor()
        while self._peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self._factor()
            if op == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    raise DivisionByZero(f"division by zero in {self.text!r}")
                value = value / rhs
        return value

    def _factor(self) -> Fraction:
        ch = self._peek()
        if ch == "-":
            self.pos += 1
            return -self._factor()
        if ch == "(":
            self.pos += 1
            value = self._expr()
            if self._peek() != ")":
                raise ExprSyntaxError("expected ')'", self.pos)
            self.pos += 1
            return value
        m = _NUM_RE.match(self.text, self.pos)
        if not m:
            raise ExprSyntaxError(f"expected number, got {ch!r}" if ch else "unexpected end", self.pos)
        self.pos = m.end()
        return Fraction(m.group())


def eval_expr(text: str) -> Fraction:
    """Exact value of an arithmetic expression (standard precedence)."""
    return _ExprParser(text).parse()


def format_value(value: Fraction) -> str:
    """Short decimal rendering: exact when terminating, else 10 places."""
    if value.denominator == 1:
        return str(value.numerator)
    # default context precision (28) is too small for wide integer parts
    digits = len(str(abs(value.numerator))) + len(str(value.denominator))
    with localcontext() as ctx:
        ctx.prec = digits + 15
        d = (Decimal(value.numerator) / Decimal(value.denominator)).quantize(
            Decimal("1.0000000000"), rounding=ROUND_HALF_UP
        )
    s = format(d, "f").rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


_SPAN_RE = re.compile(r"<<(.*?)>>", re.DOTALL)


@dataclass(frozen=True)
class AnnotationIssue:
    kind: str  # "mismatch" | "syntax"
    span_index: int
    expr: str
    claimed: str | None
    computed: str | None
    message: str


@dataclass(frozen=True)
class FillResult:
    text: str
    issues: tuple[AnnotationIssue, ...]

    @property
    def mismatches(self) -> tuple[AnnotationIssue, ...]:
        return tuple(i for i in self.issues if i.kind == "mismatch")


def fill_calc_annotations(text: str) -> FillResult:
    """Evaluate every <<expr=value>> span.

    Empty values are filled in; nonempty values are verified and kept,
    with disagreements reported. Spans whose expression fails to parse
    are reported and left untouched, so the operation is total and
    idempotent on the text.
    """
    issues: list[AnnotationIssue] = []
    span_counter = [0]

    def handle(m: re.Match) -> str:
        k = span_counter[0]
        span_counter[0] += 1
        content = m.group(1)
        if "=" not in content:
            issues.append(AnnotationIssue(
                "syntax", k, content, None, None, "annotation lacks '='",
            ))
            return m.group(0)
        expr, claim = content.rsplit("=", 1)
        try:
            value = eval_expr(expr)
        except DataError as exc:
            issues.append(AnnotationIssue("syntax", k, expr, claim or None, None, str(exc)))
            return m.group(0)
        rendered = format_value(value)
        if claim == "":
            return f"<<{expr}={rendered}>>"
        claim_ok = claim.strip() == rendered
        if not claim_ok:
            try:
                claim_ok = Fraction(claim.strip()) == value
            except (ValueError, ZeroDivisionError):
                claim_ok = False
        if not claim_ok:
            issues.append(AnnotationIssue(
                "mismatch", k, expr, claim, rendered,
                f"claimed {claim!r}, computed {rendered}",
            ))
        return m.group(0)

    new_text = _SPAN_RE.sub(handle, text)
    return FillResult(text=new_text, issues=tuple(issues))


_ANSWER_NUM_RE = re.compile(r"^-?\d+(\.\d+)?$")


def normalize_answer(raw: str) -> str:
    """Canonical answer string: no separators, no leading +, no trailing zeros."""
    s = raw.strip().replace(",", "")
    if s.startswith("+"):
        s = s[1:]
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    if s in ("-0", ""):
        s = "0" if s == "-0" else s
    if not _ANSWER_NUM_RE.match(s):
        raise UnparseableNumber(f"cannot normalize answer {raw!r}")
    return s


def extract_answer(text: str) -> str:
    """Normalized value after the final #### marker."""
    pos = text.rfind(ANSWER_MARKER)
    if pos < 0:
        raise NoAnswerMarker("no #### marker in text")
    tail = text[pos + len(ANSWER_MARKER):].splitlines()[0] if text[pos + len(ANSWER_MARKER):] else ""
    return normalize_answer(tail)


def answers_equal(a: str, b: str) -> bool:
    return normalize_answer(a) == normalize_answer(b)
