from fractions import Fraction

import numpy as np
import pytest

from _oracles import random_expression, shunting_yard_eval
from relplan.wordproblem import (
    AnnotatedProblem,
    DivisionByZero,
    ExprSyntaxError,
    MissingAnnotation,
    NoAnswerMarker,
    StepAnnotation,
    UnparseableNumber,
    WpFormat,
    answers_equal,
    compose,
    compose_prompt,
    eval_expr,
    extract_answer,
    fill_calc_annotations,
    format_value,
    normalize_answer,
    wp_record,
)


@pytest.fixture
def record():
    return AnnotatedProblem(
        question="Janet's ducks lay 16 eggs per day. She eats 3 and bakes with 4. "
        "She sells the rest at $2 each. How much does she make daily?",
        steps=(
            StepAnnotation(
                equation="16-3-4=9",
                socratic="How many eggs are left to sell?",
                relation="eggs_sold = laid - eaten - baked",
                prose="She has 16 - 3 - 4 = <<16-3-4=9>>9 eggs left.",
            ),
            StepAnnotation(
                equation="9*2=18",
                socratic="How much money does she make?",
                relation="revenue = eggs_sold * price",
                prose="She makes 9 * 2 = <<9*2=18>>18 dollars.",
            ),
        ),
        final_answer="18",
    )


# --- evaluator ---------------------------------------------------------------

def test_eval_examples():
    assert eval_expr("2+3*4") == 14
    assert eval_expr("16-3-4") == 9
    with pytest.raises(DivisionByZero):
        eval_expr("1/0")


def test_eval_precedence_and_assoc():
    assert eval_expr("2*3+4*5") == 26
    assert eval_expr("100/10/2") == 5
    assert eval_expr("(2+3)*4") == 20
    assert eval_expr("-3+5") == 2
    assert eval_expr("2--3") == 5
    assert eval_expr("-2*3") == -6
    assert eval_expr("1/3*3") == 1
    assert eval_expr("0.1+0.2") == Fraction(3, 10)
    assert eval_expr(" 1 + 2 ") == 3


def test_eval_syntax_errors():
    for bad in ("", "2+", "(2+3", "2+*3", "2 3", "a+1", "2)"):
        with pytest.raises(ExprSyntaxError):
            eval_expr(bad)


def test_eval_agrees_with_shunting_yard_oracle():
    rng = np.random.default_rng(99)
    checked = 0
    while checked < 2000:
        text = random_expression(rng)
        try:
            expected = shunting_yard_eval(text)
        except ZeroDivisionError:
            continue
        assert eval_expr(text) == expected, text
        checked += 1


def test_format_value():
    assert format_value(Fraction(6)) == "6"
    assert format_value(Fraction(-6)) == "-6"
    assert format_value(Fraction(5, 2)) == "2.5"
    assert format_value(Fraction(1, 3)) == "0.3333333333"
    assert format_value(Fraction(1, 4)) == "0.25"
    assert format_value(Fraction(0)) == "0"


# --- annotation filling ------------------------------------------------------

def test_fill_empty_annotation():
    res = fill_calc_annotations("x <<16-3-4=>> y")
    assert res.text == "x <<16-3-4=9>> y"
    assert not res.issues


def test_fill_reports_mismatch():
    res = fill_calc_annotations("a <<2*3=7>> b")
    assert res.text == "a <<2*3=7>> b"  # claim kept, disagreement reported
    [issue] = res.issues
    assert issue.kind == "mismatch"
    assert issue.computed == "6"
    assert issue.claimed == "7"


def test_fill_accepts_correct_claims():
    res = fill_calc_annotations("a <<2*3=6>> b <<9*2=18.0>> c")
    assert res.text == "a <<2*3=6>> b <<9*2=18.0>> c"
    assert not res.issues


def test_fill_identity_without_annotations():
    text = "nothing to see here << but not an annotation"
    res = fill_calc_annotations(text)
    assert res.text == text
    assert not res.issues


def test_fill_syntax_error_span():
    res = fill_calc_annotations("x <<2**3=>> y <<3+4=>> z")
    assert "<<3+4=7>>" in res.text
    assert "<<2**3=>>" in res.text  # left untouched
    [issue] = res.issues
    assert issue.kind == "syntax"


def test_fill_idempotent():
    rng = np.random.default_rng(5)
    for _ in range(50):
        parts = []
        for _ in range(int(rng.integers(1, 5))):
            expr = random_expression(rng, max_depth=3)
            try:
                shunting_yard_eval(expr)
            except ZeroDivisionError:
                continue
            parts.append(f"blah <<{expr}=>> blah")
        text = "\n".join(parts)
        once = fill_calc_annotations(text).text
        twice = fill_calc_annotations(once).text
        assert once == twice


# --- composition -------------------------------------------------------------

def test_compose_equation_only(record):
    assert compose(record, WpFormat.EQUATION_ONLY) == (
        "<<16-3-4=9>>\n<<9*2=18>>\n#### 18"
    )


def test_compose_answer_only(record):
    assert compose(record, WpFormat.ANSWER_ONLY) == "#### 18"


def test_compose_original(record):
    text = compose(record, WpFormat.ORIGINAL)
    assert text.splitlines()[0].startswith("She has 16 - 3 - 4")
    assert text.endswith("#### 18")


def test_compose_interleaved_alternates(record):
    text = compose(record, WpFormat.RELATION_INTERLEAVED)
    assert text.splitlines() == [
        "eggs_sold = laid - eaten - baked",
        "<<16-3-4=9>>",
        "revenue = eggs_sold * price",
        "<<9*2=18>>",
        "#### 18",
    ]


def test_compose_aux_first_groups(record):
    text = compose(record, WpFormat.SOCRATIC_AUX_FIRST)
    lines = text.splitlines()
    assert lines[:2] == [
        "How many eggs are left to sell?",
        "How much money does she make?",
    ]
    assert lines[2:] == ["<<16-3-4=9>>", "<<9*2=18>>", "#### 18"]


def test_compose_multitask(record):
    plan = compose(record, WpFormat.RELATION_MULTITASK_PLAN)
    assert plan.splitlines() == [
        "eggs_sold = laid - eaten - baked",
        "revenue = eggs_sold * price",
    ]
    assert "####" not in plan
    assert compose_prompt(record, WpFormat.RELATION_MULTITASK_PLAN).endswith("#plan")
    calc = compose(record, WpFormat.RELATION_MULTITASK_CALC)
    assert calc == compose(record, WpFormat.EQUATION_ONLY)
    assert compose_prompt(record, WpFormat.RELATION_MULTITASK_CALC).endswith("#calc")
    assert compose_prompt(record, WpFormat.EQUATION_ONLY) == record.question


def test_compose_missing_annotation(record):
    bare = AnnotatedProblem(
        question=record.question,
        steps=tuple(StepAnnotation(equation=s.equation) for s in record.steps),
        final_answer=record.final_answer,
    )
    # equations alone are enough for equation-only output
    assert compose(bare, WpFormat.EQUATION_ONLY) == compose(record, WpFormat.EQUATION_ONLY)
    with pytest.raises(MissingAnnotation) as exc:
        compose(bare, WpFormat.RELATION_INTERLEAVED)
    assert exc.value.step_index == 0
    with pytest.raises(MissingAnnotation):
        compose(bare, WpFormat.ORIGINAL)


def test_compose_deterministic_and_distinct(record):
    other = AnnotatedProblem(
        question=record.question,
        steps=record.steps[:1],
        final_answer="9",
    )
    for fmt in WpFormat:
        try:
            a, b = compose(record, fmt), compose(other, fmt)
        except MissingAnnotation:
            continue
        assert compose(record, fmt) == a
        if fmt != WpFormat.ANSWER_ONLY or record.final_answer != other.final_answer:
            assert a != b


def test_chained_equations_reproduce_final_answer(record):
    values = {}
    last = None
    for st in record.steps:
        expr, claimed = st.equation.rsplit("=", 1)
        last = eval_expr(expr)
        assert last == Fraction(claimed)
    assert format_value(last) == normalize_answer(record.final_answer)


def test_wp_record_shape(record):
    obj = wp_record(record, WpFormat.EQUATION_ONLY, "wp-000001")
    assert set(obj) == {"record_id", "format", "prompt", "target"}
    assert obj["format"] == "EquationOnly"
    assert obj["record_id"] == "wp-000001"


def test_record_parsing_round_trip(record):
    obj = {
        "question": record.question,
        "steps": [
            {"equation": s.equation, "socratic": s.socratic,
             "relation": s.relation, "prose": s.prose}
            for s in record.steps
        ],
        "final_answer": record.final_answer,
    }
    back = AnnotatedProblem.from_obj(obj)
    assert back.steps == record.steps


# --- answers -----------------------------------------------------------------

def test_extract_answer_examples():
    assert extract_answer("#### 1,234") == "1234"
    assert extract_answer("#### 18.0") == "18"
    assert extract_answer("#### +7") == "7"
    assert extract_answer("steps\n#### 2.50\ntrailing") == "2.5"
    assert extract_answer("#### 1\nmore\n#### 2") == "2"  # last marker wins
    with pytest.raises(NoAnswerMarker):
        extract_answer("no marker")
    with pytest.raises(UnparseableNumber):
        extract_answer("#### banana")


def test_answers_equal():
    assert answers_equal("1,234", "1234")
    assert answers_equal("18.0", "18")
    assert not answers_equal("18", "19")
