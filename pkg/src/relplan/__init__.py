"""Benchmark generator and evaluation harness for relational-plan reasoning.

Generates unit-conversion problems over random cycle-consistent conversion
graphs with modular factors, renders worked solutions in several sequence
formats, parses and grades model-emitted sequences, computes a six-way
plan/arithmetic accuracy decomposition, aggregates sampled answers by
voting, and recomposes annotated math word problems with an exact
expression calculator.
"""

from .errors import ConfigError, DataError, RelplanError
from .metrics import (
    Candidate,
    GradeRecord,
    MetricReport,
    VoteBatch,
    compute_metrics,
    grade,
    grade_output,
    plurality,
    reports_to_csv,
    reports_to_table,
    top_k_vote,
    verifier_rerank,
    weighted_plurality,
)
from .modmath import Direction, mod_inv, traverse
from .ucformat import (
    CONDITIONS,
    DATASET_CONDITIONS,
    FormatSpec,
    StepStyle,
    format_for,
    records_for_condition,
    render_pair,
    render_prompt,
    render_target,
    vocabulary,
)
from .ucgraph import (
    ConversionGraph,
    ConversionRule,
    GenParams,
    Presentation,
    ProblemInstance,
    enumerate_paths,
    generate_graph,
    make_problem,
    problem_from_json,
    problem_to_json,
    sample_problem,
    solve,
)
from .ucparse import (
    FinalAnswer,
    ParsedSolution,
    ParseError,
    extract_final_answer,
    parse_solution,
    validate_plan,
    verify_steps,
)
from .wordproblem import (
    AnnotatedProblem,
    WpFormat,
    compose,
    eval_expr,
    extract_answer,
    fill_calc_annotations,
    format_value,
    normalize_answer,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedProblem",
    "CONDITIONS",
    "Candidate",
    "ConfigError",
    "ConversionGraph",
    "ConversionRule",
    "DATASET_CONDITIONS",
    "DataError",
    "Direction",
    "FinalAnswer",
    "FormatSpec",
    "GenParams",
    "GradeRecord",
    "MetricReport",
    "ParseError",
    "ParsedSolution",
    "Presentation",
    "ProblemInstance",
    "RelplanError",
    "StepStyle",
    "VoteBatch",
    "WpFormat",
    "compose",
    "compute_metrics",
    "enumerate_paths",
    "eval_expr",
    "extract_answer",
    "extract_final_answer",
    "fill_calc_annotations",
    "format_for",
    "format_value",
    "generate_graph",
    "grade",
    "grade_output",
    "make_problem",
    "mod_inv",
    "normalize_answer",
    "parse_solution",
    "plurality",
    "problem_from_json",
    "problem_to_json",
    "records_for_condition",
    "render_pair",
    "render_prompt",
    "render_target",
    "reports_to_csv",
    "reports_to_table",
    "sample_problem",
    "solve",
    "top_k_vote",
    "traverse",
    "validate_plan",
    "verifier_rerank",
    "verify_steps",
    "vocabulary",
    "weighted_plurality",
]
