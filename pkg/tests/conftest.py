import pytest

from relplan.ucgraph import (
    ConversionGraph,
    ConversionRule,
    GenParams,
    Presentation,
    ProblemInstance,
    make_problem,
)

# Acceptance results collected here and echoed into the terminal summary,
# one line per criterion.
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(ok: bool, label: str, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    ACCEPTANCE_LINES.append(f"[{status}] {label}{suffix}")
    assert ok, f"{label}{suffix}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def abc_graph() -> ConversionGraph:
    """Three units in a path: A -B-> with factor 3, B -C-> with factor 4.

    Consistent with potentials phi(A)=1, phi(B)=3, phi(C)=2 over p=5.
    """
    return ConversionGraph(
        modulus=5,
        labels=("A", "B", "C"),
        rules=(
            ConversionRule(src=0, dst=1, factor=3, presentation=Presentation.AS_IS),
            ConversionRule(src=1, dst=2, factor=4, presentation=Presentation.AS_IS),
        ),
        potentials=(1, 3, 2),
    )


@pytest.fixture
def abc_problem(abc_graph) -> ProblemInstance:
    return ProblemInstance(
        graph=abc_graph,
        source_unit=0,
        target_unit=2,
        source_qty=2,
        rule_order=(0, 1),
        canonical_plan=(0, 1, 2),
        gt_answer=4,
        problem_id="abc-0",
    )


def make(n=10, e=12, L=5, p=5, seed=1234, index=0) -> ProblemInstance:
    return make_problem(
        GenParams(
            n_nodes=n, n_edges=e, path_len=L, modulus=p,
            seed=seed, problem_index=index,
        )
    )


@pytest.fixture
def quick_problem() -> ProblemInstance:
    return make()
