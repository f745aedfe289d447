"""Command-line pipeline: generate, render, grade, aggregate, vote.

All randomness flows from one root seed; generation is an ordered map
over problem indices, so outputs are byte-identical for any worker
count. Exit codes: 0 success, 1 config/validation error, 2 data error;
errors are emitted as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import yaml

from .errors import ConfigError, DataError, RelplanError
from .metrics import (
    GradeRecord,
    batches_from_grades,
    compute_metrics,
    decisions_to_jsonl,
    grade_output,
    reports_to_csv,
    reports_to_table,
    vote_decisions,
    OWN,
    VARIANTS,
    VOTE_METHODS,
)
from .rng import stream
from .ucformat import (
    CONDITIONS,
    DATASET_CONDITIONS,
    format_for,
    records_for_condition,
    render_prompt,
    render_target,
)
from .ucgraph import (
    GenParams,
    ProblemInstance,
    load_problems,
    make_problem,
    problem_to_json,
)
from .wordproblem import (
    AnnotatedProblem,
    WpFormat,
    fill_calc_annotations,
    wp_record,
)

PRESETS: dict[str, dict] = {
    "default": {"n_nodes": 10, "n_edges": 12, "path_len": 5, "modulus": 5},
    "easy5": {"n_nodes": 5, "n_edges": 5, "path_len": [2, 3], "modulus": 5},
    "easy6": {"n_nodes": 6, "n_edges": 6, "path_len": [2, 3], "modulus": 5},
    "easy7": {"n_nodes": 7, "n_edges": 7, "path_len": [2, 3], "modulus": 5},
    "mod23": {"n_nodes": 10, "n_edges": 12, "path_len": 5, "modulus": 23},
    "mod53": {"n_nodes": 10, "n_edges": 12, "path_len": 5, "modulus": 53},
}

GEN_DEFAULTS = {
    **PRESETS["default"],
    "seed": 0,
    "train": 10_000,
    "test": 1_000,
    "conditions": list(DATASET_CONDITIONS),
    "variants": [OWN],
    "out_dir": ".",
    "workers": 1,
    "max_output_tokens": 4096,
}


class _Parser(argparse.ArgumentParser):
    # argparse's default error path exits with its own code and plain
    # text; route through the shared exit-code contract instead.
    def error(self, message):
        raise ConfigError(message)


def _parse_path_len(value) -> int | list[int]:
    if isinstance(value, int):
        return value
    if isinstance(value, (list, tuple)):
        choices = [int(v) for v in value]
        if not choices:
            raise ConfigError("empty path_len choice list", field="path_len")
        return choices
    text = str(value)
    if "-" in text:
        lo, hi = text.split("-", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ConfigError(f"bad path_len range {text!r}", field="path_len")
        return list(range(lo, hi + 1))
    if "," in text:
        return [int(v) for v in text.split(",")]
    return int(text)


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            if path.endswith(".json"):
                obj = json.load(fh)
            else:
                obj = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", field="config") from exc
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}", field="config") from exc
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a mapping", field="config")
    return obj


def _effective_config(args: argparse.Namespace) -> dict:
    """defaults < preset < config file < explicit flags."""
    cfg = dict(GEN_DEFAULTS)
    if getattr(args, "preset", None):
        if args.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {args.preset!r}; expected one of {', '.join(PRESETS)}",
                field="preset",
            )
        cfg.update(PRESETS[args.preset])
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        voting = file_cfg.pop("voting", None)
        cfg.update(file_cfg)
        if voting:
            cfg["voting_method"] = voting.get("method")
            cfg["voting_k"] = voting.get("k", voting.get("K"))
    for key in (
        "n_nodes", "n_edges", "path_len", "modulus", "seed", "train", "test",
        "out_dir", "workers", "max_output_tokens", "voting_method", "voting_k",
    ):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "conditions", None):
        cfg["conditions"] = [c.strip() for c in args.conditions.split(",") if c.strip()]
    if getattr(args, "variants", None):
        cfg["variants"] = [v.strip() for v in args.variants.split(",") if v.strip()]

    cfg["path_len"] = _parse_path_len(cfg["path_len"])
    for key in ("n_nodes", "n_edges", "modulus", "seed", "train", "test", "workers"):
        cfg[key] = int(cfg[key])
    if cfg["train"] < 0 or cfg["test"] < 0 or cfg["train"] + cfg["test"] < 1:
        raise ConfigError("need at least one problem across splits", field="counts")
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1", field="workers")
    for cond in cfg["conditions"]:
        if cond not in DATASET_CONDITIONS:
            raise ConfigError(
                f"unknown condition {cond!r}; expected one of {', '.join(DATASET_CONDITIONS)}",
                field="conditions",
            )
    for var in cfg["variants"]:
        if var not in VARIANTS:
            raise ConfigError(
                f"unknown variant {var!r}; expected one of {', '.join(VARIANTS)}",
                field="variants",
            )
    return cfg


def _resolve_path_len(path_len: int | list[int], seed: int, index: int) -> int:
    if isinstance(path_len, int):
        return path_len
    rng = stream(seed, index, "plen")
    return path_len[int(rng.integers(0, len(path_len)))]


def _gt_plan_eligible(code: str) -> bool:
    spec = CONDITIONS[code]
    return not spec.plan_in_prompt and not spec.plan_only


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _emit_one(task: tuple) -> tuple[str, list[tuple[str, str]]]:
    """One problem's serialized line plus its per-file dataset lines."""
    seed, index, n_nodes, n_edges, path_len, modulus, conditions, variants = task
    params = GenParams(
        n_nodes=n_nodes,
        n_edges=n_edges,
        path_len=_resolve_path_len(path_len, seed, index),
        modulus=modulus,
        seed=seed,
        problem_index=index,
    )
    prob = make_problem(params)
    lines: list[tuple[str, str]] = []
    for code in conditions:
        for rec in records_for_condition(prob, code):
            lines.append((f"{code}.jsonl", _dumps(rec)))
        if "gt_plan_prompted" in variants and _gt_plan_eligible(code):
            spec = dataclasses.replace(CONDITIONS[code], plan_in_prompt=True)
            rec = {
                "problem_id": prob.problem_id,
                "condition": code,
                "variant": "gt_plan_prompted",
                "prompt": render_prompt(prob, spec),
                "target": render_target(prob, spec),
            }
            lines.append((f"{code}.gtplan.jsonl", _dumps(rec)))
    return problem_to_json(prob), lines


def _emit_range(
    cfg: dict, start: int, count: int, out_dir: str
) -> None:
    os.makedirs(out_dir, exist_ok=True)
    tasks = [
        (
            cfg["seed"], index, cfg["n_nodes"], cfg["n_edges"], cfg["path_len"],
            cfg["modulus"], tuple(cfg["conditions"]), tuple(cfg["variants"]),
        )
        for index in range(start, start + count)
    ]
    workers = cfg["workers"]
    if workers == 1:
        results = map(_emit_one, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_emit_one, tasks, chunksize=max(1, count // (workers * 4)))

    handles: dict[str, object] = {}
    try:
        problems_fh = open(os.path.join(out_dir, "problems.jsonl"), "w", encoding="utf-8")
        handles["problems.jsonl"] = problems_fh
        for problem_line, record_lines in results:
            problems_fh.write(problem_line + "\n")
            for fname, line in record_lines:
                fh = handles.get(fname)
                if fh is None:
                    fh = open(os.path.join(out_dir, fname), "w", encoding="utf-8")
                    handles[fname] = fh
                fh.write(line + "\n")
    finally:
        for fh in handles.values():
            fh.close()
        if workers > 1:
            pool.shutdown()


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    splits = [("train", 0, cfg["train"]), ("test", cfg["train"], cfg["test"])]
    for name, start, count in splits:
        if count == 0:
            continue
        _emit_range(cfg, start, count, os.path.join(cfg["out_dir"], name))
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    problems = load_problems(args.problems)
    os.makedirs(cfg["out_dir"], exist_ok=True)
    handles: dict[str, object] = {}
    try:
        for prob in problems.values():
            for code in cfg["conditions"]:
                for rec in records_for_condition(prob, code):
                    fname = f"{code}.jsonl"
                    if fname not in handles:
                        handles[fname] = open(
                            os.path.join(cfg["out_dir"], fname), "w", encoding="utf-8"
                        )
                    handles[fname].write(_dumps(rec) + "\n")
                if "gt_plan_prompted" in cfg["variants"] and _gt_plan_eligible(code):
                    spec = dataclasses.replace(CONDITIONS[code], plan_in_prompt=True)
                    rec = {
                        "problem_id": prob.problem_id,
                        "condition": code,
                        "variant": "gt_plan_prompted",
                        "prompt": render_prompt(prob, spec),
                        "target": render_target(prob, spec),
                    }
                    fname = f"{code}.gtplan.jsonl"
                    if fname not in handles:
                        handles[fname] = open(
                            os.path.join(cfg["out_dir"], fname), "w", encoding="utf-8"
                        )
                    handles[fname].write(_dumps(rec) + "\n")
    finally:
        for fh in handles.values():
            fh.close()
    return 0


class UnknownProblemId(DataError):
    pass


def _read_jsonl(path: str) -> list[dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            out = []
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            return out
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _load_predictions(path: str, problems: dict[str, ProblemInstance]) -> list[dict]:
    preds = _read_jsonl(path)
    for i, rec in enumerate(preds):
        for key in ("problem_id", "condition", "output"):
            if key not in rec:
                raise DataError(f"{path}: prediction {i} lacks {key!r}")
        if rec["problem_id"] not in problems:
            raise UnknownProblemId(f"prediction references unknown {rec['problem_id']!r}")
        if rec["condition"] not in CONDITIONS:
            raise DataError(f"prediction {i}: unknown condition {rec['condition']!r}")
        if rec.get("variant", OWN) not in VARIANTS:
            raise DataError(f"prediction {i}: unknown variant {rec['variant']!r}")
    return preds


def _grade_predictions(
    preds: list[dict], problems: dict[str, ProblemInstance], max_tokens: int
) -> list[GradeRecord]:
    grades = []
    for rec in preds:
        output = str(rec["output"])
        toks = output.split()
        if len(toks) > max_tokens:
            output = " ".join(toks[:max_tokens])
        grades.append(
            grade_output(
                problems[rec["problem_id"]],
                output,
                rec["condition"],
                rec.get("variant", OWN),
                model_seed=rec.get("model_seed"),
                sample_index=int(rec.get("sample_index", 0)),
                score=rec.get("score"),
            )
        )
    return grades


def _voted_grades(
    grades: list[GradeRecord],
    problems: dict[str, ProblemInstance],
    method: str,
    k: int | None,
) -> tuple[list[GradeRecord], list[dict]]:
    """Collapse each sample group to one voted answer-level grade.

    The voted decision has no token sequence, so plan validity does not
    apply; parse_ok records whether any sample produced a votable answer.
    """
    batches = batches_from_grades(grades)
    groups: dict[tuple, list[GradeRecord]] = {}
    for g in grades:
        groups.setdefault((g.condition, g.variant, g.model_seed, g.problem_id), []).append(g)

    voted: list[GradeRecord] = []
    decisions: list[dict] = []
    fn = VOTE_METHODS[method]
    for key in sorted(groups, key=lambda t: tuple(map(str, t))):
        cond, variant, model_seed, problem_id = key
        prob = problems[problem_id]
        batch = batches.get(key)
        if batch is None:
            qty, unit = None, None
        else:
            qty, unit = fn(batch, k)
        obj = {"problem_id": problem_id, "method": method}
        if method == "top_k":
            obj["K"] = k
        obj.update({"chosen_qty": qty, "chosen_unit": unit})
        decisions.append(obj)
        voted.append(
            GradeRecord(
                problem_id=problem_id,
                condition=cond,
                variant=variant,
                answer_correct=(
                    qty == prob.gt_answer
                    and unit == prob.graph.labels[prob.target_unit]
                ),
                plan_valid=None,
                parse_ok=batch is not None,
                model_seed=model_seed,
                sample_index=0,
                answer_qty=qty,
                answer_unit=unit,
            )
        )
    return voted, decisions


def cmd_grade(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    problems = load_problems(args.problems)
    preds = _load_predictions(args.predictions, problems)
    grades = _grade_predictions(preds, problems, cfg["max_output_tokens"])

    out_dir = cfg["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    method = cfg.get("voting_method")
    if method:
        if method not in VOTE_METHODS:
            raise ConfigError(
                f"unknown voting method {method!r}", field="voting.method"
            )
        k = cfg.get("voting_k")
        k = int(k) if k is not None else None
        if method == "top_k" and k is None:
            raise ConfigError("top_k voting requires K", field="voting.k")
        grades, decisions = _voted_grades(grades, problems, method, k)
        with open(os.path.join(out_dir, "decisions.jsonl"), "w", encoding="utf-8") as fh:
            fh.write(decisions_to_jsonl(decisions))

    with open(os.path.join(out_dir, "grades.jsonl"), "w", encoding="utf-8") as fh:
        for g in grades:
            fh.write(_dumps(g.to_obj()) + "\n")
    reports = compute_metrics(grades)
    with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(reports_to_csv(reports))
    sys.stdout.write(reports_to_table(reports))
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    grades = [GradeRecord.from_obj(o) for o in _read_jsonl(args.grades)]
    reports = compute_metrics(grades)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(reports_to_csv(reports))
    sys.stdout.write(reports_to_table(reports))
    return 0


def cmd_vote(args: argparse.Namespace) -> int:
    if args.method == "top_k" and args.k is None:
        raise ConfigError("top_k voting requires --k", field="k")
    problems = load_problems(args.problems)
    preds = _load_predictions(args.predictions, problems)
    grades = _grade_predictions(preds, problems, GEN_DEFAULTS["max_output_tokens"])
    decisions = vote_decisions(grades, args.method, args.k)
    text = decisions_to_jsonl(decisions)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_wp_compose(args: argparse.Namespace) -> int:
    formats = []
    for name in args.formats.split(","):
        name = name.strip()
        try:
            formats.append(WpFormat(name))
        except ValueError:
            raise ConfigError(
                f"unknown format {name!r}; expected one of "
                f"{', '.join(f.value for f in WpFormat)}",
                field="formats",
            ) from None
    records = [AnnotatedProblem.from_obj(o) for o in _read_jsonl(args.records)]
    lines = []
    for i, rec in enumerate(records):
        for fmt in formats:
            lines.append(_dumps(wp_record(rec, fmt, f"wp-{i:06d}")))
    text = "".join(line + "\n" for line in lines)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_wp_calc(args: argparse.Namespace) -> int:
    if args.infile:
        try:
            with open(args.infile, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read {args.infile}: {exc}") from exc
    else:
        text = sys.stdin.read()
    result = fill_calc_annotations(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(result.text)
    else:
        sys.stdout.write(result.text)
    for issue in result.issues:
        sys.stderr.write(
            _dumps(
                {
                    "kind": issue.kind,
                    "span": issue.span_index,
                    "expr": issue.expr,
                    "claimed": issue.claimed,
                    "computed": issue.computed,
                    "message": issue.message,
                }
            )
            + "\n"
        )
    return 0


def _add_gen_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or YAML config file")
    p.add_argument("--preset", help=f"one of {', '.join(PRESETS)}")
    p.add_argument("--n-nodes", dest="n_nodes", type=int)
    p.add_argument("--n-edges", dest="n_edges", type=int)
    p.add_argument("--path-len", dest="path_len", help="int, 'lo-hi', or comma list")
    p.add_argument("--modulus", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--conditions", help="comma-separated condition codes")
    p.add_argument("--variants", help="comma-separated prompt variants")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--workers", type=int)
    p.add_argument("--max-output-tokens", dest="max_output_tokens", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate problems and dataset files")
    _add_gen_flags(p)
    p.add_argument("--train", type=int, help="training problems")
    p.add_argument("--test", type=int, help="test problems")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("render", help="re-render datasets from problems.jsonl")
    _add_gen_flags(p)
    p.add_argument("--problems", required=True)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("grade", help="grade prediction records")
    _add_gen_flags(p)
    p.add_argument("--problems", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--voting-method", dest="voting_method", choices=sorted(VOTE_METHODS))
    p.add_argument("--voting-k", dest="voting_k", type=int)
    p.set_defaults(fn=cmd_grade)

    p = sub.add_parser("metrics", help="recompute metric reports from grades")
    p.add_argument("--grades", required=True)
    p.add_argument("--csv", help="also write CSV here")
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("vote", help="aggregate sampled answers per problem")
    p.add_argument("--problems", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--method", required=True, choices=sorted(VOTE_METHODS))
    p.add_argument("--k", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_vote)

    p = sub.add_parser("wp-compose", help="compose word-problem training records")
    p.add_argument("--records", required=True)
    p.add_argument("--formats", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_wp_compose)

    p = sub.add_parser("wp-calc", help="fill and verify calculator annotations")
    p.add_argument("--in", dest="infile")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_wp_calc)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ConfigError as exc:
        sys.stderr.write(
            _dumps(
                {
                    "error": type(exc).__name__,
                    "message": str(exc),
                    **({"field": exc.field} if exc.field else {}),
                }
            )
            + "\n"
        )
        return 1
    except RelplanError as exc:
        sys.stderr.write(
            _dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
