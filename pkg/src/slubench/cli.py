"""Command-line interface.

Exit codes: 0 success, 2 schema/validation problems, 3 missing inputs.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

from .baselines import seed_board
from .board import (
    Board,
    Submission,
    default_dataset,
    load_board,
    rank,
    render_report,
    save_board,
    submit,
)
from .core import TaskKind, task_metric_spec
from .errors import EngineError
from .features import read_layerstack
from .metrics import OffsetGrid
from .probe import TrainConfig
from .runner import PROTOCOLS, RunSpec, run


def _add_run_arguments(parser: argparse.ArgumentParser, score_only: bool) -> None:
    parser.add_argument("--task", required=True, help="sa|ner|nel|dac|qa|summ|asr")
    parser.add_argument("--protocol", default="lightweight", choices=PROTOCOLS)
    parser.add_argument("--model", default="unnamed", help="model name for the record")
    parser.add_argument("--manifest", required=True, type=Path)
    if not score_only:
        parser.add_argument("--features", type=Path, help="directory of <id>.lstk stacks")
    parser.add_argument("--posteriors", type=Path, help="directory of <id>.lstk posteriors")
    parser.add_argument("--hyp", type=Path, help="hypothesis JSONL (tokens or frames)")
    parser.add_argument("--predictions", type=Path, help="classification predictions JSONL")
    parser.add_argument("--spans", type=Path, help="precomputed time spans JSONL")
    parser.add_argument("--vocab", type=Path, help="token vocabulary, line 0 = blank")
    parser.add_argument("--bertscore", type=Path, help="externally computed score JSON")
    parser.add_argument("--tags", type=Path, help="entity tag vocabulary, one per line")
    parser.add_argument("--splits", default="dev,test")
    parser.add_argument("--offset-min", type=float, default=-1.0)
    parser.add_argument("--offset-max", type=float, default=1.0)
    parser.add_argument("--offset-step", type=float, default=0.02)
    if not score_only:
        parser.add_argument("--learning-rate", type=float, default=0.5)
        parser.add_argument("--epochs", type=int, default=200)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--weight-decay", type=float, default=0.0)
    parser.add_argument("--out", type=Path, help="write the run result JSON here")


def _read_lines(path: Path) -> tuple[str, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        return tuple(line.strip() for line in fh if line.strip())


def _cmd_run(args: argparse.Namespace, score_only: bool) -> int:
    kwargs = {}
    if not score_only and args.features is not None:
        kwargs["features"] = args.features
        kwargs["train_config"] = TrainConfig(
            learning_rate=args.learning_rate,
            epochs=args.epochs,
            seed=args.seed,
            weight_decay=args.weight_decay,
        )
    if args.tags is not None:
        kwargs["tags"] = _read_lines(args.tags)
    spec = RunSpec(
        task=TaskKind.parse(args.task),
        protocol=args.protocol,
        model=args.model,
        manifest=args.manifest,
        posteriors=args.posteriors,
        hypotheses=args.hyp,
        predictions=args.predictions,
        spans=args.spans,
        vocab=args.vocab,
        bertscore=args.bertscore,
        splits=tuple(s.strip() for s in args.splits.split(",") if s.strip()),
        offset_grid=OffsetGrid(args.offset_min, args.offset_max, args.offset_step),
        **kwargs,
    )
    result = run(spec)
    if args.out:
        result.save(args.out)
    for split, reports in sorted(result.scores.items()):
        for name, report in sorted(reports.items()):
            print(f"{split} {name}: {report.formatted()}")
    if result.tuned_offset is not None:
        print(f"tuned offset: {result.tuned_offset:+.2f} s")
    return 0


def _cmd_board_seed(args: argparse.Namespace) -> int:
    save_board(seed_board(), args.board)
    print(f"seeded baseline board -> {args.board}")
    return 0


def _cmd_board_submit(args: argparse.Namespace) -> int:
    board = load_board(args.board) if Path(args.board).exists() else Board()
    with open(getattr(args, "from"), "r", encoding="utf-8") as fh:
        result = json.load(fh)
    task = TaskKind(result["spec"]["task"])
    scores: dict[str, dict[str, float]] = {}
    for split, reports in result["scores"].items():
        for name, report in reports.items():
            scores.setdefault(name, {})[split] = round(report["value"] * 100, 4)
    external = {}
    bert = result.get("external", {}).get("bertscore", {})
    if "value" in bert:
        scores["bertscore"] = {s: bert["value"] for s in result["scores"]}
        external["bertscore"] = bert.get("source", "external")
    submission = Submission(
        model=args.model,
        model_type=args.type,
        protocol=args.protocol,
        task=task,
        dataset=args.dataset or default_dataset(task),
        scores=scores,
        params_millions=args.params,
        submitted_at=args.timestamp
        or datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        run_ref=str(getattr(args, "from")),
    )
    save_board(submit(board, submission, force=args.force), args.board)
    print(f"submitted {submission.key} -> {args.board}")
    return 0


def _cmd_board_render(args: argparse.Namespace) -> int:
    report = render_report(load_board(args.board), args.format, args.split)
    if args.out:
        Path(args.out).write_text(report, encoding="utf-8")
    else:
        sys.stdout.write(report)
    return 0


def _cmd_board_rank(args: argparse.Namespace) -> int:
    task = TaskKind.parse(args.task)
    rows = rank(
        load_board(args.board),
        task,
        protocol=args.protocol,
        dataset=args.dataset,
        metric=args.metric,
        split=args.split,
    )
    metric = args.metric or task_metric_spec(task)[0].name
    for i, sub in enumerate(rows, start=1):
        value = sub.scores[metric][args.split]
        params = f"{sub.params_millions:.1f}M" if sub.params_millions else "-"
        print(f"{i:2d}. {sub.model:24s} {sub.protocol:12s} {metric}={value:.1f} {params}")
    return 0


def _cmd_features_validate(args: argparse.Namespace) -> int:
    for path in args.files:
        stack = read_layerstack(path)
        print(
            f"{path}: ok L={stack.layers} T={stack.frames} D={stack.dim} "
            f"rate={stack.frame_rate:g}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Evaluation engine and leaderboard for SLU benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="full evaluation run (may train a probe)")
    _add_run_arguments(run_p, score_only=False)
    run_p.set_defaults(func=lambda a: _cmd_run(a, score_only=False))

    score_p = sub.add_parser("score", help="prediction-only scoring, never trains")
    _add_run_arguments(score_p, score_only=True)
    score_p.set_defaults(func=lambda a: _cmd_run(a, score_only=True))

    board_p = sub.add_parser("board", help="leaderboard operations")
    board_sub = board_p.add_subparsers(dest="board_command", required=True)

    seed_p = board_sub.add_parser("seed", help="write the published-baseline board")
    seed_p.add_argument("--board", required=True, type=Path)
    seed_p.set_defaults(func=_cmd_board_seed)

    submit_p = board_sub.add_parser("submit", help="add a run result to a board")
    submit_p.add_argument("--board", required=True, type=Path)
    submit_p.add_argument("--from", required=True, type=Path, dest="from")
    submit_p.add_argument("--model", required=True)
    submit_p.add_argument("--type", required=True, choices=("SSL", "ASR", "SLU"))
    submit_p.add_argument("--protocol", required=True, choices=PROTOCOLS)
    submit_p.add_argument("--params", type=float, help="trainable parameters, millions")
    submit_p.add_argument("--dataset", help="defaults to the task's home dataset")
    submit_p.add_argument("--timestamp", help="override the submission time (tests)")
    submit_p.add_argument("--force", action="store_true")
    submit_p.set_defaults(func=_cmd_board_submit)

    render_p = board_sub.add_parser("render", help="render the board as a report")
    render_p.add_argument("--board", required=True, type=Path)
    render_p.add_argument("--format", default="markdown", choices=("markdown", "json"))
    render_p.add_argument("--split", default="test", choices=("test", "dev"))
    render_p.add_argument("--out", type=Path)
    render_p.set_defaults(func=_cmd_board_render)

    rank_p = board_sub.add_parser("rank", help="rank submissions for a task")
    rank_p.add_argument("--board", required=True, type=Path)
    rank_p.add_argument("--task", required=True)
    rank_p.add_argument("--protocol", choices=PROTOCOLS)
    rank_p.add_argument("--dataset")
    rank_p.add_argument("--metric")
    rank_p.add_argument("--split", default="test", choices=("test", "dev"))
    rank_p.set_defaults(func=_cmd_board_rank)

    feats_p = sub.add_parser("features", help="feature-file utilities")
    feats_sub = feats_p.add_subparsers(dest="features_command", required=True)
    validate_p = feats_sub.add_parser("validate", help="check LSTK files")
    validate_p.add_argument("files", nargs="+", type=Path)
    validate_p.set_defaults(func=_cmd_features_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
