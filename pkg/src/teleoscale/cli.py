"""Command-line interface.

Subcommands: run (one experiment), suite (config sweep + comparison report),
replay (recompute metrics from a log), tables (render a metrics CSV and the
relative-change aggregates), bridge (serve a live operator session).
Exit codes: 0 ok, 2 config error, 3 runtime fault.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, FaultError, LogFormatError, TeleoscaleError
from .experiment import (
    data_path,
    load_config,
    load_suite,
    replay_log,
    run_experiment,
    run_suite,
)
from .telemetry import (
    aggregate_relative,
    emit_table,
    read_metrics_csv,
    write_metrics_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAULT = 3


def _metrics_line(m) -> str:
    t = "incomplete" if m.completion_time_s is None else f"{m.completion_time_s:.3f}s"
    d = "-" if m.path_length_left_m is None else f"{m.path_length_left_m:.6f}m"
    return f"{m.task_name} [{m.config_label}]: time={t} dist={d}"


def _fmt_pct(value: float, method: str) -> str:
    if method == "per_task_ratio_mean":
        return f"{round(value)}%"
    return f"{value:.1f}%"


def comparison_report(metrics, baseline: str, method: str) -> str:
    """Relative-change lines for every variant config against the baseline.

    The complementary aggregation is shown in brackets, since the two
    methods genuinely disagree on sparse tables.
    """
    labels: list[str] = []
    for m in metrics:
        if m.config_label not in labels:
            labels.append(m.config_label)
    if baseline not in labels:
        raise ConfigError(f"baseline config {baseline!r} not present in metrics")
    other = "ratio_of_totals" if method == "per_task_ratio_mean" else "per_task_ratio_mean"
    lines = [f"[comparisons vs {baseline}, method={method}]"]
    for label in labels:
        if label == baseline:
            continue
        for field in ("time", "distance"):
            try:
                primary = aggregate_relative(metrics, baseline, label, field, method)
                secondary = aggregate_relative(metrics, baseline, label, field, other)
            except ValueError as exc:
                lines.append(f"{field:<9}{label} vs {baseline}: n/a ({exc})")
                continue
            lines.append(
                f"{field:<9}{label} vs {baseline}: {_fmt_pct(primary, method)}"
                f"   [{other}: {_fmt_pct(secondary, other)}]"
            )
    return "\n".join(lines)


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / f"{config.label}.tlog"
    result = run_experiment(config, log_path=log_path)
    write_metrics_csv([result.metrics], out / "metrics.csv")
    print(_metrics_line(result.metrics))
    print(f"log: {result.log_path}")
    if result.completed_tick is None:
        print("warning: task did not complete within the tick budget", file=sys.stderr)
    return EXIT_OK


def cmd_suite(args) -> int:
    suite = load_suite(args.file)
    out = Path(args.out) if args.out else None
    metrics, _results = run_suite(suite, out_dir=out)
    baseline = suite.get("baseline", "normal")
    report = emit_table(metrics, "text")
    report += "\n" + comparison_report(metrics, baseline, "per_task_ratio_mean")
    report += "\n\n" + comparison_report(metrics, baseline, "ratio_of_totals")
    print(report)
    if out is not None:
        write_metrics_csv(metrics, out / "metrics.csv")
        (out / "report.txt").write_text(report + "\n")
    return EXIT_OK


def cmd_replay(args) -> int:
    metrics = replay_log(args.log)
    print(_metrics_line(metrics))
    write_metrics_csv([metrics], sys.stdout)
    return EXIT_OK


def cmd_tables(args) -> int:
    path = args.metrics
    if path == "builtin:invivo":
        path = data_path("tables/invivo_reference.csv")
    metrics = read_metrics_csv(path)
    print(emit_table(metrics, args.format))
    if args.format == "text":
        print(comparison_report(metrics, args.baseline, args.method))
    return EXIT_OK


def cmd_bridge(args) -> int:
    from .bridge import serve_bridge

    config = load_config(args.config)
    serve_bridge(config, args.listen)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teleoscale", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--out", default="teleoscale-out")
    run_p.set_defaults(func=cmd_run)

    suite_p = sub.add_parser("suite", help="run a suite of configs and compare")
    suite_p.add_argument("--file", required=True)
    suite_p.add_argument("--out", default=None)
    suite_p.set_defaults(func=cmd_suite)

    replay_p = sub.add_parser("replay", help="recompute metrics from a log")
    replay_p.add_argument("--log", required=True)
    replay_p.set_defaults(func=cmd_replay)

    tables_p = sub.add_parser("tables", help="render a metrics CSV with aggregates")
    tables_p.add_argument(
        "--metrics", required=True, help="CSV path, or builtin:invivo for the bundled dataset"
    )
    tables_p.add_argument(
        "--method",
        default="per_task_ratio_mean",
        choices=["per_task_ratio_mean", "ratio_of_totals"],
    )
    tables_p.add_argument("--baseline", default="normal")
    tables_p.add_argument("--format", default="text", choices=["text", "csv"])
    tables_p.set_defaults(func=cmd_tables)

    bridge_p = sub.add_parser("bridge", help="serve a live operator session")
    bridge_p.add_argument("--config", required=True)
    bridge_p.add_argument("--listen", default="127.0.0.1:8765")
    bridge_p.set_defaults(func=cmd_bridge)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FaultError, LogFormatError, TeleoscaleError) as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
