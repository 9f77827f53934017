"""Command-line entry point: generate, build, score, rank, eval, sweep, export.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors. The only
environment variable consulted is ``S2G_SEED``, which overrides the default
``--seed`` of every subcommand. Each run echoes its fully resolved
configuration to stderr so no default stays silent.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .datagen import (
    SrwSpec,
    generate_srw,
    load_annotations,
    load_series,
    save_dataset,
)
from .discord import discord_ranking_to_csv, nn_profile, nn_profile_to_csv, top_discords
from .errors import S2GError
from .evaluate import SweepConfig, reports_to_csv, reports_to_jsonl, run_sweep, top_k_accuracy
from .graph import build_graph, graph_to_dot, load_graph, save_graph
from .scoring import (
    NormalityProfile,
    normality_profile,
    profile_to_csv,
    rank_anomalies,
    ranking_to_csv,
)

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _default_seed() -> int:
    return int(os.environ.get("S2G_SEED", "42"))


def _echo_config(command: str, values: dict) -> None:
    print(f"resolved config [{command}]: {json.dumps(values, sort_keys=True)}", file=sys.stderr)


def _load_config_file(path) -> dict:
    text = open(path, "rb").read()
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text.decode("utf-8"))
    return json.loads(text.decode("utf-8"))


def _reparse_with_config(argv, command: str, config_path) -> argparse.Namespace:
    """Let a config file supply defaults while explicit flags keep priority.

    Subparsers parse into their own namespace, so the overrides must become
    defaults of the chosen subcommand's parser; explicit command-line values
    still overwrite them.
    """
    overrides = {
        key.replace("-", "_"): value
        for key, value in _load_config_file(config_path).items()
    }
    parser = build_parser()
    parser.subcommands[command].set_defaults(**overrides)
    return parser.parse_args(argv)


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def build_parser() -> _Parser:
    parser = _Parser(prog="s2g", description=__doc__)
    parser.add_argument("--version", action="version", version=f"s2g {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=_default_seed(),
                       help="PRNG seed (default 42, or S2G_SEED)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="cap on worker parallelism; outputs never depend on it")
        p.add_argument("--config", help="TOML or JSON file with flag defaults")

    p = sub.add_parser("generate", help="write a synthetic dataset (3 files)")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--anomalies", type=int, required=True)
    p.add_argument("--noise", type=float, required=True, help="noise percentage in [0, 100]")
    p.add_argument("--anomaly-len", type=int, required=True)
    p.add_argument("--period", type=int, default=200)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--walk-std", type=float, default=0.01)
    p.add_argument("--freq-mult", type=float, default=2.0)
    p.add_argument("--out", required=True, help="output path prefix")
    add_common(p)

    p = sub.add_parser("build", help="build a pattern graph from a series file")
    p.add_argument("--series", required=True)
    p.add_argument("--l", type=int, required=True, help="subsequence length")
    p.add_argument("--lambda", dest="lam", type=int, default=0,
                   help="convolution window (default l // 3)")
    p.add_argument("--r", type=int, default=50, help="number of rays")
    p.add_argument("--bandwidth", default="scott",
                   help="'scott' or a fixed ratio of the radius spread")
    p.add_argument("--keep-self-loops", action="store_true")
    p.add_argument("--out", required=True, help="graph JSON path")
    add_common(p)

    p = sub.add_parser("score", help="normality profile of a series against a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--lq", type=int, default=0, help="query length (default: graph's l)")
    p.add_argument("--no-smooth", action="store_true")
    p.add_argument("--out", help="profile CSV path (default stdout)")
    add_common(p)

    p = sub.add_parser("rank", help="top-k anomalies from a profile CSV")
    p.add_argument("--profile", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lq", type=int, required=True, help="query length used for the profile")
    p.add_argument("--out", help="ranking CSV path (default stdout)")
    add_common(p)

    p = sub.add_parser("eval", help="top-k accuracy of a ranking against annotations")
    p.add_argument("--ranking", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lq", type=int, required=True)
    p.add_argument("--dataset", default="")
    p.add_argument("--method", default="series2graph")
    p.add_argument("--out", help="report JSON path (default stdout)")
    add_common(p)

    p = sub.add_parser("sweep", help="run a parameter sweep from a TOML/JSON spec")
    p.add_argument("--spec", required=True, help="sweep spec file")
    p.add_argument("--out", help="JSONL reports path (default stdout)")
    p.add_argument("--summary", help="summary CSV path")
    add_common(p)

    p = sub.add_parser("export-graph", help="export a graph file as DOT or JSON")
    p.add_argument("--graph", required=True)
    p.add_argument("--fmt", choices=("dot", "json"), default="dot")
    p.add_argument("--out", help="output path (default stdout)")
    add_common(p)

    p = sub.add_parser("discord", help="brute-force m-th NN distance baseline")
    p.add_argument("--series", required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--m", type=int, default=1, help="neighbor order")
    p.add_argument("--k", type=int, default=0, help="also rank the top-k discords")
    p.add_argument("--out", help="profile CSV path (default stdout)")
    p.add_argument("--ranking-out", help="ranking CSV path")
    add_common(p)

    parser.subcommands = sub.choices
    return parser


def _cmd_generate(args) -> int:
    spec = SrwSpec(
        length=args.length,
        num_anomalies=args.anomalies,
        noise_pct=args.noise,
        anomaly_len=args.anomaly_len,
        seed=args.seed,
        base_period=args.period,
        base_amplitude=args.amplitude,
        walk_step_std=args.walk_std,
        anomaly_freq_multiplier=args.freq_mult,
    )
    _echo_config("generate", {**spec.__dict__, "out": args.out})
    series, annotations = generate_srw(spec)
    paths = save_dataset(series, annotations, spec, args.out)
    for label, path in paths.items():
        print(f"wrote {label}: {path}", file=sys.stderr)
    return 0


def _cmd_build(args) -> int:
    series = load_series(args.series)
    lam = args.lam or args.l // 3
    bandwidth_ratio = None if args.bandwidth == "scott" else float(args.bandwidth)
    _echo_config("build", {
        "series": args.series, "l": args.l, "lambda": lam, "r": args.r,
        "bandwidth": args.bandwidth, "keep_self_loops": args.keep_self_loops,
        "seed": args.seed, "out": args.out,
    })
    graph = build_graph(
        series,
        pattern_length=args.l,
        num_angles=args.r,
        seed=args.seed,
        conv_width=lam,
        self_loops=args.keep_self_loops,
        bandwidth_ratio=bandwidth_ratio,
    )
    save_graph(graph, args.out)
    print(f"wrote graph: {args.out} ({len(graph.nodes)} nodes, "
          f"{len(graph.edges)} edges)", file=sys.stderr)
    return 0


def _cmd_score(args) -> int:
    graph = load_graph(args.graph)
    series = load_series(args.series)
    lq = args.lq or graph.pattern_length
    _echo_config("score", {
        "graph": args.graph, "series": args.series, "lq": lq,
        "smooth": not args.no_smooth, "seed": args.seed, "out": args.out or "-",
    })
    profile = normality_profile(graph, series, lq, smooth=not args.no_smooth)
    _write_text(args.out, profile_to_csv(profile))
    return 0


def _read_profile_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "position,normality,anomaly_score":
            raise S2GError(f"{path}: not a profile CSV (bad header {header!r})")
        scores = [float(line.split(",")[1]) for line in fh if line.strip()]
    if not scores:
        raise S2GError(f"{path}: profile CSV holds no rows")
    return np.array(scores)


def _cmd_rank(args) -> int:
    scores = _read_profile_csv(args.profile)
    _echo_config("rank", {
        "profile": args.profile, "k": args.k, "lq": args.lq,
        "seed": args.seed, "out": args.out or "-",
    })
    profile = NormalityProfile(scores=scores, query_length=args.lq, smoothed=True)
    ranking = rank_anomalies(profile, args.k)
    if ranking.truncated:
        print(f"note: only {len(ranking.items)} of {args.k} slots available",
              file=sys.stderr)
    _write_text(args.out, ranking_to_csv(ranking))
    return 0


def _read_ranking_csv(path):
    positions = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "rank,position,score":
            raise S2GError(f"{path}: not a ranking CSV (bad header {header!r})")
        for line in fh:
            if line.strip():
                positions.append(int(line.split(",")[1]))
    return positions


def _cmd_eval(args) -> int:
    positions = _read_ranking_csv(args.ranking)
    annotations = load_annotations(args.annotations)
    _echo_config("eval", {
        "ranking": args.ranking, "annotations": args.annotations, "k": args.k,
        "lq": args.lq, "dataset": args.dataset, "method": args.method,
        "out": args.out or "-",
    })
    report = top_k_accuracy(
        positions[: args.k], annotations, args.k, args.lq,
        dataset=args.dataset, method=args.method,
    )
    _write_text(args.out, json.dumps(report.to_json_dict(), sort_keys=True) + "\n")
    return 0


def _cmd_sweep(args) -> int:
    spec = _load_config_file(args.spec)
    for key in ("series", "annotations", "axis", "values", "l", "lq", "k"):
        if key not in spec:
            raise S2GError(f"sweep spec misses required key {key!r}")
    series = load_series(spec["series"])
    annotations = load_annotations(spec["annotations"])
    config = SweepConfig(
        axis=spec["axis"],
        values=tuple(spec["values"]),
        pattern_length=int(spec["l"]),
        query_length=int(spec["lq"]),
        k=int(spec["k"]),
        num_angles=int(spec.get("r", 50)),
        seed=int(spec.get("seed", args.seed)),
        conv_width=int(spec.get("lambda", 0)),
    )
    _echo_config("sweep", {**spec, "out": args.out or "-"})
    reports = run_sweep(series, annotations, config)
    _write_text(args.out, reports_to_jsonl(reports))
    if args.summary:
        _write_text(args.summary, reports_to_csv(reports))
    return 0


def _cmd_export_graph(args) -> int:
    graph = load_graph(args.graph)
    _echo_config("export-graph", {"graph": args.graph, "fmt": args.fmt,
                                  "out": args.out or "-"})
    if args.fmt == "dot":
        _write_text(args.out, graph_to_dot(graph))
    else:
        from .graph import graph_to_dict

        _write_text(args.out, json.dumps(graph_to_dict(graph), sort_keys=True) + "\n")
    return 0


def _cmd_discord(args) -> int:
    series = load_series(args.series)
    _echo_config("discord", {
        "series": args.series, "l": args.l, "m": args.m, "k": args.k,
        "out": args.out or "-", "ranking_out": args.ranking_out or "",
    })
    profile = nn_profile(series, args.l, args.m)
    _write_text(args.out, nn_profile_to_csv(profile))
    if args.k:
        ranking = top_discords(profile, args.k)
        _write_text(args.ranking_out, discord_ranking_to_csv(ranking))
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "build": _cmd_build,
    "score": _cmd_score,
    "rank": _cmd_rank,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "export-graph": _cmd_export_graph,
    "discord": _cmd_discord,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            args = _reparse_with_config(argv, args.command, args.config)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse --help (0) and usage errors (1)
        return int(exc.code or 0)
    except (S2GError, OSError, ValueError) as exc:
        print(f"s2g: error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    raise SystemExit(main())
