"""Command line front end.

Four subcommands: ``run`` executes the scenarios described by a config
file and writes metrics CSVs plus a JSON summary; ``bench-pvss`` times
the secret sharing primitives; ``analyze-churn`` tabulates the churn
model; ``compare`` runs two variants over the same schedule and emits a
joint per-tick CSV.

Every subcommand writes under an explicit output directory given by
``--output-dir`` or the PVSSBFT_OUTPUT_DIR environment variable, never
the working directory. Exit codes: 0 on success with all safety
assertions holding, 1 on a safety violation, 2 on bad input.

Config arguments accept a file path or the name of a bundled config
(``experiment1`` and ``experiment2``, see the packaged ``configs/``
directory). Seed sweeps can fan out over worker threads with ``--jobs``;
each worker owns one scenario and results are merged in config order, so
output files do not depend on scheduling.
"""

from __future__ import annotations

import argparse
import csv
import os
import random
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from typing import Dict, List, Optional, Sequence

from . import analysis, pvss
from .config import ROUND_TICKS, load_config
from .group import PROFILES, group_setup
from .metrics import (
    LATENCY_COLUMNS,
    VIEW_COLUMNS,
    write_latency_csv,
    write_nodes_csv,
    write_summary_json,
    write_views_csv,
)
from .simnet import ConfigError, SafetyViolation, ScenarioConfig, SimResult, run_scenario

__all__ = ["main"]

ENV_OUTPUT_DIR = "PVSSBFT_OUTPUT_DIR"

BENCH_SIZES = (4, 8, 16, 32, 64)
BENCH_COLUMNS = ["profile", "n", "t", "operation", "median_ms", "repeats"]
CHURN_COLUMNS = [
    "p",
    "n",
    "ex1_steady",
    "ex_phase2",
    "ex_phase3",
    "ex_phase4",
    "p_vote_success",
    "p_confirm_success",
    "tolerance",
]
COMPARE_COLUMNS = [
    "tick",
    "variant_a",
    "height_a",
    "latency_a",
    "awake_a",
    "variant_b",
    "height_b",
    "latency_b",
    "awake_b",
]
DEFAULT_P_GRID = (0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30)


# ---------------------------------------------------------------------------
# shared plumbing


def _resolve_output_dir(arg: Optional[str]) -> str:
    path = arg or os.environ.get(ENV_OUTPUT_DIR)
    if not path:
        raise ConfigError(
            "no output directory: pass --output-dir or set "
            f"{ENV_OUTPUT_DIR} (outputs are never written to the working "
            "directory implicitly)"
        )
    os.makedirs(path, exist_ok=True)
    return path


def _resolve_config_path(path: str) -> str:
    if os.path.exists(path):
        return path
    name = path if path.endswith(".cfg") else f"{path}.cfg"
    bundled = resources.files("pvssbft").joinpath("configs", name)
    if bundled.is_file():
        return str(bundled)
    raise ConfigError(f"config not found: {path}")


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _run_all(configs: Sequence[ScenarioConfig], jobs: int) -> List[SimResult]:
    if jobs > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_scenario, configs))
    return [run_scenario(cfg) for cfg in configs]


def _summary_line(result: SimResult) -> str:
    s = result.summary()
    mean = s["mean_latency_ticks"]
    mean_txt = "n/a" if mean is None else f"{mean:.2f}"
    return (
        f"{s['scenario']}: decided {s['decided']}/{s['views']} views, "
        f"forks {s['forks']}, mean latency {mean_txt} ticks"
    )


# ---------------------------------------------------------------------------
# run


def _cmd_run(args: argparse.Namespace) -> int:
    parsed = load_config(_resolve_config_path(args.config))
    configs = parsed.expand(seed_override=args.seed, profile_override=args.profile)
    outdir = _resolve_output_dir(args.output_dir)
    results = _run_all(configs, args.jobs)

    summaries = []
    views_rows: List[List[str]] = []
    tx_rows: List[List[str]] = []
    for result in results:
        sdir = os.path.join(outdir, result.config.name)
        os.makedirs(sdir, exist_ok=True)
        write_views_csv(result.records, os.path.join(sdir, "views.csv"))
        write_latency_csv(result.tx_records, os.path.join(sdir, "latency.csv"))
        if result.node_records:
            write_nodes_csv(result.node_records, os.path.join(sdir, "nodes.csv"))
        write_summary_json(result.summary(), os.path.join(sdir, "summary.json"))
        summaries.append(result.summary())
        views_rows.extend(r.row() for r in result.records)
        tx_rows.extend(r.row() for r in result.tx_records)
        print(_summary_line(result))

    _write_csv(os.path.join(outdir, "views.csv"), VIEW_COLUMNS, views_rows)
    _write_csv(os.path.join(outdir, "latency.csv"), LATENCY_COLUMNS, tx_rows)
    write_summary_json({"runs": summaries}, os.path.join(outdir, "summary.json"))
    print(f"wrote metrics for {len(results)} run(s) under {outdir}")
    return 0


# ---------------------------------------------------------------------------
# bench-pvss


def _bench_one(profile: str, n: int, repeats: int) -> Dict[str, float]:
    group = group_setup(profile)
    t = n // 2 + 1
    rng = random.Random(f"bench:{profile}:{n}")
    keypairs = {i: pvss.keygen(group, rng) for i in range(1, n + 1)}
    recipients = {i: kp.pk for i, kp in keypairs.items()}
    secret = group.random_scalar(rng)
    deal = pvss.split(group, secret, recipients, t, rng)
    decrypted = {
        i: pvss.decrypt_share(group, keypairs[i], i, deal.enc_shares[i]).value
        for i in list(recipients)[:t]
    }
    if pvss.reconstruct(group, decrypted, t) != pvss.exp_secret(group, secret):
        raise RuntimeError("benchmark sanity check failed: bad reconstruction")

    def timed(fn) -> float:
        samples = []
        for _ in range(repeats):
            start = time.perf_counter()
            fn()
            samples.append((time.perf_counter() - start) * 1000.0)
        return statistics.median(samples)

    def verify_all() -> None:
        ok = all(
            pvss.verify_share(
                group,
                recipients[i],
                deal.commitments,
                i,
                deal.enc_shares[i],
                deal.share_proofs[i],
            )
            for i in recipients
        )
        if not ok:
            raise RuntimeError("benchmark sanity check failed: share rejected")

    return {
        "split": timed(
            lambda: pvss.split(group, group.random_scalar(rng), recipients, t, rng)
        ),
        "verify-all-shares": timed(verify_all),
        "reconstruct": timed(lambda: pvss.reconstruct(group, decrypted, t)),
    }


def _cmd_bench(args: argparse.Namespace) -> int:
    outdir = _resolve_output_dir(args.output_dir)
    sizes = args.sizes or list(BENCH_SIZES)
    rows: List[List[object]] = []
    for n in sizes:
        if n < 2:
            raise ConfigError(f"benchmark size must be at least 2, got {n}")
        medians = _bench_one(args.profile, n, args.repeats)
        t = n // 2 + 1
        print(
            f"n={n} t={t} [{args.profile}] "
            + " ".join(f"{op} {ms:.3f} ms" for op, ms in medians.items())
        )
        for op, ms in medians.items():
            rows.append([args.profile, n, t, op, f"{ms:.6f}", args.repeats])
    path = os.path.join(outdir, "pvss_bench.csv")
    _write_csv(path, BENCH_COLUMNS, rows)
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# analyze-churn


def _cmd_analyze(args: argparse.Namespace) -> int:
    outdir = _resolve_output_dir(args.output_dir)
    grid = args.p or list(DEFAULT_P_GRID)
    rows: List[List[object]] = []
    for p in grid:
        params = analysis.ChurnParams(n=args.n, p=p)
        steady = analysis.steady_state_ex1(params)
        phases = analysis.expected_actives(params, steady)
        p_vote, p_confirm = analysis.success_probabilities(params)
        rows.append(
            [
                f"{p:.6g}",
                args.n,
                f"{steady:.6f}",
                f"{phases.ex_phase[1]:.6f}",
                f"{phases.ex_phase[2]:.6f}",
                f"{phases.ex_phase[3]:.6f}",
                f"{p_vote:.6g}",
                f"{p_confirm:.6g}",
                f"{analysis.round_offline_tolerance(p):.6g}",
            ]
        )
        print(
            f"p={p:g} n={args.n}: steady actives {steady:.2f}, "
            f"vote success {p_vote:.4f}, confirm success {p_confirm:.4f}"
        )
    path = os.path.join(outdir, "churn.csv")
    _write_csv(path, CHURN_COLUMNS, rows)
    print(f"max tolerable per-second flip probability: {analysis.max_tolerable_p():.6f}")
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# compare


def _tick_heights(result: SimResult) -> List[object]:
    """Chain height per tick; steps at the final tick of each round."""
    rt = ROUND_TICKS[result.config.variant]
    heights: List[object] = []
    h = 0
    for rec in result.records:
        heights.extend([h] * (rt - 1))
        h = rec.chain_len_max
        heights.append(h)
    return heights


def _tick_awake(result: SimResult) -> List[object]:
    rt = ROUND_TICKS[result.config.variant]
    awake: List[object] = []
    for rec in result.records:
        awake.extend([rec.awake] * rt)
    return awake


def _tick_latency(result: SimResult) -> List[object]:
    """Decision latency attributed to the tick where the decision lands.

    BFT variants report the view latency at the view's final tick. The
    chain baseline has no per-slot decision latency; it reports the mean
    confirmation latency of the transactions confirmed at each tick.
    """
    rt = ROUND_TICKS[result.config.variant]
    total = len(result.records) * rt
    latency: List[object] = [""] * total
    if result.config.variant == "longest-chain":
        by_tick: Dict[int, List[int]] = {}
        for tx in result.tx_records:
            if tx.latency_ticks is not None:
                by_tick.setdefault(tx.decide_tick, []).append(tx.latency_ticks)
        for tick, values in by_tick.items():
            if tick < total:
                latency[tick] = f"{statistics.fmean(values):.1f}"
    else:
        for rec in result.records:
            if rec.latency_ticks is not None:
                latency[rec.view * rt + rt - 1] = str(rec.latency_ticks)
    return latency


def _cmd_compare(args: argparse.Namespace) -> int:
    outdir = _resolve_output_dir(args.output_dir)
    if len(args.configs) > 2:
        raise ConfigError("compare takes one or two configs")
    if len(args.configs) == 1:
        parsed = load_config(_resolve_config_path(args.configs[0]))
        configs = parsed.expand(seed_override=args.seed, profile_override=args.profile)
        if len(configs) != 2:
            raise ConfigError(
                "compare with one config needs it to expand to exactly two "
                f"runs, got {len(configs)}"
            )
    else:
        sides = [load_config(_resolve_config_path(p)) for p in args.configs]
        if sides[0].schedule_key() != sides[1].schedule_key():
            raise ConfigError("schedule mismatch: churn stages differ between configs")
        configs = []
        for side in sides:
            expanded = side.expand(
                seed_override=args.seed, profile_override=args.profile
            )
            if len(expanded) != 1:
                raise ConfigError(
                    "compare needs single-run configs on each side, got "
                    f"{len(expanded)} from {side.base.name}"
                )
            configs.append(expanded[0])
    ticks = [cfg.views * ROUND_TICKS[cfg.variant] for cfg in configs]
    if ticks[0] != ticks[1]:
        raise ConfigError(
            f"schedule mismatch: {ticks[0]} ticks vs {ticks[1]} ticks"
        )

    result_a, result_b = _run_all(configs, jobs=1)
    series = {
        side: (_tick_heights(res), _tick_latency(res), _tick_awake(res))
        for side, res in (("a", result_a), ("b", result_b))
    }
    rows = []
    for tick in range(ticks[0]):
        ha, la, wa = series["a"]
        hb, lb, wb = series["b"]
        rows.append(
            [
                tick,
                result_a.config.variant,
                ha[tick],
                la[tick],
                wa[tick],
                result_b.config.variant,
                hb[tick],
                lb[tick],
                wb[tick],
            ]
        )
    path = os.path.join(outdir, "compare.csv")
    _write_csv(path, COMPARE_COLUMNS, rows)
    print(_summary_line(result_a))
    print(_summary_line(result_b))
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list: {text!r}") from exc


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list: {text!r}") from exc


def _add_output_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "-o",
        "--output-dir",
        default=None,
        help=f"directory for all outputs (or set {ENV_OUTPUT_DIR})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvssbft",
        description="PVSS-backed BFT consensus: simulator, benchmarks, analytics.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_run = sub.add_parser("run", help="run the scenarios described by a config file")
    p_run.add_argument("config", help="config path or bundled name (experiment1, experiment2)")
    p_run.add_argument("--seed", type=int, default=None, help="override the seed list")
    p_run.add_argument(
        "--profile", choices=sorted(PROFILES), default=None, help="override group profile"
    )
    p_run.add_argument("--jobs", type=int, default=1, help="worker threads for sweeps")
    _add_output_flag(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_bench = sub.add_parser("bench-pvss", help="time split/verify/reconstruct")
    p_bench.add_argument(
        "--profile", choices=sorted(PROFILES), default="std256",
        help="group profile (default std256)",
    )
    p_bench.add_argument(
        "--sizes", type=_int_list, default=None,
        help=f"comma-separated committee sizes (default {','.join(map(str, BENCH_SIZES))})",
    )
    p_bench.add_argument("--repeats", type=int, default=5, help="samples per median")
    _add_output_flag(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    p_churn = sub.add_parser("analyze-churn", help="tabulate churn analytics")
    p_churn.add_argument("--n", type=int, default=40, help="node count")
    p_churn.add_argument(
        "--p", type=_float_list, default=None,
        help="comma-separated per-second flip probabilities",
    )
    _add_output_flag(p_churn)
    p_churn.set_defaults(func=_cmd_analyze)

    p_cmp = sub.add_parser(
        "compare", help="run two variants over one schedule, emit joint per-tick CSV"
    )
    p_cmp.add_argument(
        "configs", nargs="+",
        help="one config expanding to two runs, or two single-run configs",
    )
    p_cmp.add_argument("--seed", type=int, default=None, help="override the seed list")
    p_cmp.add_argument(
        "--profile", choices=sorted(PROFILES), default=None, help="override group profile"
    )
    _add_output_flag(p_cmp)
    p_cmp.set_defaults(func=_cmd_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SafetyViolation as exc:
        print(f"safety violation: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
