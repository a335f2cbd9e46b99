"""Command-line driver: ``groupdd {gen-spectra,train,benchmark,trace,report}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import reporting
from .config import PRESETS, ConfigError, load_config_file, resolve
from .harness import (
    QUANTILE_RULE,
    SEED_RULE,
    benchmark,
    episode_config_for,
    spectrum_for,
    derive_seed,
    AGENT_STREAM,
    FAMILY_ORDER,
    train_one,
    trace_episode,
)
from .qnet import save_checkpoint
from .spectra import RNG_NAME, save_spectrum
from .thompson import format_word, parse_word

log = logging.getLogger("groupdd")


class CliError(Exception):
    def __init__(self, kind: str, message: str, status: int = 1):
        super().__init__(message)
        self.kind = kind
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", f"{self.prog}: {message}", status=2)


def _families(text: str | None):
    if text is None:
        return None
    return [t.strip().lower() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="groupdd", description="Learn dynamical-decoupling pulse timings with DDQN.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON run configuration (see groupdd.config.SCHEMA)")
        p.add_argument("--out", type=Path, default=Path("runs"), help="output directory (default: runs)")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--jobs", type=int, help="worker processes")
        p.add_argument("--preset", choices=sorted(PRESETS), default="desk", help="scale preset (default: desk)")
        p.add_argument("--family", help="initial sequence family/families, comma separated: pdd,cpmg,udd,cdd,prdd")
        p.add_argument("--episodes", type=int, help="episodes per run")
        p.add_argument("--spectra", type=int, help="number of random spectra")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("gen-spectra", help="write the random test spectra and a manifest")
    common(p)
    p = sub.add_parser("train", help="train one agent on one spectrum")
    common(p)
    p.add_argument("--spectrum-index", type=int, default=0)
    p = sub.add_parser("benchmark", help="train on every (spectrum, family) pair and summarise")
    common(p)
    p = sub.add_parser("trace", help="replay an action word and export per-step data")
    common(p)
    p.add_argument("--spectrum-index", type=int, default=0)
    p.add_argument("--word", help="space separated actions, e.g. 'x0 id x1^-1 ...'")
    p.add_argument("--runs", type=Path, help="runs.csv from a benchmark; replays its best word")
    p = sub.add_parser("report", help="re-aggregate a runs.csv into a summary")
    p.add_argument("--runs", type=Path, required=True)
    p.add_argument("--out", type=Path, help="write summary.txt here")
    return parser


def _resolve(args):
    file_data = load_config_file(args.config) if args.config else None
    overrides = {
        "master_seed": args.seed,
        "jobs": args.jobs,
        "families": _families(args.family),
        "episodes": args.episodes,
        "n_spectra": args.spectra,
    }
    return resolve(args.preset, file_data, overrides)


def cmd_gen_spectra(args) -> None:
    cfg = _resolve(args)
    outdir = _mk(args.out / "spectra")
    entries = []
    for i in range(cfg.n_spectra):
        spec = spectrum_for(cfg, i)
        name = f"spectrum_{i:03d}.json"
        save_spectrum(spec, outdir / name)
        entries.append({"index": i, "file": name, "seed": spec.seed})
    manifest = {"config": cfg.to_dict(), "seed_rule": SEED_RULE, "rng": RNG_NAME, "spectra": entries}
    reporting.write(outdir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"gen-spectra: wrote {len(entries)} spectra to {outdir}")


def _mk(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_train(args) -> None:
    cfg = _resolve(args)
    family = cfg.families[0]
    index = args.spectrum_index
    env_config = episode_config_for(cfg, family, index)
    seed = derive_seed(cfg.master_seed, AGENT_STREAM, index, FAMILY_ORDER.index(family))
    hyper = replace(cfg.agent, episodes=cfg.episodes, steps_per_episode=cfg.steps_per_episode)
    res = train_one(env_config, hyper, seed)
    outdir = _mk(args.out / "train")
    meta = {"config": cfg.to_dict(), "spectrum_index": index, "family": family, "agent_seed": seed}
    summary = {k: v for k, v in asdict(res).items() if k not in ("online", "target")}
    reporting.write(outdir / "result.json", json.dumps(dict(meta, result=summary), indent=2, sort_keys=True) + "\n")
    rows = zip(range(len(res.rewards)), res.rewards, res.infidelities, res.epsilons)
    reporting.write(
        outdir / "episodes.csv",
        reporting._csv_text(meta, ["episode", "reward", "infidelity", "epsilon"], rows),
    )
    if res.online is not None:
        save_checkpoint(
            outdir / "checkpoint.bin", res.online, res.target,
            dict(meta, hyperparameters=hyper.to_dict(), episodes=res.episodes_completed, seed=seed),
        )
    if res.best_word:
        tr = trace_episode(env_config, res.best_word)
        reporting.write(outdir / "best_trace.csv", reporting.trace_csv(tr, meta))
        reporting.write(outdir / "best_filters.csv", reporting.filter_csv(tr, meta))
    print(
        f"train: spectrum {index} {family}: 1-p_avg {res.initial_infidelity:.6g} -> "
        f"{res.best_infidelity:.6g} (episode {res.best_episode})"
    )
    if res.aborted:
        raise CliError("aborted", res.aborted)


def cmd_benchmark(args) -> None:
    cfg = _resolve(args)
    report = benchmark(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    reporting.write(args.out / "report.json", reporting.report_json(report))
    reporting.write(args.out / "runs.csv", reporting.runs_csv(report))
    reporting.write(
        args.out / "summary.txt", reporting.summary_text(report.config, report.aggregates, QUANTILE_RULE)
    )
    for r in report.runs:
        print(
            f"benchmark: spectrum {r.spectrum_index} {r.family}: 1-p_avg {r.initial_infidelity:.6g} -> "
            f"{r.best_infidelity:.6g} (episode {r.best_episode})"
        )


def cmd_trace(args) -> None:
    cfg = _resolve(args)
    family = cfg.families[0]
    index = args.spectrum_index
    word = args.word
    if args.runs is not None:
        _, runs = reporting.runs_from_csv(args.runs)
        match = [r for r in runs if r.spectrum_index == index and r.family == family]
        if not match:
            raise CliError("lookup", f"no run for spectrum {index} / {family} in {args.runs}")
        word = match[0].best_word
    if word is None:
        word = " ".join(["id"] * cfg.steps_per_episode)
    try:
        actions = parse_word(word)
    except ValueError as exc:
        raise CliError("usage", str(exc), status=2) from exc
    env_config = episode_config_for(cfg, family, index)
    tr = trace_episode(env_config, actions)
    meta = {"config": cfg.to_dict(), "spectrum_index": index, "family": family}
    outdir = _mk(args.out / "trace")
    reporting.write(outdir / "trace.csv", reporting.trace_csv(tr, meta))
    reporting.write(outdir / "filters.csv", reporting.filter_csv(tr, meta))
    print(
        f"trace: spectrum {index} {family}: 1-p_avg {tr.records[0].infidelity:.6g} -> "
        f"{tr.terminal_infidelity:.6g} word '{format_word(actions)}'"
    )


def cmd_report(args) -> None:
    meta, runs = reporting.runs_from_csv(args.runs)
    text = reporting.summary_from_runs(meta.get("config", {}), runs, QUANTILE_RULE)
    if args.out:
        reporting.write(Path(args.out) / "summary.txt", text)
    sys.stdout.write(text)


COMMANDS = {
    "gen-spectra": cmd_gen_spectra,
    "train": cmd_train,
    "benchmark": cmd_benchmark,
    "trace": cmd_trace,
    "report": cmd_report,
}


def run_cli(argv=None) -> int:
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        logging.basicConfig(
            level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
        )
        COMMANDS[args.command](args)
    except CliError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}), file=sys.stderr)
        return exc.status
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
