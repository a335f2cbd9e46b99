"""Artifact writers. Every file carries the resolved configuration.

CSV files start with ``#``-prefixed comment lines holding the configuration
as JSON, followed by a header row. Floats use 17 significant digits so they
reload bit-exactly.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .harness import RunEntry, RunReport, TraceResult, aggregate


def fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _comment_block(meta: dict) -> str:
    text = json.dumps(meta, sort_keys=True)
    return "".join(f"# {line}\n" for line in text.splitlines())


def _csv_text(meta: dict, header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(_comment_block(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


RUN_COLUMNS = [
    "spectrum_index", "spectrum_seed", "family", "agent_seed", "initial_infidelity",
    "best_infidelity", "best_episode", "episodes_completed", "aborted", "action_word",
]


def runs_csv(report: RunReport) -> str:
    rows = (
        [r.spectrum_index, r.spectrum_seed, r.family, r.agent_seed, r.initial_infidelity,
         r.best_infidelity, r.best_episode, r.episodes_completed, r.aborted or "", r.best_word]
        for r in report.runs
    )
    return _csv_text({"config": report.config, "seed_rule": report.seed_rule}, RUN_COLUMNS, rows)


def read_csv(path) -> tuple[dict, list[dict]]:
    """Return the embedded metadata and the data rows of a CSV artifact."""
    lines = Path(path).read_text().splitlines()
    meta_lines = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    meta = json.loads("\n".join(meta_lines)) if meta_lines else {}
    return meta, list(csv.DictReader(body))


def runs_from_csv(path) -> tuple[dict, list[RunEntry]]:
    meta, rows = read_csv(path)
    runs = [
        RunEntry(
            spectrum_index=int(r["spectrum_index"]),
            spectrum_seed=int(r["spectrum_seed"]),
            family=r["family"],
            agent_seed=int(r["agent_seed"]),
            initial_infidelity=float(r["initial_infidelity"]),
            best_infidelity=float(r["best_infidelity"]),
            best_episode=int(r["best_episode"]),
            best_word=r["action_word"],
            best_times=[],
            episodes_completed=int(r["episodes_completed"]),
            aborted=r["aborted"] or None,
        )
        for r in rows
    ]
    return meta, runs


def report_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def summary_text(config: dict, aggregates: dict, quantile_rule: str) -> str:
    out = ["pulse-sequence benchmark summary", ""]
    out.append(f"quantiles: {quantile_rule}")
    out.append("")
    for fam, agg in aggregates.items():
        out.append(f"[{fam}] completed={agg['completed_runs']} aborted={agg['aborted_runs']} "
                   f"improved={agg['improved_runs']}")
        for label in ("initial", "optimized"):
            s = agg[label]
            if s.get("count"):
                out.append(
                    f"  {label:9s} 1-p_avg  min={s['min']:.6g} q1={s['q1']:.6g} median={s['median']:.6g} "
                    f"q3={s['q3']:.6g} max={s['max']:.6g} mean={s['mean']:.6g}"
                )
        if "median_reduction_factor" in agg:
            out.append(f"  reduction factor: median {agg['median_reduction_factor']:.4f}, "
                       f"mean {agg['mean_reduction_factor']:.4f}")
    out.append("")
    out.append("resolved configuration:")
    out.append(json.dumps(config, indent=2, sort_keys=True))
    return "\n".join(out) + "\n"


def summary_from_runs(config: dict, runs, quantile_rule: str) -> str:
    families = list(dict.fromkeys(r.family for r in runs))
    return summary_text(config, aggregate(runs, families), quantile_rule)


def trace_csv(trace: TraceResult, meta: dict) -> str:
    n = len(trace.records[0].times)
    header = ["step", "action"] + [f"t_{j}" for j in range(1, n + 1)] + ["infidelity"]
    rows = ([r.step, r.action, *r.times, r.infidelity] for r in trace.records)
    return _csv_text(dict(meta, word=trace.word), header, rows)


def filter_csv(trace: TraceResult, meta: dict) -> str:
    def rows():
        for step in sorted(trace.filters):
            omega, values = trace.filters[step]
            for w, f in zip(omega, values):
                yield [step, float(w), float(f)]

    return _csv_text(dict(meta, word=trace.word), ["step", "omega", "F"], rows())


def write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
