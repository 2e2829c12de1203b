"""Result serialization: machine-readable reports plus plot-data tables.

All dollar amounts are carried in $ internally and rendered in M$ only at
output time. Report JSON is written with sorted keys and no timestamps so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import WindcommitError
from .simulator import ComparisonSummary, SimulationReport


@dataclass
class RunArtifacts:
    report_path: Path
    audit_log_path: Path | None
    plot_paths: list


def usd_to_musd(v: float) -> float:
    return v / 1e6


def format_metric(v: float) -> str:
    """Two-decimal rendering with trailing zeros trimmed (187.68, 3.04, 0)."""
    return f"{round(v, 2):g}"


def _step_dict(rec):
    # solve wall time is deliberately omitted: reports must be reproducible
    # byte-for-byte across identical runs.
    return {
        "step": rec.step,
        "commitment": [bool(v) for v in rec.commitment],
        "output_gw": [float(v) for v in rec.output],
        "wind_gw": rec.wind,
        "demand_gw": rec.demand,
        "load_curtail_gw": rec.load_curtail,
        "wind_curtail_gw": rec.wind_curtail,
        "cost_usd": rec.cost,
        "probabilities": [float(p) for p in rec.probabilities],
        "provenance": rec.provenance,
    }


def report_dict(report: SimulationReport, config_echo=None):
    return {
        "mode": report.mode,
        "trial_id": report.trial_id,
        "seed": report.seed,
        "dt_hours": report.dt,
        "totals": {
            "cost_usd": report.total_cost,
            "cost_musd": usd_to_musd(report.total_cost),
            "load_curtail_gwh": report.load_curtail_gwh,
            "wind_curtail_gwh": report.wind_curtail_gwh,
        },
        "steps": [_step_dict(r) for r in report.steps],
        "config": config_echo or {},
    }


def _metric_dict(m):
    return {"mean": m.mean, "std": m.std, "min": m.min, "max": m.max, "cv": m.cv}


def comparison_dict(summary: ComparisonSummary, config_echo=None):
    return {
        "baseline": {
            "cost_musd": usd_to_musd(summary.baseline_cost),
            "load_curtail_gwh": summary.baseline_load_curtail,
            "wind_curtail_gwh": summary.baseline_wind_curtail,
        },
        "trials": {
            "cost_musd": _metric_dict(MetricInMusd(summary.cost)),
            "load_curtail_gwh": _metric_dict(summary.load_curtail),
            "wind_curtail_gwh": _metric_dict(summary.wind_curtail),
            "success_rate": summary.success_rate,
            "count": len(summary.trial_costs),
        },
        "config": config_echo or {},
    }


class MetricInMusd:
    """View of a cost MetricStats converted from $ to M$ (CV is unitless)."""

    def __init__(self, stats):
        self.mean = usd_to_musd(stats.mean)
        self.std = usd_to_musd(stats.std)
        self.min = usd_to_musd(stats.min)
        self.max = usd_to_musd(stats.max)
        self.cv = stats.cv


def _dump_json(payload, path):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def summary_table(cost_usd, load_curtail_gwh, wind_curtail_gwh) -> str:
    """One comparative-results row: total cost (M$), curtailments (GWh)."""
    return ", ".join([format_metric(usd_to_musd(cost_usd)),
                      format_metric(load_curtail_gwh),
                      format_metric(wind_curtail_gwh)])


def write_report(report: SimulationReport, out_dir, config_echo=None,
                 audit_log_path=None) -> RunArtifacts:
    """Write a single-run report and its per-step cost plot table."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise WindcommitError(f"cannot create output directory {out}: {e}") from e
    report_path = out / "report.json"
    _dump_json(report_dict(report, config_echo), report_path)

    steps_path = out / "step_costs.csv"
    lines = ["step,cost_musd,load_curtail_gw,wind_curtail_gw"]
    for rec in report.steps:
        lines.append(f"{rec.step},{usd_to_musd(rec.cost)!r},"
                     f"{rec.load_curtail!r},{rec.wind_curtail!r}")
    steps_path.write_text("\n".join(lines) + "\n")

    summary_path = out / "summary.csv"
    summary_path.write_text(
        "total_cost_musd,load_curtail_gwh,wind_curtail_gwh\n"
        + summary_table(report.total_cost, report.load_curtail_gwh,
                        report.wind_curtail_gwh) + "\n")
    return RunArtifacts(report_path, Path(audit_log_path) if audit_log_path else None,
                        [steps_path, summary_path])


def write_comparison(summary: ComparisonSummary, baseline: SimulationReport,
                     trials, out_dir, config_echo=None,
                     audit_log_path=None) -> RunArtifacts:
    """Write the trials comparison: stats JSON, the per-step cost envelope,
    and the trial total-cost distribution table."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise WindcommitError(f"cannot create output directory {out}: {e}") from e
    payload = comparison_dict(summary, config_echo)
    payload["baseline_report"] = report_dict(baseline)
    payload["trial_reports"] = [report_dict(t) for t in trials]
    report_path = out / "comparison.json"
    _dump_json(payload, report_path)

    envelope_path = out / "cost_envelope.csv"
    lines = ["step,min_musd,mean_musd,max_musd,baseline_musd"]
    for step, lo, mean, hi, base in summary.step_envelope:
        lines.append(f"{step},{usd_to_musd(lo)!r},{usd_to_musd(mean)!r},"
                     f"{usd_to_musd(hi)!r},{usd_to_musd(base)!r}")
    envelope_path.write_text("\n".join(lines) + "\n")

    dist_path = out / "trial_costs.csv"
    lines = ["trial,total_cost_musd,baseline_musd"]
    for i, c in enumerate(summary.trial_costs):
        lines.append(f"{i},{usd_to_musd(c)!r},{usd_to_musd(summary.baseline_cost)!r}")
    dist_path.write_text("\n".join(lines) + "\n")
    return RunArtifacts(report_path, Path(audit_log_path) if audit_log_path else None,
                        [envelope_path, dist_path])
