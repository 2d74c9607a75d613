"""Evaluation metrics over crawl traces, report schemas, and plot data.

Report CSV columns, one row per (run, fraction)::

    policy,site,seed,fraction,requests_pct,nontarget_volume_pct,
    final_targets,final_budget,requests,saved_requests_pct,lost_targets_pct

Percentages are printed with four decimals. ``unreached`` marks a fraction the
run never attained; ``n/a`` marks a metric with no denominator (a site without
targets, or no paired early-stop run).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .engine import CrawlTrace

UNREACHED = math.inf
UNREACHED_TEXT = "unreached"
NA_TEXT = "n/a"

REPORT_COLUMNS = (
    "policy",
    "site",
    "seed",
    "fraction",
    "requests_pct",
    "nontarget_volume_pct",
    "final_targets",
    "final_budget",
    "requests",
    "saved_requests_pct",
    "lost_targets_pct",
)
PLOT_COLUMNS = ("request", "t", "budget", "targets", "target_volume", "nontarget_volume")


@dataclass(frozen=True)
class Reference:
    """Totals of a complete crawl of the site, used as denominators."""

    targets: int
    target_volume: int
    requests: int
    nontarget_volume: int

    @classmethod
    def from_manifest(cls, manifest: Mapping) -> Reference:
        return cls(
            int(manifest["targets"]),
            int(manifest["target_bytes"]),
            int(manifest["reference_requests"]),
            int(manifest["reference_nontarget_bytes"]),
        )

    @classmethod
    def from_trace(cls, trace: CrawlTrace) -> Reference:
        """Reference taken from an exhaustive crawl (only its GETs count as requests)."""
        gets = trace.gets
        return cls(
            trace.final_targets,
            sum(r.bytes_in for r in gets if r.target),
            len(gets),
            sum(r.bytes_in for r in gets if not r.target),
        )


def needed(total: int, f: float) -> int:
    return max(1, math.ceil(f * total - 1e-9))


def requests_to_fraction(trace: CrawlTrace, total_targets: int, f: float, reference_requests: int) -> float | None:
    """Requests issued until ``f`` of the targets were held, as % of the reference crawl.

    ``None`` when the site has no targets; ``UNREACHED`` when the trace never
    gets there.
    """
    if total_targets <= 0:
        return None
    goal = needed(total_targets, f)
    for i, rec in enumerate(trace.records, 1):
        if rec.targets >= goal:
            return 100.0 * i / reference_requests
    return UNREACHED


def nontarget_volume_at_fraction(
    trace: CrawlTrace, total_target_volume: int, f: float, reference_nontarget_volume: int
) -> float | None:
    """Non-target bytes received before ``f`` of the target volume, as % of the reference."""
    if total_target_volume <= 0 or reference_nontarget_volume <= 0:
        return None
    goal = f * total_target_volume
    got = 0
    waste = 0
    for rec in trace.records:
        if rec.target:
            got += rec.bytes_in
            if got >= goal - 1e-9:
                return 100.0 * waste / reference_nontarget_volume
        else:
            waste += rec.bytes_in
    return UNREACHED


def early_stop_report(with_stop: CrawlTrace, without_stop: CrawlTrace) -> tuple[float, float]:
    """(saved requests %, lost targets %) of a stopped run against its unstopped twin."""
    base_req = without_stop.requests
    base_tgt = without_stop.final_targets
    saved = 100.0 * (1.0 - with_stop.requests / base_req) if base_req else 0.0
    lost = 100.0 * (1.0 - with_stop.final_targets / base_tgt) if base_tgt else 0.0
    return saved, lost


@dataclass
class RunReport:
    policy: str
    site: str
    seed: int
    requests_to_fraction: dict[float, float | None] = field(default_factory=dict)
    nontarget_volume_at_fraction: dict[float, float | None] = field(default_factory=dict)
    final_targets: int = 0
    final_budget: float = 0.0
    requests: int = 0
    saved_requests: float | None = None
    lost_targets: float | None = None

    def rows(self) -> list[dict[str, str]]:
        out = []
        for f in sorted(self.requests_to_fraction):
            out.append(
                {
                    "policy": self.policy,
                    "site": self.site,
                    "seed": str(self.seed),
                    "fraction": _fmt_fraction(f),
                    "requests_pct": _fmt(self.requests_to_fraction[f]),
                    "nontarget_volume_pct": _fmt(self.nontarget_volume_at_fraction.get(f)),
                    "final_targets": str(self.final_targets),
                    "final_budget": _fmt_number(self.final_budget),
                    "requests": str(self.requests),
                    "saved_requests_pct": _fmt(self.saved_requests),
                    "lost_targets_pct": _fmt(self.lost_targets),
                }
            )
        return out

    def to_json(self) -> dict:
        d = asdict(self)
        d["requests_to_fraction"] = {_fmt_fraction(k): _json_value(v) for k, v in self.requests_to_fraction.items()}
        d["nontarget_volume_at_fraction"] = {
            _fmt_fraction(k): _json_value(v) for k, v in self.nontarget_volume_at_fraction.items()
        }
        d["saved_requests"] = _json_value(self.saved_requests)
        d["lost_targets"] = _json_value(self.lost_targets)
        return d


def _fmt_fraction(f: float) -> str:
    return f"{f:g}"


def _fmt(v: float | None) -> str:
    if v is None:
        return NA_TEXT
    if math.isinf(v):
        return UNREACHED_TEXT
    return f"{v:.4f}"


def _fmt_number(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _json_value(v: float | None) -> float | str | None:
    if v is None:
        return None
    if math.isinf(v):
        return UNREACHED_TEXT
    return round(v, 4)


def _parse(text: str) -> float | None:
    if text == NA_TEXT:
        return None
    if text == UNREACHED_TEXT:
        return UNREACHED
    return float(text)


def evaluate_trace(
    trace: CrawlTrace,
    ref: Reference,
    policy: str = "",
    site: str = "",
    seed: int = 0,
    fractions: Iterable[float] = (0.9,),
    unstopped: CrawlTrace | None = None,
) -> RunReport:
    fractions = tuple(fractions)
    report = RunReport(
        policy,
        site,
        seed,
        {f: requests_to_fraction(trace, ref.targets, f, ref.requests) for f in fractions},
        {f: nontarget_volume_at_fraction(trace, ref.target_volume, f, ref.nontarget_volume) for f in fractions},
        trace.final_targets,
        trace.final_budget,
        trace.requests,
    )
    if unstopped is not None:
        report.saved_requests, report.lost_targets = early_stop_report(trace, unstopped)
    return report


def reports_to_csv(reports: Iterable[RunReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerows(r.rows())
    return buf.getvalue()


def reports_from_csv(text: str) -> list[RunReport]:
    reports: dict[tuple[str, str, str], RunReport] = {}
    for row in csv.DictReader(io.StringIO(text)):
        key = (row["policy"], row["site"], row["seed"])
        rep = reports.get(key)
        if rep is None:
            budget = float(row["final_budget"])
            rep = reports[key] = RunReport(
                row["policy"],
                row["site"],
                int(row["seed"]),
                final_targets=int(row["final_targets"]),
                final_budget=budget,
                requests=int(row["requests"]),
                saved_requests=_parse(row["saved_requests_pct"]),
                lost_targets=_parse(row["lost_targets_pct"]),
            )
        f = float(row["fraction"])
        rep.requests_to_fraction[f] = _parse(row["requests_pct"])
        rep.nontarget_volume_at_fraction[f] = _parse(row["nontarget_volume_pct"])
    return list(reports.values())


def reports_to_json(reports: Iterable[RunReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2) + "\n"


def plot_rows(trace: CrawlTrace) -> list[dict[str, float]]:
    """Cumulative curves, one row per request, for targets-vs-budget charts."""
    rows = []
    tv = nv = 0
    for i, rec in enumerate(trace.records, 1):
        if rec.target:
            tv += rec.bytes_in
        else:
            nv += rec.bytes_in
        rows.append(
            {
                "request": i,
                "t": rec.t,
                "budget": rec.budget,
                "targets": rec.targets,
                "target_volume": tv,
                "nontarget_volume": nv,
            }
        )
    return rows


def plot_data_csv(trace: CrawlTrace) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=PLOT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in plot_rows(trace):
        writer.writerow({k: _fmt_number(v) for k, v in row.items()})
    return buf.getvalue()


def load_reference(path: str | Path) -> Reference:
    """Reference from a site manifest (JSON) or an exhaustive crawl trace (JSONL)."""
    path = Path(path)
    if path.suffix == ".json":
        return Reference.from_manifest(json.loads(path.read_text(encoding="utf-8")))
    return Reference.from_trace(CrawlTrace.read(path))
