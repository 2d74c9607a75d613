
import pytest
from hypothesis import given, strategies as st

from minisite import ROOT, html, run_mini, target
from sbcrawl.baselines import OmniscientPolicy
from sbcrawl.engine import CrawlTrace, StepRecord
from sbcrawl.metrics import (
    NA_TEXT,
    UNREACHED,
    REPORT_COLUMNS,
    Reference,
    early_stop_report,
    evaluate_trace,
    needed,
    nontarget_volume_at_fraction,
    plot_data_csv,
    plot_rows,
    reports_from_csv,
    reports_to_csv,
    reports_to_json,
    requests_to_fraction,
)


def rec(i, targets, target=False, bytes_in=10, method="GET"):
    return StepRecord(i, method, f"http://s.org/{i}", None, 200, None, bytes_in, 50, None, targets, float(i), target, "frontier")


def trace_of(flags, sizes=None):
    """Trace from a list of booleans (is the i-th GET a target)."""
    sizes = sizes or [10] * len(flags)
    out, y = [], 0
    for i, (f, s) in enumerate(zip(flags, sizes), 1):
        y += f
        out.append(rec(i, y, f, s))
    return CrawlTrace(out)


def test_needed_is_ceiling():
    assert needed(10, 0.9) == 9 and needed(11, 0.9) == 10 and needed(3, 0.1) == 1


def test_requests_to_fraction_counts_every_request():
    t = trace_of([False, True, False, True, True])
    assert requests_to_fraction(t, 3, 0.9, 10) == 50.0
    assert requests_to_fraction(t, 3, 0.5, 10) == 40.0


def test_unreached_and_not_applicable():
    t = trace_of([False, True])
    assert requests_to_fraction(t, 5, 0.9, 10) == UNREACHED
    assert requests_to_fraction(t, 0, 0.9, 10) is None
    assert nontarget_volume_at_fraction(t, 0, 0.9, 100) is None
    assert nontarget_volume_at_fraction(t, 1000, 0.9, 100) == UNREACHED


def test_omniscient_exact_value():
    k = 10
    pages = {"/": html(*(f"/f{i}.csv" for i in range(k)))}
    pages.update({f"/f{i}.csv": target() for i in range(k)})
    urls = [ROOT + f"f{i}.csv" for i in range(k)]
    run, _ = run_mini(pages, OmniscientPolicy(urls))
    # the reference crawl is the root plus the k targets
    assert requests_to_fraction(run.trace, k, 0.9, k + 1) == pytest.approx(100 * 9 / 11)


def test_star_site_volume_is_root_share():
    pages = {"/": html("/a.csv", "/b.csv"), "/a.csv": target(size=100), "/b.csv": target(size=100)}
    run, _ = run_mini(pages)
    ref = Reference.from_trace(run.trace)
    root_bytes = run.trace.records[0].bytes_in
    assert ref.nontarget_volume == root_bytes
    for f in (0.1, 0.5, 1.0):
        assert nontarget_volume_at_fraction(run.trace, ref.target_volume, f, ref.nontarget_volume) == 100.0


def test_nontarget_volume_counts_waste_before_goal():
    t = trace_of([False, True, False, True], sizes=[30, 100, 70, 100])
    assert nontarget_volume_at_fraction(t, 200, 0.5, 100) == 30.0
    assert nontarget_volume_at_fraction(t, 200, 1.0, 100) == 100.0


def test_reference_ignores_heads():
    t = trace_of([False, True])
    t.records.insert(1, rec(1, 0, method="HEAD", bytes_in=5))
    ref = Reference.from_trace(t)
    assert ref.requests == 2 and ref.nontarget_volume == 10


def test_early_stop_report():
    full = trace_of([True] * 5 + [False] * 15)
    assert early_stop_report(full, full) == (0.0, 0.0)
    cut = CrawlTrace(full.records[:8], stopped_early=True)
    assert early_stop_report(cut, full) == (60.0, 0.0)
    cut = CrawlTrace(full.records[:4], stopped_early=True)
    saved, lost = early_stop_report(cut, full)
    assert saved == 80.0 and lost == pytest.approx(20.0)


@given(st.lists(st.booleans(), min_size=1, max_size=60), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_monotone_in_fraction(flags, f1, f2):
    lo, hi = sorted((f1, f2))
    t = trace_of(flags)
    total = max(1, sum(flags))
    a = requests_to_fraction(t, total, lo, len(flags))
    b = requests_to_fraction(t, total, hi, len(flags))
    assert a <= b
    assert 0 < a <= 100 or a == UNREACHED


def test_csv_round_trip_and_schema():
    full = trace_of([True] * 3 + [False] * 7)
    ref = Reference.from_trace(full)
    reports = [
        evaluate_trace(full, ref, "bfs", "site", 1, (0.5, 0.9)),
        evaluate_trace(CrawlTrace(full.records[:2]), ref, "sb", "site", 2, (0.5, 0.9), unstopped=full),
    ]
    text = reports_to_csv(reports)
    assert text.splitlines()[0] == ",".join(REPORT_COLUMNS)
    assert "unreached" in text and NA_TEXT in text
    assert reports_to_csv(reports_from_csv(text)) == text
    assert reports_to_json(reports) == reports_to_json(reports)


def test_plot_rows_cumulative():
    t = trace_of([False, True, True], sizes=[5, 7, 11])
    rows = plot_rows(t)
    assert [r["target_volume"] for r in rows] == [0, 7, 18]
    assert [r["nontarget_volume"] for r in rows] == [5, 5, 5]
    assert plot_data_csv(t).splitlines()[0] == "request,t,budget,targets,target_volume,nontarget_volume"
