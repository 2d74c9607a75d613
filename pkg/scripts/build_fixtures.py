"""Regenerate the recorded fixtures under fixtures/.

    python scripts/build_fixtures.py

Both fixtures are deterministic: rerunning this script leaves the tree unchanged.
"""

from __future__ import annotations

import json
from pathlib import Path

from sbcrawl.baselines import BfsPolicy
from sbcrawl.classifier import OracleClassifier
from sbcrawl.config import CrawlConfig
from sbcrawl.engine import CrawlRun
from sbcrawl.fetch import Fetcher, PageStore
from sbcrawl.fixtures import HAND_ROOT, build_hand_fixture, build_site_fixture, hand_truth
from sbcrawl.metrics import Reference, evaluate_trace
from sbcrawl.simulator import two_wings

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
MINI_WINGS = two_wings(seed=7, page_count=200, target_count=60, related_pool=20, target_size=(200, 2000))


def hand_expected(path: Path) -> dict:
    manifest = json.loads((path / "manifest.json").read_text())
    cfg = CrawlConfig(respect_robots=False)
    run = CrawlRun(HAND_ROOT, cfg, Fetcher("replay", store=PageStore(path / "store")), BfsPolicy(),
                   OracleClassifier(hand_truth))
    report = evaluate_trace(run.run(), Reference.from_manifest(manifest), "bfs-oracle", "handcount")
    return {
        "policy": "bfs with a perfect URL oracle",
        "requests_to_90pct": report.requests_to_fraction[0.9],
        "nontarget_volume_at_90pct": round(report.nontarget_volume_at_fraction[0.9], 4),
        "derivation": (
            "9 of 10 targets are needed. The crawl requests /, /a.html, a1-a6.csv, /b.html, b1-b3.csv; "
            "the ninth target is request 12 of the 20-request exhaustive crawl: 12/20 = 60%. "
            "Non-target bytes before it are /, /a.html and /b.html out of all nine pages plus the 404."
        ),
    }


def main() -> None:
    hand = FIXTURES / "handcount"
    build_hand_fixture(hand)
    (hand / "expected.json").write_text(json.dumps(hand_expected(hand), indent=2) + "\n")
    build_site_fixture(FIXTURES / "mini-wings", MINI_WINGS)


if __name__ == "__main__":
    main()
