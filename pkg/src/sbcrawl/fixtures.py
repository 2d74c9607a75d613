"""Recorded fixtures: build, re-derive, and verify.

A fixture is a directory::

    <fixture>/store/           a PageStore (journal.jsonl + bodies/)
    <fixture>/manifest.json    ground truth re-derivable from the store
    <fixture>/expected.json    metric values with how they were obtained (optional)
    <fixture>/site.yaml        generator spec, for simulator-built fixtures (optional)

The manifest is recomputed by an exhaustive breadth-first replay of the store
in which every in-scope link is fetched, so it never depends on a classifier.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .baselines import BfsPolicy
from .classifier import HTML, Classification
from .config import CrawlConfig
from .engine import CrawlRun, CrawlTrace
from .fetch import FetchResponse, Fetcher, PageStore, _header_bytes
from .metrics import Reference
from .simulator import SiteSpec, export_site, generate_site, serve

MANIFEST_KEYS = (
    "root",
    "pages",
    "targets",
    "target_bytes",
    "reference_requests",
    "reference_nontarget_bytes",
    "max_depth",
    "target_urls",
)


class FetchEverything:
    """Classifier stand-in that sends every link to the frontier."""

    initial_phase = False

    def classify(self, url: str) -> Classification:
        return Classification(HTML)

    def observe(self, url: str, label: str) -> None:
        pass


def exhaustive_trace(store: PageStore, root: str, cfg: CrawlConfig | None = None) -> tuple[CrawlTrace, CrawlRun]:
    cfg = (cfg or CrawlConfig()).replace(respect_robots=False, budget=float("inf"), max_targets=None, trace_path=None)
    run = CrawlRun(root, cfg, Fetcher("replay", store=store, blocked_mimes=cfg.mime_blocklist), BfsPolicy(), FetchEverything())
    return run.run(), run


def derive_manifest(store: PageStore, root: str, cfg: CrawlConfig | None = None) -> dict:
    trace, run = exhaustive_trace(store, root, cfg)
    ref = Reference.from_trace(trace)
    assert run.tree is not None
    return {
        "root": run.root,
        "pages": sum(1 for r in trace.gets if r.status == 200 and r.mime and "html" in r.mime),
        "targets": ref.targets,
        "target_bytes": ref.target_volume,
        "reference_requests": ref.requests,
        "reference_nontarget_bytes": ref.nontarget_volume,
        "max_depth": max(run.tree.depth(u) for u in run.tree.nodes),
        "target_urls": sorted(run.targets),
    }


@dataclass
class VerifyReport:
    ok: bool
    diffs: list[str] = field(default_factory=list)

    def __str__(self) -> str:
        return "ok" if self.ok else "\n".join(self.diffs)


def verify_fixture(path: str | Path, cfg: CrawlConfig | None = None) -> VerifyReport:
    """Walk the fixture store, rebuild the manifest, and itemize any difference."""
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    derived = derive_manifest(PageStore(path / "store"), manifest["root"], cfg)
    diffs = []
    for key in MANIFEST_KEYS:
        if key not in manifest:
            diffs.append(f"{key}: missing from manifest")
        elif manifest[key] != derived[key]:
            shown_m, shown_d = manifest[key], derived[key]
            if isinstance(shown_m, list):
                shown_m, shown_d = f"{len(shown_m)} entries", f"{len(shown_d)} entries"
            diffs.append(f"{key}: manifest has {shown_m}, store walk gives {shown_d}")
    return VerifyReport(not diffs, diffs)


def _write_manifest(path: Path, manifest: dict) -> None:
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def build_site_fixture(path: str | Path, spec: SiteSpec) -> dict:
    """Generate a simulator site, record it into a store, and write its manifest."""
    path = Path(path)
    if (path / "store").exists():
        shutil.rmtree(path / "store")
    path.mkdir(parents=True, exist_ok=True)
    site = generate_site(spec)
    store = PageStore(path / "store")
    export_site(site, store, serve(site))
    (path / "site.yaml").write_text(yaml.safe_dump(spec.to_dict(), sort_keys=False), encoding="utf-8")
    manifest = derive_manifest(store, site.root)
    _write_manifest(path, manifest)
    return manifest


# --------------------------------------------------------------------------- #
# Hand-countable mini-site
# --------------------------------------------------------------------------- #

HAND_ROOT = "http://handcount.example/"

# page -> links, in document order; ".csv" entries are targets
HAND_SITE: dict[str, list[str]] = {
    "/": ["/a.html", "/b.html"],
    "/a.html": ["/data/a1.csv", "/data/a2.csv", "/data/a3.csv", "/data/a4.csv", "/data/a5.csv", "/data/a6.csv", "/c.html"],
    "/b.html": ["/data/b1.csv", "/data/b2.csv", "/data/b3.csv", "/gone.html"],
    "/c.html": ["/data/c1.csv", "/d.html"],
    "/d.html": ["/e.html", "/f.html", "/g.html", "/h.html"],
    "/e.html": [],
    "/f.html": [],
    "/g.html": [],
    "/h.html": [],
}
HAND_TARGET_SIZE = 100


def _hand_page(links: list[str]) -> bytes:
    items = "".join(f'<li><a href="{u}">{u}</a></li>' for u in links)
    return f"<html><body><div id=\"main\"><ul>{items}</ul></div></body></html>".encode()


def _hand_response(url: str, status: int, mime: str | None, body: bytes) -> FetchResponse:
    headers = {"Content-Type": mime} if mime else {}
    return FetchResponse(url, status, mime, None, body, len(body), _header_bytes(f"HTTP/1.1 {status}", headers), headers=headers)


def build_hand_fixture(path: str | Path) -> dict:
    """A 20-resource site whose BFS-with-oracle crawl can be followed by hand.

    Exhaustive crawl: 9 pages, 10 CSV targets, 1 broken link = 20 GETs. A BFS
    crawl with a perfect URL oracle fetches the root (1), ``/a.html`` (2) and
    its six targets (3-8), then ``/b.html`` (9) and its three targets (10-12):
    the ninth target arrives at request 12, i.e. 12/20 = 60% of the reference.
    """
    path = Path(path)
    if (path / "store").exists():
        shutil.rmtree(path / "store")
    path.mkdir(parents=True, exist_ok=True)
    store = PageStore(path / "store")
    base = HAND_ROOT.rstrip("/")
    for page, links in HAND_SITE.items():
        resp = _hand_response(base + page, 200, "text/html", _hand_page(links))
        store.put("GET", resp, fetched_at=0.0)
        store.put("HEAD", _hand_response(resp.url, 200, "text/html", b""), fetched_at=0.0)
        for link in links:
            if link.endswith(".csv"):
                body = (b"k,v\n" * HAND_TARGET_SIZE)[:HAND_TARGET_SIZE]
                store.put("GET", _hand_response(base + link, 200, "text/csv", body), fetched_at=0.0)
                store.put("HEAD", _hand_response(base + link, 200, "text/csv", b""), fetched_at=0.0)
    manifest = derive_manifest(store, HAND_ROOT)
    _write_manifest(path, manifest)
    return manifest


def hand_truth(url: str) -> str:
    from .classifier import NEITHER, TARGET

    path = url[len(HAND_ROOT) - 1 :]
    if path.endswith(".csv"):
        return TARGET
    return HTML if path in HAND_SITE else NEITHER
