"""Synthetic websites, the set-cover reduction graph, and an exact optimal-crawl oracle.

A generated site is a set of regions ("wings"). Each region is a tree of HTML
pages linked through its own listing markup; pages of a region link to their
targets with probability ``target_page_rate``. Every page also carries
navigation, related-content, and footer links that mix the regions. Emitted
HTML is real markup, so the crawler's own link extraction sees it exactly as it
would a live site.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import random
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml

from .classifier import HTML, NEITHER, TARGET
from .config import DEFAULT_MIME_BLOCKLIST, CrawlConfig
from .fetch import FetchResponse, PageStore, _header_bytes, mime_blocked
from .graph import CrawlTree, WebsiteGraph, WeightMode
from .tagpath import TagPath

TARGET_KINDS = (
    ("/files/{id}.csv", "text/csv"),
    ("/files/{id}.xlsx", "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet"),
    ("/files/{id}.json", "application/json"),
    ("/files/{id}.pdf", "application/pdf"),
    ("/download/{id}", "application/zip"),
)

NAV_TEMPLATE = "html body header nav#menu ul li a"
RELATED_TEMPLATE = "html body div#content aside.related ul li a"
FOOTER_TEMPLATE = "html body footer p a"
MEDIA_TEMPLATE = "html body div#content div.media a"
SECTIONS_TEMPLATE = "html body div#main ul.sections li a"
DATASETS_TEMPLATE = "html body div#content div.datasets ul li a"

_WORDS = (
    "annual report survey census budget health education transport energy water climate regional "
    "statistics indicator population labour market trade index monthly quarterly release bulletin "
    "methodology overview programme evaluation archive notice update series"
).split()


class SiteSpecError(ValueError):
    pass


@dataclass
class Region:
    name: str
    share: float
    target_page_rate: float
    listing_template: str
    target_template: str = DATASETS_TEMPLATE
    fanout: int = 4
    url_prefix: str = ""

    def prefix(self) -> str:
        return self.url_prefix or f"/{self.name}"


def _two_wings_regions() -> list[Region]:
    return [
        Region("catalog", 0.3, 0.8, "html body div#main div#catalog ul.subcatalog li a"),
        Region("news", 0.7, 0.0, "html body div#main div#news ul.articles li a"),
    ]


@dataclass
class SiteSpec:
    name: str = "two-wings"
    seed: int = 0
    page_count: int = 5000
    target_count: int = 1500
    regions: list[Region] = field(default_factory=_two_wings_regions)
    host: str = ""
    related_links: int = 3
    related_pool: int = 60
    scatter: bool = False
    scatter_templates: int = 40
    redirect_rate: float = 0.02
    broken_rate: float = 0.02
    media_rate: float = 0.05
    page_size: tuple[int, int] = (400, 1600)
    target_size: tuple[int, int] = (1_000, 40_000)

    def __post_init__(self) -> None:
        self.regions = [r if isinstance(r, Region) else Region(**r) for r in self.regions]
        self.page_size = tuple(self.page_size)  # type: ignore[assignment]
        self.target_size = tuple(self.target_size)  # type: ignore[assignment]

    @property
    def root(self) -> str:
        return f"http://{self.host or self.name + '.example'}/"

    @property
    def html_count(self) -> int:
        return self.page_count - self.target_count

    def validate(self) -> None:
        if self.target_count < 0 or self.page_count < 1:
            raise SiteSpecError("page and target counts must be nonnegative")
        fixed = 1 + len(self.regions) + 2
        if self.html_count < fixed + len(self.regions):
            raise SiteSpecError(
                f"{self.target_count} targets leave too few HTML pages out of {self.page_count}"
            )
        if not self.regions:
            raise SiteSpecError("at least one region is needed")
        if any(r.share <= 0 or not 0.0 <= r.target_page_rate <= 1.0 or r.fanout < 1 for r in self.regions):
            raise SiteSpecError("region shares must be positive, rates in [0, 1], fanout >= 1")
        if self.target_count and not self.scatter and all(r.target_page_rate == 0 for r in self.regions):
            raise SiteSpecError("targets requested but no region links to targets")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> SiteSpec:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise SiteSpecError(f"unknown site spec keys: {sorted(unknown)}")
        return cls(**dict(data))

    @classmethod
    def load(cls, path: str | Path) -> SiteSpec:
        text = Path(path).read_text(encoding="utf-8")
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
        return cls.from_mapping(data or {})

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["page_size"] = list(self.page_size)
        out["target_size"] = list(self.target_size)
        return out


def two_wings(seed: int = 0, page_count: int = 5000, target_count: int = 1500, **kw: Any) -> SiteSpec:
    return SiteSpec("two-wings", seed, page_count, target_count, **kw)


def scatter(seed: int = 0, page_count: int = 2000, target_count: int = 400, **kw: Any) -> SiteSpec:
    """Targets on uniformly random pages under random markup: the tag-path signal is absent."""
    regions = [
        Region("catalog", 0.5, 0.0, "html body div#main div#catalog ul.subcatalog li a"),
        Region("news", 0.5, 0.0, "html body div#main div#news ul.articles li a"),
    ]
    return SiteSpec("scatter", seed, page_count, target_count, regions=regions, scatter=True, **kw)


PRESETS = {"two-wings": two_wings, "scatter": scatter}


# --------------------------------------------------------------------------- #
# Generated site
# --------------------------------------------------------------------------- #


@dataclass
class Resource:
    url: str
    kind: str  # html | target | redirect | stream
    status: int
    mime: str | None
    size: int = 0
    body: bytes = b""
    location: str | None = None
    region: str | None = None


def _render_block(template: str, links: list[tuple[str, str]]) -> str:
    steps = TagPath.parse(template).steps[2:]  # below <html><body>
    unit = 2 if len(steps) >= 2 and steps[-2].name == "li" else 1
    outer, inner = steps[:-unit], steps[-unit:]

    def open_(s) -> str:
        attrs = ""
        if s.id:
            attrs += f' id="{s.id}"'
        if s.classes:
            attrs += f' class="{" ".join(s.classes)}"'
        return f"<{s.name}{attrs}>"

    parts = [open_(s) for s in outer]
    for href, text in links:
        link = inner[-1]
        a = open_(link)[:-1] + f' href="{href}">{text}</{link.name}>'
        parts.append("".join(open_(s) for s in inner[:-1]) + a + "".join(f"</{s.name}>" for s in reversed(inner[:-1])))
    parts.extend(f"</{s.name}>" for s in reversed(outer))
    return "".join(parts)


def _page_html(title: str, blocks: list[tuple[str, list[tuple[str, str]]]], filler: str) -> bytes:
    body = []
    for template, links in blocks:
        if links:
            body.append(_render_block(template, links))
    html = (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>"
        + title
        + "</title></head><body>"
        + "".join(body)
        + f"<section class=\"text\"><p>{filler}</p></section>"
        + "</body></html>\n"
    )
    return html.encode("utf-8")


def _filler(rng: random.Random, size: int) -> str:
    words: list[str] = []
    n = 0
    while n < size:
        w = rng.choice(_WORDS)
        words.append(w)
        n += len(w) + 1
    return " ".join(words)


def _target_body(url: str, size: int) -> bytes:
    seed = hashlib.sha256(url.encode()).hexdigest()
    row = f"{seed[:12]},{seed[12:20]},{int(seed[20:28], 16) % 1000}\n".encode()
    header = b"id,key,value\n"
    reps = max(0, (size - len(header)) // len(row) + 1)
    return (header + row * reps)[:size]


class Site:
    """An immutable generated website with its ground truth."""

    def __init__(self, spec: SiteSpec, resources: dict[str, Resource], links: dict[str, list[tuple[str, str]]]):
        self.spec = spec
        self.root = spec.root
        self.resources = resources
        self.links = links
        self.targets = {u: r.size for u, r in resources.items() if r.kind == "target"}

    def __len__(self) -> int:
        return len(self.resources)

    @property
    def host(self) -> str:
        return self.root.split("/")[2]

    def resolve(self, url: str, hops: int = 10) -> Resource | None:
        res = self.resources.get(url)
        while res is not None and res.kind == "redirect" and hops > 0:
            res = self.resources.get(res.location or "")
            hops -= 1
        return res

    def truth(self, url: str) -> str:
        """Label of the final resource behind ``url`` (perfect URL oracle)."""
        res = self.resolve(url)
        if res is None or res.status >= 400:
            return NEITHER
        if res.kind == "target":
            return TARGET
        if res.kind == "html":
            return HTML
        return NEITHER

    def benefit(self, url: str) -> int:
        """Number of target links on the page behind ``url``."""
        res = self.resolve(url)
        if res is None or res.kind != "html":
            return 0
        return sum(1 for u, _ in self.links.get(res.url, ()) if u in self.targets)

    def target_parents(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for page, links in self.links.items():
            for u, _ in links:
                if u in self.targets:
                    out.setdefault(u, []).append(page)
        return out

    def graph(self, weight_mode: WeightMode = WeightMode.REQUESTS) -> WebsiteGraph:
        g = WebsiteGraph(self.root, weight_mode=weight_mode)
        for page, links in self.links.items():
            for u, tpl in links:
                if u in self.resources:
                    g.add_edge(page, u, tpl)
        for url, res in self.resources.items():
            g.nodes.add(url)
            if res.kind == "redirect" and res.location:
                g.add_edge(url, res.location, "")
        if weight_mode is WeightMode.BYTES:
            g.weights = {u: float(r.size) for u, r in self.resources.items()}
        return g

    def depths(self) -> dict[str, int]:
        depth = {self.root: 0}
        queue = deque([self.root])
        while queue:
            u = queue.popleft()
            nxt = [v for v, _ in self.links.get(u, ())]
            res = self.resources.get(u)
            if res is not None and res.kind == "redirect" and res.location:
                nxt.append(res.location)
            for v in nxt:
                if v not in depth:
                    depth[v] = depth[u] + 1
                    queue.append(v)
        return depth

    def digest(self) -> str:
        h = hashlib.sha256()
        for url in sorted(self.resources):
            r = self.resources[url]
            h.update(f"{url}|{r.kind}|{r.status}|{r.mime}|{r.size}|{r.location}|".encode())
            h.update(r.body)
        return h.hexdigest()

    def manifest(self, transport: SiteTransport | None = None, extension_blocklist: Iterable[str] = ()) -> dict:
        """Ground truth and full-crawl reference totals for metrics."""
        transport = transport or SiteTransport(self)
        blocked = set(extension_blocklist)
        reachable = self.depths()
        requests = 0
        nontarget_bytes = 0
        target_bytes = 0
        from .urls import extension  # local: keep module import graph flat

        for url in sorted(reachable):
            if blocked and extension(url) in blocked:
                continue
            resp = transport.get(url, DEFAULT_MIME_BLOCKLIST)
            requests += 1
            volume = resp.body_size + resp.header_size
            if url in self.targets:
                target_bytes += volume
            else:
                nontarget_bytes += volume
        return {
            "site": self.spec.name,
            "root": self.root,
            "digest": self.digest(),
            "pages": sum(1 for r in self.resources.values() if r.kind == "html"),
            "targets": len(self.targets),
            "target_bytes": target_bytes,
            "reference_requests": requests,
            "reference_nontarget_bytes": nontarget_bytes,
            "max_depth": max(reachable.values()) if reachable else 0,
        }


def generate_site(spec: SiteSpec) -> Site:
    """Deterministically build the site described by ``spec``."""
    spec.validate()
    rng = random.Random(spec.seed)
    root = spec.root
    base = root.rstrip("/")
    resources: dict[str, Resource] = {}
    links: dict[str, list[tuple[str, str]]] = {}

    # page budget per region
    n_html = spec.html_count
    fixed = ["/", *(f"{r.prefix()}/" for r in spec.regions), "/about.html", "/contact.html"]
    available = n_html - len(fixed)
    total_share = sum(r.share for r in spec.regions)
    counts = [max(1, int(available * r.share / total_share)) for r in spec.regions]
    counts[-1] = max(1, available - sum(counts[:-1]))

    region_pages: list[list[str]] = []
    region_of: dict[str, Region] = {}
    for region, count in zip(spec.regions, counts):
        pages = [f"{base}{region.prefix()}/item-{i}.html" for i in range(count)]
        region_pages.append(pages)
        for p in pages:
            region_of[p] = region
    hubs = [f"{base}{r.prefix()}/" for r in spec.regions]
    statics = [f"{base}/about.html", f"{base}/contact.html"]
    content_pages = [p for pages in region_pages for p in pages]

    # targets
    if spec.scatter:
        bearing = [p for p in content_pages if rng.random() < 0.25] or content_pages[:1]
    else:
        bearing = [p for p in content_pages if rng.random() < region_of[p].target_page_rate]
    target_links: dict[str, list[str]] = {p: [] for p in bearing}
    target_mime: dict[str, str] = {}
    if spec.target_count:
        if not bearing:
            raise SiteSpecError("no page was drawn to link to targets; raise a target_page_rate")
        owners = list(bearing)
        rng.shuffle(owners)
        order = owners + [rng.choice(bearing) for _ in range(max(0, spec.target_count - len(owners)))]
        for tid, page in enumerate(order[: spec.target_count]):
            pattern, mime = TARGET_KINDS[rng.randrange(len(TARGET_KINDS))]
            url = base + pattern.format(id=tid)
            target_links[page].append(url)
            target_mime[url] = mime
    scatter_pool = []
    if spec.scatter:
        tags = ["div", "section", "article", "span", "p"]
        classes = ["box", "item", "entry", "col", "row", "panel", "block", "inner"]
        for _ in range(spec.scatter_templates):
            depth = rng.randint(1, 4)
            steps = [f"{rng.choice(tags[:3])}.{rng.choice(classes)}{rng.randint(0, 9)}" for _ in range(depth)]
            scatter_pool.append("html body div#content " + " ".join(steps) + " ul li a")

    # redirects, broken links, media
    redirect_of: dict[str, str] = {}
    counter = itertools.count()
    for p in content_pages:
        if rng.random() < spec.redirect_rate:
            redirect_of[p] = f"{base}/go/{next(counter)}"
    broken = {p for p in content_pages if rng.random() < spec.broken_rate}
    media = {p for p in content_pages if rng.random() < spec.media_rate}

    def via(url: str) -> str:
        return redirect_of.get(url, url)

    nav = [(root, "Home"), *((h, r.name.title()) for h, r in zip(hubs, spec.regions))]
    footer = [(statics[0], "About"), (statics[1], "Contact")]
    lo, hi = spec.page_size

    def page(url: str, title: str, blocks: list[tuple[str, list[tuple[str, str]]]], region: str | None) -> None:
        blocks = [(NAV_TEMPLATE, nav), *blocks, (FOOTER_TEMPLATE, footer)]
        filler = _filler(rng, rng.randint(lo, hi))
        body = _page_html(title, blocks, filler)
        resources[url] = Resource(url, "html", 200, "text/html", len(body), body, region=region)
        links[url] = [(u, tpl) for tpl, ls in blocks for u, _ in ls]

    # sidebars point into a small set of popular pages drawn from every region
    popular = rng.sample(content_pages, min(spec.related_pool, len(content_pages)))

    def related(exclude: str) -> list[tuple[str, str]]:
        out = []
        for _ in range(spec.related_links):
            other = rng.choice(popular)
            if other != exclude:
                out.append((via(other), rng.choice(_WORDS).title()))
        return out

    page(root, "Home", [(SECTIONS_TEMPLATE, [(h, r.name.title()) for h, r in zip(hubs, spec.regions)])], None)
    for s in statics:
        page(s, s.rsplit("/", 1)[-1], [], None)
    media_counter = itertools.count()
    for region, hub, pages in zip(spec.regions, hubs, region_pages):
        children = {i: pages[i * region.fanout + 1 : i * region.fanout + 1 + region.fanout] for i in range(len(pages))}
        # the hub lists the first pages; item i lists its children in a fanout-ary tree
        page(hub, region.name.title(), [(region.listing_template, [(via(p), "Item") for p in pages[: region.fanout]])], region.name)
        for i, url in enumerate(pages):
            listing = [(via(c), rng.choice(_WORDS).title()) for c in children[i]]
            if url in broken:
                listing.append((f"{base}{region.prefix()}/missing-{i}.html", "Archive"))
            blocks = [(region.listing_template, listing)]
            tl = target_links.get(url, [])
            if tl:
                if spec.scatter:
                    for t in tl:
                        blocks.append((rng.choice(scatter_pool), [(t, "Download")]))
                else:
                    blocks.append((region.target_template, [(t, "Download") for t in tl]))
            if url in media:
                k = next(media_counter)
                blocks.append((MEDIA_TEMPLATE, [(f"{base}/media/clip-{k}.mp4", "Video"), (f"{base}/stream/{k}", "Watch")]))
                resources[f"{base}/stream/{k}"] = Resource(f"{base}/stream/{k}", "stream", 200, "video/mp4", 250_000)
                resources[f"{base}/media/clip-{k}.mp4"] = Resource(f"{base}/media/clip-{k}.mp4", "stream", 200, "video/mp4", 250_000)
            blocks.append((RELATED_TEMPLATE, related(url)))
            page(url, f"{region.name} {i}", blocks, region.name)

    for src, stub in redirect_of.items():
        resources[stub] = Resource(stub, "redirect", 301, "text/html", 0, location=src)
    tlo, thi = spec.target_size
    for url, mime in target_mime.items():
        resources[url] = Resource(url, "target", 200, mime, rng.randint(tlo, thi))
    return Site(spec, resources, links)


# --------------------------------------------------------------------------- #
# Serving
# --------------------------------------------------------------------------- #


class SiteTransport:
    """In-memory transport over a generated site, with optional injected server errors."""

    def __init__(self, site: Site, error_rate: float = 0.0, seed: int = 0) -> None:
        self.site = site
        self.errors: frozenset[str] = frozenset()
        if error_rate > 0:
            pages = sorted(u for u, r in site.resources.items() if r.kind == "html" and u != site.root)
            k = round(error_rate * len(pages))
            self.errors = frozenset(random.Random(seed).sample(pages, k))
        self.calls = 0

    def _headers(self, res: Resource | None, status: int) -> dict[str, str]:
        h = {"Server": "sbsim/1"}
        if res is not None and res.mime:
            h["Content-Type"] = res.mime + ("; charset=utf-8" if res.mime == "text/html" else "")
        if res is not None and res.location:
            h["Location"] = res.location
        if res is not None:
            h["Content-Length"] = str(res.size)
        return h

    def _respond(self, url: str, with_body: bool, blocked: Iterable[str]) -> FetchResponse:
        self.calls += 1
        res = self.site.resources.get(url)
        if url in self.errors:
            h = {"Server": "sbsim/1", "Content-Type": "text/html"}
            return FetchResponse(url, 500, "text/html", None, b"", 0, _header_bytes("HTTP/1.1 500 Internal Server Error", h), headers=h)
        if res is None:
            h = {"Server": "sbsim/1", "Content-Type": "text/html"}
            body = b"<html><body><h1>Not Found</h1></body></html>" if with_body else b""
            return FetchResponse(url, 404, "text/html", None, body, len(body), _header_bytes("HTTP/1.1 404 Not Found", h), headers=h)
        h = self._headers(res, res.status)
        header_size = _header_bytes(f"HTTP/1.1 {res.status}", h)
        if res.kind == "redirect":
            return FetchResponse(url, res.status, res.mime, res.location, b"", 0, header_size, headers=h)
        if with_body and mime_blocked(res.mime, blocked):
            return FetchResponse(url, res.status, res.mime, None, b"", 0, header_size, aborted=True, headers=h)
        body = b""
        if with_body:
            body = res.body if res.kind == "html" else _target_body(url, res.size)
        return FetchResponse(url, res.status, res.mime, None, body, len(body), header_size, headers=h)

    def get(self, url: str, blocked_mimes: Iterable[str] = ()) -> FetchResponse:
        return self._respond(url, True, blocked_mimes)

    def head(self, url: str) -> FetchResponse:
        return self._respond(url, False, ())


def serve(site: Site, error_rate: float = 0.0, seed: int = 0) -> SiteTransport:
    return SiteTransport(site, error_rate, seed)


def export_site(
    site: Site,
    store: PageStore,
    transport: SiteTransport | None = None,
    blocked_mimes: Iterable[str] = DEFAULT_MIME_BLOCKLIST,
) -> int:
    """Write a GET and a HEAD record for every resource (and robots.txt) into ``store``.

    GETs of blocklisted MIME types are recorded as aborted, as a live recording would.
    """
    transport = transport or SiteTransport(site)
    n = 0
    urls = sorted(site.resources) + [site.root + "robots.txt"]
    for url in urls:
        n += store.put("GET", transport.get(url, blocked_mimes), fetched_at=0.0)
        n += store.put("HEAD", transport.head(url), fetched_at=0.0)
    return n


def run_policy(
    site: Site,
    policy: str,
    cfg: CrawlConfig,
    oracle: bool = False,
    error_rate: float = 0.0,
):
    """Crawl a generated site in memory with a named policy; returns the finished run.

    ``policy`` is a baseline name or ``sb``; ``oracle=True`` swaps the online
    URL classifier for ground truth (SB-ORACLE when combined with ``sb``).
    """
    from .baselines import make_policy
    from .classifier import OracleClassifier
    from .engine import CrawlRun
    from .fetch import Fetcher

    cfg = cfg.replace(respect_robots=False)
    fetcher = Fetcher("live", transport=serve(site, error_rate, site.spec.seed), blocked_mimes=cfg.mime_blocklist)
    chosen = make_policy(policy, cfg, targets=sorted(site.targets), oracle_benefit=site.benefit)
    run = CrawlRun(site.root, cfg, fetcher, chosen, OracleClassifier(site.truth) if oracle else None)
    run.run()
    return run


# --------------------------------------------------------------------------- #
# Set-cover reduction and exact optimum
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class ReductionInstance:
    m: int
    collection: tuple[frozenset[int], ...]
    budget: int

    def __post_init__(self) -> None:
        if any(not s for s in self.collection):
            raise ValueError("subsets must be nonempty")
        universe = set().union(*self.collection) if self.collection else set()
        if universe != set(range(1, self.m + 1)):
            raise ValueError("the subsets must cover exactly the universe 1..m")


REDUCTION_ROOT = "http://setcover.example/"


def build_reduction(inst: ReductionInstance) -> tuple[WebsiteGraph, set[str]]:
    """Root → one page per subset → one target per universe element, unit weights."""
    g = WebsiteGraph(REDUCTION_ROOT)
    for i, subset in enumerate(inst.collection, 1):
        s = f"{REDUCTION_ROOT}s{i}"
        g.add_edge(REDUCTION_ROOT, s, "html body ul li a")
        for u in sorted(subset):
            g.add_edge(s, f"{REDUCTION_ROOT}u{u}", "html body ul li a")
    targets = {f"{REDUCTION_ROOT}u{u}" for u in range(1, inst.m + 1)}
    return g, targets


def min_cover_bruteforce(inst: ReductionInstance) -> int:
    universe = set(range(1, inst.m + 1))
    for k in range(1, len(inst.collection) + 1):
        for combo in itertools.combinations(inst.collection, k):
            if set().union(*combo) >= universe:
                return k
    raise ValueError("collection does not cover the universe")


class OracleError(ValueError):
    pass


MAX_ORACLE_NODES = 20


def optimal_crawl_bruteforce(graph: WebsiteGraph, targets: Iterable[str]) -> tuple[float, CrawlTree]:
    """Minimum-cost root-anchored crawl tree containing every target, by exhaustive search."""
    nodes = sorted(graph.nodes)
    if len(nodes) > MAX_ORACLE_NODES:
        raise OracleError(f"graph has {len(nodes)} nodes; the exact oracle is limited to {MAX_ORACLE_NODES}")
    targets = set(targets)
    if not targets <= graph.nodes:
        raise OracleError(f"targets not in graph: {sorted(targets - graph.nodes)}")
    succ = graph.successors()
    index = {u: i for i, u in enumerate(nodes)}
    adj = [0] * len(nodes)
    for u, vs in succ.items():
        for v in vs:
            adj[index[u]] |= 1 << index[v]
    r = index[graph.root]
    weight = [graph.weight(u) for u in nodes]

    def reach(mask: int) -> int:
        seen = 1 << r
        frontier = seen
        while frontier:
            nxt = 0
            bits = frontier
            while bits:
                low = bits & -bits
                nxt |= adj[low.bit_length() - 1]
                bits ^= low
            nxt &= mask & ~seen
            seen |= nxt
            frontier = nxt
        return seen

    full = (1 << len(nodes)) - 1
    tmask = sum(1 << index[t] for t in targets) | (1 << r)
    if reach(full) & tmask != tmask:
        raise OracleError("some target is unreachable from the root")
    optional = [i for i in range(len(nodes)) if not tmask >> i & 1]
    base_cost = sum(weight[i] for i in range(len(nodes)) if tmask >> i & 1)
    best_cost, best_mask = math.inf, None
    for k in range(len(optional) + 1):
        for combo in itertools.combinations(optional, k):
            extra = sum(weight[i] for i in combo)
            if base_cost + extra >= best_cost:
                continue
            mask = tmask | sum(1 << i for i in combo)
            if reach(mask) & tmask == tmask:
                best_cost, best_mask = base_cost + extra, mask
    assert best_mask is not None
    # witness: BFS tree over the chosen nodes, pruned to what the targets need
    parent: dict[int, int] = {}
    order = [r]
    seen = {r}
    for u in order:
        for v in range(len(nodes)):
            if adj[u] >> v & 1 and best_mask >> v & 1 and v not in seen:
                seen.add(v)
                parent[v] = u
                order.append(v)
    keep = {r}
    for t in targets:
        v = index[t]
        while v not in keep:
            keep.add(v)
            v = parent[v]
    tree = CrawlTree(graph.root, weight[r])
    for v in order[1:]:
        if v in keep:
            tree.attach(nodes[v], nodes[parent[v]], weight[v])
    return tree.total_cost, tree
