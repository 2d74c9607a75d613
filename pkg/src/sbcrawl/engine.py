"""The budgeted crawl loop and the sleeping-bandit frontier policy.

``CrawlRun`` owns everything a crawl mutates: the crawl tree, budget, step
counter, target store, URL classifier and trace. Frontier policies decide only
which pending link is crawled next, so the bandit crawler and every baseline
share identical fetch, scope, classification, and accounting rules.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterator, Protocol
from urllib.parse import urlsplit, urlunsplit
from urllib.robotparser import RobotFileParser

import numpy as np

from .actions import ActionSpace
from .bandit import BanditConfig, select_vectorized, update_reward
from .classifier import HTML, TARGET, SGDConfig, UrlClassifier
from .config import CrawlConfig
from .fetch import FetchResponse, Fetcher
from .graph import CrawlTree, Frontier, PendingLink, WeightMode
from .tagpath import ExtractedLink, HashParams, TagPathVectorizer, extract_links
from .urls import extension, in_scope, normalize

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------- #
# Trace
# --------------------------------------------------------------------------- #


@dataclass
class StepRecord:
    """One HTTP request issued by a crawl."""

    t: int
    method: str
    url: str
    action: int | None
    status: int
    mime: str | None
    bytes_in: int
    bytes_out: int
    reward: int | None
    targets: int
    budget: float
    target: bool
    via: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))


TRACE_FIELDS = tuple(f.name for f in fields(StepRecord))


@dataclass
class CrawlTrace:
    records: list[StepRecord] = field(default_factory=list)
    stopped_early: bool = False

    def __iter__(self) -> Iterator[StepRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def gets(self) -> list[StepRecord]:
        return [r for r in self.records if r.method == "GET"]

    @property
    def requests(self) -> int:
        return len(self.records)

    @property
    def final_targets(self) -> int:
        return self.records[-1].targets if self.records else 0

    @property
    def final_budget(self) -> float:
        return self.records[-1].budget if self.records else 0.0

    def to_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> CrawlTrace:
        records = []
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(StepRecord(**json.loads(line)))
        return cls(records)


# --------------------------------------------------------------------------- #
# Early stopping
# --------------------------------------------------------------------------- #


@dataclass
class EarlyStopState:
    nu: int = 1000
    eps: float = 0.2
    gamma: float = 0.05
    kappa: int = 15
    mu: float | None = None
    consecutive_low: int = 0
    last_y: int = 0
    checks: int = 0


def early_stop_step(es: EarlyStopState, t: int, y_t: int) -> tuple[EarlyStopState, bool]:
    """Fold the slope of the last window into the moving average; report whether to stop.

    Called at every multiple of ``nu`` steps. The average starts at the first
    observed slope.
    """
    if t % es.nu != 0:
        raise ValueError(f"early stopping is evaluated every {es.nu} steps, got t={t}")
    sigma = (y_t - es.last_y) / es.nu
    es.mu = sigma if es.mu is None else es.gamma * sigma + (1.0 - es.gamma) * es.mu
    es.last_y = y_t
    es.checks += 1
    es.consecutive_low = es.consecutive_low + 1 if es.mu < es.eps else 0
    return es, es.consecutive_low >= es.kappa


# --------------------------------------------------------------------------- #
# Policies
# --------------------------------------------------------------------------- #


class FrontierPolicy(Protocol):
    name: str

    def start(self, root: PendingLink, run: CrawlRun) -> None: ...

    def push(self, link: PendingLink, run: CrawlRun) -> bool: ...

    def pop(self, run: CrawlRun) -> PendingLink | None: ...

    def feedback(self, link: PendingLink, reward: int, run: CrawlRun) -> None: ...

    def on_page(self, url: str, links: list[ExtractedLink], run: CrawlRun) -> None: ...

    def __len__(self) -> int: ...

    def __contains__(self, url: object) -> bool: ...


class SleepingBanditPolicy:
    """Tag-path actions scored by AUER; a random pending link of the winner is crawled."""

    name = "sb"

    def __init__(self, cfg: CrawlConfig) -> None:
        self.bandit = BanditConfig(cfg.alpha, cfg.epsilon)
        self.vectorizer = TagPathVectorizer(cfg.n, HashParams(cfg.prime, cfg.w, cfg.m))
        self.actions = ActionSpace(
            self.vectorizer.dim,
            theta=cfg.theta,
            backend=cfg.index_backend,
            ann_threshold=cfg.ann_threshold,
            hnsw_params={
                "m": cfg.hnsw_m,
                "ef_construction": cfg.hnsw_ef_construction,
                "ef_search": cfg.hnsw_ef_search,
            },
            seed=cfg.seed,
        )
        self.frontier = Frontier()
        self._pulls = np.zeros(64)
        self._means = np.zeros(64)
        self._pending = np.zeros(64, dtype=np.int64)
        self.last_pull: int | None = None

    def __len__(self) -> int:
        return len(self.frontier)

    def __contains__(self, url: object) -> bool:
        return url in self.frontier

    def _grow(self, n: int) -> None:
        if n > len(self._pulls):
            size = max(n, 2 * len(self._pulls))
            for name in ("_pulls", "_means", "_pending"):
                old = getattr(self, name)
                new = np.zeros(size, dtype=old.dtype)
                new[: len(old)] = old
                setattr(self, name, new)

    def start(self, root: PendingLink, run: CrawlRun) -> None:
        root.action = None
        self.frontier.add(root)

    def push(self, link: PendingLink, run: CrawlRun) -> bool:
        vec = self.vectorizer.vectorize(link.path)
        aid, created = self.actions.map_link_to_action(vec)
        if created:
            self._grow(len(self.actions))
        link.action = aid
        self.frontier.add(link)
        self._pending[aid] += 1
        return True

    def pop(self, run: CrawlRun) -> PendingLink | None:
        if not len(self.frontier):
            return None
        k = len(self.actions)
        if k and (self._pending[:k] > 0).any():
            aid = select_vectorized(self._pulls[:k], self._means[:k], self._pending[:k] > 0, run.t, self.bandit)
            link = self.frontier.pop(aid, run.rng)
            self._pending[aid] -= 1
            action = self.actions[aid]
            action.pulls += 1
            self._pulls[aid] = action.pulls
            self.last_pull = aid
            return link
        link = self.frontier.pop_any(run.rng)
        if link.action is not None:
            self._pending[link.action] -= 1
        self.last_pull = None
        return link

    def feedback(self, link: PendingLink, reward: int, run: CrawlRun) -> None:
        if link.action is None or link.url == run.root:
            return
        action = self.actions[link.action]
        update_reward(action, reward)
        self._means[link.action] = action.mean_reward

    def on_page(self, url: str, links: list[ExtractedLink], run: CrawlRun) -> None:
        pass


# --------------------------------------------------------------------------- #
# Crawl run
# --------------------------------------------------------------------------- #


@dataclass
class PageResult:
    target: bool = False
    reward: int = 0


def _request_bytes(method: str, url: str, user_agent: str) -> int:
    parts = urlsplit(url)
    target = urlunsplit(("", "", parts.path or "/", parts.query, ""))
    return len(f"{method} {target} HTTP/1.1\r\nHost: {parts.netloc}\r\nUser-Agent: {user_agent}\r\n\r\n")


class CrawlRun:
    """State and control flow of a single crawl."""

    def __init__(
        self,
        root: str,
        cfg: CrawlConfig,
        fetcher: Fetcher,
        policy: FrontierPolicy,
        classifier: UrlClassifier | object | None = None,
    ) -> None:
        self.root = normalize(root)
        if not in_scope(self.root, self.root):
            raise ValueError(f"seed {root} is not a crawlable URL")
        self.cfg = cfg
        self.fetcher = fetcher
        self.policy = policy
        self.rng = random.Random(cfg.seed)
        if classifier is None:
            classifier = UrlClassifier(
                head=self._head,
                target_mimes=cfg.target_mimes,
                batch_size=cfg.b,
                sgd=SGDConfig(cfg.learning_rate, cfg.lr_decay, cfg.l2, cfg.epochs, cfg.seed),
            )
        elif isinstance(classifier, UrlClassifier) and classifier.head is None:
            classifier.head = self._head
        self.classifier = classifier
        self.tree: CrawlTree | None = None
        self.trace = CrawlTrace()
        self.beta = 0.0
        self.t = 0
        self.targets: dict[str, int] = {}
        self.target_bytes = 0
        self.early = EarlyStopState(cfg.nu, cfg.eps_stop, cfg.gamma, cfg.kappa)
        self.stopped_early = False
        self.gets = 0
        self.heads = 0
        self._current_action: int | None = None
        self._robots: RobotFileParser | None = None
        self.store_bodies = False
        self.target_store: dict[str, bytes] = {}

    # -- bookkeeping -------------------------------------------------------

    @property
    def y(self) -> int:
        return len(self.targets)

    def visited(self, url: str) -> bool:
        return self.tree is not None and url in self.tree

    def known(self, url: str) -> bool:
        return self.visited(url) or url in self.policy

    def _cost(self, resp: FetchResponse, method: str) -> float:
        if self.cfg.weight_mode is WeightMode.REQUESTS:
            return 1.0
        if method == "HEAD":
            return float(resp.header_size)
        return float(resp.body_size + resp.header_size)

    def _head(self, url: str) -> tuple[str | None, int, int]:
        mime, status, size = self.fetcher.head(url)
        self.heads += 1
        resp = FetchResponse(url=url, status=status, mime=mime, header_size=size)
        self.beta += self._cost(resp, "HEAD")
        self.trace.records.append(
            StepRecord(
                t=self.t,
                method="HEAD",
                url=url,
                action=None,
                status=status,
                mime=mime,
                bytes_in=size,
                bytes_out=_request_bytes("HEAD", url, self.cfg.user_agent),
                reward=None,
                targets=self.y,
                budget=self.beta,
                target=False,
                via="head",
            )
        )
        return mime, status, size

    def _load_robots(self) -> None:
        robots_url = normalize("/robots.txt", self.root)
        resp = self.fetcher.get(robots_url)
        parser = RobotFileParser()
        if resp.ok and resp.body:
            parser.parse(resp.body.decode("utf-8", "replace").splitlines())
        else:
            parser.parse([])
        self._robots = parser

    def allowed(self, url: str) -> bool:
        if self._robots is None:
            return True
        return self._robots.can_fetch(self.cfg.user_agent, url)

    def blocked_extension(self, url: str) -> bool:
        ext = extension(url)
        return bool(ext) and ext in self.cfg.extension_blocklist

    # -- page processing ---------------------------------------------------

    def crawl_next_page(self, url: str, parent: str | None, via: str, action: int | None = None) -> PageResult:
        """Fetch one URL and process its outcome.

        The reward is the number of links on the page that were classified as
        targets and fetched on the spot; rewards earned by such a fetch that
        turned out to be an HTML page are credited to the same pull.
        """
        self.t += 1
        resp = self.fetcher.get(url)
        self.gets += 1
        cost = self._cost(resp, "GET")
        if self.tree is None:
            self.tree = CrawlTree(url, cost) if parent is None else CrawlTree(parent, 0.0)
        if url not in self.tree:
            self.tree.attach(url, parent if parent is not None else self.tree.root, cost)
        self.beta += cost
        is_target = bool(resp.ok and resp.mime and "html" not in resp.mime and resp.mime in self.cfg.target_mimes)
        if is_target and not resp.aborted:
            self.targets[url] = resp.body_size
            self.target_bytes += resp.body_size
            if self.store_bodies:
                self.target_store[url] = resp.body
        record = StepRecord(
            t=self.t,
            method="GET",
            url=url,
            action=action,
            status=resp.status,
            mime=resp.mime,
            bytes_in=resp.body_size + resp.header_size,
            bytes_out=_request_bytes("GET", url, self.cfg.user_agent),
            reward=None,
            targets=self.y,
            budget=self.beta,
            target=is_target and not resp.aborted,
            via=via,
        )
        self.trace.records.append(record)
        if self.cfg.early_stop and self.t % self.cfg.nu == 0:
            _, stop = early_stop_step(self.early, self.t, self.y)
            self.stopped_early = self.stopped_early or stop

        if resp.aborted or resp.error:
            return PageResult()
        links: list[ExtractedLink] = []
        if resp.ok:
            if not resp.mime:
                return PageResult()
            if "html" in resp.mime:
                self.classifier.observe(url, HTML)
                links = [l for l in extract_links(resp.body, url) if in_scope(l.url, self.root)]
                self.policy.on_page(url, links, self)
            elif is_target:
                self.classifier.observe(url, TARGET)
                return PageResult(target=True)
            else:
                return PageResult()
        elif resp.redirect:
            loc = resp.location
            if loc:
                try:
                    loc = normalize(loc, url)
                except ValueError:
                    loc = None
            if loc and in_scope(loc, self.root) and not self.known(loc) and self.allowed(loc):
                return self.crawl_next_page(loc, url, "redirect", action)
            return PageResult()
        else:
            return PageResult()

        reward = 0
        seen: set[str] = set()
        depth = self.tree.depth(url) if self.tree is not None else 0
        for link in links:
            new = link.url
            if new in seen or self.known(new):
                continue
            seen.add(new)
            if self.blocked_extension(new) or not self.allowed(new):
                continue
            label = self.classifier.classify(new).label
            if label == HTML:
                self.policy.push(
                    PendingLink(new, None, self.t, parent=url, path=link.path, anchor=link.anchor, depth=depth + 1),
                    self,
                )
            elif label == TARGET:
                sub = self.crawl_next_page(new, url, "link")
                reward += 1 + sub.reward
        return PageResult(reward=reward)

    # -- main loop -----------------------------------------------------------

    def _exhausted(self) -> bool:
        if self.beta > self.cfg.budget or self.stopped_early:
            return True
        return self.cfg.max_targets is not None and self.y >= self.cfg.max_targets

    def run(self) -> CrawlTrace:
        if self.cfg.respect_robots:
            self._load_robots()
        self.policy.start(PendingLink(self.root, None, 0, parent=None, depth=0), self)
        while len(self.policy) > 0 and not self._exhausted():
            link = self.policy.pop(self)
            if link is None:
                break
            if self.visited(link.url):
                continue
            via = "seed" if link.parent is None else "frontier"
            index = len(self.trace.records)
            result = self.crawl_next_page(link.url, link.parent, via, link.action)
            self.trace.records[index].reward = result.reward
            self.policy.feedback(link, result.reward, self)
        self.trace.stopped_early = self.stopped_early
        if self.cfg.trace_path:
            self.trace.write(self.cfg.trace_path)
        return self.trace


def crawl(
    seed_url: str,
    cfg: CrawlConfig,
    fetcher: Fetcher,
    policy: FrontierPolicy | None = None,
    classifier: object | None = None,
) -> CrawlTrace:
    return CrawlRun(seed_url, cfg, fetcher, policy if policy is not None else SleepingBanditPolicy(cfg), classifier).run()
