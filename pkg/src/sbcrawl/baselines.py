"""Comparison crawlers: alternative frontier policies run on the same harness."""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .actions import ActionSpace
from .classifier import N_FEATURES, OnlineLogisticRegression, SGDConfig, char_bigrams
from .config import CrawlConfig
from .engine import CrawlRun, SleepingBanditPolicy
from .graph import PendingLink, RandomBag
from .tagpath import ExtractedLink, HashParams, TagPathVectorizer

POLICIES = ("sb", "random", "bfs", "dfs", "omniscient", "focused", "tpoff")


class _Indexed:
    """Shared ``len``/``in`` bookkeeping over a url → link map."""

    def __init__(self) -> None:
        self.pending: dict[str, PendingLink] = {}

    def __len__(self) -> int:
        return len(self.pending)

    def __contains__(self, url: object) -> bool:
        return url in self.pending

    def start(self, root: PendingLink, run: CrawlRun) -> None:
        self.push(root, run)

    def feedback(self, link: PendingLink, reward: int, run: CrawlRun) -> None:
        pass

    def on_page(self, url: str, links: list[ExtractedLink], run: CrawlRun) -> None:
        pass


class BfsPolicy(_Indexed):
    name = "bfs"

    def __init__(self) -> None:
        super().__init__()
        self.queue: deque[PendingLink] = deque()

    def push(self, link: PendingLink, run: CrawlRun) -> bool:
        self.pending[link.url] = link
        self.queue.append(link)
        return True

    def pop(self, run: CrawlRun) -> PendingLink | None:
        if not self.queue:
            return None
        link = self.queue.popleft()
        del self.pending[link.url]
        return link


class DfsPolicy(BfsPolicy):
    name = "dfs"

    def pop(self, run: CrawlRun) -> PendingLink | None:
        if not self.queue:
            return None
        link = self.queue.pop()
        del self.pending[link.url]
        return link


class RandomPolicy(_Indexed):
    name = "random"

    def __init__(self) -> None:
        super().__init__()
        self.bag = RandomBag()

    def push(self, link: PendingLink, run: CrawlRun) -> bool:
        self.pending[link.url] = link
        self.bag.add(link.url)
        return True

    def pop(self, run: CrawlRun) -> PendingLink | None:
        if not len(self.bag):
            return None
        return self.pending.pop(self.bag.pop_random(run.rng))


class OmniscientPolicy(_Indexed):
    """Fetches the known target URLs directly and nothing else."""

    name = "omniscient"

    def __init__(self, targets: Iterable[str]) -> None:
        super().__init__()
        self.targets = list(dict.fromkeys(targets))
        self.queue: deque[PendingLink] = deque()

    def start(self, root: PendingLink, run: CrawlRun) -> None:
        for url in self.targets:
            link = PendingLink(url, None, 0, parent=root.url, depth=1)
            self.pending[url] = link
            self.queue.append(link)

    def push(self, link: PendingLink, run: CrawlRun) -> bool:
        return False

    def pop(self, run: CrawlRun) -> PendingLink | None:
        if not self.queue:
            return None
        link = self.queue.popleft()
        del self.pending[link.url]
        return link


# --------------------------------------------------------------------------- #
# FOCUSED
# --------------------------------------------------------------------------- #

FOCUSED_FEATURES = 2 * N_FEATURES + 1


def focused_features(url: str, anchor: str, depth: int) -> tuple[np.ndarray, np.ndarray]:
    u = char_bigrams(url)
    a = char_bigrams(anchor or "")
    ids = np.concatenate([u.ids, a.ids + N_FEATURES, [2 * N_FEATURES]]).astype(np.int64)
    counts = np.concatenate([u.counts, a.counts, [math.log1p(depth)]])
    return ids, counts


@dataclass(frozen=True)
class _Sparse:
    ids: np.ndarray
    counts: np.ndarray


def focused_priority(url: str, anchor: str, depth: int, model: OnlineLogisticRegression) -> float:
    """Estimated probability that following the link yields targets; 0.5 when untrained."""
    ids, counts = focused_features(url, anchor, depth)
    return model.predict_proba(_Sparse(ids, counts))  # type: ignore[arg-type]


class FocusedPolicy(_Indexed):
    """Priority queue ordered by a classifier retrained on crawled pages."""

    name = "focused"

    def __init__(self, cfg: CrawlConfig) -> None:
        super().__init__()
        self.model = OnlineLogisticRegression(
            FOCUSED_FEATURES, SGDConfig(cfg.learning_rate, cfg.lr_decay, cfg.l2, cfg.epochs, cfg.seed)
        )
        self.retrain_every = cfg.focused_retrain
        self.heap: list[tuple[float, int, str]] = []
        self.priority: dict[str, float] = {}
        self._seq = itertools.count()
        self._order: dict[str, int] = {}
        self._samples: list[tuple[_Sparse, int]] = []
        self._html_pages = 0

    def _score(self, link: PendingLink) -> float:
        return focused_priority(link.url, link.anchor, link.depth, self.model)

    def push(self, link: PendingLink, run: CrawlRun) -> bool:
        p = self._score(link)
        seq = next(self._seq)
        self.pending[link.url] = link
        self.priority[link.url] = p
        self._order[link.url] = seq
        heapq.heappush(self.heap, (-p, seq, link.url))
        return True

    def pop(self, run: CrawlRun) -> PendingLink | None:
        while self.heap:
            neg, seq, url = heapq.heappop(self.heap)
            if url in self.pending and self.priority[url] == -neg and self._order[url] == seq:
                del self.priority[url], self._order[url]
                return self.pending.pop(url)
        return None

    def feedback(self, link: PendingLink, reward: int, run: CrawlRun) -> None:
        if link.url == run.root:
            return
        got_target = reward > 0 or link.url in run.targets
        ids, counts = focused_features(link.url, link.anchor, link.depth)
        self._samples.append((_Sparse(ids, counts), int(got_target)))
        if link.url in run.targets:
            return
        self._html_pages += 1
        if self._html_pages % self.retrain_every == 0:
            self.model.partial_fit([s for s, _ in self._samples], [y for _, y in self._samples])  # type: ignore[misc]
            self._samples = []
            self._rescore()

    def _rescore(self) -> None:
        self.heap = []
        for url, link in self.pending.items():
            p = self._score(link)
            self.priority[url] = p
            self.heap.append((-p, self._order[url], url))
        heapq.heapify(self.heap)


# --------------------------------------------------------------------------- #
# TP-OFF
# --------------------------------------------------------------------------- #


class TpOffPolicy(_Indexed):
    """BFS bootstrap that learns tag-path group benefits, then group-priority crawling.

    During the first ``bootstrap`` pages the frontier is a FIFO queue and every
    crawled page credits its true benefit (from ``oracle_benefit``) to the tag
    path group of the link that reached it. Afterwards only links whose tag
    path falls into a known group are kept, and the group with the highest mean
    benefit is served first (FIFO within a group).
    """

    name = "tpoff"

    def __init__(self, cfg: CrawlConfig, oracle_benefit: Callable[[str], float]) -> None:
        super().__init__()
        self.bootstrap = cfg.tpoff_bootstrap
        self.oracle_benefit = oracle_benefit
        self.vectorizer = TagPathVectorizer(cfg.n, HashParams(cfg.prime, cfg.w, cfg.m))
        self.groups = ActionSpace(self.vectorizer.dim, theta=cfg.theta, backend="exact")
        self.benefit_sum: list[float] = []
        self.benefit_n: list[int] = []
        self.queue: deque[PendingLink] = deque()
        self.by_group: dict[int, deque[PendingLink]] = {}
        self.dropped = 0
        self.phase = 1

    def mean_benefit(self, gid: int) -> float:
        n = self.benefit_n[gid]
        return self.benefit_sum[gid] / n if n else 0.0

    def _switch(self) -> None:
        self.phase = 2
        for link in self.queue:
            if link.action is None:
                del self.pending[link.url]
                self.dropped += 1
            else:
                self.by_group.setdefault(link.action, deque()).append(link)
        self.queue.clear()

    def push(self, link: PendingLink, run: CrawlRun) -> bool:
        if link.path is not None:
            vec = self.vectorizer.vectorize(link.path)
            if self.phase == 1:
                gid, created = self.groups.map_link_to_action(vec)
                if created:
                    self.benefit_sum.append(0.0)
                    self.benefit_n.append(0)
                link.action = gid
            else:
                link.action = self.groups.match(vec)
        if self.phase == 1:
            self.pending[link.url] = link
            self.queue.append(link)
            return True
        if link.action is None:
            self.dropped += 1
            return False
        self.pending[link.url] = link
        self.by_group.setdefault(link.action, deque()).append(link)
        return True

    def pop(self, run: CrawlRun) -> PendingLink | None:
        if self.phase == 1 and run.t >= self.bootstrap:
            self._switch()
        if self.phase == 1:
            if not self.queue:
                return None
            link = self.queue.popleft()
        else:
            awake = [g for g, q in self.by_group.items() if q]
            if not awake:
                return None
            best = max(awake, key=lambda g: (self.mean_benefit(g), -g))
            link = self.by_group[best].popleft()
        del self.pending[link.url]
        return link

    def feedback(self, link: PendingLink, reward: int, run: CrawlRun) -> None:
        if self.phase == 1 and link.action is not None:
            self.benefit_sum[link.action] += float(self.oracle_benefit(link.url))
            self.benefit_n[link.action] += 1


def make_policy(
    name: str,
    cfg: CrawlConfig,
    targets: Iterable[str] | None = None,
    oracle_benefit: Callable[[str], float] | None = None,
):
    if name == "sb":
        return SleepingBanditPolicy(cfg)
    if name == "random":
        return RandomPolicy()
    if name == "bfs":
        return BfsPolicy()
    if name == "dfs":
        return DfsPolicy()
    if name == "omniscient":
        if targets is None:
            raise ValueError("the omniscient crawler needs the full target list")
        return OmniscientPolicy(targets)
    if name == "focused":
        return FocusedPolicy(cfg)
    if name == "tpoff":
        if oracle_benefit is None:
            raise ValueError("TP-OFF needs an oracle benefit function for its bootstrap")
        return TpOffPolicy(cfg, oracle_benefit)
    raise ValueError(f"unknown policy {name!r}; expected one of {', '.join(POLICIES)}")
