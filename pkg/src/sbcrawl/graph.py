"""Website-graph domain model shared by every crawler."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator

from .urls import in_scope


class WeightMode(str, enum.Enum):
    REQUESTS = "requests"
    BYTES = "bytes"


class SleepingActionError(LookupError):
    """A pull was attempted on an action with no pending links."""


class CrawlTreeError(ValueError):
    pass


@dataclass
class WebsiteGraph:
    root: str
    nodes: set[str] = field(default_factory=set)
    edges: set[tuple[str, str, str]] = field(default_factory=set)
    weight_mode: WeightMode = WeightMode.REQUESTS
    weights: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.nodes.add(self.root)

    def add_edge(self, src: str, dst: str, label: str = "") -> None:
        for url in (src, dst):
            if not in_scope(url, self.root):
                raise ValueError(f"{url} is outside the website of {self.root}")
        self.nodes.update((src, dst))
        self.edges.add((src, dst, label))

    def weight(self, url: str) -> float:
        return self.weights.get(url, 1.0)

    def successors(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {u: [] for u in sorted(self.nodes)}
        for src, dst, _ in sorted(self.edges):
            if dst not in out[src]:
                out[src].append(dst)
        return out


class CrawlTree:
    """An r-rooted tree of crawled URLs with its accumulated cost."""

    def __init__(self, root: str, root_cost: float = 1.0) -> None:
        self.root = root
        self.parent: dict[str, str | None] = {root: None}
        self.total_cost = float(root_cost)

    def __contains__(self, url: object) -> bool:
        return url in self.parent

    def __len__(self) -> int:
        return len(self.parent)

    @property
    def nodes(self) -> list[str]:
        return list(self.parent)

    def attach(self, child: str, parent: str, cost: float = 1.0) -> CrawlTree:
        if cost < 0:
            raise CrawlTreeError("cost must be nonnegative")
        if child in self.parent:
            raise CrawlTreeError(f"{child} already crawled")
        if parent not in self.parent:
            raise CrawlTreeError(f"parent {parent} not in tree")
        self.parent[child] = parent
        self.total_cost += cost
        return self

    def add_cost(self, url: str, cost: float) -> None:
        """Charge extra cost to an existing node (e.g. body bytes learned after attach)."""
        if url not in self.parent:
            raise CrawlTreeError(f"{url} not in tree")
        self.total_cost += cost

    def depth(self, url: str) -> int:
        d = 0
        node = self.parent[url]
        while node is not None:
            d += 1
            node = self.parent[node]
        return d

    def is_tree(self) -> bool:
        for start in self.parent:
            seen = set()
            node: str | None = start
            while node is not None:
                if node in seen:
                    return False
                seen.add(node)
                node = self.parent[node]
            if self.root not in seen:
                return False
        return True


@dataclass
class PendingLink:
    url: str
    action: int | None = None
    discovered_at: int = 0
    parent: str | None = None
    path: object = None
    anchor: str = ""
    depth: int = 0


class RandomBag:
    """Insertion-ordered collection with O(1) uniform random removal.

    Ordering is independent of string hashing so seeded pops reproduce across
    interpreter runs.
    """

    def __init__(self, items: Iterable[Hashable] = ()) -> None:
        self._items: list = []
        self._pos: dict = {}
        for item in items:
            self.add(item)

    def add(self, item: Hashable) -> None:
        if item in self._pos:
            return
        self._pos[item] = len(self._items)
        self._items.append(item)

    def remove(self, item: Hashable) -> None:
        idx = self._pos.pop(item)
        last = self._items.pop()
        if idx < len(self._items):
            self._items[idx] = last
            self._pos[last] = idx

    def pop_random(self, rng: random.Random) -> Hashable:
        if not self._items:
            raise IndexError("pop from empty bag")
        item = self._items[rng.randrange(len(self._items))]
        self.remove(item)
        return item

    def __contains__(self, item: object) -> bool:
        return item in self._pos

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator:
        return iter(list(self._items))


class Frontier:
    """Discovered-but-unvisited links grouped by the action they map to."""

    def __init__(self) -> None:
        self.by_action: dict[int | None, RandomBag] = {}
        self.url_index: dict[str, PendingLink] = {}

    def __len__(self) -> int:
        return len(self.url_index)

    def __contains__(self, url: object) -> bool:
        return url in self.url_index

    def add(self, link: PendingLink) -> None:
        if link.url in self.url_index:
            raise ValueError(f"{link.url} already pending")
        self.url_index[link.url] = link
        self.by_action.setdefault(link.action, RandomBag()).add(link.url)

    def pending(self, action: int | None) -> int:
        bag = self.by_action.get(action)
        return len(bag) if bag is not None else 0

    def awake(self, action: int | None) -> bool:
        return self.pending(action) > 0

    def pop(self, action: int | None, rng: random.Random) -> PendingLink:
        bag = self.by_action.get(action)
        if not bag:
            raise SleepingActionError(f"action {action} has no pending links")
        url = bag.pop_random(rng)
        return self.url_index.pop(url)

    def pop_any(self, rng: random.Random) -> PendingLink:
        """Uniform pull over the whole frontier, ignoring action grouping."""
        if not self.url_index:
            raise IndexError("frontier is empty")
        # index into the flattened bags in a hash-independent order
        keys = sorted(self.by_action, key=lambda a: (a is not None, a if a is not None else -1))
        k = rng.randrange(len(self.url_index))
        for key in keys:
            bag = self.by_action[key]
            if k < len(bag):
                url = bag._items[k]
                bag.remove(url)
                return self.url_index.pop(url)
            k -= len(bag)
        raise AssertionError("unreachable")


def frontier_pop(frontier: Frontier, action: int | None, rng: random.Random) -> PendingLink:
    return frontier.pop(action, rng)
