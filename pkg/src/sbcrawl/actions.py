"""Clustering projected tag paths into bandit actions.

Each action keeps a running-mean centroid of the projected paths that joined
it. A nearest-centroid index answers which action a new path belongs to; the
path joins when its cosine similarity reaches ``theta`` and founds a new action
otherwise.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass

import numpy as np

# Slack for rounding in cosine(x, x) so identical vectors always join at theta=1.
COSINE_TOL = 1e-12


@dataclass
class Action:
    id: int
    centroid: np.ndarray
    member_count: int = 1
    pulls: int = 0
    mean_reward: float = 0.0


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.sqrt(vec @ vec))
    if norm == 0.0:
        return np.zeros_like(vec, dtype=float)
    return vec / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity, defined as 0 when either operand is the zero vector."""
    na = float(a @ a)
    nb = float(b @ b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / math.sqrt(na * nb)


class ExactIndex:
    """Linear scan over unit-normalized centroids."""

    def __init__(self, dim: int) -> None:
        self.dim = dim
        self._units = np.zeros((16, dim))
        self._n = 0

    def __len__(self) -> int:
        return self._n

    def add(self, key: int, vec: np.ndarray) -> None:
        if key != self._n:
            raise ValueError("exact index expects dense keys in insertion order")
        if self._n == len(self._units):
            grown = np.zeros((2 * len(self._units), self.dim))
            grown[: self._n] = self._units[: self._n]
            self._units = grown
        self._units[self._n] = _unit(vec)
        self._n += 1

    def update(self, key: int, vec: np.ndarray) -> None:
        self._units[key] = _unit(vec)

    def query(self, vec: np.ndarray) -> tuple[int, float] | None:
        if self._n == 0:
            return None
        sims = self._units[: self._n] @ _unit(vec)
        best = int(np.argmax(sims))  # first maximum, i.e. lowest id on ties
        return best, float(sims[best])


class HNSWIndex:
    """Hierarchical navigable small-world graph over cosine similarity.

    Vectors are stored unit-normalized; distance is ``1 - dot``. Updating a
    vector re-links the node on every layer it lives on.
    """

    def __init__(
        self,
        dim: int,
        m: int = 16,
        ef_construction: int = 100,
        ef_search: int = 64,
        seed: int = 0,
    ) -> None:
        self.dim = dim
        self.m = m
        self.m0 = 2 * m
        self.ef_construction = ef_construction
        self.ef_search = ef_search
        self._ml = 1.0 / math.log(max(m, 2))
        self._rng = random.Random(seed)
        self._vecs: dict[int, np.ndarray] = {}
        self._level: dict[int, int] = {}
        self._links: list[dict[int, list[int]]] = []
        self._entry: int | None = None

    def __len__(self) -> int:
        return len(self._vecs)

    def _sim(self, q: np.ndarray, key: int) -> float:
        return float(self._vecs[key] @ q)

    def _search_layer(self, q: np.ndarray, entries: list[int], ef: int, layer: int) -> list[tuple[float, int]]:
        """Beam search; returns up to ``ef`` (similarity, key) pairs, best first."""
        links = self._links[layer]
        visited = set(entries)
        cand = [(-self._sim(q, e), e) for e in entries]
        heapq.heapify(cand)
        best = [(-d, e) for d, e in cand]  # min-heap on similarity
        heapq.heapify(best)
        while len(best) > ef:
            heapq.heappop(best)
        while cand:
            neg, node = heapq.heappop(cand)
            if best and -neg < best[0][0] and len(best) >= ef:
                break
            for nb in links.get(node, ()):
                if nb in visited:
                    continue
                visited.add(nb)
                s = self._sim(q, nb)
                if len(best) < ef or s > best[0][0]:
                    heapq.heappush(cand, (-s, nb))
                    heapq.heappush(best, (s, nb))
                    if len(best) > ef:
                        heapq.heappop(best)
        return sorted(best, key=lambda t: (-t[0], t[1]))

    def _greedy_descent(self, q: np.ndarray, top: int, bottom: int) -> int:
        ep = self._entry
        assert ep is not None
        for layer in range(top, bottom, -1):
            ep = self._search_layer(q, [ep], 1, layer)[0][1]
        return ep

    def _connect(self, key: int, q: np.ndarray, level: int) -> None:
        top = self._level[self._entry]  # type: ignore[index]
        ep = self._greedy_descent(q, top, level) if top > level else self._entry
        eps = [ep]
        for layer in range(min(level, top), -1, -1):
            found = [(s, k) for s, k in self._search_layer(q, eps, self.ef_construction, layer) if k != key]
            cap = self.m0 if layer == 0 else self.m
            chosen = [k for _, k in found[: self.m]]
            self._links[layer][key] = chosen
            for nb in chosen:
                nbrs = self._links[layer].setdefault(nb, [])
                if key not in nbrs:
                    nbrs.append(key)
                    if len(nbrs) > cap:
                        v = self._vecs[nb]
                        nbrs.sort(key=lambda k: (-float(self._vecs[k] @ v), k))
                        del nbrs[cap:]
            eps = [k for _, k in found] or eps

    def add(self, key: int, vec: np.ndarray) -> None:
        q = _unit(vec)
        self._vecs[key] = q
        level = int(-math.log(1.0 - self._rng.random()) * self._ml)
        self._level[key] = level
        while len(self._links) <= level:
            self._links.append({})
        for layer in range(level + 1):
            self._links[layer].setdefault(key, [])
        if self._entry is None:
            self._entry = key
            return
        self._connect(key, q, level)
        if level > self._level[self._entry]:
            self._entry = key

    def update(self, key: int, vec: np.ndarray) -> None:
        q = _unit(vec)
        self._vecs[key] = q
        if len(self._vecs) == 1:
            return
        level = self._level[key]
        if self._entry == key:
            # descend from another node so the search does not start on itself
            others = [k for k in self._links[self._level[key]] if k != key]
            if not others:
                return
            self._entry = others[0]
            self._connect(key, q, level)
            self._entry = key
            return
        self._connect(key, q, level)

    def query(self, vec: np.ndarray) -> tuple[int, float] | None:
        if self._entry is None:
            return None
        q = _unit(vec)
        ep = self._greedy_descent(q, self._level[self._entry], 0)
        found = self._search_layer(q, [ep], max(self.ef_search, 1), 0)
        s, key = found[0]
        return key, s


class ActionSpace:
    """Action registry plus centroid index implementing threshold-gated assignment."""

    def __init__(
        self,
        dim: int,
        theta: float = 0.75,
        backend: str = "auto",
        ann_threshold: int = 512,
        hnsw_params: dict | None = None,
        seed: int = 0,
    ) -> None:
        if not 0.0 <= theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if backend not in ("auto", "exact", "hnsw"):
            raise ValueError(f"unknown index backend {backend!r}")
        self.dim = dim
        self.theta = theta
        self.backend = backend
        self.ann_threshold = ann_threshold
        self.hnsw_params = dict(hnsw_params or {})
        self.seed = seed
        self.actions: list[Action] = []
        self.last_similarity: float | None = None
        self.index: ExactIndex | HNSWIndex = (
            HNSWIndex(dim, seed=seed, **self.hnsw_params) if backend == "hnsw" else ExactIndex(dim)
        )

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, key: int) -> Action:
        return self.actions[key]

    def _maybe_switch(self) -> None:
        if self.backend == "auto" and isinstance(self.index, ExactIndex) and len(self.actions) >= self.ann_threshold:
            ann = HNSWIndex(self.dim, seed=self.seed, **self.hnsw_params)
            for a in self.actions:
                ann.add(a.id, a.centroid)
            self.index = ann

    def nearest(self, vec: np.ndarray) -> tuple[int, float] | None:
        hit = self.index.query(vec)
        if hit is None:
            return None
        key, _ = hit
        # report the exact cosine against the stored centroid
        return key, cosine(self.actions[key].centroid, vec)

    def create(self, vec: np.ndarray) -> Action:
        action = Action(id=len(self.actions), centroid=np.array(vec, dtype=float))
        self.actions.append(action)
        self.index.add(action.id, action.centroid)
        self._maybe_switch()
        return action

    def update_centroid(self, action: Action, vec: np.ndarray) -> Action:
        action.centroid += (vec - action.centroid) / (action.member_count + 1)
        action.member_count += 1
        self.index.update(action.id, action.centroid)
        return action

    def map_link_to_action(self, vec: np.ndarray) -> tuple[int, bool]:
        """Assign a projected path to its action, creating one when none is close enough."""
        hit = self.nearest(vec)
        if hit is not None:
            key, sim = hit
            self.last_similarity = sim
            if sim >= self.theta - COSINE_TOL:
                self.update_centroid(self.actions[key], vec)
                return key, False
        else:
            self.last_similarity = None
        return self.create(vec).id, True

    def match(self, vec: np.ndarray) -> int | None:
        """Nearest action meeting the threshold, without creating or updating anything."""
        hit = self.nearest(vec)
        if hit is None or hit[1] < self.theta - COSINE_TOL:
            return None
        return hit[0]
