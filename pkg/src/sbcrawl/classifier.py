"""Online two-class URL classifier (HTML vs Target).

URLs are encoded as counts of consecutive character pairs over the printable
ASCII alphabet plus one bucket for anything else, and fed to a logistic
regression trained by SGD on small batches. The first batch is labeled with
HEAD requests; afterwards every GET outcome supplies a free label.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol

import numpy as np

logger = logging.getLogger(__name__)

HTML = "HTML"
TARGET = "Target"
NEITHER = "Neither"

_FIRST, _LAST = 32, 126
N_SYMBOLS = _LAST - _FIRST + 2  # printable ASCII plus OTHER
OTHER = N_SYMBOLS - 1
N_FEATURES = N_SYMBOLS * N_SYMBOLS

_SYMBOL = np.full(256, OTHER, dtype=np.int64)
_SYMBOL[_FIRST : _LAST + 1] = np.arange(_LAST - _FIRST + 1)


@dataclass(frozen=True)
class UrlFeatures:
    """Sparse bigram counts: sorted feature ids and their counts."""

    ids: np.ndarray
    counts: np.ndarray

    def dense(self, size: int = N_FEATURES) -> np.ndarray:
        out = np.zeros(size)
        out[self.ids] = self.counts
        return out


def char_bigrams(text: str) -> UrlFeatures:
    raw = np.frombuffer(text.encode("utf-8", "replace"), dtype=np.uint8)
    if len(raw) < 2:
        return UrlFeatures(np.zeros(0, dtype=np.int64), np.zeros(0))
    sym = _SYMBOL[raw]
    pairs = sym[:-1] * N_SYMBOLS + sym[1:]
    ids, counts = np.unique(pairs, return_counts=True)
    return UrlFeatures(ids, counts.astype(float))


def url_features(url: str) -> UrlFeatures:
    return char_bigrams(url)


def feature_name(idx: int) -> str:
    a, b = divmod(int(idx), N_SYMBOLS)
    ch = lambda s: "␀" if s == OTHER else chr(_FIRST + s)  # noqa: E731
    return ch(a) + ch(b)


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@dataclass
class SGDConfig:
    learning_rate: float = 0.1
    decay: float = 0.001
    l2: float = 1e-6
    epochs: int = 1
    seed: int = 0


class OnlineLogisticRegression:
    """Binary logistic regression over sparse features, updated one sample at a time."""

    def __init__(self, n_features: int = N_FEATURES, cfg: SGDConfig | None = None) -> None:
        self.cfg = cfg or SGDConfig()
        self.weights = np.zeros(n_features)
        self.bias = 0.0
        self.trained_batches = 0
        self._rng = random.Random(self.cfg.seed)

    @property
    def rate(self) -> float:
        return self.cfg.learning_rate / (1.0 + self.cfg.decay * self.trained_batches)

    def decision(self, x: UrlFeatures) -> float:
        return float(self.weights[x.ids] @ x.counts) + self.bias

    def predict_proba(self, x: UrlFeatures) -> float:
        return _sigmoid(self.decision(x))

    def partial_fit(self, xs: list[UrlFeatures], ys: list[int]) -> None:
        """One pass (per configured epoch) of per-sample SGD over a batch."""
        lr = self.rate
        order = list(range(len(xs)))
        for _ in range(self.cfg.epochs):
            self._rng.shuffle(order)
            for i in order:
                x, y = xs[i], ys[i]
                g = self.predict_proba(x) - y
                if self.cfg.l2:
                    self.weights *= 1.0 - lr * self.cfg.l2
                self.weights[x.ids] -= lr * g * x.counts
                self.bias -= lr * g
        self.trained_batches += 1

    def dump(self, path: str | Path) -> None:
        """Flat text: header lines, then one ``feature_id weight`` pair per nonzero weight."""
        lines = [f"bias {self.bias!r}", f"trained_batches {self.trained_batches}", f"n_features {len(self.weights)}"]
        for idx in np.flatnonzero(self.weights):
            lines.append(f"{int(idx)} {float(self.weights[idx])!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, cfg: SGDConfig | None = None) -> OnlineLogisticRegression:
        header: dict[str, str] = {}
        pairs: list[tuple[int, float]] = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            key, value = line.split()
            if key.isdigit():
                pairs.append((int(key), float(value)))
            else:
                header[key] = value
        model = cls(int(header.get("n_features", N_FEATURES)), cfg)
        model.bias = float(header.get("bias", 0.0))
        model.trained_batches = int(header.get("trained_batches", 0))
        for idx, w in pairs:
            model.weights[idx] = w
        return model


class HeadProbe(Protocol):
    def __call__(self, url: str) -> tuple[str | None, int, int]: ...


@dataclass
class Classification:
    label: str
    probed: bool = False
    head_status: int | None = None
    head_bytes: int = 0


def mime_class(mime: str | None, target_mimes: Iterable[str]) -> str:
    if not mime:
        return NEITHER
    if "html" in mime:
        return HTML
    if mime in target_mimes:
        return TARGET
    return NEITHER


@dataclass
class UrlClassifier:
    """Buffered online classifier with a HEAD-labeled bootstrap batch."""

    head: HeadProbe | None
    target_mimes: frozenset[str]
    batch_size: int = 10
    sgd: SGDConfig = field(default_factory=SGDConfig)

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch size must be positive")
        self.model = OnlineLogisticRegression(N_FEATURES, self.sgd)
        self.X: list[str] = []
        self.y: list[str] = []
        self.initial_phase = True
        self.get_labels = 0
        self.head_labels = 0

    def maybe_train(self) -> bool:
        if len(self.X) < self.batch_size:
            return False
        feats = [url_features(u) for u in self.X]
        self.model.partial_fit(feats, [1 if lab == TARGET else 0 for lab in self.y])
        self.X, self.y = [], []
        self.initial_phase = False
        return True

    def predict(self, url: str) -> str:
        return TARGET if self.model.decision(url_features(url)) > 0 else HTML

    def classify(self, url: str) -> Classification:
        self.maybe_train()
        if self.initial_phase:
            status, size = None, 0
            mime = None
            if self.head is not None:
                try:
                    mime, status, size = self.head(url)
                except Exception:  # HEAD failures keep the URL reachable
                    logger.debug("HEAD failed for %s", url, exc_info=True)
            label = mime_class(mime, self.target_mimes) if status and 200 <= status < 300 else NEITHER
            if label == NEITHER:
                label = HTML
            self.X.append(url)
            self.y.append(label)
            self.head_labels += 1
            return Classification(label, probed=True, head_status=status, head_bytes=size)
        return Classification(self.predict(url))

    def observe(self, url: str, label: str) -> None:
        """Record the class revealed by a GET."""
        if label not in (HTML, TARGET):
            raise ValueError(f"only two-class labels are buffered, got {label!r}")
        self.X.append(url)
        self.y.append(label)
        self.get_labels += 1


@dataclass
class OracleClassifier:
    """Perfect URL oracle backed by ground truth; costs nothing."""

    truth: Callable[[str], str]

    initial_phase: bool = False

    def classify(self, url: str) -> Classification:
        return Classification(self.truth(url))

    def observe(self, url: str, label: str) -> None:
        pass
