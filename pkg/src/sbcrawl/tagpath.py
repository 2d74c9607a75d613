"""DOM tag paths: extraction, n-gram bag-of-words, and fixed-size projection.

A tag path is the chain of elements from the document root down to a
link-bearing element. Each step renders as ``name#id.class1.class2``. Paths are
turned into n-gram counts over a vocabulary that grows during the crawl, then
hashed into a vector of fixed length ``2**m`` so that paths seen at different
times can be compared.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from lxml import etree

from .urls import InvalidURL, normalize

logger = logging.getLogger(__name__)

BOS = "<BOS>"
EOS = "<EOS>"

LINK_ATTRS = {"a": "href", "area": "href", "iframe": "src", "frame": "src", "embed": "src"}

# Large prime used outside the worked example; fits in 31 bits.
DEFAULT_PRIME = 2147483629


@dataclass(frozen=True)
class TagStep:
    name: str
    id: str | None = None
    classes: tuple[str, ...] = ()

    def render(self) -> str:
        out = self.name
        if self.id:
            out += "#" + self.id
        for cls in self.classes:
            out += "." + cls
        return out


@dataclass(frozen=True)
class TagPath:
    steps: tuple[TagStep, ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("a tag path has at least one step")

    def tokens(self) -> list[str]:
        return [s.render() for s in self.steps]

    def render(self) -> str:
        return " ".join(self.tokens())

    def __str__(self) -> str:
        return self.render()

    @classmethod
    def parse(cls, text: str) -> TagPath:
        """Inverse of :meth:`render` for ids/classes without ``#``/``.`` inside."""
        steps = []
        for token in text.split():
            head, *classes = token.split(".")
            name, _, ident = head.partition("#")
            steps.append(TagStep(name, ident or None, tuple(classes)))
        return cls(tuple(steps))


@dataclass(frozen=True)
class ExtractedLink:
    url: str
    path: TagPath
    anchor: str = ""


@dataclass(frozen=True)
class HashParams:
    prime: int = DEFAULT_PRIME
    w: int = 15
    m: int = 12

    def __post_init__(self) -> None:
        if self.w <= self.m:
            raise ValueError("hash word size w must exceed output bits m")
        if self.prime % 2 == 0:
            raise ValueError("hash multiplier must be odd")

    @property
    def dim(self) -> int:
        return 1 << self.m


def hash_index(i: int, params: HashParams) -> int:
    """Multiplicative hash of a vocabulary index into ``[0, 2**m)``."""
    return ((params.prime * i) % (1 << params.w)) >> (params.w - params.m)


def _step_of(el) -> TagStep:
    ident = (el.get("id") or "").strip() or None
    classes = tuple((el.get("class") or "").split())
    return TagStep(el.tag.lower() if isinstance(el.tag, str) else str(el.tag), ident, classes)


def extract_links(
    html: bytes | str,
    base: str,
    link_tags: dict[str, str] | None = None,
) -> list[ExtractedLink]:
    """All hyperlinks of a page with their root-to-element tag paths.

    Relative targets are resolved against ``base`` (or the page's ``<base>``).
    Links that do not resolve to an http(s) URL are skipped. Broken markup
    yields whatever the lenient parser recovers, possibly nothing.
    """
    link_tags = link_tags or LINK_ATTRS
    if not html:
        return []
    if isinstance(html, str):
        html = html.encode("utf-8")
    parser = etree.HTMLParser(recover=True, remove_comments=True, remove_pis=True)
    try:
        root = etree.fromstring(html, parser)
    except (etree.XMLSyntaxError, ValueError) as exc:
        logger.debug("unparseable page %s: %s", base, exc)
        return []
    if root is None:
        return []

    base_el = root.find(".//base[@href]")
    if base_el is not None:
        try:
            base = normalize(base_el.get("href"), base)
        except InvalidURL:
            pass

    steps: dict[object, TagStep] = {}
    out: list[ExtractedLink] = []
    for el in root.iter(*link_tags):
        ref = el.get(link_tags[el.tag])
        if not ref:
            continue
        try:
            url = normalize(ref, base)
        except (InvalidURL, ValueError):
            continue
        chain = [el, *el.iterancestors()]
        chain.reverse()
        path_steps = []
        for node in chain:
            step = steps.get(node)
            if step is None:
                step = steps[node] = _step_of(node)
            path_steps.append(step)
        anchor = " ".join(el.itertext()).strip() if el.tag in ("a", "area") else ""
        out.append(ExtractedLink(url, TagPath(tuple(path_steps)), anchor))
    return out


class NgramVocabulary:
    """Append-only n-gram vocabulary with dense ids in first-seen order."""

    def __init__(self, n: int = 2) -> None:
        if n < 1:
            raise ValueError("n must be positive")
        self.n = n
        self.entries: dict[tuple[str, ...], int] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def ngrams(self, path: TagPath) -> list[tuple[str, ...]]:
        toks = [BOS, *path.tokens(), EOS]
        n = self.n
        return [tuple(toks[i : i + n]) for i in range(len(toks) - n + 1)]

    def bow(self, path: TagPath, grow: bool = True) -> dict[int, int]:
        """Sparse n-gram counts keyed by vocabulary id; unseen n-grams are appended."""
        counts: dict[int, int] = {}
        for gram in self.ngrams(path):
            idx = self.entries.get(gram)
            if idx is None:
                if not grow:
                    continue
                idx = self.entries[gram] = len(self.entries)
            counts[idx] = counts.get(idx, 0) + 1
        return counts


def ngram_bow(path: TagPath, vocab: NgramVocabulary) -> dict[int, int]:
    return vocab.bow(path)


def project(bow: dict[int, float], d: int, params: HashParams) -> np.ndarray:
    """Reference projection: per-bucket mean over every colliding index below ``d``.

    Indices absent from ``bow`` contribute zero to the mean but still count in
    its denominator. Buckets no index maps to stay exactly zero.
    """
    if d < 1:
        raise ValueError("vocabulary size must be at least 1")
    sums = np.zeros(params.dim)
    sizes = np.zeros(params.dim)
    for i in range(d):
        j = hash_index(i, params)
        sizes[j] += 1
        sums[j] += bow.get(i, 0)
    out = np.zeros(params.dim)
    hit = sizes > 0
    out[hit] = sums[hit] / sizes[hit]
    return out


@dataclass
class TagPathVectorizer:
    """Stateful path-to-vector pipeline with incremental bucket bookkeeping.

    Keeps the bucket sizes for the current vocabulary so each projection costs
    O(path length + D) instead of O(d + D).
    """

    n: int = 2
    params: HashParams = field(default_factory=HashParams)

    def __post_init__(self) -> None:
        self.vocab = NgramVocabulary(self.n)
        self._bucket_of: list[int] = []
        self._sizes = np.zeros(self.params.dim)

    @property
    def dim(self) -> int:
        return self.params.dim

    def _sync(self) -> None:
        for i in range(len(self._bucket_of), len(self.vocab)):
            j = hash_index(i, self.params)
            self._bucket_of.append(j)
            self._sizes[j] += 1

    def vectorize(self, path: TagPath) -> np.ndarray:
        counts = self.vocab.bow(path)
        self._sync()
        out = np.zeros(self.params.dim)
        for i, c in counts.items():
            out[self._bucket_of[i]] += c
        nz = out != 0
        out[nz] /= self._sizes[nz]
        return out


def vectorize(path: TagPath, vocab: NgramVocabulary, params: HashParams) -> np.ndarray:
    bow = vocab.bow(path)
    return project(bow, len(vocab), params)
