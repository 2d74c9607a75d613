"""HTTP access: live transport, persistent page store, and record/replay modes.

Store layout (stable, one directory per store)::

    <store>/journal.jsonl          one JSON object per line, appended in fetch order
    <store>/bodies/<h2>/<sha256>   raw response bodies named by their SHA-256

Journal keys: ``url`` (normalized), ``method`` (``GET``/``HEAD``), ``status``
(int, 0 for network failure), ``mime`` (bare lowercase type or null),
``location`` (absolute URL or null), ``body`` (SHA-256 hex or null),
``body_size``, ``header_size`` (bytes), ``aborted`` (bool), ``headers``
(object), ``fetched_at`` (UNIX seconds). The store keeps at most one record per
``(method, url)``; the first one wins.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Protocol

from .urls import InvalidURL, normalize

logger = logging.getLogger(__name__)

MODES = ("live", "record", "replay", "semi_online")
DEFAULT_USER_AGENT = "sbcrawl/0.1 (+https://example.org/sbcrawl; focused data crawler)"


def normalize_mime(content_type: str | None) -> str | None:
    if not content_type:
        return None
    bare = content_type.split(";", 1)[0].strip().lower()
    return bare or None


def mime_blocked(mime: str | None, patterns: Iterable[str]) -> bool:
    return bool(mime) and any(fnmatch.fnmatchcase(mime, p) for p in patterns)


@dataclass
class FetchResponse:
    url: str
    status: int
    mime: str | None = None
    location: str | None = None
    body: bytes = b""
    body_size: int = 0
    header_size: int = 0
    aborted: bool = False
    miss: bool = False
    headers: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300

    @property
    def redirect(self) -> bool:
        return 300 <= self.status < 400

    @property
    def error(self) -> bool:
        return self.status == 0 or self.status >= 400


def miss_marker(url: str) -> FetchResponse:
    return FetchResponse(url=url, status=404, miss=True)


class Transport(Protocol):
    def get(self, url: str, blocked_mimes: Iterable[str]) -> FetchResponse: ...

    def head(self, url: str) -> FetchResponse: ...


class Pacer:
    """Enforces a minimum gap between consecutive network requests."""

    def __init__(
        self,
        delay: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.delay = delay
        self._clock = clock
        self._sleep = sleep
        self._last: float | None = None
        self._lock = threading.Lock()

    def wait(self) -> None:
        with self._lock:
            if self._last is not None and self.delay > 0:
                gap = self._last + self.delay - self._clock()
                if gap > 0:
                    self._sleep(gap)
            self._last = self._clock()


def _header_bytes(status_line: str, headers: dict[str, str]) -> int:
    return len(status_line) + 2 + sum(len(k) + len(v) + 4 for k, v in headers.items()) + 2


class HttpTransport:
    """Blocking HTTP client that aborts downloads of blocklisted MIME types."""

    def __init__(self, user_agent: str = DEFAULT_USER_AGENT, timeout: float = 30.0) -> None:
        import requests

        self._requests = requests
        self.session = requests.Session()
        self.session.headers["User-Agent"] = user_agent
        self.timeout = timeout

    def _response(self, url: str, resp, body: bytes, aborted: bool) -> FetchResponse:
        headers = {k: v for k, v in resp.headers.items()}
        location = headers.get("Location") or headers.get("location")
        if location:
            try:
                location = normalize(location, url)
            except InvalidURL:
                location = None
        return FetchResponse(
            url=url,
            status=resp.status_code,
            mime=normalize_mime(headers.get("Content-Type")),
            location=location,
            body=body,
            body_size=len(body),
            header_size=_header_bytes(f"HTTP/1.1 {resp.status_code} {resp.reason or ''}", headers),
            aborted=aborted,
            headers=headers,
        )

    def get(self, url: str, blocked_mimes: Iterable[str] = ()) -> FetchResponse:
        try:
            with self.session.get(url, stream=True, allow_redirects=False, timeout=self.timeout) as resp:
                mime = normalize_mime(resp.headers.get("Content-Type"))
                if mime_blocked(mime, blocked_mimes):
                    return self._response(url, resp, b"", aborted=True)
                body = b"" if 300 <= resp.status_code < 400 else resp.raw.read(decode_content=True) or b""
                return self._response(url, resp, body, aborted=False)
        except self._requests.RequestException as exc:
            logger.info("GET %s failed: %s", url, exc)
            return FetchResponse(url=url, status=0)

    def head(self, url: str) -> FetchResponse:
        try:
            resp = self.session.head(url, allow_redirects=False, timeout=self.timeout)
        except self._requests.RequestException as exc:
            logger.info("HEAD %s failed: %s", url, exc)
            return FetchResponse(url=url, status=0)
        return self._response(url, resp, b"", aborted=False)


class PageStore:
    """Append-only journal of responses with content-addressed bodies."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "bodies").mkdir(exist_ok=True)
        self.journal = self.root / "journal.jsonl"
        self._index: dict[tuple[str, str], dict] = {}
        self._lock = threading.Lock()
        if self.journal.exists():
            with self.journal.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        self._index.setdefault((rec["method"], rec["url"]), rec)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, key: object) -> bool:
        return key in self._index

    def _body_path(self, digest: str) -> Path:
        return self.root / "bodies" / digest[:2] / digest

    def put(self, method: str, resp: FetchResponse, fetched_at: float | None = None) -> bool:
        key = (method, resp.url)
        with self._lock:
            if key in self._index:
                return False
            digest = None
            if resp.body and not resp.redirect:
                digest = hashlib.sha256(resp.body).hexdigest()
                path = self._body_path(digest)
                if not path.exists():
                    path.parent.mkdir(exist_ok=True)
                    path.write_bytes(resp.body)
            rec = {
                "url": resp.url,
                "method": method,
                "status": resp.status,
                "mime": resp.mime,
                "location": resp.location,
                "body": digest,
                "body_size": resp.body_size,
                "header_size": resp.header_size,
                "aborted": resp.aborted,
                "headers": resp.headers,
                "fetched_at": round(time.time() if fetched_at is None else fetched_at, 3),
            }
            with self.journal.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
            self._index[key] = rec
            return True

    def get(self, method: str, url: str) -> FetchResponse | None:
        rec = self._index.get((method, url))
        if rec is None:
            return None
        body = self._body_path(rec["body"]).read_bytes() if rec["body"] else b""
        return FetchResponse(
            url=rec["url"],
            status=rec["status"],
            mime=rec["mime"],
            location=rec["location"],
            body=body,
            body_size=rec["body_size"],
            header_size=rec["header_size"],
            aborted=rec["aborted"],
            headers=dict(rec.get("headers") or {}),
        )

    def records(self, method: str | None = None) -> Iterator[dict]:
        for (m, _), rec in self._index.items():
            if method is None or m == method:
                yield rec


class Fetcher:
    """Mode-aware access point used by crawlers.

    ``live`` goes to the network only; ``record`` fetches live and stores;
    ``replay`` answers from the store (a miss looks like a 404); ``semi_online``
    answers from the store and falls back to a recorded live fetch.
    """

    def __init__(
        self,
        mode: str = "live",
        transport: Transport | None = None,
        store: PageStore | None = None,
        pacer: Pacer | None = None,
        blocked_mimes: Iterable[str] = (),
    ) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown fetch mode {mode!r}")
        if mode != "live" and store is None:
            raise ValueError(f"mode {mode!r} needs a page store")
        if mode != "replay" and transport is None:
            raise ValueError(f"mode {mode!r} needs a transport")
        self.mode = mode
        self.transport = transport
        self.store = store
        self.pacer = pacer or Pacer(0.0)
        self.blocked_mimes = tuple(blocked_mimes)
        self.network_requests = 0

    def _live(self, method: str, url: str) -> FetchResponse:
        assert self.transport is not None
        self.pacer.wait()
        self.network_requests += 1
        if method == "HEAD":
            return self.transport.head(url)
        return self.transport.get(url, self.blocked_mimes)

    def _access(self, method: str, url: str) -> FetchResponse:
        if self.mode in ("replay", "semi_online"):
            assert self.store is not None
            hit = self.store.get(method, url)
            if hit is not None:
                return hit
            if self.mode == "replay":
                return miss_marker(url)
        resp = self._live(method, url)
        if self.mode in ("record", "semi_online"):
            assert self.store is not None
            self.store.put(method, resp)
        return resp

    def get(self, url: str) -> FetchResponse:
        resp = self._access("GET", url)
        if not resp.aborted and mime_blocked(resp.mime, self.blocked_mimes):
            # stored full body but the current blocklist bans it: behave as a live abort
            return FetchResponse(url=resp.url, status=resp.status, mime=resp.mime, header_size=resp.header_size,
                                 aborted=True, headers=resp.headers)
        return resp

    def head(self, url: str) -> tuple[str | None, int, int]:
        resp = self._access("HEAD", url)
        return resp.mime, resp.status, resp.header_size

