"""URL canonicalization and the same-website scope rule."""

from __future__ import annotations

from functools import lru_cache
from urllib.parse import urljoin, urlsplit, urlunsplit

_DEFAULT_PORTS = {"http": 80, "https": 443}
_FETCHABLE_SCHEMES = frozenset(("http", "https"))


class InvalidURL(ValueError):
    """Raised when a string cannot be interpreted as an absolute http(s) URL."""


@lru_cache(maxsize=65536)
def normalize(url: str, base: str | None = None) -> str:
    """Canonical form used for every identity check.

    Lowercases scheme and host, drops the fragment and default ports, keeps the
    query string, and resolves ``url`` against ``base`` when given.
    """
    raw = url.strip()
    if base is not None:
        raw = urljoin(base, raw)
    try:
        parts = urlsplit(raw)
        port = parts.port
    except ValueError as exc:
        raise InvalidURL(url) from exc
    scheme = parts.scheme.lower()
    if scheme not in _FETCHABLE_SCHEMES or not parts.hostname:
        raise InvalidURL(url)
    host = parts.hostname.lower()
    if port is not None and port != _DEFAULT_PORTS[scheme]:
        host = f"{host}:{port}"
    path = parts.path or "/"
    return urlunsplit((scheme, host, path, parts.query, ""))


def hostname(url: str) -> str:
    try:
        host = urlsplit(url.strip()).hostname
    except ValueError as exc:
        raise InvalidURL(url) from exc
    if not host:
        raise InvalidURL(url)
    return host.lower()


def _site_host(host: str) -> str:
    return host[4:] if host.startswith("www.") else host


@lru_cache(maxsize=65536)
def in_scope(candidate: str, root: str) -> bool:
    """True when ``candidate`` belongs to the website rooted at ``root``.

    Hostnames are compared after dropping one leading ``www.`` label; the
    candidate may equal the root host or be a subdomain of it on full label
    boundaries. Malformed URLs are out of scope.
    """
    try:
        cand = _site_host(hostname(candidate))
        ref = _site_host(hostname(root))
    except InvalidURL:
        return False
    return cand == ref or cand.endswith("." + ref)


def extension(url: str) -> str:
    """Lowercased final path suffix including the dot, or ``""``."""
    path = urlsplit(url).path
    leaf = path.rsplit("/", 1)[-1]
    dot = leaf.rfind(".")
    if dot <= 0:
        return ""
    return leaf[dot:].lower()
