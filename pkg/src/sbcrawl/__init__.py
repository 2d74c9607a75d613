"""Budgeted focused crawling with a sleeping bandit over DOM tag paths."""

from .config import ConfigError, CrawlConfig, load_config
from .engine import CrawlRun, CrawlTrace, SleepingBanditPolicy, StepRecord, crawl
from .fetch import Fetcher, FetchResponse, PageStore
from .graph import CrawlTree, WebsiteGraph, WeightMode
from .urls import in_scope, normalize

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CrawlConfig",
    "CrawlRun",
    "CrawlTrace",
    "CrawlTree",
    "FetchResponse",
    "Fetcher",
    "PageStore",
    "SleepingBanditPolicy",
    "StepRecord",
    "WebsiteGraph",
    "WeightMode",
    "crawl",
    "in_scope",
    "load_config",
    "normalize",
]
