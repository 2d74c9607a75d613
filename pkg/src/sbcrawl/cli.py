"""Command-line entry point: ``sbcrawl <command> ...``.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence

import yaml

from .baselines import POLICIES, make_policy
from .classifier import HTML, NEITHER, TARGET, OracleClassifier
from .config import ConfigError, CrawlConfig, load_config
from .engine import CrawlRun, CrawlTrace
from .fetch import Fetcher, HttpTransport, Pacer, PageStore
from .fixtures import build_site_fixture, verify_fixture
from .metrics import evaluate_trace, load_reference, plot_data_csv, reports_to_csv, reports_to_json
from .simulator import (
    PRESETS,
    ReductionInstance,
    SiteSpec,
    SiteSpecError,
    build_reduction,
    generate_site,
    min_cover_bruteforce,
    optimal_crawl_bruteforce,
    serve,
)
from .tagpath import extract_links

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("sbcrawl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        raise UsageError(f"{self.prog}: {message}")


def _site_spec(value: str, seed: int | None) -> SiteSpec:
    if value in PRESETS:
        return PRESETS[value](seed=seed or 0)
    spec = SiteSpec.load(value)
    if seed is not None:
        spec.seed = seed
    return spec


def _store_truth(store: PageStore, target_urls: set[str]) -> tuple[Callable[[str], str], Callable[[str], float]]:
    def truth(url: str) -> str:
        if url in target_urls:
            return TARGET
        rec = store.get("GET", url)
        if rec is None or rec.status >= 400:
            return NEITHER
        return HTML if rec.redirect or (rec.mime and "html" in rec.mime) else NEITHER

    def benefit(url: str) -> float:
        rec = store.get("GET", url)
        if rec is None or not rec.mime or "html" not in rec.mime:
            return 0.0
        return float(sum(1 for link in extract_links(rec.body, url) if link.url in target_urls))

    return truth, benefit


def cmd_crawl(args: argparse.Namespace, cfg: CrawlConfig) -> int:
    truth = benefit = None
    targets: list[str] | None = None
    if args.site:
        site = generate_site(_site_spec(args.site, args.site_seed))
        fetcher = Fetcher("live", transport=serve(site, args.error_rate, args.site_seed or 0),
                          blocked_mimes=cfg.mime_blocklist)
        root = site.root
        truth, benefit, targets = site.truth, site.benefit, sorted(site.targets)
        cfg = cfg.replace(respect_robots=False)
    else:
        if not args.seed_url:
            raise UsageError("crawl needs --seed-url or --site")
        root = args.seed_url
        store = PageStore(args.store or cfg.store) if (args.store or cfg.store) else None
        transport = HttpTransport(cfg.user_agent) if args.mode != "replay" else None
        fetcher = Fetcher(args.mode, transport=transport, store=store, pacer=Pacer(cfg.politeness_delay),
                          blocked_mimes=cfg.mime_blocklist)
        if args.manifest:
            manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
            targets = manifest.get("target_urls")
            if store is not None and targets is not None:
                truth, benefit = _store_truth(store, set(targets))
    policy_name = args.policy
    classifier = None
    if policy_name == "sb-oracle" or args.classifier == "oracle":
        if truth is None:
            raise UsageError("an oracle classifier needs --site or --manifest with a store")
        classifier = OracleClassifier(truth)
        policy_name = "sb" if policy_name == "sb-oracle" else policy_name
    policy = make_policy(policy_name, cfg, targets=targets, oracle_benefit=benefit)
    if args.trace:
        cfg = cfg.replace(trace_path=args.trace)
    run = CrawlRun(root, cfg, fetcher, policy, classifier)
    trace = run.run()
    summary = {
        "policy": args.policy,
        "root": run.root,
        "requests": trace.requests,
        "gets": run.gets,
        "heads": run.heads,
        "targets": trace.final_targets,
        "budget": trace.final_budget,
        "stopped_early": trace.stopped_early,
    }
    print(json.dumps(summary))
    return EXIT_OK


def cmd_generate_site(args: argparse.Namespace, cfg: CrawlConfig) -> int:
    spec = _site_spec(args.spec, args.seed)
    if args.out:
        manifest = build_site_fixture(args.out, spec)
        manifest = {k: v for k, v in manifest.items() if k != "target_urls"}
    else:
        site = generate_site(spec)
        manifest = site.manifest(extension_blocklist=cfg.extension_blocklist)
    print(json.dumps(manifest, sort_keys=True))
    return EXIT_OK


def cmd_replicate(args: argparse.Namespace, cfg: CrawlConfig) -> int:
    store = PageStore(args.store)
    fetcher = Fetcher("semi_online" if args.resume else "record", transport=HttpTransport(cfg.user_agent),
                      store=store, pacer=Pacer(cfg.politeness_delay), blocked_mimes=cfg.mime_blocklist)
    if args.trace:
        cfg = cfg.replace(trace_path=args.trace)
    trace = CrawlRun(args.seed_url, cfg, fetcher, make_policy(args.policy, cfg)).run()
    print(json.dumps({"requests": trace.requests, "targets": trace.final_targets, "stored": len(store)}))
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, cfg: CrawlConfig) -> int:
    ref = load_reference(args.reference)
    unstopped = dict(zip(args.traces, args.unstopped)) if args.unstopped else {}
    if args.unstopped and len(args.unstopped) != len(args.traces):
        raise UsageError("--unstopped needs one trace per evaluated trace")
    reports = []
    for path in args.traces:
        trace = CrawlTrace.read(path)
        twin = CrawlTrace.read(unstopped[path]) if path in unstopped else None
        policy = Path(path).stem if args.policy is None else args.policy
        reports.append(evaluate_trace(trace, ref, policy, args.site, args.seed, args.fractions, twin))
    text = reports_to_json(reports) if args.format == "json" else reports_to_csv(reports)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_sets(text: str) -> tuple[frozenset[int], ...]:
    return tuple(frozenset(int(x) for x in part.split(",") if x.strip()) for part in text.split(";") if part.strip())


def cmd_oracle(args: argparse.Namespace, cfg: CrawlConfig) -> int:
    if args.instance:
        data = yaml.safe_load(Path(args.instance).read_text(encoding="utf-8"))
        inst = ReductionInstance(int(data["m"]), tuple(frozenset(s) for s in data["collection"]), int(data.get("budget", 0)))
    elif args.m is not None and args.sets:
        inst = ReductionInstance(args.m, _parse_sets(args.sets), args.budget or 0)
    else:
        raise UsageError("oracle needs --instance FILE or --m with --sets")
    graph, targets = build_reduction(inst)
    cost, tree = optimal_crawl_bruteforce(graph, targets)
    cover = min_cover_bruteforce(inst)
    out = {
        "m": inst.m,
        "min_cover": cover,
        "optimal_cost": cost,
        "expected_cost": inst.m + cover + 1,
        "cover_within_budget": cover <= inst.budget if inst.budget else None,
        "witness": {u: tree.parent.get(u) for u in sorted(tree.nodes)},
    }
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_plot_data(args: argparse.Namespace, cfg: CrawlConfig) -> int:
    text = plot_data_csv(CrawlTrace.read(args.trace))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify_fixture(args: argparse.Namespace, cfg: CrawlConfig) -> int:
    report = verify_fixture(args.fixture, cfg)
    print(report)
    return EXIT_OK if report.ok else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sbcrawl", description="Budgeted focused crawler for data files.")
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("crawl", help="crawl a website or a simulated site")
    c.add_argument("--policy", default="sb", choices=(*POLICIES, "sb-oracle"))
    c.add_argument("--seed-url")
    c.add_argument("--site", help="simulator preset name or site spec file")
    c.add_argument("--site-seed", type=int)
    c.add_argument("--error-rate", type=float, default=0.0)
    c.add_argument("--mode", default="semi_online", choices=("live", "record", "replay", "semi_online"))
    c.add_argument("--store")
    c.add_argument("--manifest", help="fixture manifest with the target list (omniscient, oracle, tpoff)")
    c.add_argument("--classifier", default="learned", choices=("learned", "oracle"))
    c.add_argument("--budget", type=float)
    c.add_argument("--seed", type=int)
    c.add_argument("--max-targets", type=int)
    c.add_argument("--early-stop", action="store_true", default=None)
    c.add_argument("--trace", help="write the step trace (JSON lines) here")
    c.set_defaults(func=cmd_crawl)

    g = sub.add_parser("generate-site", help="generate a synthetic site (optionally as a fixture)")
    g.add_argument("spec", help="preset name or site spec file")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="fixture directory to write (store + manifest)")
    g.set_defaults(func=cmd_generate_site)

    r = sub.add_parser("replicate", help="crawl live and record every response into a store")
    r.add_argument("--seed-url", required=True)
    r.add_argument("--store", required=True)
    r.add_argument("--policy", default="bfs", choices=POLICIES[:4])
    r.add_argument("--resume", action="store_true", help="reuse stored responses (semi-online)")
    r.add_argument("--budget", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--trace")
    r.set_defaults(func=cmd_replicate)

    e = sub.add_parser("evaluate", help="turn traces into a run report")
    e.add_argument("traces", nargs="+")
    e.add_argument("--reference", required=True, help="fixture manifest.json or exhaustive crawl trace")
    e.add_argument("--fractions", type=float, nargs="+", default=[0.9])
    e.add_argument("--unstopped", nargs="+", help="paired traces without early stopping")
    e.add_argument("--policy", help="policy label (default: trace file stem)")
    e.add_argument("--site", default="")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--format", choices=("csv", "json"), default="csv")
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    o = sub.add_parser("oracle", help="exact optimal crawl cost of a set-cover reduction graph")
    o.add_argument("--instance", help="YAML with m, collection (list of lists), budget")
    o.add_argument("--m", type=int)
    o.add_argument("--sets", help='subsets as "1,2;2,3"')
    o.add_argument("--budget", type=int)
    o.set_defaults(func=cmd_oracle)

    d = sub.add_parser("plot-data", help="per-request cumulative curves as CSV")
    d.add_argument("trace")
    d.add_argument("--out")
    d.set_defaults(func=cmd_plot_data)

    v = sub.add_parser("verify-fixture", help="re-derive a fixture manifest from its store")
    v.add_argument("fixture")
    v.set_defaults(func=cmd_verify_fixture)
    return p


def _config(args: argparse.Namespace) -> CrawlConfig:
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = yaml.safe_load(value)
    for key in ("budget", "seed", "max_targets", "early_stop"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return load_config(args.config, **overrides)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"sbcrawl: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, SiteSpecError) as exc:
        key = getattr(exc, "key", None)
        print(f"sbcrawl: configuration error{f' in {key!r}' if key else ''}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        log.debug("failure", exc_info=True)
        print(f"sbcrawl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
