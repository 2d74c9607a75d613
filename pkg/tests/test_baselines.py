import numpy as np
import pytest

from minisite import ROOT, MiniTransport, html, run_mini, target
from sbcrawl.baselines import (
    FOCUSED_FEATURES,
    POLICIES,
    BfsPolicy,
    DfsPolicy,
    FocusedPolicy,
    OmniscientPolicy,
    RandomPolicy,
    TpOffPolicy,
    _Sparse,
    focused_features,
    focused_priority,
    make_policy,
)
from sbcrawl.classifier import N_FEATURES, OnlineLogisticRegression, OracleClassifier
from sbcrawl.config import CrawlConfig
from sbcrawl.engine import CrawlRun
from sbcrawl.fetch import Fetcher
from sbcrawl.graph import PendingLink

CFG = CrawlConfig(respect_robots=False)


def two_level(fanout=3):
    pages = {"/": html(*(f"/a{i}.html" for i in range(fanout)))}
    for i in range(fanout):
        pages[f"/a{i}.html"] = html(*(f"/a{i}/b{j}.html" for j in range(fanout)))
        for j in range(fanout):
            pages[f"/a{i}/b{j}.html"] = html()
    return pages


def get_urls(run):
    return [r.url for r in run.trace.records if r.method == "GET"]


def test_bfs_visits_by_depth():
    run, _ = run_mini(two_level(), BfsPolicy())
    depths = [run.tree.depth(u) for u in get_urls(run)]
    assert depths == sorted(depths)


def test_dfs_goes_deep_first():
    run, _ = run_mini(two_level(), DfsPolicy())
    urls = get_urls(run)
    assert urls[1] == ROOT + "a2.html" and urls[2].startswith(ROOT + "a2/")


def test_random_seeded_reproducible():
    a, _ = run_mini(two_level(4), RandomPolicy(), seed=5)
    b, _ = run_mini(two_level(4), RandomPolicy(), seed=5)
    c, _ = run_mini(two_level(4), RandomPolicy(), seed=6)
    assert get_urls(a) == get_urls(b)
    assert get_urls(a) != get_urls(c)


def test_omniscient_exactly_k_gets():
    pages = two_level()
    targets = [f"/a{i}/d.csv" for i in range(3)]
    for i, t in enumerate(targets):
        pages[f"/a{i}/b0.html"] = html(t)
        pages[t] = target()
    run, _ = run_mini(pages, OmniscientPolicy([ROOT + t.lstrip("/") for t in targets]), budget=10)
    assert run.gets == 3 and run.y == 3
    assert run.trace.final_budget == 3


def test_make_policy_names_and_errors():
    for name in POLICIES:
        if name in ("omniscient", "tpoff"):
            with pytest.raises(ValueError):
                make_policy(name, CFG)
        else:
            assert make_policy(name, CFG).name == name
    with pytest.raises(ValueError):
        make_policy("astar", CFG)


# -- FOCUSED ----------------------------------------------------------------


def test_untrained_focused_is_fifo():
    pol = FocusedPolicy(CFG)
    links = [PendingLink(f"http://x.org/{i}", depth=1, anchor=str(i)) for i in range(6)]
    for link in links:
        pol.push(link, None)
    assert all(p == 0.5 for p in pol.priority.values())
    assert [pol.pop(None).url for _ in links] == [l.url for l in links]


def test_focused_features_layout():
    ids, counts = focused_features("http://a/b", "go", 3)
    assert ids[-1] == 2 * N_FEATURES and ids.max() < FOCUSED_FEATURES
    assert counts[-1] == pytest.approx(np.log1p(3))


def test_trained_focused_ranks_data_links_first():
    model = OnlineLogisticRegression(FOCUSED_FEATURES)
    xs, ys = [], []
    for i in range(200):
        for path, label in ((f"/data/set{i}", 1), (f"/about/page{i}", 0), (f"/news/item{i}", 0)):
            ids, counts = focused_features("http://stats.example" + path, "link", 2)
            xs.append(_Sparse(ids, counts))
            ys.append(label)
    for _ in range(5):
        model.partial_fit(xs, ys)
    data = focused_priority("http://stats.example/data/set999", "link", 2, model)
    other = [focused_priority(f"http://stats.example/{p}/x999", "link", 2, model) for p in ("about", "news", "contact")]
    assert 0.0 <= data <= 1.0 and all(0.0 <= o <= 1.0 for o in other)
    assert data > max(other)


def test_focused_retrains_during_crawl():
    pages = two_level(4)
    for i in range(4):
        pages[f"/a{i}/b0.html"] = html(f"/a{i}/d.csv")
        pages[f"/a{i}/d.csv"] = target()
    run, _ = run_mini(pages, FocusedPolicy(CFG.replace(focused_retrain=5)))
    assert run.policy.model.trained_batches >= 2
    assert run.y == 4


# -- TP-OFF -----------------------------------------------------------------


def tpoff_site():
    pages = {
        "/": html("/early.html", "/poor.html", "/rich.html", wrap="div"),
        "/early.html": html("/e0.html", wrap="section"),
        "/e0.html": html("/x.csv"),
        "/x.csv": target(),
        "/poor.html": html(*(f"/n{i}.html" for i in range(4)), wrap="nav"),
        "/rich.html": html(*(f"/r{i}.html" for i in range(4)), wrap="section"),
    }
    for i in range(4):
        pages[f"/n{i}.html"] = html()
        pages[f"/r{i}.html"] = html(f"/r{i}.csv")
        pages[f"/r{i}.csv"] = target()
    pages["/r3.html"] = html("/r3.csv", "/hidden.html", wrap="aside")
    pages["/hidden.html"] = html("/h.csv")
    pages["/h.csv"] = target()
    return pages


def run_tpoff(pages, bootstrap):
    t = MiniTransport(pages)
    cfg = CFG.replace(tpoff_bootstrap=bootstrap)
    run = CrawlRun(ROOT, cfg, Fetcher("live", t), TpOffPolicy(cfg, t.benefit), OracleClassifier(t.truth))
    run.run()
    return run


def test_tpoff_prioritizes_learned_group_and_drops_unseen_paths():
    run = run_tpoff(tpoff_site(), bootstrap=6)
    urls = [u.removeprefix(ROOT) for u in get_urls(run)]
    assert run.policy.phase == 2
    # phase 2 serves the target-rich "section" group ahead of the earlier-queued nav pages
    first_n = urls.index("n0.html")
    assert all(urls.index(f"r{i}.html") < first_n for i in range(4))
    assert "hidden.html" not in urls and "h.csv" not in urls
    assert run.policy.dropped >= 1


def test_tpoff_small_site_is_pure_bfs():
    pages = tpoff_site()
    tp = run_tpoff(pages, bootstrap=3000)
    bfs, _ = run_mini(pages, BfsPolicy())
    assert tp.policy.phase == 1
    assert get_urls(tp) == get_urls(bfs)
