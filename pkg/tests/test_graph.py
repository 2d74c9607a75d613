import random

import pytest
from hypothesis import given, strategies as st

from sbcrawl.graph import (
    CrawlTree,
    CrawlTreeError,
    Frontier,
    PendingLink,
    RandomBag,
    SleepingActionError,
    WebsiteGraph,
    frontier_pop,
)

R = "http://site.example/"


def test_attach_adds_cost():
    tree = CrawlTree(R).attach(R + "u", R, 1)
    assert len(tree) == 2
    assert tree.total_cost == 2


def test_attach_twice_rejected():
    tree = CrawlTree(R).attach(R + "u", R, 1)
    with pytest.raises(CrawlTreeError):
        tree.attach(R + "u", R, 1)


def test_attach_requires_parent():
    with pytest.raises(CrawlTreeError):
        CrawlTree(R).attach(R + "b", R + "a", 1)


def test_chain_cost_and_depth():
    tree = CrawlTree(R).attach(R + "a", R, 1).attach(R + "b", R + "a", 1)
    assert tree.total_cost == 3
    assert tree.depth(R + "b") == 2
    assert tree.is_tree()


def test_graph_rejects_out_of_scope_edges():
    g = WebsiteGraph(R)
    g.add_edge(R, R + "x")
    assert g.nodes == {R, R + "x"}
    with pytest.raises(ValueError):
        g.add_edge(R, "http://elsewhere.example/")


def _frontier(links):
    f = Frontier()
    for url, action in links:
        f.add(PendingLink(url, action))
    return f


def test_pop_singleton():
    f = _frontier([(R + "a", 0)])
    assert frontier_pop(f, 0, random.Random(0)).url == R + "a"
    assert len(f) == 0 and R + "a" not in f


def test_pop_is_seeded():
    links = [(R + str(i), 0) for i in range(20)]
    a = [frontier_pop(_frontier(links), 0, random.Random(5)).url for _ in range(3)]
    assert len(set(a)) == 1


def test_pop_empty_action_is_asleep():
    f = _frontier([(R + "a", 1)])
    with pytest.raises(SleepingActionError):
        frontier_pop(f, 0, random.Random(0))


def test_url_in_one_action_only():
    f = _frontier([(R + "a", 0)])
    with pytest.raises(ValueError):
        f.add(PendingLink(R + "a", 1))


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 3)), max_size=60), st.integers(0, 1000))
def test_frontier_index_matches_union(ops, seed):
    rng = random.Random(seed)
    f = Frontier()
    popped = set()
    for url_id, action in ops:
        url = f"{R}{url_id}"
        if url in f or url in popped:
            if f.awake(action):
                popped.add(frontier_pop(f, action, rng).url)
            continue
        f.add(PendingLink(url, action))
    union = set()
    for bag in f.by_action.values():
        assert union.isdisjoint(set(bag))
        union |= set(bag)
    assert union == set(f.url_index)
    assert len(f) + len(popped) == len(union | popped)


def test_random_bag_removal():
    bag = RandomBag("abc")
    bag.remove("b")
    assert sorted(bag) == ["a", "c"]
    assert bag.pop_random(random.Random(0)) in "ac"
