import random
import string

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sbcrawl.classifier import (
    HTML,
    N_FEATURES,
    N_SYMBOLS,
    NEITHER,
    TARGET,
    OnlineLogisticRegression,
    OracleClassifier,
    SGDConfig,
    UrlClassifier,
    char_bigrams,
    feature_name,
    mime_class,
    url_features,
)
from sbcrawl.config import default_target_mimes

MIMES = default_target_mimes()
TARGET_EXT = (".csv", ".xlsx", ".json", ".pdf", ".zip")
HTML_EXT = (".html", ".htm", "/", ".php", "")


def synthetic_url(rng: random.Random, target: bool) -> str:
    host = rng.choice(["www.stats.gov", "data.example.org", "portal.example.com"])
    depth = rng.randint(1, 4)
    segs = ["".join(rng.choices(string.ascii_lowercase + string.digits, k=rng.randint(3, 9))) for _ in range(depth)]
    ext = rng.choice(TARGET_EXT if target else HTML_EXT)
    return f"https://{host}/" + "/".join(segs) + ext


def corpus(seed: int, n: int) -> list[tuple[str, str]]:
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        target = rng.random() < 0.5
        out.append((synthetic_url(rng, target), TARGET if target else HTML))
    return out


def head_from(truth: dict[str, str]):
    def head(url):
        return ("text/csv" if truth[url] == TARGET else "text/html"), 200, 120

    return head


# -- features -------------------------------------------------------------


def test_bigrams_of_example_url():
    url = "https://www.A.com/data/file.csv"
    f = char_bigrams(url)
    names = {feature_name(i): c for i, c in zip(f.ids, f.counts)}
    for pair in ("ht", "tt", "tp", ".c", "cs", "sv"):
        assert pair in names
    assert names["tt"] == 1 and names["w."] == 1 and names["ww"] == 2
    assert f.counts.sum() == len(url) - 1


def test_short_url_has_no_features():
    assert len(char_bigrams("a").ids) == 0
    assert len(char_bigrams("").ids) == 0


def test_features_deterministic_and_bounded():
    a, b = url_features("http://x.org/é/ü"), url_features("http://x.org/é/ü")
    np.testing.assert_array_equal(a.ids, b.ids)
    assert a.ids.max() < N_FEATURES == N_SYMBOLS**2


def test_mime_class():
    assert mime_class("text/html", MIMES) == HTML
    assert mime_class("application/xhtml+xml", MIMES) == HTML
    assert mime_class("text/csv", MIMES) == TARGET
    assert mime_class("image/png", MIMES) == NEITHER
    assert mime_class(None, MIMES) == NEITHER


# -- initial phase --------------------------------------------------------


def test_initial_phase_uses_head():
    clf = UrlClassifier(lambda u: ("text/html", 200, 80), MIMES)
    c = clf.classify("http://a.org/x")
    assert (c.label, c.probed, c.head_bytes) == (HTML, True, 80)
    assert clf.X == ["http://a.org/x"] and clf.y == [HTML]


@pytest.mark.parametrize(
    "probe",
    [lambda u: ("image/png", 200, 10), lambda u: (None, 404, 10), lambda u: (None, 0, 0)],
    ids=["neither-mime", "http-error", "network-failure"],
)
def test_initial_phase_fallback_is_html(probe):
    clf = UrlClassifier(probe, MIMES)
    assert clf.classify("http://a.org/x").label == HTML


def test_head_exception_is_html():
    def boom(url):
        raise OSError("down")

    assert UrlClassifier(boom, MIMES).classify("http://a.org/x").label == HTML


# -- training -------------------------------------------------------------


def test_buffer_threshold():
    clf = UrlClassifier(lambda u: ("text/html", 200, 0), MIMES, batch_size=10)
    for i in range(9):
        clf.classify(f"http://a.org/{i}")
    assert not clf.maybe_train() and clf.initial_phase and clf.model.trained_batches == 0
    clf.observe("http://a.org/9.csv", TARGET)
    assert clf.maybe_train()
    assert clf.model.trained_batches == 1 and clf.X == [] and not clf.initial_phase


def test_observe_rejects_neither():
    with pytest.raises(ValueError):
        UrlClassifier(None, MIMES).observe("http://a.org/", NEITHER)


def test_decaying_rate_shrinks_updates():
    batch = corpus(3, 10)
    xs = [url_features(u) for u, _ in batch]
    ys = [int(lab == TARGET) for _, lab in batch]
    model = OnlineLogisticRegression(cfg=SGDConfig(learning_rate=0.1, decay=0.5, l2=0.0))
    deltas = []
    for _ in range(2):
        before = model.weights.copy()
        model.partial_fit(xs, ys)
        deltas.append(np.linalg.norm(model.weights - before))
    assert deltas[1] < deltas[0]


def trained_classifier(seed=0, batches=50, b=10):
    data = corpus(seed, batches * b)
    truth = dict(data)
    clf = UrlClassifier(head_from(truth), MIMES, batch_size=b, sgd=SGDConfig(seed=seed))
    for url, label in data[:b]:
        clf.classify(url)
    for url, label in data[b:]:
        clf.classify(url)
        clf.observe(url, label)
    clf.maybe_train()
    return clf


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_held_out_accuracy(seed):
    clf = trained_classifier(seed)
    assert clf.model.trained_batches == 50
    held_out = corpus(1000 + seed, 200)
    correct = sum(clf.predict(u) == lab for u, lab in held_out)
    assert correct / len(held_out) >= 0.95


def test_csv_url_classified_target_after_training():
    clf = trained_classifier()
    assert clf.classify("https://data.example.org/annual/report2021.csv").label == TARGET
    assert clf.classify("https://data.example.org/annual/index.html").label == HTML


def test_after_initial_phase_only_gets_label():
    clf = trained_classifier()
    heads_before = clf.head_labels
    buffered = len(clf.X)
    rng = random.Random(9)
    for _ in range(30):
        c = clf.classify(synthetic_url(rng, rng.random() < 0.5))
        assert not c.probed
    assert clf.head_labels == heads_before and len(clf.X) == buffered


def test_never_neither_on_random_urls():
    clf = trained_classifier()
    rng = random.Random(5)
    alphabet = string.printable + "éλ中"
    for _ in range(10_000):
        url = "".join(rng.choices(alphabet, k=rng.randint(0, 60)))
        assert clf.predict(url) in (HTML, TARGET)


@settings(max_examples=50)
@given(st.text(max_size=80))
def test_predict_two_class_property(url):
    assert UrlClassifier(None, MIMES).predict(url) in (HTML, TARGET)


def test_training_is_seeded():
    a, b = trained_classifier(4), trained_classifier(4)
    np.testing.assert_array_equal(a.model.weights, b.model.weights)


def test_dump_load_round_trip(tmp_path):
    clf = trained_classifier()
    path = tmp_path / "model.txt"
    clf.model.dump(path)
    first = path.read_text().splitlines()[:3]
    assert first[0].startswith("bias ") and first[1] == "trained_batches 50"
    loaded = OnlineLogisticRegression.load(path)
    np.testing.assert_array_equal(loaded.weights, clf.model.weights)
    assert loaded.bias == clf.model.bias


def test_oracle_classifier():
    oracle = OracleClassifier(lambda u: TARGET if u.endswith(".csv") else HTML)
    assert oracle.classify("http://a/x.csv").label == TARGET and not oracle.initial_phase
