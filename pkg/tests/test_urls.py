from hypothesis import given, strategies as st

from sbcrawl.urls import InvalidURL, extension, in_scope, normalize

import pytest

ROOT = "https://www.A.B.com/index.php"


def test_same_host_is_in_scope():
    assert in_scope("https://www.A.B.com/folder/content.php", ROOT)


def test_subdomain_is_in_scope():
    assert in_scope("https://www.C.A.B.com/page.html", ROOT)


def test_parent_domain_is_out_of_scope():
    assert not in_scope("https://www.B.com/page.php", ROOT)


def test_root_is_in_its_own_scope():
    assert in_scope(ROOT, ROOT)


def test_label_boundary():
    assert in_scope("http://a.b.com/", "http://b.com/")
    assert not in_scope("http://ab.com/", "http://b.com/")


def test_malformed_is_out_of_scope():
    assert not in_scope("mailto:someone@b.com", ROOT)
    assert not in_scope("http:///nohost", ROOT)
    assert not in_scope("not a url", ROOT)


def test_normalize_lowercases_scheme_and_host_only():
    assert normalize("HTTPS://Example.COM/Docs?Q=1#frag") == "https://example.com/Docs?Q=1"


def test_normalize_drops_default_ports():
    assert normalize("http://example.com:80/x") == normalize("http://example.com/x")
    assert normalize("https://example.com:443/") == "https://example.com/"
    assert normalize("http://example.com:8080/") == "http://example.com:8080/"


def test_normalize_empty_path_and_relative():
    assert normalize("http://example.com") == "http://example.com/"
    assert normalize("../b.html", "http://example.com/x/y/a.html") == "http://example.com/x/b.html"


def test_query_variants_are_distinct():
    assert normalize("http://e.com/list?page=2") != normalize("http://e.com/list?page=3")


def test_normalize_rejects_non_http():
    with pytest.raises(InvalidURL):
        normalize("ftp://example.com/file")
    with pytest.raises(InvalidURL):
        normalize("javascript:void(0)")


def test_extension():
    assert extension("http://e.com/a/file.CSV?x=1") == ".csv"
    assert extension("http://e.com/download/12") == ""
    assert extension("http://e.com/.hidden") == ""


labels = st.text(alphabet="abcdefghij", min_size=1, max_size=5)
hosts = st.lists(labels, min_size=1, max_size=4).map(".".join)


@given(hosts, hosts, st.booleans(), st.booleans())
def test_scope_ignores_leading_www(cand, root, www_c, www_r):
    c = f"http://{'www.' if www_c else ''}{cand}/p"
    r = f"http://{'www.' if www_r else ''}{root}/"
    assert in_scope(c, r) == in_scope(f"http://{cand}/p", f"http://{root}/")


@given(hosts)
def test_scope_is_reflexive(host):
    url = f"https://{host}/x"
    assert in_scope(url, url)
