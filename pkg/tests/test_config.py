import math

import pytest

from sbcrawl.config import (
    ConfigError,
    CrawlConfig,
    default_extension_blocklist,
    default_target_mimes,
    dump_config,
    env_overrides,
    from_mapping,
    load_config,
)
from sbcrawl.graph import WeightMode


def test_defaults():
    cfg = CrawlConfig()
    assert (cfg.n, cfg.theta, cfg.m, cfg.w, cfg.b) == (2, 0.75, 12, 15, 10)
    assert cfg.alpha == pytest.approx(2 * math.sqrt(2))
    assert (cfg.nu, cfg.eps_stop, cfg.gamma, cfg.kappa) == (1000, 0.2, 0.05, 15)
    assert cfg.politeness_delay == 1.0
    assert cfg.mime_blocklist == ("image/*", "audio/*", "video/*")


def test_default_lists():
    mimes = default_target_mimes()
    assert len(mimes) == 38 and "text/csv" in mimes and "text/html" not in mimes
    exts = default_extension_blocklist()
    assert ".mp4" in exts and ".csv" not in exts and all(e.startswith(".") for e in exts)


def test_yaml_file_then_env_then_overrides(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("theta: 0.5\nbudget: 100\nweight_mode: bytes\nnu: 10\n")
    cfg = load_config(path, environ={"SBCRAWL_THETA": "0.6", "SBCRAWL_STORE": "/tmp/s", "OTHER": "x"}, nu=20)
    assert cfg.theta == 0.6 and cfg.budget == 100 and cfg.weight_mode is WeightMode.BYTES
    assert cfg.store == "/tmp/s" and cfg.nu == 20


def test_env_politeness_and_store():
    env = {"SBCRAWL_POLITENESS_DELAY": "0.25", "SBCRAWL_STORE": "st", "SBCRAWL_NOPE": "1"}
    assert env_overrides(env) == {"politeness_delay": "0.25", "store": "st"}
    assert load_config(environ=env).politeness_delay == 0.25


def test_greek_aliases_and_lists():
    cfg = from_mapping({"θ": 0.3, "target_mimes": "text/csv, application/pdf", "early_stop": "yes"})
    assert cfg.theta == 0.3 and cfg.target_mimes == {"text/csv", "application/pdf"} and cfg.early_stop


def test_infinite_budget_string():
    assert from_mapping({"budget": "inf"}).budget == math.inf


@pytest.mark.parametrize(
    "data,key",
    [({"theta": 1.5}, "theta"), ({"nope": 1}, "nope"), ({"nu": "ten"}, "nu"), ({"w": 5, "m": 12}, "w"),
     ({"weight_mode": "pages"}, "weight_mode"), ({"early_stop": "maybe"}, "early_stop"), ({"nu": 1.5}, "nu")],
)
def test_invalid_values_name_key(data, key):
    with pytest.raises(ConfigError) as exc:
        from_mapping(data)
    assert exc.value.key == key


def test_bad_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("- just\n- a list\n")
    with pytest.raises(ConfigError):
        load_config(path, environ={})


def test_dump_round_trip(tmp_path):
    cfg = CrawlConfig(theta=0.55, budget=12.0, seed=3)
    path = tmp_path / "c.yaml"
    path.write_text(dump_config(cfg))
    assert load_config(path, environ={}) == cfg


def test_extension_blocklist_dot_normalized():
    assert CrawlConfig(extension_blocklist=["mp3", ".avi"]).extension_blocklist == {".mp3", ".avi"}


def test_shipped_default_file_matches_defaults():
    from pathlib import Path

    path = Path(__file__).resolve().parent.parent / "configs" / "default.yaml"
    assert load_config(path, environ={}) == CrawlConfig()
