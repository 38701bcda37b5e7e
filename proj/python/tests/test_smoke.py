import json
import os
import pathlib

import numpy as np
import pytest

import etct

CONFIGS = pathlib.Path(os.environ.get("ETCT_CONFIG_DIR", pathlib.Path(__file__).resolve().parents[2] / "configs"))

A = np.array([[0.0, 1.0], [-2.0, 3.0]])
B = np.array([[0.0], [1.0]])


def system(k1, sigma, kind="petc"):
    if kind == "petc":
        return etct.System.relative_error(A, B, np.array([[0.0, k1]]), sigma, "petc", 0.05, 1.0)
    return etct.System.relative_error(A, B, np.array([[0.0, k1]]), sigma, "cetc", 0.0, 2.0)


def test_from_config_matches_direct():
    text = (CONFIGS / "petc_case2.json").read_text()
    s = etct.System.from_config(text)
    d = system(-6.0, 0.2)
    x = np.array([0.3, -0.8])
    assert s.tau(x) == pytest.approx(d.tau(x))
    assert s.k_bar == 20


def test_homogeneous_sample_map():
    s = system(-6.0, 0.32)
    x = np.array([0.6, 0.2])
    x1, y1 = s.sample_map(x)
    x2, y2 = s.sample_map(3.5 * x)
    assert y1 == pytest.approx(y2)
    assert np.allclose(3.5 * x1, x2)


def test_model_and_metrics():
    s = system(-6.0, 0.2)
    m = etct.build_model(s, 2)
    assert len(m) == len(m.states)
    assert m.edge_count() > 0
    assert m.entropy() >= 0.0
    back = etct.Model.from_json(m.to_json())
    assert back.to_json() == m.to_json()
    rep = etct.analyze(s, l_max=4)
    assert rep["kind"] == "metrics_report"
    assert rep["rob_ila"]["value"] == pytest.approx(0.25, abs=1e-9)


def test_verify_cycle():
    s = system(-6.0, 0.2)
    w = etct.verify_cycle(s, [5])
    assert w["verified"]
    assert w["average"] == pytest.approx(0.25)


def test_fixed_lines_cetc():
    s = system(-6.0, 0.32, "cetc")
    lines = etct.fixed_lines(s)
    ts = sorted(f["t"] for f in lines)
    assert any(abs(t - 0.39034) < 1e-3 for t in ts)


def test_two_sample():
    rng = np.random.default_rng(3)
    a = list(rng.integers(1, 5, 200) * 0.05)
    b = list(rng.integers(1, 5, 200) * 0.05)
    stat, p = etct.cvm_two_sample(a, b, permutations=499, seed=1)
    assert stat >= 0.0
    assert 0.0 < p <= 1.0
    _, p_shift = etct.ks_two_sample(a, [v + 0.1 for v in b], permutations=499, seed=1)
    assert p_shift < 0.01


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        etct.System.from_config("{}")
    with pytest.raises(ValueError):
        etct.System.relative_error(A, B, np.array([[0.0, 1.0, 2.0]]), 0.2)


def test_config_roundtrip():
    text = (CONFIGS / "cetc_case2.json").read_text()
    once = etct.config_roundtrip(text)
    assert etct.config_roundtrip(once) == once
    assert json.loads(once)["system"]["kind"] == "cetc"
