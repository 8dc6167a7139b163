import json

import numpy as np
from hypothesis import given, settings, strategies as st

from dtype_osc import randol as R
from dtype_osc.cache import SampleCache, fmt, sample_key
from dtype_osc.oscint import Engine, OscSample
from dtype_osc.phase import DPhase

finite = st.floats(-1e300, 1e300, allow_nan=False, allow_infinity=False)


@given(finite)
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x


def _sample(lam=3.0, s=(0.1, -0.2), v=1 + 2j):
    return OscSample(lam, s, v, 1e-12, Engine.DIRECT2D, "abcd", 7)


def test_put_get_persist(tmp_path):
    path = tmp_path / "c.jsonl"
    c = SampleCache(path)
    c.put("ph", _sample())
    assert c.get("ph", "abcd", 3.0, (0.1, -0.2)).value == 1 + 2j
    assert c.get("ph", "abcd", 3.0, (0.1, -0.2), Engine.REDUCED1D) is None
    again = SampleCache(path)
    x = again.get("ph", "abcd", 3.0, (0.1, -0.2))
    assert x == _sample()


def test_upsert_is_idempotent(tmp_path):
    path = tmp_path / "c.jsonl"
    c = SampleCache(path)
    for _ in range(3):
        c.put("ph", _sample())
    assert len(path.read_text().splitlines()) == 1
    rec = json.loads(path.read_text())
    assert set(rec) >= {"phase_hash", "cfg_hash", "lambda", "s1", "s2", "re", "im", "err_est", "engine"}


def test_readonly_and_memory(tmp_path):
    path = tmp_path / "c.jsonl"
    SampleCache(path, readonly=True).put("ph", _sample())
    assert not path.exists()
    mem = SampleCache()
    mem.put("ph", _sample())
    assert len(mem) == 1


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 1e6), finite, finite, finite, finite)
def test_bit_exact_round_trip(tmp_path_factory, lam, s1, s2, re, im):
    path = tmp_path_factory.mktemp("c") / "c.jsonl"
    x = OscSample(lam, (s1, s2), complex(re, im), 0.5, Engine.DIRECT2D, "h", 0)
    SampleCache(path).put("p", x)
    y = SampleCache(path).get("p", "h", lam, (s1, s2))
    assert y.value == x.value and y.s == x.s and y.lam == x.lam


def test_key_normalises_floats():
    assert sample_key("p", "c", 0.1 + 0.2, (0, 0), "DIRECT2D") != sample_key("p", "c", 0.3, (0, 0), "DIRECT2D")
    assert sample_key("p", "c", 2, (0, 0), Engine.DIRECT2D) == sample_key("p", "c", 2.0, (0.0, -0.0 + 0), "DIRECT2D")


def test_field_from_cache_is_bit_identical(tmp_path):
    path = tmp_path / "c.jsonl"
    fam = DPhase.model(3, -1)
    grid = R.SGrid.quasi_polar(3, 2, 3, 4)
    lg = R.LambdaGrid(2.0, 6, 2)
    a = R.maximal_field(fam, 1.0, grid, lg, cache=SampleCache(path))
    b = R.maximal_field(fam, 1.0, grid, lg, cache=SampleCache(path, readonly=True))
    assert [e.value for e in a.entries] == [e.value for e in b.entries]
    assert np.all([e.argmax_lambda for e in a.entries] == [e.argmax_lambda for e in b.entries])
