import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from kontra.errors import CacheError, CoincidenceError, LimitExceeded
from kontra.graphs import enumerate_graphs, mirror, parse_key
from kontra.weights import (
    BACKENDS,
    WeightCache,
    WeightEstimate,
    compute_weight_table,
    default_cache_path,
    propagator_angle,
    propagator_gradient,
    weight_estimate,
)
from kontra.weights import _reference

GA = parse_key("n1:(L,R)")
needs_compiled = pytest.mark.skipif("compiled" not in BACKENDS, reason="compiled kernel not built")


def quadrature_wa() -> float:
    """w(L,R) by 2-d quadrature of the pulled-back angle form, independent of the sampler.

    For a ground point p the angle is twice arg(z - p), so the density is
    4 det(grad arg(z - 0), grad arg(z - 1)) = 4 y / (|z|^2 |z - 1|^2).
    """
    def density(y, x):
        return 4.0 * y / ((x * x + y * y) * ((x - 1) ** 2 + y * y))

    val = 0.0
    # split at the ground points so the quadrature sees the near-singular regions
    for a, b in [(-np.inf, 0.0), (0.0, 1.0), (1.0, np.inf)]:
        v, _ = integrate.dblquad(density, a, b, 0.0, np.inf, epsabs=1e-11, epsrel=1e-11)
        val += v
    return val / (2 * math.pi) ** 2


# --------------------------------------------------------------------------
# propagator


def test_propagator_examples():
    assert propagator_angle(1j, 0) == pytest.approx(0.0, abs=1e-15)
    assert propagator_angle(1j, 1) == pytest.approx(math.pi / 2)
    assert propagator_angle(2j, 1j) == pytest.approx(0.0, abs=1e-15)


def test_propagator_domain():
    with pytest.raises(ValueError):
        propagator_angle(1 - 1j, 0)
    with pytest.raises(ValueError):
        propagator_angle(1j, -1j)
    with pytest.raises(CoincidenceError):
        propagator_angle(1j, 1j)


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 3), st.floats(-3, 3))
def test_continuity_at_real_targets(x1, y1, x2):
    z1 = complex(x1, y1)
    a = propagator_angle(z1, x2)
    b = propagator_angle(z1, complex(x2, 1e-9))
    # the principal Log has a cut where the ratio is -1 (2 phi = pi); skip points on it
    if abs(abs(math.remainder(2 * a, 2 * math.pi)) - math.pi) < 1e-6:
        return
    d = abs(a - b)
    assert min(d, 2 * math.pi - d) < 1e-6


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 3), st.floats(-3, 3), st.floats(0.2, 3))
def test_gradient_matches_finite_differences(x1, y1, x2, y2):
    z1, z2 = complex(x1, y1), complex(x2, y2)
    if abs(z1 - z2) < 0.3:
        return
    g = propagator_gradient(z1, z2, True)
    h = 1e-6

    def diff(dz1, dz2):
        a = propagator_angle(z1 + dz1, z2 + dz2)
        b = propagator_angle(z1 - dz1, z2 - dz2)
        return (math.remainder(a - b, 2 * math.pi)) / (2 * h)

    fd = [diff(h, 0), diff(1j * h, 0), diff(0, h), diff(0, 1j * h)]
    assert g == pytest.approx(fd, abs=1e-6)


def test_ground_gradient_drops_second_point():
    g = propagator_gradient(0.3 + 1j, complex(1.0), False)
    assert g[2:] == (0.0, 0.0)


# --------------------------------------------------------------------------
# estimator


def test_quadrature_oracle_gives_one_half():
    assert quadrature_wa() == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_wa_calibration(backend):
    oracle = quadrature_wa()
    a = weight_estimate(GA, 200_000, 3, backend=backend)
    b = weight_estimate(mirror(GA), 200_000, 4, backend=backend)
    assert abs(a.estimate - oracle) <= 4 * a.stderr
    assert abs(b.estimate + oracle) <= 4 * b.stderr
    assert a.discarded == 0


def test_known_second_order_values():
    # product graph: two independent copies of (L,R), with the 1/2! prefactor
    e = weight_estimate(parse_key("n2:(L,R)(L,R)"), 400_000, 11)
    assert abs(e.estimate - 0.125) <= 4 * e.stderr
    # wedge graph with magnitude 1/24
    e = weight_estimate(parse_key("n2:(2,L)(L,R)"), 400_000, 12)
    assert abs(e.estimate + 1 / 24) <= 4 * e.stderr


def test_same_seed_same_bits():
    a = weight_estimate(GA, 20_000, 99, backend="python")
    b = weight_estimate(GA, 20_000, 99, backend="python")
    assert a == b


def test_jobs_do_not_change_result():
    g = parse_key("n2:(2,L)(1,R)")
    a = weight_estimate(g, 50_000, 5, jobs=1)
    b = weight_estimate(g, 50_000, 5, jobs=4)
    assert a == b


def test_different_seeds_differ():
    assert weight_estimate(GA, 5_000, 1).estimate != weight_estimate(GA, 5_000, 2).estimate


@needs_compiled
@pytest.mark.parametrize("key", ["n1:(L,R)", "n2:(2,L)(1,R)", "n3:(2,3)(L,R)(1,L)"])
def test_backends_agree(key):
    g = parse_key(key)
    a = weight_estimate(g, 9_000, 17, backend="python")
    b = weight_estimate(g, 9_000, 17, backend="compiled")
    assert b.estimate == pytest.approx(a.estimate, rel=1e-10, abs=1e-14)
    assert b.stderr == pytest.approx(a.stderr, rel=1e-10)
    assert a.discarded == b.discarded


def test_block_boundaries_are_seamless():
    # a sample's value depends only on its index, so a split run merges to the whole
    targets = np.array([[-1, -2]], dtype=np.int64)
    key = _reference.stream_key(8)
    whole, _ = _reference.sample_values(targets, key, 0, 100)
    left, _ = _reference.sample_values(targets, key, 0, 37)
    right, _ = _reference.sample_values(targets, key, 37, 63)
    assert np.array_equal(whole, np.concatenate([left, right]))


def test_limits():
    with pytest.raises(LimitExceeded):
        weight_estimate(enumerate_graphs(0)[0], 10, 0)
    with pytest.raises(LimitExceeded):
        weight_estimate(parse_key("n4:(L,R)(L,R)(L,R)(L,R)"), 10, 0)
    with pytest.raises(ValueError):
        weight_estimate(GA, 0, 0)


def test_stderr_shrinks_with_samples():
    small = weight_estimate(GA, 10_000, 1)
    big = weight_estimate(GA, 160_000, 1)
    assert big.stderr < small.stderr / 2.5


# --------------------------------------------------------------------------
# cache


def test_table_example_sizes(tmp_path):
    c1 = compute_weight_table(1, 100_000, 7, WeightCache())
    assert len(c1) == 2
    c2 = compute_weight_table(2, 100_000, 7, WeightCache())
    assert len(c2) == 36
    p, q = tmp_path / "a.json", tmp_path / "b.json"
    c2.save(p)
    compute_weight_table(2, 100_000, 7, WeightCache()).save(q)
    assert p.read_bytes() == q.read_bytes()


def test_table_reuses_cached_entries():
    cache = compute_weight_table(1, 2_000, 1, WeightCache())
    again = compute_weight_table(1, 2_000, 99, cache)
    assert again.to_json() == cache.to_json()


def test_cache_round_trip(tmp_path):
    cache = compute_weight_table(1, 5_000, 3, WeightCache())
    path = tmp_path / "w.json"
    cache.save(path)
    back = WeightCache.load(path)
    assert back.to_json() == cache.to_json()
    assert set(back.values()) == {"n1:(L,R)", "n1:(R,L)"}


def test_cache_missing_file_is_empty(tmp_path):
    assert len(WeightCache.load(tmp_path / "none.json")) == 0


def test_cache_version_mismatch(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"version": 99, "entries": {}}))
    with pytest.raises(CacheError):
        WeightCache.load(path)
    path.write_text("{not json")
    with pytest.raises(CacheError):
        WeightCache.load(path)


def test_put_keeps_larger_sample():
    cache = WeightCache()
    cache.put(WeightEstimate("n1:(L,R)", 0.4, 0.1, 100, 1))
    cache.put(WeightEstimate("n1:(L,R)", 0.5, 0.01, 10_000, 2))
    cache.put(WeightEstimate("n1:(L,R)", 0.3, 0.2, 50, 3))
    assert cache["n1:(L,R)"].samples == 10_000


def test_default_cache_path_env(monkeypatch, tmp_path):
    monkeypatch.setenv("KONTRA_CACHE_DIR", str(tmp_path))
    assert default_cache_path() == tmp_path / "weights.json"
