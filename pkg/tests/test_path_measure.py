import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from awest.errors import UnsupportedPrefixError, ValidationError
from awest.path_measure import (
    DiscretePathMeasure,
    GridQuantizer,
    PathSample,
    adapted_empirical_measure,
    disintegrate,
    empirical_measure,
    grid_resolution,
    load_path_measure,
    paths_csv_string,
    quantize,
    read_paths_csv,
    write_paths_csv,
)
from awest.processes import exact_law_memory_chain
from conftest import random_path_measure


@pytest.mark.parametrize(
    "n,d,T,expected",
    [(1, 1, 2, 1.0), (1000, 1, 2, 0.1), (64, 2, 3, 0.5)],
)
def test_grid_resolution_examples(n, d, T, expected):
    assert grid_resolution(n, d, T) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("bad", [(10, 1, 1), (10, 0, 2), (0, 1, 2)])
def test_grid_resolution_rejects(bad):
    with pytest.raises(ValidationError):
        grid_resolution(*bad)


def test_grid_resolution_closed_form_and_monotone():
    r = np.random.default_rng(3)
    for _ in range(10):
        n, d, T = int(r.integers(1, 10**6)), int(r.integers(1, 5)), int(r.integers(2, 6))
        expo = 1 / (T + 1) if d == 1 else 1 / (d * T)
        assert grid_resolution(n, d, T) == pytest.approx(math.exp(-expo * math.log(n)), rel=1e-12)
        assert grid_resolution(n + 1, d, T) < grid_resolution(n, d, T)


@pytest.mark.parametrize("x,delta,expected", [(0.3, 1.0, 0.5), (-0.2, 0.5, -0.25), (0.5, 1.0, 0.5), (1.0, 1.0, 1.5)])
def test_quantize_examples(x, delta, expected):
    assert float(GridQuantizer(delta)(x)) == expected


@given(st.floats(-1e3, 1e3), st.floats(0.01, 10), st.floats(-1, 1))
def test_quantize_idempotent_and_close(x, delta, anchor):
    q = GridQuantizer(delta, anchor)
    y = q(x)
    assert q(y) == pytest.approx(y, abs=1e-9 * max(1, abs(y)))
    assert abs(x - y) <= delta / 2 + 1e-9 * max(1, abs(x))


def test_quantizer_rejects_bad_delta():
    with pytest.raises(ValidationError):
        GridQuantizer(0.0)


def test_path_sample_invariants():
    with pytest.raises(ValidationError):
        PathSample(np.zeros((3, 1, 1)))
    with pytest.raises(ValidationError):
        PathSample(np.array([[0.0, np.nan]]))
    s = PathSample(np.zeros((4, 3)))
    assert (s.n_paths, s.horizon, s.dim) == (4, 3, 1)


def test_empirical_measure_examples():
    m = empirical_measure(PathSample([[1.0, 2.0], [1.0, 2.0]]))
    assert m.size == 1 and m.weights[0] == 1.0
    m = empirical_measure(PathSample([[0.0, 0.0], [1.0, 1.0]]))
    assert np.allclose(m.weights, [0.5, 0.5])
    m = empirical_measure(PathSample([[0.0, 1.0], [0.0, 1.0], [2.0, 2.0]]))
    assert sorted(m.weights) == pytest.approx([1 / 3, 2 / 3])


def test_adapted_empirical_merges_nearby_paths():
    sample = PathSample([[0.1, 0.9], [0.2, 0.8]])
    m = adapted_empirical_measure(sample)
    delta = grid_resolution(2, 1, 2)
    assert m.size == 1
    assert np.allclose(m.support[0, :, 0], [delta / 2, delta / 2 + delta])


def test_adapted_empirical_single_path_and_idempotence(rng):
    s = PathSample(rng.normal(size=(1, 3, 2)))
    m = adapted_empirical_measure(s)
    assert m.size == 1
    q = GridQuantizer(grid_resolution(1, 2, 3))
    assert np.allclose(m.support[0], q(s.paths[0]))

    s = PathSample(rng.normal(size=(50, 2, 1)))
    delta = grid_resolution(50, 1, 2)
    on_grid = quantize(s, GridQuantizer(delta))
    a = adapted_empirical_measure(on_grid)
    b = empirical_measure(on_grid)
    assert np.array_equal(a.support, b.support) and np.array_equal(a.weights, b.weights)


@given(st.integers(1, 60), st.integers(0, 1000))
def test_adapted_equals_empirical_of_quantized(n, seed):
    s = PathSample(np.random.default_rng(seed).normal(size=(n, 2, 1)))
    q = GridQuantizer(grid_resolution(n, 1, 2))
    a = adapted_empirical_measure(s)
    b = empirical_measure(quantize(s, q))
    assert np.array_equal(a.support, b.support)
    assert np.array_equal(a.weights, b.weights)


def test_measure_invariants():
    with pytest.raises(ValidationError):
        DiscretePathMeasure(np.zeros((2, 2, 1)), np.array([0.5, 0.5]))
    with pytest.raises(ValidationError):
        DiscretePathMeasure(np.array([[[0.0], [1.0]]]), np.array([0.9]))
    with pytest.raises(ValidationError):
        DiscretePathMeasure(np.array([[[0.0], [1.0]], [[1.0], [1.0]]]), np.array([1.0, 0.0]))


@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(1, 2))
def test_tree_recomposes_weights(seed, T, d):
    m = random_path_measure(np.random.default_rng(seed), T=T, d=d, atoms=6)
    tree = m.tree
    for t in range(T - 1):
        lvl, below = tree[t], tree[t + 1]
        for u in range(lvl.size):
            assert lvl.child_weights(u, below).sum() == pytest.approx(1.0, abs=1e-12)
            assert below.mass[lvl.children[u]].sum() == pytest.approx(lvl.mass[u], abs=1e-12)
    # product of conditional weights along each path gives the atom weight
    for k in range(m.size):
        w = 1.0
        for t in range(T):
            node = tree[t].atom_node[k]
            if t == 0:
                w *= tree[0].mass[node]
            else:
                w *= tree[t].mass[node] / tree[t - 1].mass[tree[t].parent[node]]
        assert w == pytest.approx(m.weights[k], abs=1e-12)


def test_disintegrate_memory_chain_kernel():
    mu = exact_law_memory_chain(0.4)
    k = disintegrate(mu, [1.0])
    assert np.allclose(k.points[:, 0], [-1.0, 0.0, 1.0])
    assert np.allclose(k.weights, [0.2, 0.2, 0.6], atol=1e-15)


def test_disintegrate_constant_kernel_and_single_path():
    m = DiscretePathMeasure.from_atoms(np.array([[[1.0], [0.0]], [[2.0], [0.0]]]), [0.3, 0.7])
    for x in (1.0, 2.0):
        k = disintegrate(m, [x])
        assert k.size == 1 and k.points[0, 0] == 0.0
    e = empirical_measure(PathSample([[0.0, 1.0, 5.0], [0.0, 2.0, 3.0]]))
    k = disintegrate(e, [0.0, 2.0])
    assert k.size == 1 and k.points[0, 0] == 3.0
    assert disintegrate(e, []).points[0, 0] == 0.0


def test_disintegrate_unsupported_prefix():
    m = exact_law_memory_chain(0.4)
    with pytest.raises(UnsupportedPrefixError, match="unsupported prefix"):
        disintegrate(m, [0.5])


def test_csv_round_trip(tmp_path, rng):
    m = random_path_measure(rng, T=3, d=2, atoms=5)
    path = tmp_path / "m.csv"
    write_paths_csv(path, m)
    back = load_path_measure(path)
    assert np.array_equal(back.support, m.support)
    assert np.allclose(back.weights, m.weights, rtol=0, atol=1e-16)
    text = paths_csv_string(m)
    assert text.splitlines()[0] == "path_id,t,x_1,x_2,weight"
    s = PathSample(rng.normal(size=(3, 2, 1)))
    paths, weights = read_paths_csv(io.StringIO(paths_csv_string(s)))
    assert weights is None and np.array_equal(paths, s.paths)


def test_csv_rejects_bad_header():
    with pytest.raises(ValidationError):
        read_paths_csv(io.StringIO("id,t,x\n0,1,0.0\n"))
