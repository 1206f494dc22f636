import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entsched.graph import laplacian
from entsched.mixing import (
    MixingMatrix,
    deviation_norm,
    expected_objective,
    mixing_matrix,
    optimize_alpha,
)
from entsched.partition import matchings_by_edge_coloring, subsets_by_vertex_coloring
from entsched.schedule import (
    ActivationPattern,
    expected_laplacian,
    expected_laplacian_gram,
    make_policy,
    sample_active_parts,
    sampled_laplacian,
)
from entsched.topology import complete_graph, gnp_graph, kstar_graph, path_graph


def _lap(g):
    return laplacian(g).astype(float)


def random_instance(seed):
    """Random connected graph, random partition mode and budget, exact moments."""
    gen = np.random.default_rng(seed)
    g = gnp_graph(int(gen.integers(4, 11)), float(gen.uniform(0.2, 0.6)), seed)
    part = matchings_by_edge_coloring(g) if gen.random() < 0.5 else subsets_by_vertex_coloring(g)
    size = g.m if part.mode == "links" else g.n
    policy = make_policy(gen.random(size) + 0.05, part, float(gen.uniform(0.3, 1.0)) * len(part))
    el = expected_laplacian(g, part, policy.probs)
    eg = expected_laplacian_gram(g, part, policy.probs)
    return g, policy, el, eg


def test_mixing_matrix_p3():
    w = mixing_matrix(_lap(path_graph(3)), 0.5)
    assert w.W.tolist() == [[0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]]
    assert w.alpha == 0.5


def test_mixing_matrix_zero_laplacian():
    assert (mixing_matrix(np.zeros((4, 4)), 0.3).W == np.eye(4)).all()


def test_mixing_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        mixing_matrix(_lap(path_graph(3)), 0.0)
    with pytest.raises(ValueError):
        mixing_matrix(np.array([[1.0, -1.0], [0.0, 0.0]]), 0.5)
    with pytest.raises(ValueError):
        mixing_matrix(np.eye(2), 0.5)


def test_deviation_examples():
    assert deviation_norm(np.full((5, 5), 0.2)) == pytest.approx(0.0, abs=1e-12)
    assert deviation_norm(np.eye(3)) == pytest.approx(1.0, abs=1e-12)
    assert deviation_norm(mixing_matrix(_lap(path_graph(3)), 0.5)) == pytest.approx(0.5, abs=1e-12)


def test_objective_examples():
    lap = _lap(path_graph(3))
    assert expected_objective(lap, lap @ lap, 0.5) == pytest.approx(0.25, abs=1e-12)
    assert expected_objective(lap, lap @ lap, 0.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        expected_objective(lap, np.eye(2), 0.5)


def test_objective_matches_monte_carlo_on_p3():
    g = path_graph(3)
    part = subsets_by_vertex_coloring(g)
    policy = make_policy([1.0, 2.0, 1.0], part, 2.0)
    alpha = 0.4
    el = expected_laplacian(g, part, policy.probs)
    eg = expected_laplacian_gram(g, part, policy.probs, "enumerate")
    draws = 20000
    samples = np.empty((draws, 3, 3))
    for k in range(draws):
        w = np.eye(3) - alpha * sampled_laplacian(g, part, sample_active_parts(policy, 5, k))
        samples[k] = w @ w
    mean = samples.mean(axis=0) - np.full((3, 3), 1 / 3)
    se = samples.std(axis=0, ddof=1) / np.sqrt(draws)
    exact = np.eye(3) - 2 * alpha * el + alpha**2 * eg - np.full((3, 3), 1 / 3)
    assert (np.abs(mean - exact) <= 3 * se + 1e-12).all()
    top = np.linalg.eigvalsh(exact).max()
    assert expected_objective(el, eg, alpha) == pytest.approx(top, abs=1e-10)
    # eigenvalue perturbation bounded by the spectral norm of the entrywise error
    assert abs(np.linalg.eigvalsh(mean).max() - top) <= 3 * np.linalg.norm(se)


def test_optimize_deterministic_p3():
    lap = _lap(path_graph(3))
    rep = optimize_alpha(lap, lap @ lap)
    assert rep.alpha == pytest.approx(0.5, abs=1e-4)
    assert rep.objective == pytest.approx(0.25, abs=1e-4)
    assert rep.deviation == pytest.approx(0.5, abs=1e-4)
    assert rep.convergent and rep.spectral_gap == pytest.approx(0.5, abs=1e-4)
    assert set(rep.to_dict()) == {"alpha", "objective", "deviation", "spectral_gap", "convergent"}


def test_optimize_deterministic_k2():
    lap = _lap(complete_graph(2))
    rep = optimize_alpha(lap, lap @ lap)
    assert rep.alpha == pytest.approx(0.5, abs=1e-4)
    assert rep.objective == pytest.approx(0.0, abs=1e-6)


def test_optimize_rejects_zero_expectation():
    with pytest.raises(ValueError):
        optimize_alpha(np.zeros((3, 3)), np.zeros((3, 3)))


@pytest.mark.parametrize("seed", range(15))
def test_optimize_matches_grid(seed):
    _, _, el, eg = random_instance(seed)
    rep = optimize_alpha(el, eg)
    hi = 2.0 / np.linalg.eigvalsh(el).max()
    grid = np.linspace(0.0, hi, 10_000)
    vals = [np.linalg.eigvalsh(np.eye(len(el)) - 2 * a * el + a * a * eg - 1 / len(el)).max() for a in grid]
    best = grid[int(np.argmin(vals))]
    step = grid[1] - grid[0]
    assert abs(rep.alpha - best) <= step
    assert rep.objective <= min(vals) + 1e-9


@pytest.mark.parametrize("seed", range(15))
def test_objective_convex_and_optimum_stationary(seed):
    _, _, el, eg = random_instance(100 + seed)
    gen = np.random.default_rng(seed)
    hi = 2.0 / np.linalg.eigvalsh(el).max()
    for _ in range(7):
        a, b = sorted(gen.uniform(0, hi, 2))
        mid = expected_objective(el, eg, (a + b) / 2)
        assert mid <= (expected_objective(el, eg, a) + expected_objective(el, eg, b)) / 2 + 1e-9
    rep = optimize_alpha(el, eg)
    for shift in (-1e-5, 1e-5):
        assert expected_objective(el, eg, rep.alpha + shift) >= rep.objective - 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-3, 1.0))
def test_sampled_mixing_doubly_stochastic(seed, alpha):
    g = kstar_graph(3, 14)
    for part in (subsets_by_vertex_coloring(g), matchings_by_edge_coloring(g)):
        active = np.flatnonzero(np.random.default_rng(seed).random(len(part)) < 0.5)
        w = mixing_matrix(sampled_laplacian(g, part, ActivationPattern(0, tuple(active))), alpha).W
        assert np.abs(w - w.T).max() <= 1e-12
        assert np.abs(w.sum(axis=0) - 1).max() <= 1e-12
        assert np.abs(w.sum(axis=1) - 1).max() <= 1e-12


def test_pure_averaging_contracts():
    lap = _lap(path_graph(3))
    w = mixing_matrix(lap, 0.5)
    rho = deviation_norm(w)
    x = np.random.default_rng(0).normal(size=(3, 4))
    y = x - x.mean(axis=0)
    # (I - J) W^k = (W - J)^k (I - J): iterate the deviation directly
    dev = w.W - np.full((3, 3), 1 / 3)
    for _ in range(50):
        nxt = dev @ y
        assert np.linalg.norm(nxt) <= (rho + 1e-9) * np.linalg.norm(y)
        y = nxt
    assert np.linalg.norm(y) > 0
