import numpy as np
import pytest

from frodo.kernel import build_kernel, memory_term
from frodo.optimizers import (
    DivergenceError,
    GradientHistory,
    OptimizerConfig,
    descent_update,
    init_agent_state,
    kernel_for,
)


def step(x, grad, cfg, hist=()):
    state = init_agent_state(x, cfg)
    for g in reversed(hist):  # hist is newest first; push oldest first
        state.history.push(np.asarray(g, dtype=float))
    return descent_update(state, np.asarray(grad, dtype=float), cfg, kernel_for(cfg))


def test_no_memory_single_step():
    s = step([1.0, 0.0], [1.0, 0.0], OptimizerConfig("no_memory", 0.5))
    np.testing.assert_array_equal(s.x, [0.5, 0.0])


@pytest.mark.parametrize("beta", [0.0, 0.3, 7.0])
def test_fractional_with_empty_history_is_a_plain_step(beta):
    cfg = OptimizerConfig("fractional", 0.7, beta, lam=0.4, horizon=5)
    s = step([2.0, -1.0], [0.5, 3.0], cfg)
    np.testing.assert_array_equal(s.x, step([2.0, -1.0], [0.5, 3.0], OptimizerConfig("no_memory", 0.7)).x)


def test_fractional_hand_example():
    cfg = OptimizerConfig("fractional", 1.0, 1.0, lam=0.5, horizon=10)
    s = step([3.0, 0.0], [1.0, 0.0], cfg, hist=[(1.0, 0.0)])
    np.testing.assert_array_equal(s.x, [1.0, 0.0])
    assert len(s.history) == 2


def test_fractional_matches_reference_rule(rng):
    cfg = OptimizerConfig("fractional", 0.8, 0.35, lam=0.15, horizon=6)
    kernel = build_kernel(0.15, 6)
    state = init_agent_state(np.zeros(3), cfg)
    past, x_ref = [], np.zeros(3)
    for _ in range(15):
        g = rng.normal(size=3)
        x_ref = x_ref - 0.8 * g - 0.35 * memory_term(kernel, past, dim=3)
        descent_update(state, g, cfg, kernel)
        past = [g] + past
        np.testing.assert_allclose(state.x, x_ref, rtol=1e-13, atol=1e-13)


def test_history_never_exceeds_horizon(rng):
    cfg = OptimizerConfig("fractional", 0.1, 0.05, lam=0.2, horizon=4)
    state = init_agent_state(np.zeros(2), cfg)
    for k in range(1, 12):
        descent_update(state, rng.normal(size=2), cfg, kernel_for(cfg))
        assert len(state.history) == min(k, 4)
        assert state.history.ring.shape[0] == 4


def test_history_ring_order():
    h = GradientHistory(3, 1)
    for v in range(5):
        h.push([float(v)])
    np.testing.assert_array_equal(h.newest_first().ravel(), [4.0, 3.0, 2.0])


def test_heavy_ball_uses_one_step_memory():
    cfg = OptimizerConfig("heavy_ball", 0.5, 0.2, horizon=50)
    s = step([1.0], [2.0], cfg, hist=[(4.0,), (100.0,)])
    assert len(s.history) == 1
    # history capacity is 1, so only the newest pushed gradient (4.0) survives
    np.testing.assert_allclose(s.x, [1.0 - 0.5 * 2.0 - 0.2 * 4.0], rtol=0, atol=1e-15)


@pytest.mark.parametrize("c, alpha", [(1.0, 0.5), (3.0, 0.6), (0.5, 3.9), (10.0, 0.01)])
def test_gd_contraction_factor(c, alpha):
    cfg = OptimizerConfig("plain_gd", alpha)
    state = init_agent_state([1.7], cfg)
    for _ in range(20):
        before = abs(state.x[0])
        descent_update(state, c * state.x, cfg)
        assert abs(state.x[0]) == pytest.approx(abs(1 - alpha * c) * before, abs=1e-12)


def test_nesterov_and_adam_first_steps():
    nes = OptimizerConfig("nesterov", 0.1, momentum=0.9)
    s = step([1.0], [2.0], nes)
    np.testing.assert_allclose(s.x, [0.8])
    np.testing.assert_allclose(s.velocity, [2.0])
    adam = OptimizerConfig("adam", 0.01)
    s = step([1.0, 1.0], [3.0, -0.2], adam)
    # bias correction makes the first Adam step alpha * sign(g) up to eps
    np.testing.assert_allclose(s.x, [0.99, 1.01], atol=1e-9)


def test_missing_kernel_and_divergence():
    cfg = OptimizerConfig("fractional", 0.1, 0.1, lam=0.5, horizon=3)
    state = init_agent_state([0.0], cfg)
    with pytest.raises(ValueError, match="kernel"):
        descent_update(state, np.array([1.0]), cfg, None)
    with pytest.raises(DivergenceError):
        descent_update(state, np.array([np.nan]), cfg, kernel_for(cfg))
    gd = OptimizerConfig("no_memory", 1.0)
    with pytest.raises(DivergenceError):
        descent_update(init_agent_state([0.0], gd), np.array([-2e8]), gd)
    with pytest.raises(ValueError, match="shape"):
        descent_update(init_agent_state([0.0, 0.0], gd), np.array([1.0]), gd)


@pytest.mark.parametrize("kwargs, field", [
    ({"variant": "sgd", "alpha": 1.0}, "variant"),
    ({"variant": "no_memory", "alpha": 0.0}, "alpha"),
    ({"variant": "heavy_ball", "alpha": 1.0, "beta": -1.0}, "beta"),
    ({"variant": "fractional", "alpha": 1.0, "beta": 0.1}, "lambda"),
    ({"variant": "fractional", "alpha": 1.0, "beta": 0.1, "lam": 1.5}, "lambda"),
    ({"variant": "fractional", "alpha": 1.0, "beta": 0.1, "lam": 0.5, "horizon": 0}, "horizon"),
])
def test_config_validation_names_field(kwargs, field):
    with pytest.raises(ValueError, match=field):
        OptimizerConfig(**kwargs)


def test_backends_memory_descent_agree(rng):
    from frodo._backend import available_backends

    kernel = build_kernel(0.3, 5)
    ring = rng.normal(size=(5, 4))
    x0, g = rng.normal(size=4), rng.normal(size=4)
    results = []
    for core in available_backends().values():
        x = x0.copy()
        core.memory_descent(x, g, kernel.weights, ring, 2, 5, 0.7, 0.2, np.empty(4))
        results.append(x)
    rows = [(2 - n) % 5 for n in range(5)]
    expected = (x0 - 0.7 * g) - 0.2 * (kernel.weights @ ring[rows])
    for x in results:
        np.testing.assert_allclose(x, expected, rtol=1e-14, atol=1e-14)
