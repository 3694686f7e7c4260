import math

import numpy as np
import pytest

from frodo.kernel import build_kernel, memory_term


def gamma_route(lam, horizon):
    """Unnormalized weights with the explicit Gamma factor, then divided by their max."""
    raw = [n ** (lam - 1.0) / math.gamma(lam) for n in range(1, horizon + 1)]
    top = max(raw)
    return np.array([r / top for r in raw])


@pytest.mark.parametrize("lam", [0.1, 0.15, 0.2, 0.5, 0.9])
def test_weights_match_gamma_route(lam):
    k = build_kernel(lam, 100)
    assert np.max(np.abs(k.weights - gamma_route(lam, 100))) < 1e-12


def test_hand_values():
    assert build_kernel(0.5, 10).weights[3] == pytest.approx(0.5, abs=1e-15)
    for lam in (0.01, 0.3, 0.99):
        assert build_kernel(lam, 5).weights[0] == 1.0
    assert build_kernel(0.1, 100).weights[-1] == pytest.approx(0.015848931924611134, abs=1e-15)


@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
def test_power_law_ratio(lam):
    w = build_kernel(lam, 200).weights
    for n in range(1, 101):
        assert w[2 * n - 1] / w[n - 1] == pytest.approx(2 ** (lam - 1), abs=1e-12)


def test_lambda_near_one_is_nearly_uniform():
    w = build_kernel(1 - 1e-6, 100).weights
    assert np.max(np.abs(w - 1.0)) < 1e-4


@pytest.mark.parametrize("lam, horizon", [(0.0, 5), (1.0, 5), (-0.2, 5), (1.5, 5), (0.5, 0), (0.5, 2.5)])
def test_invalid_parameters(lam, horizon):
    with pytest.raises(ValueError):
        build_kernel(lam, horizon)


def test_weights_are_read_only():
    with pytest.raises(ValueError):
        build_kernel(0.5, 3).weights[0] = 2.0


def test_memory_term_examples():
    k = build_kernel(0.5, 10)
    np.testing.assert_array_equal(memory_term(k, [], dim=3), np.zeros(3))
    g = np.array([0.25, -4.0])
    np.testing.assert_array_equal(memory_term(build_kernel(0.13, 7), [g]), g)
    np.testing.assert_allclose(memory_term(k, [(1, 0), (0, 1)]), [1.0, 2 ** -0.5], rtol=0, atol=1e-15)


def test_memory_term_truncates_to_horizon(rng):
    k = build_kernel(0.3, 4)
    hist = rng.normal(size=(9, 3))
    expected = sum(n ** (0.3 - 1) * hist[n - 1] for n in range(1, 5))
    np.testing.assert_allclose(memory_term(k, hist), expected, atol=1e-14)
    np.testing.assert_allclose(memory_term(k, list(hist)), expected, atol=1e-14)


def test_memory_term_is_linear(rng):
    k = build_kernel(0.17, 30)
    hist = rng.normal(size=(20, 5))
    for c in (-3.0, 0.5, 1e3):
        np.testing.assert_allclose(memory_term(k, c * hist), c * memory_term(k, hist),
                                   rtol=0, atol=1e-12 * abs(c) * 20)


def test_memory_term_dimension_mismatch():
    with pytest.raises(ValueError):
        memory_term(build_kernel(0.5, 3), [np.zeros(2), np.zeros(3)])
    with pytest.raises(ValueError):
        memory_term(build_kernel(0.5, 3), np.zeros(4))


def test_backends_ring_sum_match_direct_sum(backend, rng):
    k = build_kernel(0.2, 6)
    ring = rng.normal(size=(6, 4))
    out = np.empty(4)
    for head in range(6):
        for count in range(7):
            backend.weighted_ring_sum(k.weights, ring, head, count, out)
            rows = [(head - n) % 6 for n in range(count)]
            expected = sum((k.weights[n] * ring[r] for n, r in enumerate(rows)), np.zeros(4))
            np.testing.assert_allclose(out, expected, rtol=1e-14, atol=1e-14)
