"""Shared test helpers: the finite-difference oracle and small data builders."""

import numpy as np
import pytest

from seqbet.network import NetworkConfig, NetworkWeights


def fd_gradient(func, arrays, h=1e-6):
    """Central finite differences of a scalar function of several arrays.

    Independent oracle for the analytic gradients: each coordinate is
    perturbed by +/-h and the slope (f(x+h) - f(x-h)) / 2h recorded.
    """
    grads = []
    for target_index in range(len(arrays)):
        base = arrays[target_index]
        grad = np.zeros_like(base, dtype=float)
        it = np.nditer(base, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            bumped = [a.copy() for a in arrays]
            bumped[target_index][idx] = base[idx] + h
            f_plus = func(*bumped)
            bumped[target_index][idx] = base[idx] - h
            f_minus = func(*bumped)
            grad[idx] = (f_plus - f_minus) / (2.0 * h)
        grads.append(grad)
    return grads


def relative_error(analytic, numeric, floor=1e-10):
    """Coordinate-wise |a - n| / max(|n|, floor)."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    return np.abs(analytic - numeric) / np.maximum(np.abs(numeric), floor)


def random_instance(rng, input_count=None, hidden_count=None, history_len=10):
    """A random small network plus movement history, weights uniform in [-0.1, 0.1]."""
    lin = input_count if input_count is not None else int(rng.integers(1, 4))
    hid = hidden_count if hidden_count is not None else int(rng.integers(1, 6))
    config = NetworkConfig(lin, hid)
    weights = NetworkWeights.uniform(config, 0.1, rng)
    history = [
        (rng.uniform(-1.0, 1.0, lin), float(rng.uniform(-1.0, 1.0)))
        for _ in range(history_len)
    ]
    return config, weights, history


@pytest.fixture
def rng():
    return np.random.default_rng(20210607)
