import numpy as np
import pytest


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


def mixed_rel(a, b):
    """|a-b| / max(1, |a|, |b|): relative for O(1)+ magnitudes, absolute below."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


def central_fd_params(loss_plain, flat, step=1e-6):
    """Central finite differences of a scalar loss over every flat parameter."""
    out = np.zeros(flat.size)
    for i in range(flat.size):
        up = flat.copy()
        up[i] += step
        dn = flat.copy()
        dn[i] -= step
        out[i] = (loss_plain(up) - loss_plain(dn)) / (2.0 * step)
    return out
