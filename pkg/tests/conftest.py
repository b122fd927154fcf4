from __future__ import annotations

import numpy as np
import pytest

from strucbreak import PanelDataset


def simulate_series(rng, T, breaks=(), slopes=(1.0,), intercepts=None, q=1, sigma=1.0):
    """Time series y = c_j + x'b_j + e with regime-specific coefficients."""
    edges = (0, *breaks, T)
    x = rng.standard_normal((T, q))
    y = sigma * rng.standard_normal(T)
    for j in range(len(edges) - 1):
        sl = slice(edges[j], edges[j + 1])
        y[sl] += x[sl] @ np.full(q, slopes[j % len(slopes)])
        if intercepts is not None:
            y[sl] += intercepts[j % len(intercepts)]
    cols = {"y": y}
    cols.update({f"x{k + 1}": x[:, k] for k in range(q)})
    return PanelDataset.from_series(cols)


def simulate_panel(rng, N, T, breaks=(), slopes=(1.0,), factor=False, sigma=1.0):
    """Panel with unit effects, one regressor and optionally one common factor."""
    edges = (0, *breaks, T)
    alpha = rng.standard_normal((N, 1))
    f = rng.standard_normal(T)
    gam = rng.standard_normal((N, 1)) if factor else np.zeros((N, 1))
    x = rng.standard_normal((N, T)) + (gam * f if factor else 0.0)
    y = alpha + sigma * rng.standard_normal((N, T)) + gam * f
    for j in range(len(edges) - 1):
        sl = slice(edges[j], edges[j + 1])
        y[:, sl] += slopes[j % len(slopes)] * x[:, sl]
    return PanelDataset(tuple(f"u{i}" for i in range(N)), np.arange(1, T + 1), {"y": y, "x": x})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
