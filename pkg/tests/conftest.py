import numpy as np
import pytest

from geocurve.curve import ManifoldCurve, TimeGrid


def random_points(rng, shape, d0=3):
    x = rng.standard_normal(tuple(shape) + (d0,))
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def random_tangent(rng, p, max_norm):
    w = rng.standard_normal(p.shape)
    w -= np.sum(w * p, axis=-1, keepdims=True) * p
    w /= np.linalg.norm(w, axis=-1, keepdims=True)
    r = rng.uniform(0, max_norm, p.shape[:-1])
    return w * r[..., None]


def smooth_curve(rng, grid, d0=3, modes=3):
    t = grid.nodes
    c = rng.standard_normal((modes, d0))
    base = rng.standard_normal(d0)
    x = base + sum(np.outer(np.sin((k + 1) * np.pi * t), c[k]) / (k + 1) for k in range(modes))
    return ManifoldCurve(grid, x / np.linalg.norm(x, axis=-1, keepdims=True))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid50():
    return TimeGrid.uniform(50)


#: criterion number -> (passed, detail), filled by the acceptance suite
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
