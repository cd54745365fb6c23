import numpy as np
import pytest

from magwave.assembly import StripGrid


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs for more than a few seconds")


@pytest.fixture
def small_grid():
    return StripGrid.uniform(3.0, 25, 9)


def q1_fields(grid, u, order=2):
    """Values and derivatives of the bilinear interpolant of interior data ``u``.

    Returns flattened ``x, y, w, v, vx, vy`` at ``order x order`` Gauss points
    per cell. Independent of the package's element code.
    """
    xs, ys = grid.xs, grid.ys
    U = np.zeros((xs.size, ys.size), complex)
    U[1:-1, 1:-1] = np.asarray(u).reshape(xs.size - 2, ys.size - 2)
    g, gw = np.polynomial.legendre.leggauss(order)
    t, tw = 0.5 * (g + 1), 0.5 * gw
    out = [[] for _ in range(6)]
    for i in range(xs.size - 1):
        hx = xs[i + 1] - xs[i]
        for j in range(ys.size - 1):
            hy = ys[j + 1] - ys[j]
            a, b = np.meshgrid(t, t, indexing="ij")
            w = np.outer(tw, tw) * hx * hy
            u00, u10, u01, u11 = U[i, j], U[i + 1, j], U[i, j + 1], U[i + 1, j + 1]
            v = u00 * (1 - a) * (1 - b) + u10 * a * (1 - b) + u01 * (1 - a) * b + u11 * a * b
            vx = ((u10 - u00) * (1 - b) + (u11 - u01) * b) / hx
            vy = ((u01 - u00) * (1 - a) + (u11 - u10) * a) / hy
            for k, arr in enumerate((xs[i] + hx * a, ys[j] + hy * b, w, v, vx, vy)):
                out[k].append(np.ravel(arr))
    return [np.concatenate(o) for o in out]


def random_vector(n, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)
