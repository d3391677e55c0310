import math

import numpy as np
import pytest


def central_diff(f, x, axis, h):
    xp = np.array(x, dtype=float)
    xm = np.array(x, dtype=float)
    xp[axis] += h
    xm[axis] -= h
    return (f(xp) - f(xm)) / (2 * h)


def richardson_partial(f, x, exponents, h=1e-3):
    """Richardson-extrapolated central difference for d^alpha f(x).

    Applies one nested central difference per derivative order and
    extrapolates D(h), D(h/2) to kill the h^2 term. Practical up to
    total order 3 in double precision.
    """

    def nested(g, alpha):
        for axis, e in enumerate(alpha):
            for _ in range(e):
                g = (lambda gg, ax: lambda y: central_diff(gg, y, ax, step[0]))(g, axis)
        return g

    step = [h]
    d1 = nested(f, exponents)(np.asarray(x, dtype=float))
    step = [h / 2]
    d2 = nested(f, exponents)(np.asarray(x, dtype=float))
    return (4.0 * d2 - d1) / 3.0


def rel_err(a, b, floor=1.0):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), floor)
    return float(np.max(np.abs(a - b))) / scale


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


def sup(x):
    return float(np.max(np.abs(np.asarray(x))))
