import math

import mpmath as mp
import pytest


def h3_exact(r, t):
    """Heat kernel on H^3 in closed form."""
    if r == 0:
        return (4 * math.pi * t) ** -1.5 * math.exp(-t)
    return (4 * math.pi * t) ** -1.5 * r / math.sinh(r) * math.exp(-t - r * r / (4 * t))


def h2_mckean(r, t, dps=30):
    """Heat kernel on H^2 by the classical integral over ``s >= r``, in mpmath."""
    with mp.workdps(dps):
        r, t = mp.mpf(r), mp.mpf(t)
        # s = r + u^2 removes the endpoint singularity
        def f(u):
            if u == 0:
                return 0 if r == 0 else 2 * r * mp.exp(-r * r / (4 * t)) / mp.sqrt(mp.sinh(r))
            s = r + u * u
            gap = 2 * mp.sinh(r + u * u / 2) * mp.sinh(u * u / 2)
            return 2 * u * s * mp.exp(-s * s / (4 * t)) / mp.sqrt(gap)
        val = mp.quad(f, [0, 1, 4, mp.inf])
        return float(mp.sqrt(2) * mp.exp(-t / 4) / (4 * mp.pi * t) ** 1.5 * val)


@pytest.fixture(scope="session")
def rng():
    import numpy as np
    return np.random.default_rng(12345)
