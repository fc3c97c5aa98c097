import numpy as np
import pytest

from wassrisk import ProductLognormal, build_grid


@pytest.fixture(scope="session")
def unit_lognormal():
    """Unit-mean 1-d lognormal, sigma = 0.2."""
    sigma = 0.2
    return ProductLognormal([-0.5 * sigma * sigma], [sigma])


@pytest.fixture(scope="session")
def unit_grid(unit_lognormal):
    return build_grid(unit_lognormal, 2001)


@pytest.fixture(scope="session")
def fine_unit_grid(unit_lognormal):
    return build_grid(unit_lognormal, 50001)


def random_pwl(rng, dim, npieces, slope_scale=2.0, intercept_scale=2.0):
    from wassrisk import AffinePiece, PwlConvex

    pieces = []
    for _ in range(npieces):
        m = rng.uniform(-slope_scale, slope_scale, size=dim)
        c = rng.uniform(-intercept_scale, intercept_scale)
        pieces.append(AffinePiece(np.asarray(m), float(c)))
    return PwlConvex(pieces)
