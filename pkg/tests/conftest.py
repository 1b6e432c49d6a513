import numpy as np
import pytest

import streams
from distributions import DistributionSpec, parse_spec, sample_n


@pytest.fixture
def rng():
    return streams.substream(20240917, 99)


@pytest.fixture
def two_point_pair():
    return DistributionSpec.two_point(0, 0.5, 1), DistributionSpec.two_point(0, 0.75, 2)


def draw(spec_text, size, seed, index=0):
    return sample_n(parse_spec(spec_text), size, streams.substream(seed, 99, index=index))


def mixed_samples(stream, count):
    """Random sample pairs with atoms and ties mixed into continuous draws."""
    pairs = []
    for _ in range(count):
        m, n = (int(v) for v in stream.integers(2, 41, size=2))
        x = stream.exponential(1.0, m)
        y = stream.gamma(0.5 + 2 * stream.random(), 1.0, n)
        x[stream.random(m) < 0.3] = 1.0
        y[stream.random(n) < 0.2] = 0.0
        if stream.random() < 0.5:
            y[: min(3, n)] = np.round(y[: min(3, n)], 1)
        pairs.append((x, y))
    return pairs
