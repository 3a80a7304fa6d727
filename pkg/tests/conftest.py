import os

import numpy as np
import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def random_symmetric(gen, d, scale=1.0):
    raw = gen.standard_normal((d, d))
    return scale * (raw + raw.T) / 2.0


def random_psd(gen, d, scale=1.0):
    raw = gen.standard_normal((d, d))
    return scale * (raw @ raw.T) / d


def random_pd(gen, d, scale=1.0, floor=0.1):
    return random_psd(gen, d, scale) + floor * np.eye(d)


@pytest.fixture
def gen():
    return np.random.default_rng(20240817)
