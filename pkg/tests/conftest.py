"""Shared fixtures and deterministic hypothesis settings."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=30,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture
def rng():
    from prgforge.samples import make_rng

    return make_rng(1234)


@pytest.fixture
def small_net_factory():
    """Random dense dyadic nets with controlled shape, for structural tests."""
    from fractions import Fraction

    from prgforge.relunet import Layer, ReluNet

    def build(d_in, widths, d_out, seed=0, tau=3):
        rng = np.random.default_rng(seed)
        dims = [d_in, *widths, d_out]
        layers = []
        for a, b in zip(dims, dims[1:]):
            W = np.array(
                [[Fraction(int(v), 1 << tau) for v in row]
                 for row in rng.integers(-(1 << tau), (1 << tau) + 1,
                                         size=(b, a))],
                dtype=object)
            bias = [Fraction(int(v), 1 << tau)
                    for v in rng.integers(-(1 << tau), (1 << tau) + 1, size=b)]
            layers.append(Layer.from_entries(W, bias, tau=tau))
        return ReluNet(layers)

    return build
