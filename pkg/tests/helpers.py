"""Shared test data."""

import numpy as np

from secure_slp.channel import sample_channel, substream
from secure_slp.geometry import PskConstellation


def random_instances(seed, B, N=6, K=3, M=4, rho=0.3, stream="audit"):
    """Channels and symbols for ``B`` independent trials."""
    rng = substream(seed, stream)
    ch = sample_channel(N, K, rng, rho=rho, batch=B)
    idx = rng.integers(1, M + 1, size=(B, K))
    return ch.H, ch.h_e, PskConstellation(M).points[idx - 1]


# "criterion <n> PASS|FAIL: ..." lines collected by the acceptance suite
ACCEPTANCE_LINES = []
