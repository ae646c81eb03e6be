"""
Flat Rayleigh channels for the users and a correlated single-antenna
eavesdropper, plus unit-variance receiver noise.

All samplers take an explicit :class:`numpy.random.Generator`.  Monte Carlo
code obtains generators from :func:`substream`, which derives an independent
stream from ``(master_seed, stream label, index)`` so results do not depend
on scheduling.
"""

from dataclasses import dataclass

import numpy as np

# Stream labels used by the Monte Carlo code.
STREAMS = {"train": 1, "test": 2, "ser": 3, "audit": 4}


def substream(master_seed, stream, index=0):
    """Independent generator for ``(master_seed, stream, index)``.

    ``stream`` is either an integer or one of the labels in :data:`STREAMS`.
    """
    if isinstance(stream, str):
        stream = STREAMS[stream]
    seq = np.random.SeedSequence([int(master_seed), int(stream), int(index)])
    return np.random.default_rng(seq)


def sample_complex_gaussian(shape, variance, rng):
    """Circular complex Gaussian entries with per-entry variance ``variance``."""
    if variance < 0:
        raise ValueError("variance must be non-negative")
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


def sample_eve_correlated(h1, beta_1, beta_e, rho, rng):
    """Eavesdropper channel correlated with ``h1``.

    ``h_e = sqrt(beta_e) * (sqrt(rho) * h1 / sqrt(beta_1) + sqrt(1 - rho) * w)``
    with ``w`` a fresh standard complex Gaussian vector.  ``h1`` may carry
    leading batch axes.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"correlation must lie in [0, 1], got {rho}")
    h1 = np.asarray(h1, dtype=complex)
    w = sample_complex_gaussian(h1.shape, 1.0, rng)
    if rho == 1.0:
        return np.sqrt(beta_e / beta_1) * h1
    return np.sqrt(beta_e) * (np.sqrt(rho) * h1 / np.sqrt(beta_1) + np.sqrt(1.0 - rho) * w)


def sample_noise(rng, size=None):
    """Unit-variance circular complex Gaussian noise."""
    out = sample_complex_gaussian(() if size is None else size, 1.0, rng)
    return complex(out) if size is None else out


@dataclass
class ChannelRealization:
    """Legitimate channels ``H`` (rows are ``h_k^T``) and eavesdropper ``h_e``.

    Arrays may carry a leading batch axis: ``H`` is ``(..., K, N)`` and
    ``h_e`` is ``(..., N)``.
    """

    H: np.ndarray
    h_e: np.ndarray
    beta: np.ndarray
    beta_e: float
    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if np.any(np.asarray(self.beta) <= 0) or self.beta_e <= 0:
            raise ValueError("large-scale gains must be positive")

    @property
    def n_users(self):
        return self.H.shape[-2]

    @property
    def n_antennas(self):
        return self.H.shape[-1]


def sample_channel(N, K, rng, rho=0.0, beta=1.0, beta_e=1.0, batch=None):
    """Draw users' channels and the correlated eavesdropper channel.

    ``beta`` is a scalar or a length-K sequence of large-scale gains.  With
    ``batch`` set, ``H`` has shape ``(batch, K, N)``.
    """
    beta = np.broadcast_to(np.asarray(beta, dtype=float), (K,)).copy()
    lead = () if batch is None else (batch,)
    H = sample_complex_gaussian(lead + (K, N), 1.0, rng) * np.sqrt(beta)[:, None]
    h_e = sample_eve_correlated(H[..., 0, :], beta[0], beta_e, rho, rng)
    return ChannelRealization(H, h_e, beta, float(beta_e), float(rho))
