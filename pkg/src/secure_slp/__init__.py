"""Secure symbol-level precoding for multiuser PSK downlinks.

Modules
-------
geometry
    PSK constellations, real lifting and constructive/destructive regions.
channel
    Rayleigh channels with a correlated eavesdropper, receiver noise.
solver
    Minimum-norm interior-point solver, dual gradient projection and SCP.
precoders
    The precoding schemes.
eavesdropper
    Phase-histogram ML eavesdropper and user symbol error rates.
harness
    Monte Carlo experiments, metrics and CSV output.
"""

from .geometry import (
    PskConstellation, QosParams, HalfspaceCoeffs, RotatedChannel, psk_symbol,
    rotate_to_symbol_frame, real_lift, inverse_lift, halfspace_coeffs,
    in_constructive_region, in_destructive_region, constructive_rows,
)
from .channel import ChannelRealization, sample_channel, sample_complex_gaussian, sample_eve_correlated, sample_noise
from .precoders import (
    PrecoderKind, PrecoderSolution, PrecoderBatch, precode_batch, traditional_ci, cd_partial,
    cd_full, icss, fast_icss, zf_precoder, an_no_csi, check_solution,
)

__version__ = "0.1.0"
