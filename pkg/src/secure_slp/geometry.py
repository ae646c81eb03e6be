"""
PSK constellations and constructive/destructive region algebra.

Every region test works in the frame rotated by the symbol of interest, where
the constructive wedge of a symbol opens to the right from the vertex
``tau + 0j`` with half-angle ``Phi = pi / M``.  Complex transmit vectors are
handled through the real lift ``[Re x; Im x]`` so that every constraint used
by the precoders is a linear (or quadratic) function of a real vector.

Noise power is fixed to one, so an SNR ``gamma`` maps to the amplitude
threshold ``tau = sqrt(gamma)``.
"""

from dataclasses import dataclass

import numpy as np

#: Closed-set tolerance for the region predicates.
REGION_TOL = 1e-9


@dataclass(frozen=True)
class PskConstellation:
    """Normalized M-PSK constellation with points ``exp(j(2m-1)pi/M)``.

    Symbol indices are 1-based throughout the public API, matching the
    usual ``c_1 .. c_M`` labelling.
    """

    order: int

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 2:
            raise ValueError(f"PSK order must be an integer >= 2, got {self.order}")

    @property
    def half_angle(self) -> float:
        return np.pi / self.order

    @property
    def points(self) -> np.ndarray:
        m = np.arange(1, self.order + 1)
        return np.exp(1j * (2 * m - 1) * np.pi / self.order)

    def symbol(self, m: int) -> complex:
        return psk_symbol(m, self.order)

    def __len__(self):
        return self.order


def psk_symbol(m, M):
    """Return the ``m``-th point (1-based) of the normalized M-PSK set.

    ``m`` may be an integer array, in which case an array is returned.
    """
    m_arr = np.asarray(m)
    if np.any(m_arr < 1) or np.any(m_arr > M) or np.any(m_arr != np.floor(m_arr)):
        raise ValueError(f"symbol index must lie in 1..{M}, got {m}")
    out = np.exp(1j * (2 * m_arr - 1) * np.pi / M)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QosParams:
    """User SNR floor and eavesdropper SNR ceiling, both in dB.

    The amplitude thresholds used in the region algebra are
    ``tau0 = sqrt(10**(gamma0_db/10))`` and likewise ``tau_e``.
    """

    gamma0_db: float = 10.0
    gamma_e_db: float = 0.0

    @property
    def tau0(self) -> float:
        return float(np.sqrt(10.0 ** (self.gamma0_db / 10.0)))

    @property
    def tau_e(self) -> float:
        return float(np.sqrt(10.0 ** (self.gamma_e_db / 10.0)))


@dataclass(frozen=True)
class RotatedChannel:
    """Channel expressed in the frame of a symbol, ``g = h * conj(s)``."""

    g: np.ndarray


@dataclass(frozen=True)
class HalfspaceCoeffs:
    """Real rows with ``a @ lift(x) = Re(g^T x)`` and ``b @ lift(x) = Im(g^T x)``."""

    a: np.ndarray
    b: np.ndarray


def rotate_to_symbol_frame(h, s) -> RotatedChannel:
    if abs(abs(s) - 1.0) > 1e-12:
        raise ValueError(f"rotation symbol must have unit modulus, |s| = {abs(s)!r}")
    return RotatedChannel(np.asarray(h, dtype=complex) * np.conj(s))


def real_lift(x):
    """Stack real and imaginary parts along the last axis."""
    x = np.asarray(x, dtype=complex)
    return np.concatenate([x.real, x.imag], axis=-1)


def inverse_lift(xbar):
    xbar = np.asarray(xbar, dtype=float)
    n = xbar.shape[-1]
    if n % 2:
        raise ValueError("lifted vector must have even length")
    return xbar[..., : n // 2] + 1j * xbar[..., n // 2 :]


def halfspace_coeffs(g) -> HalfspaceCoeffs:
    """Lift a (rotated) channel into the real row pair ``(a, b)``.

    Accepts a :class:`RotatedChannel` or a raw complex array; leading axes
    are preserved so a stack of channels yields stacked rows.
    """
    if isinstance(g, RotatedChannel):
        g = g.g
    g = np.asarray(g, dtype=complex)
    a = np.concatenate([g.real, -g.imag], axis=-1)
    b = np.concatenate([g.imag, g.real], axis=-1)
    return HalfspaceCoeffs(a, b)


def _margin(z, tau, half_angle):
    # signed distance from z to the nearer wedge edge, positive inside
    z = np.asarray(z, dtype=complex)
    return (z.real - tau) * np.sin(half_angle) - np.abs(z.imag) * np.cos(half_angle)


def in_constructive_region(z, tau0, half_angle, strict=False, tol=REGION_TOL):
    """Test ``|Im z| <= (Re z - tau0) tan(Phi)`` in the symbol frame.

    The closed region is the default.  With ``strict=True`` only points more
    than ``tol`` inside the wedge count, which makes the result the exact
    complement of :func:`in_destructive_region` at the same threshold.
    """
    m = _margin(z, tau0, half_angle)
    out = m > tol if strict else m >= -tol
    return bool(out) if np.ndim(out) == 0 else out


def in_destructive_region(z, tau_e, half_angle, tol=REGION_TOL):
    """Test ``|Im z| >= (Re z - tau_e) tan(Phi)`` (closed)."""
    out = _margin(z, tau_e, half_angle) <= tol
    return bool(out) if np.ndim(out) == 0 else out


def sector_rows(a, b, half_angle):
    """Return ``(a tan(Phi) - b, a tan(Phi) + b, tan(Phi))``.

    For BPSK (``Phi = pi/2``) the tangent is infinite; both rows reduce to
    ``a`` with unit offset scale, which describes the same half-plane.
    """
    if half_angle >= np.pi / 2 - 1e-12:
        return a, a, 1.0
    t = np.tan(half_angle)
    return a * t - b, a * t + b, t


def constructive_rows(coeffs: HalfspaceCoeffs, tau0, half_angle):
    """Rows ``r`` and common offset ``c`` with ``r @ xbar - c >= 0`` iff constructive.

    Returns ``[(a tan(Phi) - b, c), (a tan(Phi) + b, c)]`` with
    ``c = tau0 tan(Phi)``.
    """
    lo, hi, t = sector_rows(coeffs.a, coeffs.b, half_angle)
    offset = tau0 * t
    return [(lo, offset), (hi, offset)]
