"""Constellation, lifting and region predicates."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from secure_slp.geometry import (
    PskConstellation, QosParams, constructive_rows, halfspace_coeffs, in_constructive_region,
    in_destructive_region, inverse_lift, psk_symbol, real_lift, rotate_to_symbol_frame,
)

finite = st.floats(-50, 50, allow_nan=False)


def test_psk_first_qpsk_point():
    assert psk_symbol(1, 4) == pytest.approx(np.sqrt(2) / 2 * (1 + 1j), abs=1e-15)


def test_psk_first_bpsk_point_is_j():
    assert psk_symbol(1, 2) == pytest.approx(1j, abs=1e-15)


def test_psk_8_unit_modulus_and_spacing():
    pts = PskConstellation(8).points
    assert np.allclose(np.abs(pts), 1.0, atol=1e-15)
    assert np.allclose(pts[1:], pts[:-1] * np.exp(2j * np.pi / 8))
    assert np.allclose(np.mod(np.angle(pts), 2 * np.pi), (2 * np.arange(1, 9) - 1) * np.pi / 8)


@pytest.mark.parametrize("m", [0, 5, -1])
def test_psk_index_out_of_range(m):
    with pytest.raises(ValueError):
        psk_symbol(m, 4)


def test_constellation_rejects_order_one():
    with pytest.raises(ValueError):
        PskConstellation(1)


def test_qos_thresholds():
    q = QosParams(10.0, -30.0)
    assert q.tau0 == pytest.approx(np.sqrt(10.0))
    assert q.tau_e == pytest.approx(np.sqrt(1e-3))


def test_rotation_identity_and_conjugate_phase():
    e1 = np.eye(3)[0].astype(complex)
    assert np.allclose(rotate_to_symbol_frame(e1, 1 + 0j).g, e1)
    assert np.allclose(rotate_to_symbol_frame(e1, np.exp(1j * np.pi / 4)).g, np.exp(-1j * np.pi / 4) * e1)


def test_rotation_rejects_non_unit_symbol():
    with pytest.raises(ValueError):
        rotate_to_symbol_frame(np.ones(2), 1.1)


def test_rotation_preserves_products(rng):
    h = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    s = psk_symbol(1, 4)
    g = rotate_to_symbol_frame(h, s).g
    assert np.linalg.norm(g) == pytest.approx(np.linalg.norm(h))
    X = rng.standard_normal((100, 5)) + 1j * rng.standard_normal((100, 5))
    assert np.allclose(X @ g, (X @ h) * np.conj(s), atol=1e-12)


def test_real_lift_definition():
    assert np.array_equal(real_lift([1 + 2j]), [1.0, 2.0])
    assert np.array_equal(real_lift(np.zeros(3, complex)), np.zeros(6))


def test_lift_roundtrip_and_norm(rng):
    x = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    xb = real_lift(x)
    assert np.sum(xb ** 2) == pytest.approx(np.sum(np.abs(x) ** 2), abs=1e-12)
    assert np.allclose(inverse_lift(xb), x)


def test_halfspace_coeffs_simple_channels():
    c = halfspace_coeffs(np.array([1 + 0j]))
    assert np.array_equal(c.a, [1, 0]) and np.array_equal(c.b, [0, 1])
    c = halfspace_coeffs(np.array([1j]))
    assert np.array_equal(c.a, [0, -1]) and np.array_equal(c.b, [1, 0])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_halfspace_identities(n, seed):
    r = np.random.default_rng(seed)
    g = r.standard_normal(n) + 1j * r.standard_normal(n)
    x = r.standard_normal(n) + 1j * r.standard_normal(n)
    c = halfspace_coeffs(rotate_to_symbol_frame(g, 1.0))
    z = g @ x
    assert abs(c.a @ real_lift(x) - z.real) <= 1e-12 * (1 + abs(z))
    assert abs(c.b @ real_lift(x) - z.imag) <= 1e-12 * (1 + abs(z))


def test_constructive_examples():
    tau0, phi = np.sqrt(10), np.pi / 4
    assert in_constructive_region(tau0 + 0j, tau0, phi)
    assert in_constructive_region(tau0 + 0j, tau0, np.pi / 8)
    assert not in_constructive_region(tau0 - 0.01, tau0, phi)
    assert in_constructive_region((tau0 + 1) + 1j, tau0, phi)
    assert not in_constructive_region((tau0 + 1) + 1.01j, tau0, phi)


def test_destructive_examples():
    tau_e, phi = 0.5, np.pi / 4
    assert in_destructive_region(0j, tau_e, phi)
    assert not in_destructive_region(2 * tau_e + 0j, tau_e, phi)


@pytest.mark.parametrize("M", [2, 4, 8])
def test_regions_partition_the_plane(M):
    phi, tau = np.pi / M, 1.3
    re, im = np.meshgrid(np.linspace(-4, 6, 301), np.linspace(-5, 5, 301))
    z = re + 1j * im
    strict = in_constructive_region(z, tau, phi, strict=True)
    destr = in_destructive_region(z, tau, phi)
    assert np.all(strict ^ destr)


def test_constructive_rows_qpsk_unit_channel():
    tau0 = np.sqrt(10)
    (r1, c1), (r2, c2) = constructive_rows(halfspace_coeffs(np.array([1 + 0j])), tau0, np.pi / 4)
    assert np.allclose(r1, [1, -1]) and np.allclose(r2, [1, 1])
    assert c1 == pytest.approx(tau0) and c2 == pytest.approx(tau0)


@pytest.mark.parametrize("M", [4, 8])
def test_constructive_rows_match_predicate(rng, M):
    phi, tau0 = np.pi / M, 2.0
    g = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    rows = constructive_rows(halfspace_coeffs(g), tau0, phi)
    agree = 0
    for _ in range(1000):
        x = 3 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        xb = real_lift(x)
        by_rows = all(r @ xb - c >= 0 for r, c in rows)
        assert by_rows == in_constructive_region(g @ x, tau0, phi, tol=0.0)
        agree += by_rows
    assert agree > 0


def test_vertex_makes_both_rows_tight():
    tau0, phi = 1.7, np.pi / 4
    g = np.array([0.3 + 0.8j, -1.1 + 0.2j])
    x = np.linalg.pinv(g[None]) @ np.array([tau0 + 0j])
    rows = constructive_rows(halfspace_coeffs(g), tau0, phi)
    for r, c in rows:
        assert r @ real_lift(x) - c == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(finite, finite, st.sampled_from([2, 4, 8]), st.integers(1, 8))
def test_rotation_invariance_of_membership(re, im, M, m):
    c = psk_symbol(min(m, M), M)
    tau, phi = 1.0, np.pi / M
    z_frame = complex(re, im)
    z = z_frame * c
    assert in_constructive_region(z * np.conj(c), tau, phi) == in_constructive_region(z_frame, tau, phi)


def test_vertex_is_min_modulus_constructive_point():
    tau0, phi = 2.0, np.pi / 4
    re, im = np.meshgrid(np.linspace(0, 8, 401), np.linspace(-6, 6, 401))
    z = (re + 1j * im).ravel()
    inside = z[in_constructive_region(z, tau0, phi)]
    best = inside[np.argmin(np.abs(inside))]
    assert best == pytest.approx(tau0 + 0j, abs=1e-9)
