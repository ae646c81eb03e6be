"""
Symbol-level precoders for a K-user PSK downlink with one eavesdropper.

Each scheme turns one (channel, symbol vector) pair into a minimum-power
program over the lifted transmit vector and solves it.  All builders work on
a leading batch axis (``H`` of shape ``(B, K, N)``, ``h_e`` of ``(B, N)``,
symbols ``s`` of ``(B, K)``) so Monte Carlo code can solve thousands of
instances per call; the single-instance functions wrap a batch of one.

Eavesdropper constraints are written in the frame of user 1's symbol, the
only user with a secrecy requirement.
"""

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import (
    QosParams, halfspace_coeffs, in_constructive_region, in_destructive_region,
    inverse_lift, sector_rows,
)
from .solver import (
    BatchResult, MinNormProgram, Status, dual_gradient_projection_batch, feasible_init_norm_floor_batch,
    scp_minimize_with_norm_floor_batch, solve_min_norm_batch,
)
from .solver.scp import InitializationError

IPM_TOL = 1e-9


class PrecoderKind(str, Enum):
    TRADITIONAL_CI = "traditional_ci"
    CD_PARTIAL = "cd_partial"
    CD_FULL = "cd_full"
    ICSS = "icss"
    FAST_ICSS = "fast_icss"
    ZF = "zf"
    AN_NO_CSI = "an_no_csi"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown precoder {name!r}; choose from {[k.value for k in cls]}") from None

    @property
    def uses_eve_csi(self):
        return self not in (PrecoderKind.TRADITIONAL_CI, PrecoderKind.AN_NO_CSI)


# cd_full branch tags; index 0 means "no branch"
BRANCH_TAGS = ("none", "D1", "D2", "D3")


@dataclass
class PrecoderSolution:
    x: np.ndarray
    power: float
    status: Status
    subproblem_tag: str = "none"
    solve_time: float = 0.0
    branch_status: tuple = ()

    @property
    def ok(self):
        return self.status == Status.OPTIMAL


@dataclass
class PrecoderBatch:
    """Stacked solutions: ``x`` is ``(B, N)`` complex, the rest per instance."""

    x: np.ndarray
    power: np.ndarray
    status: np.ndarray
    tag: np.ndarray
    solve_time: float
    branch_status: np.ndarray = None

    def __len__(self):
        return len(self.power)

    def __getitem__(self, i):
        branches = () if self.branch_status is None else tuple(Status(int(v)) for v in self.branch_status[i])
        return PrecoderSolution(
            self.x[i], float(self.power[i]), Status(int(self.status[i])),
            BRANCH_TAGS[int(self.tag[i])], self.solve_time / max(len(self), 1), branches,
        )

    @property
    def ok(self):
        return self.status == Status.OPTIMAL


def _lifted(h, s):
    c = halfspace_coeffs(h * np.conj(s)[..., None])
    return c.a, c.b


def _user_rows(H, s, tau0, half_angle):
    """Rows of ``G x <= h`` placing every user in its constructive region."""
    a, b = _lifted(H, s)
    lo, hi, t = sector_rows(a, b, half_angle)
    G = -np.concatenate([lo, hi], axis=-2)
    h = np.full(G.shape[:-1], -tau0 * t)
    return G, h


def _eve_rows(h_e, s1, half_angle):
    a, b = _lifted(h_e, s1)
    lo, hi, t = sector_rows(a, b, half_angle)
    return a, b, lo, hi, t


def _stack(*parts):
    G = np.concatenate([p[0] for p in parts], axis=-2)
    h = np.concatenate([p[1] for p in parts], axis=-1)
    return G, h


def _rows(vec):
    return vec[..., None, :]


def _prep(H, h_e, s):
    H = np.asarray(H, dtype=complex)
    s = np.asarray(s, dtype=complex)
    single = H.ndim == 2
    if single:
        H, s = H[None], s[None]
        h_e = None if h_e is None else np.asarray(h_e, dtype=complex)[None]
    elif h_e is not None:
        h_e = np.asarray(h_e, dtype=complex)
    if s.shape != H.shape[:-1]:
        raise ValueError(f"symbol array shape {s.shape} does not match channel {H.shape}")
    if np.any(np.abs(np.abs(s) - 1.0) > 1e-9):
        raise ValueError("symbols must be unit-modulus PSK points")
    return single, H, h_e, s


def build_program(kind, H, h_e, s, qos: QosParams, M, branch=None):
    """Convex program for one scheme on a batch (or a single instance).

    ``branch`` selects the cd_full sub-problem (1, 2 or 3).  For
    ``an_no_csi`` the returned program is the base set without the power
    floor.  Returns a :class:`MinNormProgram` with ``dim = 2N``.
    """
    kind = PrecoderKind.parse(kind)
    single, H, h_e, s = _prep(H, h_e, s)
    B, K, N = H.shape
    phi = np.pi / M
    tau0, tau_e = qos.tau0, qos.tau_e
    G_u, h_u = _user_rows(H, s, tau0, phi)
    C = r = E = f = None

    if kind == PrecoderKind.TRADITIONAL_CI:
        G, h = G_u, h_u
    elif kind == PrecoderKind.AN_NO_CSI:
        a1, b1 = _lifted(H[:, 0], s[:, 0])
        E = np.stack([a1, b1], axis=1)
        f = np.tile([tau0, 0.0], (B, 1))
        keep = np.r_[1:K, K + 1:2 * K]
        G, h = G_u[:, keep], h_u[:, keep]
    else:
        if h_e is None:
            raise ValueError(f"{kind.value} needs the eavesdropper channel")
        a_e, b_e, lo_e, hi_e, t = _eve_rows(h_e, s[:, 0], phi)
        if kind == PrecoderKind.CD_PARTIAL:
            G, h = _stack((G_u, h_u), (_rows(-hi_e), np.full((B, 1), -tau_e * t)),
                          (_rows(lo_e), np.full((B, 1), tau_e * t)))
        elif kind == PrecoderKind.CD_FULL:
            if branch not in (1, 2, 3):
                raise ValueError("cd_full needs branch 1, 2 or 3")
            row, off = {1: (a_e, tau_e), 2: (lo_e, tau_e * t), 3: (hi_e, tau_e * t)}[branch]
            G, h = _stack((G_u, h_u), (_rows(row), np.full((B, 1), off)))
        elif kind == PrecoderKind.ICSS:
            G, h = G_u, h_u
            C = np.stack([a_e, b_e], axis=1)
            r = np.full(B, tau_e)
        elif kind == PrecoderKind.FAST_ICSS:
            G, h = fast_icss_system(G_u, h_u, a_e, b_e, tau_e)
        else:
            raise ValueError(f"{kind.value} is not an optimisation-based precoder")
    prog = MinNormProgram(2 * N, G, h, E, f, C, r)
    return prog.instance(0) if single else prog


def fast_icss_system(G_u, h_u, a_e, b_e, tau_e):
    """Stack the user rows with the square cap ``|Re z_e|, |Im z_e| <= tau_e / sqrt(2)``."""
    B = G_u.shape[0]
    Q = np.concatenate([G_u, _rows(a_e), _rows(-a_e), _rows(b_e), _rows(-b_e)], axis=-2)
    b = np.concatenate([h_u, np.full((B, 4), np.sqrt(2.0) / 2.0 * tau_e)], axis=-1)
    return Q, b


def _finish(xbar, status, tag, t0, branch_status=None):
    x = inverse_lift(xbar)
    power = np.sum(xbar * xbar, axis=-1)
    x = np.where((status == Status.OPTIMAL)[:, None], x, np.nan)
    power = np.where(status == Status.OPTIMAL, power, np.nan)
    return PrecoderBatch(x, power, status.astype(int), tag, time.perf_counter() - t0, branch_status)


def zf_batch(H, h_e, s, qos: QosParams):
    """Minimum-norm solution of ``[H; h_e^T] x = [tau0 s; 0]``."""
    t0 = time.perf_counter()
    A = np.concatenate([H, h_e[:, None, :]], axis=1)
    B, rows, N = A.shape
    if N < rows:
        raise ValueError(f"zero-forcing needs N >= K + 1 antennas, got N={N}, K={rows - 1}")
    target = np.concatenate([qos.tau0 * s, np.zeros((B, 1))], axis=1)
    sv = np.linalg.svd(A, compute_uv=False)
    if np.any(sv[:, -1] <= 1e-12 * sv[:, 0]):
        raise np.linalg.LinAlgError("stacked user/eavesdropper channel is rank deficient")
    x = np.einsum("bij,bj->bi", np.linalg.pinv(A), target)
    xbar = np.concatenate([x.real, x.imag], axis=-1)
    status = np.zeros(B, dtype=int)
    return _finish(xbar, status, np.zeros(B, dtype=int), t0)


def precode_batch(kind, H, h_e, s, qos: QosParams, M, P0=0.0):
    """Run one scheme over a batch of instances.

    ``P0`` is the linear power floor used by ``an_no_csi``.  Infeasible or
    unconverged instances carry a non-OPTIMAL status and NaN power.
    """
    kind = PrecoderKind.parse(kind)
    _, H, h_e, s = _prep(H, h_e, s)
    B = H.shape[0]
    t0 = time.perf_counter()
    no_tag = np.zeros(B, dtype=int)

    if kind == PrecoderKind.ZF:
        return zf_batch(H, h_e, s, qos)

    if kind == PrecoderKind.CD_FULL:
        xs, powers, statuses = [], [], []
        for branch in (1, 2, 3):
            res = solve_min_norm_batch(build_program(kind, H, h_e, s, qos, M, branch), tol=IPM_TOL)
            xs.append(res.x)
            statuses.append(res.status)
            powers.append(np.where(res.status == Status.OPTIMAL, res.objective, np.inf))
        powers = np.stack(powers, axis=1)
        statuses = np.stack(statuses, axis=1)
        best = np.argmin(powers, axis=1)
        xbar = np.stack(xs, axis=1)[np.arange(B), best]
        feasible = np.isfinite(powers[np.arange(B), best])
        status = np.where(feasible, int(Status.OPTIMAL), int(Status.INFEASIBLE))
        tag = np.where(feasible, best + 1, 0)
        return _finish(xbar, status, tag, t0, statuses)

    prog = build_program(kind, H, h_e, s, qos, M)
    if kind == PrecoderKind.FAST_ICSS:
        res = dual_gradient_projection_batch(prog.G, prog.h)
        return _finish(res.x, res.status, no_tag, t0)

    res = solve_min_norm_batch(prog, tol=IPM_TOL)
    if kind != PrecoderKind.AN_NO_CSI or np.all(np.asarray(P0) <= 0):
        return _finish(res.x, res.status, no_tag, t0)

    # an_no_csi with an active power floor: SCP from a feasible start
    xbar = res.x.copy()
    status = res.status.copy()
    good = np.flatnonzero(status == Status.OPTIMAL)
    if good.size:
        sub = MinNormProgram(prog.dim, prog.G[good], prog.h[good], prog.E[good], prog.f[good])
        P0_arr = np.broadcast_to(np.asarray(P0, dtype=float), (B,))[good]
        try:
            x_init = feasible_init_norm_floor_batch(sub, P0_arr, _subset(res, good))
        except InitializationError:
            status[good] = Status.INFEASIBLE
        else:
            scp, _ = scp_minimize_with_norm_floor_batch(sub, P0_arr, x_init)
            xbar[good] = scp.x
            status[good] = scp.status
    return _finish(xbar, status, no_tag, t0)


def _subset(res, idx):
    return BatchResult(res.x[idx], res.objective[idx], res.status[idx], res.kkt_residual[idx], res.iterations[idx])


def _single(kind, H, h_e, s, qos, M, P0=0.0):
    batch = precode_batch(kind, np.asarray(H)[None], None if h_e is None else np.asarray(h_e)[None],
                          np.asarray(s)[None], qos, M, P0)
    return batch[0]


def traditional_ci(H, s, qos: QosParams, M=4) -> PrecoderSolution:
    """Minimum-power precoder placing every user in its constructive region."""
    return _single(PrecoderKind.TRADITIONAL_CI, H, None, s, qos, M)


def cd_partial(H, h_e, s, qos: QosParams, M=4) -> PrecoderSolution:
    """Constructive for the users, eavesdropper confined to the upper destructive wedge."""
    return _single(PrecoderKind.CD_PARTIAL, H, h_e, s, qos, M)


def cd_full(H, h_e, s, qos: QosParams, M=4) -> PrecoderSolution:
    """Constructive for the users, eavesdropper anywhere in the destructive region.

    The non-convex destructive region is the union of three convex pieces
    (left of ``tau_e``, above the upper edge, below the lower edge); each is
    solved separately and the cheapest feasible one is returned, tagged
    ``D1``/``D2``/``D3``.
    """
    return _single(PrecoderKind.CD_FULL, H, h_e, s, qos, M)


def icss(H, h_e, s, qos: QosParams, M=4) -> PrecoderSolution:
    """Constructive for the users with ``|z_e|^2 <= tau_e^2``."""
    return _single(PrecoderKind.ICSS, H, h_e, s, qos, M)


def fast_icss(H, h_e, s, qos: QosParams, M=4) -> PrecoderSolution:
    """ICSS with the disk replaced by its inscribed square, solved in the dual."""
    return _single(PrecoderKind.FAST_ICSS, H, h_e, s, qos, M)


def zf_precoder(H, h_e, s, qos: QosParams, M=4) -> PrecoderSolution:
    return _single(PrecoderKind.ZF, H, h_e, s, qos, M)


def an_no_csi(H, s, qos: QosParams, P0, M=4) -> PrecoderSolution:
    """Precoder for an unknown eavesdropper channel.

    User 1 is pinned to its constructive vertex ``tau0`` so the part of the
    eavesdropper's signal aligned with user 1 is as weak as possible, the
    other users stay constructive, and the transmit power is held above
    ``P0`` so that the uncorrelated part of the eavesdropper channel mixes in
    enough random signal.  Solved by SCP from a feasible start.
    """
    return _single(PrecoderKind.AN_NO_CSI, H, None, s, qos, M, P0)


def check_solution(kind, H, h_e, s, qos: QosParams, M, x, P0=0.0, tol=1e-6):
    """Replay a scheme's postconditions with the region predicates.

    Returns a boolean per instance (a bool for single inputs).
    """
    kind = PrecoderKind.parse(kind)
    single, H, h_e, s = _prep(H, h_e, s)
    x = np.asarray(x)[None] if single else np.asarray(x)
    phi = np.pi / M
    z = np.einsum("bkn,bn->bk", H, x) * np.conj(s)
    if kind == PrecoderKind.AN_NO_CSI:
        ok = np.abs(z[:, 0] - qos.tau0) <= tol
        ok &= np.all(in_constructive_region(z[:, 1:], qos.tau0, phi, tol=tol), axis=1)
        ok &= np.sum(np.abs(x) ** 2, axis=1) >= P0 - tol
    elif kind == PrecoderKind.ZF:
        ok = np.all(np.abs(z - qos.tau0) <= tol, axis=1)
        ok &= np.abs(np.einsum("bn,bn->b", h_e, x)) <= tol
    else:
        ok = np.all(in_constructive_region(z, qos.tau0, phi, tol=tol), axis=1)
        if kind.uses_eve_csi:
            ze = np.einsum("bn,bn->b", h_e, x) * np.conj(s[:, 0])
            tau_e = qos.tau_e
            if kind == PrecoderKind.CD_FULL:
                ok &= in_destructive_region(ze, tau_e, phi, tol=tol)
            elif kind == PrecoderKind.CD_PARTIAL:
                t = np.tan(phi) if phi < np.pi / 2 - 1e-12 else np.inf
                ok &= ze.imag >= np.abs(ze.real - tau_e) * t - tol
            elif kind == PrecoderKind.ICSS:
                ok &= np.abs(ze) ** 2 <= tau_e ** 2 + tol
            elif kind == PrecoderKind.FAST_ICSS:
                half = np.sqrt(2.0) / 2.0 * tau_e
                ok &= (np.abs(ze.real) <= half + tol) & (np.abs(ze.imag) <= half + tol)
    return bool(ok[0]) if single else ok
