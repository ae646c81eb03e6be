"""
Smart eavesdropper and legitimate-user error rates.

The eavesdropper only sees the phase of ``y_e = h_e^T x + n_e``.  It learns
the conditional phase densities ``f(theta | c_m)`` from simulated training
transmissions and then picks the symbol whose density is largest at the
observed phase.

Trials are simulated in fixed-size chunks.  Chunk ``i`` of stream ``s``
draws everything (channels, symbols, noise) from
``substream(seed, s, i)``, so results are identical however the chunks are
scheduled across threads.
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import STREAMS, sample_channel, sample_noise, substream
from .geometry import PskConstellation, QosParams
from .precoders import PrecoderKind, precode_batch

log = logging.getLogger(__name__)

CHUNK = 512
DEFAULT_BINS = 360
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class LinkParams:
    """System parameters for one simulated operating point.

    ``P0`` is the linear power floor for the no-CSI scheme.
    """

    N: int = 6
    K: int = 3
    M: int = 4
    rho: float = 0.3
    beta: float = 1.0
    beta_e: float = 1.0
    qos: QosParams = field(default_factory=QosParams)
    P0: float = 0.0

    def __post_init__(self):
        if self.N < 1 or self.K < 1:
            raise ValueError("N and K must be positive")
        PskConstellation(self.M)
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")


@dataclass
class ChunkResult:
    symbols: np.ndarray  # (n, K) 1-based
    power: np.ndarray  # NaN where not optimal
    status: np.ndarray
    theta: np.ndarray  # eavesdropper phase in [0, 2pi)
    user_errors: np.ndarray = None  # (K,) error counts over optimal trials
    user_symbols: int = 0  # detections per user


@dataclass
class TrialSet:
    """Concatenated results of a chunked simulation, in trial order."""

    symbols: np.ndarray
    power: np.ndarray
    status: np.ndarray
    theta: np.ndarray
    user_errors: np.ndarray
    user_symbols: int

    @property
    def ok(self):
        return self.status == 0

    @property
    def infeasible_count(self):
        return int(np.sum(~self.ok))


def _phase(y):
    return np.mod(np.angle(y), TWO_PI)


def _simulate_chunk(kind, link: LinkParams, seed, stream, chunk, n, fix_first, ser_draws, noiseless):
    rng = substream(seed, stream, chunk)
    ch = sample_channel(link.N, link.K, rng, link.rho, link.beta, link.beta_e, batch=n)
    symbols = rng.integers(1, link.M + 1, size=(n, link.K))
    if fix_first:
        symbols[:, 0] = 1
    s = PskConstellation(link.M).points[symbols - 1]
    noise_e = sample_noise(rng, n)
    sol = precode_batch(kind, ch.H, ch.h_e, s, link.qos, link.M, link.P0)
    ok = sol.ok
    x = np.where(ok[:, None], sol.x, 0.0)
    theta = np.where(ok, _phase(np.einsum("bn,bn->b", ch.h_e, x) + noise_e), np.nan)

    errors, count = None, 0
    if ser_draws:
        z = np.einsum("bkn,bn->bk", ch.H, x)[ok]
        ser_rng = substream(seed, STREAMS["ser"] * 1000 + _stream_id(stream), chunk)
        noise = 0.0 if noiseless else sample_noise(ser_rng, (ser_draws,) + z.shape)
        detected = nearest_symbol_detect(z[None] + noise, link.M)
        errors = np.sum(detected != symbols[ok][None], axis=(0, 1))
        count = ser_draws * int(ok.sum())
    return ChunkResult(symbols, sol.power, sol.status, theta, errors, count)


def _stream_id(stream):
    return STREAMS[stream] if isinstance(stream, str) else int(stream)


def simulate_trials(kind, link: LinkParams, trials, seed, stream="test", fix_first=False,
                    ser_draws=0, noiseless=False, threads=1):
    """Simulate ``trials`` independent transmissions of one scheme.

    Parameters
    ----------
    kind : PrecoderKind or str
    link : LinkParams
    trials : int
    seed : int
        Master seed; combined with ``stream`` and the chunk index.
    stream : str or int
        Substream label, e.g. ``"train"`` or ``"test"``.
    fix_first : bool
        Force user 1's symbol to ``c_1`` (training mode).
    ser_draws : int
        Noise realisations per trial and user for symbol error counting;
        0 skips the user-side detection.
    noiseless : bool
        Detect the users' noise-free signals instead.
    threads : int
        Worker threads; the result does not depend on it.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    kind = PrecoderKind.parse(kind)
    sizes = [min(CHUNK, trials - i) for i in range(0, trials, CHUNK)]
    jobs = [(kind, link, seed, stream, c, n, fix_first, ser_draws, noiseless) for c, n in enumerate(sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda a: _simulate_chunk(*a), jobs))
    else:
        parts = [_simulate_chunk(*a) for a in jobs]
    errors = np.zeros(link.K, dtype=np.int64)
    count = 0
    for p in parts:
        if p.user_errors is not None:
            errors += p.user_errors
            count += p.user_symbols
    out = TrialSet(
        np.concatenate([p.symbols for p in parts]), np.concatenate([p.power for p in parts]),
        np.concatenate([p.status for p in parts]), np.concatenate([p.theta for p in parts]),
        errors, count,
    )
    if out.infeasible_count:
        log.info("%s: %d of %d trials not solved; skipped", kind.value, out.infeasible_count, trials)
    return out


@dataclass
class PhaseSamples:
    """User 1's true symbol index (1-based) and the eavesdropper's phase."""

    symbols: np.ndarray
    theta: np.ndarray
    skipped: int = 0

    def __len__(self):
        return len(self.theta)


def collect_phase_samples(kind, link: LinkParams, trials, seed, stream="train", fix_first=True, threads=1):
    """Eavesdropper phases for ``trials`` simulated transmissions.

    Trials the precoder could not solve are dropped and counted in
    ``skipped``.
    """
    ts = simulate_trials(kind, link, trials, seed, stream, fix_first=fix_first, threads=threads)
    ok = ts.ok
    return PhaseSamples(ts.symbols[ok, 0], ts.theta[ok], int((~ok).sum()))


@dataclass
class PhasePdf:
    """Histogram densities ``densities[m - 1, b]`` of the phase given ``c_m``."""

    M: int
    B: int
    densities: np.ndarray
    train_count: int

    @property
    def bin_width(self):
        return TWO_PI / self.B

    @property
    def bin_centers(self):
        return (np.arange(self.B) + 0.5) * self.bin_width

    def bin_of(self, theta):
        idx = np.floor(np.mod(theta, TWO_PI) / self.bin_width).astype(int)
        return np.clip(idx, 0, self.B - 1)


def _as_samples(samples):
    if isinstance(samples, PhaseSamples):
        return np.asarray(samples.symbols), np.asarray(samples.theta)
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    return arr[:, 0].astype(int), arr[:, 1]


def build_conditional_pdf(samples, M, B=DEFAULT_BINS, mode="rotate_from_c1"):
    """Estimate ``f(theta | c_m)`` for every symbol.

    Parameters
    ----------
    samples : PhaseSamples or sequence of (symbol index, phase) pairs
    M : int
        Constellation order.
    B : int
        Number of bins over ``[0, 2pi)``; must be a multiple of ``M``.
    mode : {"rotate_from_c1", "independent"}
        ``rotate_from_c1`` maps every sample into the frame of ``c_1``
        (training normally uses ``c_1`` only), estimates one density and
        obtains the others by circular shifts of ``(m - 1) B / M`` bins.
        ``independent`` histograms each symbol's samples separately.
    """
    if B % M:
        raise ValueError(f"bin count {B} must be a multiple of M={M}")
    sym, theta = _as_samples(samples)
    if theta.size == 0:
        raise ValueError("no phase samples to build a density from")
    if np.any((sym < 1) | (sym > M)):
        raise ValueError("symbol indices must lie in 1..M")
    width = TWO_PI / B

    def hist(th):
        idx = np.clip(np.floor(np.mod(th, TWO_PI) / width).astype(int), 0, B - 1)
        counts = np.bincount(idx, minlength=B).astype(float)
        return counts / (counts.sum() * width)

    dens = np.zeros((M, B))
    if mode == "rotate_from_c1":
        base = hist(theta - (sym - 1) * TWO_PI / M)
        for m in range(M):
            dens[m] = np.roll(base, m * B // M)
    elif mode == "independent":
        for m in range(1, M + 1):
            sel = sym == m
            if not sel.any():
                raise ValueError(f"no samples for symbol {m}")
            dens[m - 1] = hist(theta[sel])
    else:
        raise ValueError(f"unknown density mode {mode!r}")
    return PhasePdf(M, B, dens, int(theta.size))


def ml_detect(theta, pdf: PhasePdf):
    """Symbol (1-based) with the largest density at ``theta``; ties go to the lowest index."""
    col = pdf.densities[:, pdf.bin_of(theta)]
    return np.argmax(col, axis=0) + 1


@dataclass
class DetectionReport:
    p_correct: float
    confusion: np.ndarray
    test_count: int
    train_count: int
    valid: bool = True
    skipped: int = 0

    @property
    def standard_error(self):
        p = self.p_correct
        return math.sqrt(max(p * (1 - p), 0.0) / max(self.test_count, 1))


def detection_report(true_symbols, detected, M, train_count=0, valid=True, skipped=0):
    """Confusion matrix (rows: true symbol) and mean per-symbol accuracy."""
    true_symbols = np.asarray(true_symbols)
    counts = np.zeros((M, M))
    np.add.at(counts, (true_symbols - 1, np.asarray(detected) - 1), 1)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        confusion = counts / totals
    diag = np.diag(confusion)
    p = float(np.mean(diag[np.isfinite(diag)])) if np.isfinite(diag).any() else float("nan")
    return DetectionReport(p, confusion, int(true_symbols.size), train_count, valid, skipped)


def estimate_detection_probability(kind, link: LinkParams, train_trials, test_trials, seed, B=DEFAULT_BINS,
                                   mode="rotate_from_c1", train_stream="train", test_stream="test",
                                   threads=1):
    """Train the ML eavesdropper and measure it on fresh transmissions.

    Returns ``(DetectionReport, PhasePdf)``.  The report is flagged invalid
    if training and testing share a substream.
    """
    train = collect_phase_samples(kind, link, train_trials, seed, train_stream,
                                  fix_first=(mode == "rotate_from_c1"), threads=threads)
    test = collect_phase_samples(kind, link, test_trials, seed, test_stream, fix_first=False, threads=threads)
    pdf = build_conditional_pdf(train, link.M, B, mode)
    valid = _stream_id(train_stream) != _stream_id(test_stream)
    report = detection_report(test.symbols, ml_detect(test.theta, pdf), link.M, pdf.train_count, valid,
                              train.skipped + test.skipped)
    return report, pdf


def nearest_symbol_detect(y, M, tie_tol=1e-12):
    """Nearest PSK point (1-based) to ``y``; exact ties go to the lowest index."""
    y = np.asarray(y, dtype=complex)
    pts = PskConstellation(M).points
    score = np.real(y[..., None] * np.conj(pts))
    best = np.max(score, axis=-1, keepdims=True)
    tol = tie_tol * np.maximum(1.0, np.abs(y))[..., None]
    out = np.argmax(score >= best - tol, axis=-1) + 1
    return int(out) if out.ndim == 0 else out


@dataclass
class SerReport:
    per_user: np.ndarray
    average: float
    detections: int


def ser_from_trials(ts: TrialSet):
    if ts.user_symbols == 0:
        return SerReport(np.full(len(ts.user_errors), np.nan), float("nan"), 0)
    per_user = ts.user_errors / ts.user_symbols
    return SerReport(per_user, float(per_user.mean()), ts.user_symbols)


def estimate_user_ser(kind, link: LinkParams, trials, seed, noise_draws=1, noiseless=False,
                      stream="test", threads=1):
    """Per-user symbol error rate with nearest-point detection."""
    ts = simulate_trials(kind, link, trials, seed, stream, ser_draws=max(int(noise_draws), 1),
                         noiseless=noiseless, threads=threads)
    return ser_from_trials(ts)


def write_pdf_csv(pdf: PhasePdf, dest):
    """Write ``symbol_index, bin_center_radians, density`` rows to a path or open stream."""

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["symbol_index", "bin_center_radians", "density"])
        for m in range(pdf.M):
            for c, d in zip(pdf.bin_centers, pdf.densities[m]):
                w.writerow([m + 1, f"{c:.6g}", f"{d:.6g}"])

    if hasattr(dest, "write"):
        emit(dest)
        return
    try:
        with open(dest, "w", newline="") as fh:
            emit(fh)
    except OSError as exc:
        raise OSError(f"cannot write phase density to {dest}: {exc}") from exc
