"""
Monte Carlo experiments: configuration, operating points, sweeps and CSV.

One operating point runs three independent trial streams with the same
master seed:

* ``train`` transmissions (user 1 sends ``c_1``) build the eavesdropper's
  phase densities;
* ``test`` transmissions give the transmit power, the infeasibility rate,
  the eavesdropper's detection probability and, with several noise draws
  per trial, the users' symbol error rates.

Channel and symbol draws do not depend on the scheme or on the sweep
parameters, so every scheme and every sweep point sees the same channels.
"""

import csv
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .eavesdropper import (
    DEFAULT_BINS, LinkParams, build_conditional_pdf, collect_phase_samples, detection_report,
    ml_detect, ser_from_trials, simulate_trials,
)
from .geometry import QosParams
from .precoders import PrecoderKind

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "scheme", "M", "N", "K", "rho", "gamma0_db", "gamma_e_db", "p0_db", "avg_power_db",
    "p_det_eve", "ser_user1", "ser_avg", "infeasible_rate", "trials", "seed",
)
INFEASIBLE_WARN = 0.01
DEFAULT_GAMMA_E_SWEEP = tuple(range(-30, 20, 5))


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _tuple(value, cast=float):
    if isinstance(value, str):
        items = [v for v in (p.strip() for p in value.split(",")) if v]
    elif np.ndim(value) == 0:
        items = [value]
    else:
        items = list(value)
    try:
        return tuple(cast(v) for v in items)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot parse {value!r}: {exc}") from None


@dataclass
class ExperimentConfig:
    """Parameters of an experiment.

    ``rho``, ``gamma_e_db`` and ``p0_db`` hold one or more values; sweeps
    iterate over them, single-point runs require exactly one.  ``p0_db`` is
    the power floor of the no-CSI scheme (ignored by the others).
    """

    N: int = 6
    K: int = 3
    M: int = 4
    rho: tuple = (0.3,)
    beta: float = 1.0
    beta_e: float = 1.0
    gamma0_db: float = 10.0
    gamma_e_db: tuple = (-30.0,)
    p0_db: tuple = (15.0,)
    schemes: tuple = ("icss",)
    train_trials: int = 100_000
    test_trials: int = 100_000
    ser_trials: int = 200_000
    bins: int = DEFAULT_BINS
    seed: int = 0
    threads: int = 1
    out: str = None
    dump_trials: str = None

    def __post_init__(self):
        self.rho = _tuple(self.rho)
        self.gamma_e_db = _tuple(self.gamma_e_db)
        self.p0_db = _tuple(self.p0_db)
        try:
            self.schemes = tuple(PrecoderKind.parse(s).value for s in _tuple(self.schemes, str))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.validate()

    def validate(self):
        try:
            for name in ("N", "K", "M", "train_trials", "test_trials", "ser_trials", "bins", "threads"):
                if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                    raise ConfigError(f"{name} must be a positive integer")
            if self.M < 2:
                raise ConfigError("M must be at least 2")
            for name in ("rho", "gamma_e_db", "p0_db", "schemes"):
                if not getattr(self, name):
                    raise ConfigError(f"{name} must not be empty")
            if any(not 0.0 <= r <= 1.0 for r in self.rho):
                raise ConfigError("rho values must lie in [0, 1]")
            if self.beta <= 0 or self.beta_e <= 0:
                raise ConfigError("large-scale gains must be positive")
            if self.bins % self.M:
                raise ConfigError(f"bins ({self.bins}) must be a multiple of M ({self.M})")
            if "zf" in self.schemes and self.N < self.K + 1:
                raise ConfigError("zf needs N >= K + 1")
            if "an_no_csi" in self.schemes and self.N <= self.K:
                raise ConfigError("an_no_csi needs N > K")
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def scalar(self, name):
        vals = getattr(self, name)
        if len(vals) != 1:
            raise ConfigError(f"{name} has {len(vals)} values; a single point needs one")
        return vals[0]

    def link(self, rho, gamma_e_db, p0_db):
        qos = QosParams(self.gamma0_db, gamma_e_db)
        return LinkParams(self.N, self.K, self.M, rho, self.beta, self.beta_e, qos, 10.0 ** (p0_db / 10.0))


# type coercion for key=value files and CLI flags
_FIELD_TYPES = {
    "N": int, "K": int, "M": int, "beta": float, "beta_e": float, "gamma0_db": float,
    "train_trials": int, "test_trials": int, "ser_trials": int, "bins": int, "seed": int,
    "threads": int, "out": str, "dump_trials": str,
    "rho": str, "gamma_e_db": str, "p0_db": str, "schemes": str,
}


def coerce_value(key, raw):
    kind = _FIELD_TYPES[key]
    if kind is int:
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
        if val != int(val):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
        return int(val)
    if kind is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return raw


def parse_config_text(text):
    """Parse ``key = value`` lines (``#`` comments, lists comma-separated)."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = coerce_value(key, raw)
    return values


def load_config(path=None, defaults=None, **overrides):
    """Build a config: ``defaults``, then the file at ``path``, then ``overrides``."""
    values = dict(defaults or {})
    if path is not None:
        try:
            with open(path) as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


@dataclass
class MetricsRecord:
    scheme: str
    M: int
    N: int
    K: int
    rho: float
    gamma0_db: float
    gamma_e_db: float
    p0_db: float
    avg_power_db: float
    p_det_eve: float
    ser_user1: float
    ser_avg: float
    infeasible_rate: float
    trials: int
    seed: int

    def __post_init__(self):
        self.scheme = PrecoderKind.parse(self.scheme).value
        for name in ("p_det_eve", "ser_user1", "ser_avg", "infeasible_rate"):
            v = getattr(self, name)
            if not (math.isnan(v) or 0.0 <= v <= 1.0):
                raise ValueError(f"{name} = {v} is outside [0, 1]")

    def row(self):
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            out.append(f"{v:.6g}" if isinstance(v, float) else str(v))
        return out


@dataclass
class PointResult:
    """A metrics record plus the artefacts behind it."""

    record: MetricsRecord
    pdf: object
    detection: object
    powers: np.ndarray = field(repr=False)
    status: np.ndarray = field(repr=False)


def run_point_detailed(config: ExperimentConfig, scheme=None, rho=None, gamma_e_db=None, p0_db=None):
    """Run one operating point; missing parameters come from ``config``."""
    kind = PrecoderKind.parse(scheme if scheme is not None else config.scalar("schemes"))
    rho = config.scalar("rho") if rho is None else float(rho)
    gamma_e_db = config.scalar("gamma_e_db") if gamma_e_db is None else float(gamma_e_db)
    p0_db = config.scalar("p0_db") if p0_db is None else float(p0_db)
    link = config.link(rho, gamma_e_db, p0_db)
    seed, threads = config.seed, config.threads

    train = collect_phase_samples(kind, link, config.train_trials, seed, "train", fix_first=True, threads=threads)
    draws = math.ceil(config.ser_trials / config.test_trials)
    test = simulate_trials(kind, link, config.test_trials, seed, "test", ser_draws=draws, threads=threads)
    ok = test.ok

    infeasible_rate = test.infeasible_count / config.test_trials
    if infeasible_rate > INFEASIBLE_WARN:
        msg = f"{kind.value}: {infeasible_rate:.2%} of trials could not be solved (excluded from averages)"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        log.warning(msg)

    pdf = report = None
    p_det = float("nan")
    if len(train) and ok.any():
        pdf = build_conditional_pdf(train, link.M, config.bins)
        report = detection_report(test.symbols[ok, 0], ml_detect(test.theta[ok], pdf), link.M,
                                  pdf.train_count, skipped=train.skipped + test.infeasible_count)
        p_det = report.p_correct
    power_db = 10.0 * math.log10(np.mean(test.power[ok])) if ok.any() else float("nan")
    ser = ser_from_trials(test)

    record = MetricsRecord(
        kind.value, config.M, config.N, config.K, rho, float(config.gamma0_db), gamma_e_db, p0_db,
        float(power_db), float(p_det), float(ser.per_user[0]), float(ser.average), float(infeasible_rate),
        int(config.test_trials), int(seed),
    )
    result = PointResult(record, pdf, report, test.power, test.status)
    if config.dump_trials:
        dump_trial_powers(result, config.dump_trials)
    return result


def run_point(config: ExperimentConfig, scheme=None, rho=None, gamma_e_db=None, p0_db=None) -> MetricsRecord:
    """Metrics for one scheme at one parameter point."""
    return run_point_detailed(config, scheme, rho, gamma_e_db, p0_db).record


def run_sweep_gamma_e(config: ExperimentConfig):
    """One record per scheme and eavesdropper SNR threshold."""
    rho, p0 = config.scalar("rho"), config.scalar("p0_db")
    return [run_point(config, s, rho, g, p0) for s in config.schemes for g in config.gamma_e_db]


def tradeoff_pairs(records):
    """``{scheme: [(avg_power_db, p_det_eve), ...]}`` in sweep order."""
    out = {}
    for r in records:
        out.setdefault(r.scheme, []).append((r.avg_power_db, r.p_det_eve))
    return out


def run_sweep_rho(config: ExperimentConfig):
    """Records over the grid ``rho x p0_db`` (outer loop over ``p0_db``)."""
    g = config.scalar("gamma_e_db")
    return [run_point(config, s, r, g, p) for s in config.schemes for p in config.p0_db for r in config.rho]


def run_table1(config: ExperimentConfig, loads=((6, 3), (4, 3))):
    """ICSS at the strictest secrecy setting against zero-forcing, for each ``(N, K)``."""
    records = []
    for N, K in loads:
        cfg = replace(config, N=N, K=K, schemes=("icss", "zf"))
        records += [run_point(cfg, s, config.scalar("rho"), config.scalar("gamma_e_db"), config.p0_db[0])
                    for s in ("icss", "zf")]
    return records


def emit_csv(records, path):
    """Write metrics rows in input order, 6 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in records:
                w.writerow(r.row())
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc}") from exc


def read_csv(path):
    """Parse a metrics CSV written by :func:`emit_csv`."""
    types = {f.name: f.type for f in fields(MetricsRecord)}
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            vals = {}
            for k, v in row.items():
                t = types[k]
                vals[k] = v if t in (str, "str") else (int(v) if t in (int, "int") else float(v))
            out.append(MetricsRecord(**vals))
    return out


def dump_trial_powers(result: PointResult, path):
    """Per-trial transmit power of a point (NaN for unsolved trials)."""
    rec = result.record
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fh.tell() == 0:
            w.writerow(["scheme", "rho", "gamma_e_db", "p0_db", "trial", "status", "power"])
        for i, (p, s) in enumerate(zip(result.powers, result.status)):
            w.writerow([rec.scheme, f"{rec.rho:.6g}", f"{rec.gamma_e_db:.6g}", f"{rec.p0_db:.6g}", i, int(s), f"{p:.6g}"])


def config_dict(config: ExperimentConfig):
    return asdict(config)
