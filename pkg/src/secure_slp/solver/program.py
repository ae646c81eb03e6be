"""Problem and result containers shared by the solvers."""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

FEAS_TOL = 1e-7
KKT_TOL = 1e-6


class Status(IntEnum):
    OPTIMAL = 0
    INFEASIBLE = 1
    MAX_ITERATIONS = 2


def _as_rows(rows, dim, lead):
    if rows is None:
        return np.zeros(lead + (0, dim))
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    return rows


def _as_vec(vals, n_rows, lead):
    if vals is None:
        return np.zeros(lead + (n_rows,))
    vals = np.asarray(vals, dtype=float)
    if vals.ndim == 0:
        vals = np.full(lead + (n_rows,), float(vals))
    return vals


@dataclass
class MinNormProgram:
    """``min ||x||^2`` subject to ``G x <= h``, ``E x = f`` and ``||C x|| <= r``.

    The cone block is optional (``C=None``).  All arrays may share one
    leading batch axis, in which case the program describes a stack of
    independent instances with identical structure; see
    :func:`stack_programs`.
    """

    dim: int
    G: np.ndarray = None
    h: np.ndarray = None
    E: np.ndarray = None
    f: np.ndarray = None
    C: np.ndarray = None
    r: np.ndarray = None

    def __post_init__(self):
        lead = ()
        for arr, base in ((self.G, 2), (self.E, 2), (self.C, 2)):
            if arr is not None and np.ndim(arr) > base:
                lead = np.shape(arr)[:-base]
                break
        self.G = _as_rows(self.G, self.dim, lead)
        self.h = _as_vec(self.h, self.G.shape[-2], lead)
        self.E = _as_rows(self.E, self.dim, lead)
        self.f = _as_vec(self.f, self.E.shape[-2], lead)
        if self.C is not None:
            self.C = np.asarray(self.C, dtype=float)
            if self.C.shape[-1] != self.dim:
                raise ValueError("cone matrix has wrong column count")
            self.r = np.asarray(self.r, dtype=float)
            if np.any(self.r < 0):
                raise ValueError("cone radius must be non-negative")
        for name in ("G", "h", "E", "f"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite entries in {name}")
        if self.G.shape[-1] != self.dim or self.E.shape[-1] != self.dim:
            raise ValueError("constraint rows must have length dim")

    @property
    def batch_shape(self):
        return self.G.shape[:-2]

    @property
    def n_ineq(self):
        return self.G.shape[-2]

    @property
    def has_cone(self):
        return self.C is not None

    def with_rows(self, G_extra, h_extra):
        """Copy with extra inequality rows appended (batched if self is)."""
        G_extra = np.asarray(G_extra, dtype=float)
        h_extra = np.asarray(h_extra, dtype=float)
        if G_extra.ndim == self.G.ndim - 1:
            G_extra = G_extra[..., None, :]
            h_extra = h_extra[..., None]
        return MinNormProgram(
            self.dim,
            np.concatenate([self.G, G_extra], axis=-2),
            np.concatenate([self.h, h_extra], axis=-1),
            self.E, self.f, self.C, self.r,
        )

    def instance(self, i):
        """Single instance ``i`` of a batched program."""
        C = None if self.C is None else self.C[i]
        r = None if self.C is None else self.r[i]
        return MinNormProgram(self.dim, self.G[i], self.h[i], self.E[i], self.f[i], C, r)

    def violation(self, x):
        """Largest constraint violation at ``x`` (zero when feasible)."""
        x = np.asarray(x, dtype=float)
        viol = np.zeros(x.shape[:-1])
        if self.n_ineq:
            viol = np.maximum(viol, np.max(np.einsum("...ij,...j->...i", self.G, x) - self.h, axis=-1))
        if self.E.shape[-2]:
            viol = np.maximum(viol, np.max(np.abs(np.einsum("...ij,...j->...i", self.E, x) - self.f), axis=-1))
        if self.C is not None:
            cx = np.linalg.norm(np.einsum("...ij,...j->...i", self.C, x), axis=-1)
            viol = np.maximum(viol, cx - self.r)
        return viol


def stack_programs(programs):
    """Stack structurally identical single programs into one batched program."""
    first = programs[0]
    has_cone = first.C is not None
    return MinNormProgram(
        first.dim,
        np.stack([p.G for p in programs]),
        np.stack([p.h for p in programs]),
        np.stack([p.E for p in programs]),
        np.stack([p.f for p in programs]),
        np.stack([p.C for p in programs]) if has_cone else None,
        np.stack([p.r for p in programs]) if has_cone else None,
    )


@dataclass
class SolverResult:
    x: np.ndarray
    objective: float
    status: Status
    kkt_residual: float = 0.0
    iterations: int = 0
    history: list = field(default_factory=list)
    multipliers: np.ndarray = None

    @property
    def ok(self):
        return self.status == Status.OPTIMAL


@dataclass
class BatchResult:
    """Per-instance arrays returned by the batched solvers."""

    x: np.ndarray
    objective: np.ndarray
    status: np.ndarray
    kkt_residual: np.ndarray
    iterations: np.ndarray
    multipliers: np.ndarray = None

    def __len__(self):
        return len(self.objective)

    def __getitem__(self, i):
        return SolverResult(
            self.x[i], float(self.objective[i]), Status(int(self.status[i])),
            float(self.kkt_residual[i]), int(self.iterations[i]),
            multipliers=None if self.multipliers is None else self.multipliers[i],
        )

    @property
    def ok(self):
        return self.status == Status.OPTIMAL
