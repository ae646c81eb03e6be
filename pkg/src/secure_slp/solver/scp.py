"""
Sequential convex programming for ``min ||x||^2`` over a convex base set
intersected with the non-convex floor ``||x||^2 >= P0``.

Each iteration replaces the floor by its tangent half-space at the current
point, ``||x_n||^2 + 2 x_n' (x - x_n) >= P0``.  Convexity of ``||.||^2``
makes that half-space an inner approximation, so every iterate satisfies the
original floor and the current point stays feasible for the next inner
problem; the objective therefore never increases.
"""

import logging

import numpy as np

from .ipm import find_interior_point, solve_min_norm_batch
from .program import BatchResult, MinNormProgram, SolverResult, Status

log = logging.getLogger(__name__)

SCP_EPS = 1e-6
SCP_MAX_ITER = 100
FLOOR_MARGIN = 1e-6


class InitializationError(RuntimeError):
    pass


def _floor_row(x, P0):
    # -2 x_n' x <= -(P0 + ||x_n||^2)
    return -2.0 * x, -(P0 + np.sum(x * x, axis=-1))


def _batched(program):
    if program.G.ndim == 3:
        return program
    return MinNormProgram(
        program.dim, program.G[None], program.h[None], program.E[None], program.f[None],
        None if program.C is None else program.C[None],
        None if program.C is None else np.atleast_1d(program.r),
    )


def scp_minimize_with_norm_floor_batch(base, P0, x0, eps=SCP_EPS, max_iter=SCP_MAX_ITER, tol=1e-9):
    """Batched SCP; returns ``(BatchResult, objective history)``.

    ``history`` is a list of per-instance lists of objective values, one
    entry per accepted iterate (starting with ``||x0||^2``).
    """
    base = _batched(base)
    x = np.array(np.atleast_2d(x0), dtype=float)
    B = len(x)
    P0 = np.broadcast_to(np.asarray(P0, dtype=float), (B,))
    obj = np.sum(x * x, axis=1)
    history = [[float(v)] for v in obj]
    status = np.full(B, int(Status.MAX_ITERATIONS))
    iters = np.zeros(B, dtype=int)
    kkt = np.zeros(B)
    active = np.ones(B, dtype=bool)

    if np.any(obj < P0 * (1 - 1e-12) - 1e-12) or np.any(base.violation(x) > 1e-6):
        raise ValueError("SCP start point must satisfy the base constraints and the power floor")

    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        sub = MinNormProgram(
            base.dim, base.G[idx], base.h[idx], base.E[idx], base.f[idx],
            None if base.C is None else base.C[idx], None if base.C is None else base.r[idx],
        )
        row, off = _floor_row(x[idx], P0[idx])
        res = solve_min_norm_batch(sub.with_rows(row, off), tol=tol, x0=x[idx])
        failed = res.status != Status.OPTIMAL
        if failed.any():
            log.warning("SCP inner problem failed for %d instance(s)", int(failed.sum()))
            status[idx[failed]] = Status.INFEASIBLE
            active[idx[failed]] = False
        ok = np.flatnonzero(~failed)
        for j in ok:
            i = idx[j]
            new_obj = res.objective[j]
            iters[i] += 1
            if new_obj <= obj[i]:
                decrease = obj[i] - new_obj
                x[i], obj[i], kkt[i] = res.x[j], new_obj, res.kkt_residual[j]
                history[i].append(float(new_obj))
            else:
                # inner solve landed above the incumbent within solver tolerance
                decrease = 0.0
            if decrease <= eps:
                status[i] = Status.OPTIMAL
                active[i] = False
    return BatchResult(x, obj, status, kkt, iters), history


def scp_minimize_with_norm_floor(base: MinNormProgram, P0, x0, eps=SCP_EPS, max_iter=SCP_MAX_ITER, tol=1e-9):
    """Local minimum of ``||x||^2`` over ``base`` with ``||x||^2 >= P0``.

    Parameters
    ----------
    base : MinNormProgram
        Convex constraints without the floor (single instance).
    P0 : float
        Power floor.
    x0 : ndarray
        Start point, feasible for ``base`` with ``||x0||^2 >= P0``; see
        :func:`feasible_init_norm_floor`.
    eps : float
        Stop once an iteration lowers the objective by at most ``eps``.

    Returns
    -------
    SolverResult
        ``history`` lists the objective of every accepted iterate.  An
        iterate is only accepted when it does not raise the objective.
    """
    res, hist = scp_minimize_with_norm_floor_batch(base, P0, np.asarray(x0)[None], eps, max_iter, tol)
    out = res[0]
    out.history = hist[0]
    return out


def _null_space(rows, tol=1e-10):
    _, sv, vt = np.linalg.svd(rows, full_matrices=True)
    rank = int(np.sum(sv > tol * max(1.0, sv.max(initial=0.0))))
    return vt[rank:]


def feasible_init_norm_floor_batch(base, P0, base_solution=None):
    """Batched start points for SCP; see :func:`feasible_init_norm_floor`."""
    base = _batched(base)
    B = base.G.shape[0]
    P0 = np.broadcast_to(np.asarray(P0, dtype=float), (B,))
    if base_solution is None:
        base_solution = solve_min_norm_batch(base)
    if np.any(base_solution.status != Status.OPTIMAL):
        raise InitializationError("base program is not solvable for every instance")
    x = base_solution.x.copy()
    short = np.flatnonzero(np.sum(x * x, axis=1) < P0)
    fallback = []
    for i in short:
        rows = [base.G[i], base.E[i]]
        if base.C is not None:
            rows.append(base.C[i])
        null = _null_space(np.concatenate(rows, axis=0))
        if len(null) == 0:
            fallback.append(i)
            continue
        v = null[0]
        if x[i] @ v < 0:
            v = -v
        need = P0[i] - x[i] @ x[i]
        # x_base is orthogonal to the null space at the optimum; keep a margin anyway
        alpha = np.sqrt(need + FLOOR_MARGIN * (1.0 + P0[i]))
        x[i] = x[i] + alpha * v
    for i in fallback:
        x[i] = _violation_search(base, i, P0[i], x[i])
    return x


def _violation_search(base, i, P0, x_start, max_rounds=50):
    """Minimise the violation with the floor linearised at successive points."""
    G, h, E, f = base.G[i:i + 1], base.h[i:i + 1], base.E[i:i + 1], base.f[i:i + 1]
    C = None if base.C is None else base.C[i:i + 1]
    r = None if base.C is None else base.r[i:i + 1]
    x = x_start.copy()
    if x @ x < 1e-12:
        x = np.zeros_like(x)
        x[0] = np.sqrt(P0)
    for _ in range(max_rounds):
        row, off = _floor_row(x, P0 * (1.0 + FLOOR_MARGIN))
        Gi = np.concatenate([G, row[None, None, :]], axis=1)
        hi = np.concatenate([h, np.atleast_1d(off)[None, :]], axis=1)
        cand, st, _ = find_interior_point(Gi, hi, E, f, C, r)
        x = cand[0]
        if st[0] == Status.OPTIMAL and x @ x >= P0:
            return x
    raise InitializationError("could not find a point meeting the power floor")


def feasible_init_norm_floor(base: MinNormProgram, P0):
    """Point satisfying ``base`` with ``||x||^2 >= P0``.

    The base optimum is pushed along a direction in the null space of every
    constraint row, which leaves all base constraints untouched while the
    norm grows.  Without such a direction the violation of the linearised
    floor is minimised at successive points instead.
    """
    return feasible_init_norm_floor_batch(base, P0)[0]
