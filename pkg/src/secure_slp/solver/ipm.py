"""
Dense log-barrier interior-point method for small minimum-norm programs.

Solves ``min ||x||^2`` subject to linear inequalities, linear equalities and
at most one cone constraint ``||C x|| <= r``, the latter entering the barrier
as ``-log(r^2 - ||C x||^2)``.  Everything is vectorised over a leading batch
axis: each instance keeps its own barrier weight, Newton iterate and step
length, so an instance's trajectory does not depend on its batch-mates.

A strictly feasible start comes from a phase-1 problem (minimise the common
slack ``s`` of the relaxed constraints); a positive lower bound on the optimal
slack certifies infeasibility.
"""

import numpy as np
from scipy.optimize import nnls

from .program import FEAS_TOL, KKT_TOL, BatchResult, MinNormProgram, SolverResult, Status

MU = 10.0
MAX_OUTER = 200
MAX_NEWTON = 60
NEWTON_TOL = 1e-10
ALPHA = 0.01
BETA = 0.5
SLACK_FLOOR = 1.0
ACTIVE_SLACK = 1e-6  # relative slack below which a row counts as active in the certificate
PHASE1_WEIGHTS = (1e2, 1e5, 1e8, 1e11)


def _mv(A, x):
    return np.matmul(A, x[..., None])[..., 0]


class _Barrier:
    """Barrier pieces for ``t (y' D y + c' y) + phi(y)`` on a batch.

    Linear rows ``G y <= h``; optional quadratic ``y' P y + p' y + c0 <= 0``.
    """

    def __init__(self, G, h, P, p, c0, D, c):
        self.G, self.h = G, h
        self.P, self.p, self.c0 = P, p, c0
        self.D, self.c = D, c

    def take(self, idx):
        sub = lambda a: None if a is None else a[idx]
        return _Barrier(self.G[idx], self.h[idx], sub(self.P), sub(self.p), sub(self.c0), self.D, self.c)

    def objective(self, y):
        return np.sum(self.D * y * y, axis=-1) + y @ self.c

    def slacks(self, y):
        u = self.h - _mv(self.G, y)
        if self.P is None:
            return u, None
        q = np.einsum("bi,bi->b", y, _mv(self.P, y)) + np.einsum("bi,bi->b", self.p, y) + self.c0
        return u, -q

    def feasible(self, y):
        u, w = self.slacks(y)
        ok = np.all(u > 0, axis=-1)
        if w is not None:
            ok &= w > 0
        return ok

    def max_step(self, y, dy):
        """Largest step keeping every slack positive (inf when unbounded)."""
        u, w = self.slacks(y)
        gd = _mv(self.G, dy)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(gd > 0, u / gd, np.inf)
        smax = ratio.min(axis=-1) if ratio.shape[-1] else np.full(len(y), np.inf)
        if w is not None:
            # w(y + a dy) = w - a (2 y'P dy + p'dy) - a^2 dy'P dy
            Pd = _mv(self.P, dy)
            qa = np.einsum("bi,bi->b", dy, Pd)
            qb = 2.0 * np.einsum("bi,bi->b", y, Pd) + np.einsum("bi,bi->b", self.p, dy)
            with np.errstate(divide="ignore", invalid="ignore"):
                disc = np.sqrt(qb * qb + 4.0 * qa * w)
                root = np.where(qa > 0, 2.0 * w / (qb + disc), np.where(qb > 0, w / qb, np.inf))
            smax = np.minimum(smax, root)
        return smax

    def value(self, y, t):
        u, w = self.slacks(y)
        with np.errstate(invalid="ignore", divide="ignore"):
            val = t * self.objective(y) - np.sum(np.log(u), axis=-1)
            if w is not None:
                val = val - np.log(w)
        return val

    def derivatives(self, y, t):
        u, w = self.slacks(y)
        inv = 1.0 / u
        Gt = np.swapaxes(self.G, -1, -2)
        grad = t[:, None] * (2.0 * self.D * y + self.c) + _mv(Gt, inv)
        Gs = self.G * inv[..., None]
        hess = np.matmul(np.swapaxes(Gs, -1, -2), Gs)
        hess += 2.0 * t[:, None, None] * np.diag(self.D)
        if w is not None:
            v = 2.0 * _mv(self.P, y) + self.p
            grad += v / w[:, None]
            hess += 2.0 * self.P / w[:, None, None] + (v[:, :, None] * v[:, None, :]) / (w * w)[:, None, None]
        return grad, hess


def _newton_direction(grad, hess, E, res_eq, ridge):
    b, n = grad.shape
    if ridge:
        hess = hess + ridge * (1.0 + np.abs(np.diagonal(hess, axis1=1, axis2=2)).mean(axis=1))[:, None, None] * np.eye(n)
    p = E.shape[1]
    if p == 0:
        try:
            return np.linalg.solve(hess, -grad[..., None])[..., 0]
        except np.linalg.LinAlgError:
            return np.einsum("bij,bj->bi", np.linalg.pinv(hess), -grad)
    K = np.zeros((b, n + p, n + p))
    K[:, :n, :n] = hess
    K[:, :n, n:] = np.transpose(E, (0, 2, 1))
    K[:, n:, :n] = E
    rhs = np.concatenate([-grad, res_eq], axis=1)
    try:
        sol = np.linalg.solve(K, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        sol = np.einsum("bij,bj->bi", np.linalg.pinv(K), rhs)
    return sol[:, :n]


def _center(bar, E, f, y, t, active, ridge):
    """Newton centering for the instances flagged ``active``; returns steps taken."""
    steps = np.zeros(len(y), dtype=int)
    todo = active.copy()
    for _ in range(MAX_NEWTON):
        idx = np.flatnonzero(todo)
        if idx.size == 0:
            break
        sub = bar.take(idx)
        yi, ti = y[idx], t[idx]
        grad, hess = sub.derivatives(yi, ti)
        res_eq = f[idx] - _mv(E[idx], yi) if E.shape[1] else np.zeros((idx.size, 0))
        dy = _newton_direction(grad, hess, E[idx], res_eq, ridge)
        dec = -np.einsum("bi,bi->b", grad, dy)
        done = dec / 2.0 <= NEWTON_TOL
        # Self-concordance: a full step is feasible and near-optimal once the
        # decrement is small, where roundoff makes Armijo tests unreliable.
        full = np.sqrt(np.maximum(dec, 0.0)) < 0.25
        # start inside the domain, then backtrack on the instances still failing Armijo
        step = np.minimum(1.0, 0.99 * sub.max_step(yi, dy))
        F0 = sub.value(yi, ti)
        pending = ~done & ~full
        for _ in range(60):
            p = np.flatnonzero(pending)
            if p.size == 0:
                break
            yn = yi[p] + step[p, None] * dy[p]
            with np.errstate(invalid="ignore"):
                Fn = sub.take(p).value(yn, ti[p])
            ok = Fn <= F0[p] - ALPHA * step[p] * dec[p]
            step[p[~ok]] *= BETA
            pending[p[ok]] = False
        stalled = pending | (step < 1e-14)
        move = ~done & ~stalled
        y[idx[move]] = yi[move] + step[move, None] * dy[move]
        steps[idx[move]] += 1
        todo[idx[done | stalled]] = False
    return steps


def _run_barrier(bar, E, f, y, t0, n_barrier, stop, max_outer=MAX_OUTER, ridge=0.0):
    """Outer barrier loop; ``stop(y, t, active)`` returns (finished, status) arrays."""
    b = len(y)
    t = np.array(np.broadcast_to(np.asarray(t0, dtype=float), (b,)))
    status = np.full(b, int(Status.MAX_ITERATIONS))
    active = np.ones(b, dtype=bool)
    newton = np.zeros(b, dtype=int)
    for _ in range(max_outer):
        if not active.any():
            break
        newton += _center(bar, E, f, y, t, active, ridge)
        finished, st = stop(y, t, active)
        finished &= active
        status[finished] = st[finished]
        active &= ~finished
        t = np.where(active, t * MU, t)
    return y, t, status, newton


def _split(program):
    """Batched raw arrays from a (possibly single) program."""
    single = program.G.ndim == 2
    G = program.G[None] if single else program.G
    h = program.h[None] if single else program.h
    E = program.E[None] if single else program.E
    f = program.f[None] if single else program.f
    C = r = None
    if program.C is not None:
        C = program.C[None] if single else program.C
        r = np.atleast_1d(program.r).astype(float)
    return single, G, h, E, f, C, r


def _min_norm_equality(E, f):
    if E.shape[1] == 0:
        return np.zeros((E.shape[0], E.shape[2]))
    return np.einsum("bij,bj->bi", np.linalg.pinv(E), f)


def _constraint_values(G, h, C, r, x):
    vals = _mv(G, x) - h
    if C is not None:
        cx = _mv(C, x)
        vals = np.concatenate([vals, (np.sum(cx * cx, axis=-1) - r * r)[:, None]], axis=1)
    return vals


def find_interior_point(G, h, E, f, C=None, r=None):
    """Phase 1: strictly feasible ``x`` for every feasible instance.

    Minimises ``||x||^2 + w s`` over the constraints relaxed by the common
    slack ``s >= -1``.  The norm term keeps the iterates bounded and well
    centred; ``w`` grows until the slack turns negative.  Instances whose
    slack stays above ``FEAS_TOL`` at the largest weight are reported
    INFEASIBLE.

    Returns ``(x, status, iterations)``.
    """
    b, m, n = G.shape
    x0 = _min_norm_equality(E, f)
    vals = _constraint_values(G, h, C, r, x0)
    viol = vals.max(axis=1) if vals.shape[1] else np.full(b, -np.inf)
    status = np.full(b, int(Status.OPTIMAL))
    iters = np.zeros(b, dtype=int)
    if m == 0 and C is None:
        bad = np.any(np.abs(_mv(E, x0) - f) > FEAS_TOL, axis=1) if E.shape[1] else np.zeros(b, bool)
        status[bad] = Status.INFEASIBLE
        return x0, status, iters
    x = x0.copy()
    pending = np.flatnonzero(viol >= 0)
    s_start = viol + 1.0
    n_barrier = m + 1 + (C is not None)
    for weight in PHASE1_WEIGHTS:
        if pending.size == 0:
            break
        idx = pending
        k = idx.size
        G1 = np.zeros((k, m + 1, n + 1))
        G1[:, :m, :n] = G[idx]
        G1[:, :m, n] = -1.0
        G1[:, m, n] = -1.0
        h1 = np.concatenate([h[idx], np.full((k, 1), SLACK_FLOOR)], axis=1)
        P1 = p1 = c01 = None
        Ci = ri = None
        if C is not None:
            Ci, ri = C[idx], r[idx]
            P1 = np.zeros((k, n + 1, n + 1))
            P1[:, :n, :n] = np.einsum("bki,bkj->bij", Ci, Ci)
            p1 = np.zeros((k, n + 1))
            p1[:, n] = -1.0
            c01 = -(ri ** 2)
        E1 = np.concatenate([E[idx], np.zeros((k, E.shape[1], 1))], axis=2)
        D = np.ones(n + 1)
        D[n] = 0.0
        c = np.zeros(n + 1)
        c[n] = weight
        bar = _Barrier(G1, h1, P1, p1, c01, D, c)
        y = np.concatenate([x[idx], s_start[idx, None]], axis=1)

        def stop(y, t, active, G=G[idx], h=h[idx], Ci=Ci, ri=ri, bar=bar):
            feasible_now = _constraint_values(G, h, Ci, ri, y[:, :n]).max(axis=1) < 0
            converged = n_barrier / t <= 1e-10 * (1.0 + np.abs(bar.objective(y)))
            st = np.where(feasible_now, int(Status.OPTIMAL), int(Status.INFEASIBLE))
            return feasible_now | converged, st

        # t * weight starts at one so the initial barrier gap is O(m)
        y, _, st, newton = _run_barrier(bar, E1, f[idx], y, 1.0 / weight, n_barrier, stop)
        x[idx] = y[:, :n]
        s_start[idx] = np.maximum(y[:, n], -0.5) + 1.0
        iters[idx] += newton
        status[idx] = st
        pending = idx[st != Status.OPTIMAL]
    return x, status, iters


def solve_min_norm_batch(program: MinNormProgram, tol=1e-8, x0=None) -> BatchResult:
    """Solve a batch of minimum-norm programs; see :func:`solve_min_norm`."""
    single, G, h, E, f, C, r = _split(program)
    b, m, n = G.shape
    n_barrier = m + (C is not None)

    if n_barrier == 0:
        x = _min_norm_equality(E, f)
        ok = np.all(np.abs(_mv(E, x) - f) <= FEAS_TOL, axis=1) if E.shape[1] else np.ones(b, bool)
        status = np.where(ok, int(Status.OPTIMAL), int(Status.INFEASIBLE))
        return BatchResult(x, np.sum(x * x, axis=1), status, np.zeros(b), np.zeros(b, dtype=int))

    if x0 is not None:
        x_start = np.array(np.atleast_2d(x0), dtype=float)
        vals = _constraint_values(G, h, C, r, x_start)
        strict = vals.max(axis=1) < 0
        if E.shape[1]:
            strict &= np.all(np.abs(_mv(E, x_start) - f) <= FEAS_TOL, axis=1)
        p1_status = np.full(b, int(Status.OPTIMAL))
        p1_iters = np.zeros(b, dtype=int)
        if not strict.all():
            bad = np.flatnonzero(~strict)
            xs, st, it = find_interior_point(
                G[bad], h[bad], E[bad], f[bad],
                None if C is None else C[bad], None if r is None else r[bad])
            x_start[bad], p1_status[bad], p1_iters[bad] = xs, st, it
    else:
        x_start, p1_status, p1_iters = find_interior_point(G, h, E, f, C, r)

    x = x_start.copy()
    status = p1_status.copy()
    t_final = np.ones(b)
    iters = p1_iters.copy()
    go = np.flatnonzero(p1_status == Status.OPTIMAL)
    if go.size:
        P = p = c0 = None
        if C is not None:
            P = np.einsum("bki,bkj->bij", C[go], C[go])
            p = np.zeros((go.size, n))
            c0 = -(r[go] ** 2)
        bar = _Barrier(G[go], h[go], P, p, c0, np.ones(n), np.zeros(n))

        def stop(y, t, active):
            gap = n_barrier / t
            fin = gap <= tol * (1.0 + np.sum(y * y, axis=1))
            return fin, np.full(len(y), int(Status.OPTIMAL))

        # balance the barrier against the objective at the start point; a fixed
        # t0 = 1 leaves badly scaled instances (||x||^2 ~ 1e6) far off the central path
        t0 = n_barrier / (1.0 + np.sum(x[go] ** 2, axis=1))
        y, t_go, st, newton = _run_barrier(bar, E[go], f[go], x[go].copy(), t0, n_barrier, stop)
        x[go], status[go], t_final[go] = y, st, t_go
        iters[go] += newton

    kkt = _kkt_residual(G, h, E, C, r, x, t_final, n_barrier)
    # an instance is only reported optimal with a KKT certificate
    status[(status == Status.OPTIMAL) & (kkt > KKT_TOL)] = Status.MAX_ITERATIONS
    kkt[status != Status.OPTIMAL] = np.inf
    return BatchResult(x, np.sum(x * x, axis=1), status, kkt, iters)


def _kkt_residual(G, h, E, C, r, x, t, n_barrier):
    """A posteriori KKT residual at ``x``.

    Barrier multipliers ``1 / (t u)`` are inaccurate once the slacks of
    active rows shrink to roundoff, so they only pick the active set; the
    multipliers themselves are refitted by least squares on stationarity
    ``2 x + G' lam + E' nu + lam_c grad_cone = 0``.  The residual is the
    worst of stationarity, primal violation, complementarity and negative
    multipliers.  Several active sets are tried (large barrier multiplier,
    small slack, every row) and the best certificate is kept; each is valid
    since complementarity is part of the residual.
    """
    b, m, n = G.shape
    u = h - _mv(G, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_bar = 1.0 / (t[:, None] * u)
    lam_max = np.nanmax(np.abs(lam_bar), axis=1, keepdims=True, initial=0.0)
    cols = [np.swapaxes(G, 1, 2)]
    viol = np.max(-u, axis=1, initial=0.0)
    by_mult = [lam_bar > 1e-9 * (1.0 + lam_max)]
    by_slack = [u <= ACTIVE_SLACK * (1.0 + np.abs(h))]
    slack = [u]
    if C is not None:
        cx = _mv(C, x)
        w = r * r - np.sum(cx * cx, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam_c = 1.0 / (t * w)
        cols.append(2.0 * np.einsum("bki,bk->bi", C, cx)[:, :, None])
        by_mult.append((lam_c > 1e-9 * (1.0 + lam_max[:, 0]))[:, None])
        by_slack.append((w <= ACTIVE_SLACK * (1.0 + r * r))[:, None])
        slack.append(w[:, None])
        viol = np.maximum(viol, -w)
    full = np.concatenate(cols, axis=2)
    slack = np.concatenate(slack, axis=1)
    n_eq = E.shape[1]
    res = np.full(b, np.inf)
    every = [np.ones_like(full[:, 0, :], dtype=bool)]
    for active in (by_mult, by_slack, every):
        A = full * np.concatenate(active, axis=1)[:, None, :]
        if n_eq:
            A = np.concatenate([A, np.swapaxes(E, 1, 2)], axis=2)
        coef = _mv(np.linalg.pinv(A), -2.0 * x)
        cur = _kkt_measure(A, coef, x, slack, n_eq, viol)
        # opposing near-active rows make the plain fit split a multiplier into a
        # +/- pair; refit those instances with sign constraints
        for i in np.flatnonzero(~(cur <= KKT_TOL)):
            coef_i = _nnls_multipliers(A[i], -2.0 * x[i], n_eq)
            cur[i] = min(cur[i], _kkt_measure(A[i:i + 1], coef_i[None], x[i:i + 1], slack[i:i + 1], n_eq,
                                              viol[i:i + 1])[0])
        res = np.minimum(res, cur)
        if np.all(res <= KKT_TOL):
            break
    return res


def _kkt_measure(A, coef, x, slack, n_eq, viol):
    # stationarity and signs are relative to the objective gradient, complementarity
    # (a share of the duality gap) to the objective, so badly conditioned instances
    # with large ||x|| are judged on the same footing
    scale = np.maximum(1.0, 2.0 * np.max(np.abs(x), axis=1))
    stat = 2.0 * x + _mv(A, coef)
    lam = coef[:, : coef.shape[1] - n_eq]
    comp = np.max(np.abs(lam * slack), axis=1, initial=0.0) / (1.0 + np.sum(x * x, axis=1))
    neg = np.max(-lam, axis=1, initial=0.0)
    res = np.maximum.reduce([np.max(np.abs(stat), axis=1) / scale, viol, comp, neg / scale])
    return np.nan_to_num(res, nan=np.inf)


def _nnls_multipliers(A, rhs, n_eq):
    """Least-squares multipliers with ``lam >= 0`` and free equality multipliers."""
    n_in = A.shape[1] - n_eq
    split = np.concatenate([A, -A[:, n_in:]], axis=1)
    sol, _ = nnls(split, rhs, maxiter=50 * split.shape[1])
    return np.concatenate([sol[:n_in], sol[n_in:n_in + n_eq] - sol[n_in + n_eq:]])


def solve_min_norm(program: MinNormProgram, tol=1e-8, x0=None) -> SolverResult:
    """Minimum-norm point of a convex program with at most one cone block.

    Parameters
    ----------
    program : MinNormProgram
        Single (unbatched) instance.
    tol : float
        Target on the barrier duality measure, relative to ``1 + ||x||^2``.
    x0 : array, optional
        Warm start.  Used directly when strictly feasible, otherwise a
        phase-1 search starts from the equality least-norm point.

    Returns
    -------
    SolverResult
        ``status`` is INFEASIBLE when phase 1 certifies that the optimal
        common slack exceeds the feasibility tolerance.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if program.G.ndim != 2:
        raise ValueError("solve_min_norm takes a single program; use solve_min_norm_batch")
    return solve_min_norm_batch(program, tol, None if x0 is None else np.asarray(x0)[None])[0]
