"""
Projected gradient ascent on the Lagrange dual of ``min ||x||^2 s.t. Q x <= b``.

The dual function is ``g(lam) = -lam' Q Q' lam / 4 - lam' b`` with gradient
``-Q Q' lam / 2 - b``; iterates are projected onto ``lam >= 0`` and the step
comes from an Armijo backtracking search started at ``t = 1`` on every
iteration.  The primal point is recovered as ``x = -Q' lam / 2``.
"""

import numpy as np

from .program import BatchResult, SolverResult, Status

DUAL_EPS = 1e-8
MAX_ITER = 5000
DIVERGENCE_BOUND = 1e8
MIN_STEP = 1e-16
KKT_STOP = 1e-7


def dual_value(QQt, b, lam):
    """``g(lam)``; ``QQt`` and ``lam`` may carry a leading batch axis."""
    return -0.25 * np.einsum("...i,...ij,...j->...", lam, QQt, lam) - np.einsum("...i,...i->...", lam, b)


def dual_gradient(QQt, b, lam):
    return -0.5 * np.einsum("...ij,...j->...i", QQt, lam) - b


def _gain(QQt, grad, d):
    # g(lam + d) - g(lam) for the quadratic dual, free of cancellation
    return np.einsum("...i,...i->...", grad, d) - 0.25 * np.einsum("...i,...ij,...j->...", d, QQt, d)


def _farkas(Q, b, lam, floor=1e3):
    """Infeasibility certificate from a growing multiplier.

    A direction ``d >= 0`` with ``Q' d = 0`` and ``b' d < 0`` proves that
    ``Q x <= b`` has no solution; the dual iterate drifts along such a ``d``.
    Checked once ``||lam||`` passes ``floor``.
    """
    norm = np.linalg.norm(lam, axis=1)
    big = norm > floor
    if not big.any():
        return big
    d = lam[big] / norm[big, None]
    scale = 1.0 + np.linalg.norm(Q[big], axis=(1, 2))
    out = big.copy()
    out[big] = (np.linalg.norm(np.einsum("bij,bi->bj", Q[big], d), axis=1) <= 1e-8 * scale) & \
               (np.einsum("bi,bi->b", b[big], d) < -1e-10 * (1.0 + np.linalg.norm(b[big], axis=1)))
    return out


def backtracking_line_search(g, grad, lam, t=1.0, delta=0.1, mu=0.5, min_step=MIN_STEP):
    """Armijo step for projected gradient ascent.

    Parameters
    ----------
    g : callable
        Concave objective, ``g(lam) -> float``.
    grad : ndarray
        Gradient of ``g`` at ``lam``.
    lam : ndarray
        Current nonnegative iterate.
    t, delta, mu : float
        Initial step, sufficient-increase fraction and shrink factor.

    Returns
    -------
    step : float
        Largest ``t * mu**k`` for which the projected point satisfies
        ``g(new) >= g(lam) + delta * grad @ (new - lam)``, or ``0.0`` when the
        step underflows ``min_step`` (the caller should treat ``lam`` as
        converged).
    """
    g0 = g(lam)
    while t >= min_step:
        new = np.maximum(lam + t * grad, 0.0)
        if g(new) >= g0 + delta * grad @ (new - lam):
            return t
        t *= mu
    return 0.0


def dual_gradient_projection_batch(Q, b, lam0=None, eps=DUAL_EPS, max_iter=MAX_ITER,
                                   delta=0.1, mu=0.5, kkt_tol=KKT_STOP, record=False):
    """Batched dual gradient projection.

    ``Q`` is ``(B, m, d)`` and ``b`` is ``(B, m)``.  Every instance runs its
    own line search; finished instances are frozen.  Stops an instance when
    the dual gain of an iteration is at most ``eps`` and the recovered primal
    point is KKT-accurate: violation and ``|lam_i * slack_i|`` both at most
    ``kkt_tol``.  The gain test alone can fire on a tiny accepted step.

    With ``record=True`` the per-iteration dual values are returned as a
    second value, shape ``(iterations + 1, B)`` (frozen instances repeat
    their last value).
    """
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    B, m, _ = Q.shape
    QQt = np.einsum("bij,bkj->bik", Q, Q)
    lam = np.zeros((B, m)) if lam0 is None else np.array(np.broadcast_to(lam0, (B, m)), dtype=float)
    if np.any(lam < 0):
        raise ValueError("initial multipliers must be nonnegative")
    gval = dual_value(QQt, b, lam)
    status = np.full(B, int(Status.MAX_ITERATIONS))
    iters = np.zeros(B, dtype=int)
    active = np.ones(B, dtype=bool)
    history = [gval.copy()] if record else None

    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        l, Qi, bi = lam[idx], QQt[idx], b[idx]
        grad = dual_gradient(Qi, bi, l)
        step = np.ones(idx.size)
        new = np.maximum(l + grad, 0.0)
        gain = _gain(Qi, grad, new - l)
        pending = gain < delta * np.einsum("bi,bi->b", grad, new - l)
        while pending.any():
            step = np.where(pending, step * mu, step)
            underflow = pending & (step < MIN_STEP)
            pending &= ~underflow
            p = np.flatnonzero(pending)
            new[p] = np.maximum(l[p] + step[p, None] * grad[p], 0.0)
            d = new[p] - l[p]
            gain[p] = _gain(Qi[p], grad[p], d)
            ok = gain[p] >= delta * np.einsum("bi,bi->b", grad[p], d)
            pending[p[ok]] = False
            if underflow.any():
                new[underflow] = l[underflow]
                gain[underflow] = 0.0
        g_new = gval[idx] + gain
        lam[idx] = new
        gval[idx] = g_new
        iters[idx] += 1
        if record:
            history.append(gval.copy())

        resid = dual_gradient(Qi, bi, new)  # equals Q x - b at the recovered x
        kkt = np.maximum(np.max(resid, axis=1), np.max(np.abs(new * resid), axis=1))
        small_gain = gain <= eps
        stalled = step < MIN_STEP
        done = (small_gain & (kkt <= kkt_tol)) | stalled
        diverged = (np.linalg.norm(new, axis=1) > DIVERGENCE_BOUND) | _farkas(Q[idx], bi, new)
        status[idx[done]] = np.where(stalled[done], int(Status.MAX_ITERATIONS), int(Status.OPTIMAL))
        status[idx[diverged]] = Status.INFEASIBLE
        active[idx[done | diverged]] = False

    x = -0.5 * np.einsum("bij,bi->bj", Q, lam)
    slack = np.einsum("bij,bj->bi", Q, x) - b
    kkt = np.maximum(np.max(np.maximum(slack, 0.0), axis=1), np.max(np.abs(lam * slack), axis=1))
    result = BatchResult(x, np.sum(x * x, axis=1), status, kkt, iters, multipliers=lam)
    if record:
        return result, np.array(history)
    return result


def dual_gradient_projection(Q, b, lam0=None, eps=DUAL_EPS, max_iter=MAX_ITER, delta=0.1, mu=0.5):
    """Solve ``min ||x||^2 s.t. Q x - b <= 0`` through its Lagrange dual.

    Returns a :class:`SolverResult` whose ``history`` holds the dual values
    ``g(lam_n)`` of every iterate and whose ``multipliers`` attribute holds
    the final ``lam``.  INFEASIBLE is reported when ``||lam||`` exceeds
    ``1e8`` or when the growing multiplier points along a Farkas direction;
    both happen only when the primal constraints cannot be met.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    batch, hist = dual_gradient_projection_batch(
        Q[None], b[None], None if lam0 is None else np.asarray(lam0)[None], eps, max_iter, delta, mu,
        record=True)
    res = batch[0]
    res.history = list(hist[:, 0])
    return res
