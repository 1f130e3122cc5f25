"""Weighted Fréchet (Karcher) means of sphere points and of curves.

The solver is the intrinsic gradient iteration

    p <- exp_p(step * sum_i wbar_i log_p(x_i)),   wbar = w / sum(w),

run simultaneously at every node of a curve grid.  Weights may be negative;
a step that would raise the weighted Fréchet function is halved, so the
objective never increases from the starting point.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .curve import ManifoldCurve, stack_points
from .errors import AntipodalPointError


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KarcherConfig:
    """Stopping rule of the Karcher iteration.

    Attributes
    ----------
    max_iters : int
        Iteration cap.
    tol : float
        Stop once the update has geodesic length below ``tol`` radians.
    step : float
        Initial step size in ``(0, 1]``; 1 is the classical Karcher step.
    """

    max_iters: int = 100
    tol: float = 1e-10
    step: float = 1.0

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.step <= 1:
            raise ValueError("step must lie in (0, 1]")


@dataclass(frozen=True)
class KarcherResult:
    point: np.ndarray
    converged: bool
    iterations: int
    objective: float


def frechet_objective(p, points, weights):
    """Weighted Fréchet function ``sum_i w_i d(p, x_i)^2`` (weights as given)."""
    p = np.asarray(p, dtype=float)
    points = np.asarray(points, dtype=float)
    d = geo._distance(p[..., None, :], points)
    return np.sum(np.asarray(weights, dtype=float) * d ** 2, axis=-1)


def _normalized_weights(weights, k):
    w = np.asarray(weights, dtype=float)
    if w.shape[-1] != k:
        raise ValueError(f"expected {k} weights, got {w.shape[-1]}")
    total = np.sum(w, axis=-1, keepdims=True)
    if np.any(total == 0):
        if np.all(w == 0):
            raise ValueError("all weights are zero")
        raise ValueError("weights sum to zero; the weighted mean is undefined")
    return w / total


def _initial_points(x, wbar):
    y = np.einsum("...k,...kd->...d", wbar, x)
    norms = np.linalg.norm(y, axis=-1, keepdims=True)
    # weighted Euclidean mean collapsed: start from the heaviest point instead
    heavy = np.take_along_axis(x, np.argmax(wbar, axis=-1)[..., None, None], axis=-2)[..., 0, :]
    return np.where(norms > 1e-8, y / np.where(norms > 0, norms, 1.0), heavy)


def karcher_iterate(x, weights, cfg=None, trace=None):
    """Vectorized Karcher iteration.

    Parameters
    ----------
    x : ndarray, shape (M, k, d0)
        ``k`` points at each of ``M`` independent sites (curve nodes).
    weights : array_like, shape (k,) or (M, k)
        Signed weights with nonzero sum at every site.
    cfg : KarcherConfig, optional
    trace : list, optional
        If given, the total objective after each iteration is appended.

    Returns
    -------
    means : ndarray, shape (M, d0)
    converged : ndarray of bool, shape (M,)
    iterations : int
    """
    cfg = cfg or KarcherConfig()
    x = np.asarray(x, dtype=float)
    M, k, _ = x.shape
    wbar = np.broadcast_to(_normalized_weights(weights, k), (M, k))
    p = _initial_points(x, wbar)

    def gradient(q, sites):
        try:
            logs = geo._log(np.broadcast_to(q[:, None, :], x[sites].shape), x[sites])
        except AntipodalPointError as err:
            node, sample = err.index
            node = int(sites[node])
            raise AntipodalPointError(
                f"Karcher iterate at node {node} is antipodal to point {sample}",
                index=(node, sample)) from None
        return np.einsum("mk,mkd->md", wbar[sites], logs)

    f = objective_at(p, x, wbar)
    if trace is not None:
        trace.append(float(np.sum(f)))
    active = np.ones(M, dtype=bool)
    step = np.full(M, float(cfg.step))
    it = 0
    while it < cfg.max_iters and np.any(active):
        it += 1
        idx = np.flatnonzero(active)
        upd = step[idx, None] * gradient(p[idx], idx)
        small = np.linalg.norm(upd, axis=-1) < cfg.tol
        active[idx[small]] = False
        idx, upd = idx[~small], upd[~small]
        if idx.size == 0:
            break
        cand = geo._exp(p[idx], upd)
        f_new = objective_at(cand, x[idx], wbar[idx])
        f_old = f[idx]
        # repeated rejections shrink the step until the tol test retires the node
        ok = f_new <= f_old + 1e-14 * np.maximum(1.0, np.abs(f_old))
        p[idx[ok]] = cand[ok]
        f[idx[ok]] = f_new[ok]
        step[idx[~ok]] *= 0.5
        if trace is not None:
            trace.append(float(np.sum(f)))
    return p, ~active, it


def objective_at(q, x, wbar):
    return np.sum(wbar * geo._distance(q[:, None, :], x) ** 2, axis=-1)


def frechet_mean_points(points, weights=None, cfg=None):
    """Weighted Fréchet mean of points on the sphere.

    Parameters
    ----------
    points : array_like, shape (k, d0)
    weights : array_like, shape (k,), optional
        Signed weights with nonzero sum; uniform when omitted.
    cfg : KarcherConfig, optional

    Returns
    -------
    KarcherResult
        ``converged`` is False when ``max_iters`` ran out before ``tol``.
    """
    x = geo.check_points(np.atleast_2d(np.asarray(points, dtype=float)))
    if weights is None:
        weights = np.ones(x.shape[0])
    means, conv, it = karcher_iterate(x[None], weights, cfg)
    wbar = _normalized_weights(weights, x.shape[0])
    obj = float(frechet_objective(means[0], x, wbar))
    return KarcherResult(means[0], bool(conv[0]), it, obj)


def karcher_curve(curves, weights=None, cfg=None):
    """Pointwise weighted Karcher mean of curves on a shared grid.

    Returns the mean curve and a per-node convergence mask.
    """
    x = stack_points(curves)  # (n, N, d0)
    if weights is None:
        weights = np.ones(x.shape[0])
    try:
        means, conv, _ = karcher_iterate(np.swapaxes(x, 0, 1), weights, cfg)
    except AntipodalPointError as err:
        node, sample = err.index
        raise AntipodalPointError(f"curve {sample}, node {node}: {err}", index=(sample, node)) from None
    return ManifoldCurve(curves[0].grid, means), conv


def _warn_unconverged(conv):
    if not np.all(conv):
        warnings.warn(f"Karcher iteration did not converge at {int(np.sum(~conv))} node(s)",
                      ConvergenceWarning, stacklevel=3)


def frechet_mean_curve(curves, cfg=None):
    """Minimizer of ``(1/n) sum_i int_T d(x_i(t), z(t))^2 dt`` on the grid.

    The integrand separates over nodes, so the pointwise means solve it.
    """
    mean, conv = karcher_curve(curves, None, cfg)
    _warn_unconverged(conv)
    return mean


def weighted_frechet_curve(curves, weights, cfg=None):
    """Pointwise weighted Karcher mean with signed weights (nonzero sum)."""
    mean, conv = karcher_curve(curves, weights, cfg)
    _warn_unconverged(conv)
    return mean


def integrated_frechet_objective(z, curves, weights=None):
    """``sum_i w_i int_T d(x_i(t), z(t))^2 dt`` with uniform weights ``1/n`` by default."""
    x = stack_points(curves)
    n = x.shape[0]
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    d2 = geo._distance(z.points[None], x) ** 2
    return float(np.sum(w * z.grid.integrate(d2)))
