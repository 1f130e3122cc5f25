"""Global Fréchet regression of sphere-valued curves on lagged curve regressors.

A fitted model holds the Fréchet mean curve of the regressors, their
log-mapped sample in the tangent spaces along that mean, the block
covariance operator of ``m + 1`` consecutive log-mapped regressors, its
regularized inverse and the smoothing kernel ``sqrt(K)``.

Window alignment: sample window ``i`` is ``(X_i, ..., X_{i+m})`` and is
paired with the response ``Y_{i+m}`` observed at the window's last time.  A
query is likewise the ``m + 1`` regressor curves ending at the prediction
time.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from .covariance import RegularizedInverse, RegularizedKernel, assemble_block_array
from .curve import ManifoldCurve, check_same_grid, stack_points
from .errors import AntipodalPointError, DegenerateCovarianceError, DimensionError, GridMismatchError
from .frechet import KarcherConfig, karcher_curve, karcher_iterate

#: Covariance spectra whose top eigenvalue is below this are treated as zero.
DEGENERATE_EIGENVALUE = 1e-20


@dataclass(frozen=True)
class OptimizerConfig:
    """Derivative-free coordinate descent on submanifold coordinates."""

    initial_step: float = 0.5
    min_step: float = 1e-6
    max_sweeps: int = 500
    coord_cap: float = 10.0
    fd_step: float = 1e-7


@dataclass(frozen=True)
class RegressionConfig:
    """Model settings.

    Attributes
    ----------
    resolution : int
        Number of grid nodes used for operators and objectives.
    ridge : float or None
        Ridge added to retained eigenvalues; ``None`` means ``1e-6 * lambda_1``.
    rel_cutoff : float
        Spectral truncation of the block operator relative to ``lambda_1``.
    kernel_exponent : float
        Power applied to kernel eigenvalues before normalization.
    kernel_cutoff : float
        Spectral truncation of the smoothing kernel.
    submanifold : {"window", "all"}
        Generate the prediction submanifold from the query window or from
        every sample regressor.
    weight_covariance : {"smoothed", "raw"}
        Covariance inverted inside the weights: that of the kernel-smoothed
        log-mapped regressors (the stacks actually paired) or that of the raw
        log-mapped regressors.
    """

    resolution: int = 200
    ridge: float | None = None
    rel_cutoff: float = 1e-3
    kernel_exponent: float = 1.0
    kernel_cutoff: float = 1e-3
    submanifold: str = "window"
    weight_covariance: str = "smoothed"
    karcher: KarcherConfig = field(default_factory=KarcherConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        if self.submanifold not in ("window", "all"):
            raise ValueError("submanifold must be 'window' or 'all'")
        if self.weight_covariance not in ("smoothed", "raw"):
            raise ValueError("weight_covariance must be 'smoothed' or 'raw'")
        if not 0 < self.rel_cutoff < 1 or not 0 < self.kernel_cutoff < 1:
            raise ValueError("spectral cutoffs must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class RegressionModel:
    responses: tuple
    regressors: tuple
    m: int
    config: RegressionConfig
    mu_hat: ManifoldCurve
    work_index: np.ndarray
    mu_work: ManifoldCurve
    logs: np.ndarray          # (n, Nw, d0) log-mapped regressors on the working grid
    xbar: np.ndarray          # (Nw, d0) empirical mean of the logs
    slot_means: np.ndarray    # (m+1, Nw, d0) mean of each window slot
    op: object                # block operator of the raw log-mapped regressors
    kern: RegularizedKernel
    weight_op: object         # block operator whose inverse enters the weights
    inverse: RegularizedInverse
    sample_scores: np.ndarray  # (n-m, retained): scaled spectral coords of the sample windows
    y_work: np.ndarray         # (n-m, Nw, d0) paired responses on the working grid

    @property
    def n(self):
        return len(self.regressors)

    @property
    def grid(self):
        return self.mu_hat.grid

    @property
    def work_grid(self):
        return self.mu_work.grid

    @property
    def n_windows(self):
        return self.n - self.m


def _restrict(model, curve):
    if curve.grid == model.work_grid:
        return curve.points
    if curve.grid == model.grid:
        return curve.points[model.work_index]
    raise GridMismatchError("curve grid matches neither the sample grid nor the working grid")


def _log_stack(mu, x, what):
    try:
        return geo._log(np.broadcast_to(mu, x.shape), x)
    except AntipodalPointError as err:
        idx = err.index
        raise AntipodalPointError(f"{what} {idx[0]} is antipodal to the mean curve at node {idx[1]}",
                                  index=idx) from None


def fit(responses, regressors, m, config=None):
    """Fit the regression model to a time-ordered paired sample.

    Parameters
    ----------
    responses, regressors : sequence of ManifoldCurve
        ``Y_{s_1..s_n}`` and ``X_{s_1..s_n}`` on one shared grid.
    m : int
        Number of lags; windows hold ``m + 1`` regressor curves.
    config : RegressionConfig, optional

    Raises
    ------
    DegenerateCovarianceError
        When the log-mapped regressors show no dispersion.
    """
    config = config or RegressionConfig()
    responses, regressors = tuple(responses), tuple(regressors)
    n = len(regressors)
    if len(responses) != n:
        raise DimensionError("responses and regressors must have equal length")
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    check_same_grid(*responses, *regressors)

    mu_hat, _ = karcher_curve(regressors, None, config.karcher)
    grid = mu_hat.grid
    work_index = grid.subsample(config.resolution)
    mu_work = mu_hat.restrict(work_index)
    work_grid = mu_work.grid

    X = stack_points(regressors)[:, work_index]
    logs = _log_stack(mu_work.points, X, "regressor")
    xbar = logs.mean(axis=0)
    op = assemble_block_array(work_grid, logs, m, center=True)
    if not op.eigenvalues[0] > DEGENERATE_EIGENVALUE:
        raise DegenerateCovarianceError("log-mapped regressors have (numerically) zero covariance")
    kern = RegularizedKernel.from_operator(op, config.kernel_exponent, config.kernel_cutoff)
    if config.weight_covariance == "smoothed":
        weight_op = assemble_block_array(work_grid, kern.apply_array(logs, base=mu_work.points),
                                         m, center=True)
    else:
        weight_op = op
    inverse = RegularizedInverse(weight_op, config.ridge, config.rel_cutoff)

    windows = np.stack([logs[i:i + m + 1] for i in range(n - m)])
    slot_means = windows.mean(axis=0)
    smooth = kern.apply_array(windows - slot_means, base=mu_work.points)
    scores = inverse.coords(smooth) * inverse.coefficients
    y_work = stack_points(responses)[m:, work_index]
    for a in (work_index, logs, xbar, slot_means, scores, y_work):
        a.setflags(write=False)
    return RegressionModel(responses, regressors, m, config, mu_hat, work_index, mu_work, logs,
                           xbar, slot_means, op, kern, weight_op, inverse, scores, y_work)


class QueryBlock:
    """The ``m + 1`` regressor curves ending at the prediction time."""

    def __init__(self, curves):
        self.curves = tuple(curves)
        if len(self.curves) == 0:
            raise ValueError("empty query")
        check_same_grid(*self.curves)

    def __len__(self):
        return len(self.curves)

    @classmethod
    def from_sample(cls, model, end):
        """Observed regressor window ``X_{end-m}, ..., X_end``."""
        if not model.m <= end < model.n:
            raise IndexError(f"window end must lie in [{model.m}, {model.n - 1}]")
        return cls(model.regressors[end - model.m:end + 1])


def _as_query(model, q):
    if not isinstance(q, QueryBlock):
        q = QueryBlock(q)
    if len(q) != model.m + 1:
        raise DimensionError(f"query needs {model.m + 1} curves, got {len(q)}")
    return q


def query_logs(model, q):
    """Log-mapped query curves on the working grid, shape ``(m+1, Nw, d0)``."""
    q = _as_query(model, q)
    pts = np.stack([_restrict(model, c) for c in q.curves])
    return _log_stack(model.mu_work.points, pts, "query curve")


def query_scores(model, q):
    """Spectral coordinates of the centered, smoothed query stack."""
    a = query_logs(model, q) - model.xbar
    smooth = model.kern.apply_array(a, base=model.mu_work.points)
    return model.inverse.coords(smooth)


def frechet_weights(model, q):
    """Regularized empirical Fréchet weights of the ``n - m`` sample windows.

    ``w_i = 1 + <sqrt(K) a, R^-1 sqrt(K) b_i>`` with ``a`` the query stack
    centered by the log-mapped sample mean and ``b_i`` the ``i``-th sample
    window centered by the window-slot means.  The weights average to one.
    """
    return 1.0 + model.sample_scores @ query_scores(model, q)


def _objective_values(model, weights, z_work):
    d2 = geo._distance(z_work[None], model.y_work) ** 2
    per = model.work_grid.integrate(d2)
    return float(np.dot(weights, per) / model.n_windows)


def empirical_objective(model, q, z, weights=None):
    """``(1/(n-m)) sum_i w_i int_T d(Y_{i+m}(t), z(t))^2 dt`` on the working grid."""
    if weights is None:
        weights = frechet_weights(model, q)
    return _objective_values(model, np.asarray(weights, dtype=float), _restrict(model, z))


@dataclass(frozen=True)
class PredictionResult:
    curve: ManifoldCurve
    coords: np.ndarray
    converged: bool
    weights: np.ndarray
    objective: float
    initial_objective: float
    sweeps: int
    hit_cap: bool
    trace: tuple = ()


def _generators(model, q, on_full):
    if model.config.submanifold == "window":
        curves = _as_query(model, q).curves
    else:
        curves = model.regressors
    if on_full:
        pts = stack_points(curves)
        return _log_stack(model.mu_hat.points, pts, "generator")
    if model.config.submanifold == "window":
        return query_logs(model, q)
    return model.logs


def submanifold_point(base, generators, coords):
    """``exp_base(sum_k w_k L_k)`` at every node, for ``generators`` of shape (K, N, d0)."""
    v = np.tensordot(coords, generators, axes=(0, 0))
    return geo._exp(base, v)


def _project_coords(grid, generators, target):
    w = grid.weights
    G = np.einsum("n,knd,lnd->kl", w, generators, generators)
    b = np.einsum("n,knd,nd->k", w, generators, target)
    coords, *_ = np.linalg.lstsq(G, b, rcond=1e-12)
    return coords


def coordinate_descent(f, w0, cfg, trace=None):
    """Minimize ``f`` over R^K one coordinate at a time.

    Each coordinate moves along the sign of a central-difference derivative
    by a trial step; failures halve the step, successes double it for the
    next attempt (capped at ``initial_step``).  Stops when every coordinate
    fails below ``min_step`` within one sweep.
    """
    w = np.clip(np.asarray(w0, dtype=float), -cfg.coord_cap, cfg.coord_cap)
    fw = f(w)
    if trace is not None:
        trace.append(fw)
    K = w.size
    steps = np.full(K, cfg.initial_step)
    hit_cap = bool(np.any(np.abs(np.asarray(w0)) > cfg.coord_cap))
    for sweep in range(1, cfg.max_sweeps + 1):
        moved = False
        for k in range(K):
            h = cfg.fd_step * max(1.0, abs(w[k]))
            e = np.zeros(K)
            e[k] = h
            g = (f(w + e) - f(w - e)) / (2 * h)
            directions = [-np.sign(g)] if g != 0 else [1.0, -1.0]
            step = min(2 * steps[k], cfg.initial_step)
            success = False
            while step >= cfg.min_step and not success:
                for d in directions:
                    trial = w.copy()
                    trial[k] = w[k] + d * step
                    if abs(trial[k]) > cfg.coord_cap:
                        trial[k] = np.sign(trial[k]) * cfg.coord_cap
                        hit_cap = True
                    if trial[k] == w[k]:
                        continue
                    ft = f(trial)
                    if ft < fw:
                        w, fw, success = trial, ft, True
                        break
                if not success:
                    step *= 0.5
            steps[k] = step
            moved |= success
        if trace is not None:
            trace.append(fw)
        if not moved:
            return w, fw, True, sweep, hit_cap
    return w, fw, False, cfg.max_sweeps, hit_cap


def predict(model, q, init=None):
    """Minimize the empirical objective over the geodesic submanifold.

    The submanifold is ``{exp_mu(t)(sum_k w_k log_mu(t) G_k(t))}`` with
    generators ``G_k`` the query window (default) or all sample regressors.

    Parameters
    ----------
    init : array_like, optional
        Starting coordinates.  By default the weighted Karcher mean of the
        responses under the Fréchet weights is log-mapped and projected onto
        the span of the generators.

    Returns
    -------
    PredictionResult
    """
    q = _as_query(model, q)
    weights = frechet_weights(model, q)
    gens = _generators(model, q, on_full=False)
    base = model.mu_work.points

    if init is None:
        wk, _, _ = karcher_iterate(np.swapaxes(model.y_work, 0, 1), weights, model.config.karcher)
        target = _log_stack(base[None], wk[None], "weighted mean")[0]
        init = _project_coords(model.work_grid, gens, target)

    def f(w):
        return _objective_values(model, weights, submanifold_point(base, gens, w))

    trace = []
    start = np.clip(np.asarray(init, dtype=float), -model.config.optimizer.coord_cap,
                    model.config.optimizer.coord_cap)
    f0 = f(start)
    w, fw, converged, sweeps, hit_cap = coordinate_descent(f, init, model.config.optimizer, trace)
    full_gens = _generators(model, q, on_full=True)
    curve = ManifoldCurve(model.grid, submanifold_point(model.mu_hat.points, full_gens, w))
    return PredictionResult(curve, w, converged, weights, fw, f0, sweeps, hit_cap, tuple(trace))


def refit(model, **changes):
    """Fit again on the same sample with modified configuration fields."""
    return fit(model.responses, model.regressors, model.m, replace(model.config, **changes))
