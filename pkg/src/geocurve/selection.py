"""Selection of spherical curve regressors for a prediction time.

Two candidate sets are intersected:

* ``S1``: for every supplied log-mapped response, the ``k_nn`` candidate
  regressors nearest in the regularized Mahalanobis semi-distance of the
  lag-0 covariance of the log-mapped regressors;
* ``S2``: candidates whose regularized empirical Fréchet weight lies in the
  lowest ``weight_quantile`` of all candidate weights.

The weight of candidate ``j`` places ``X_j`` in the prediction-time slot of
the observed regressor window ending at ``s_star`` and reads the weight of
the sample window ending at ``j``.  Ties in both cuts break by ascending
candidate index.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .covariance import RegularizedInverse, assemble_block_array, whiten
from .curve import TangentCurve
from .errors import AntipodalPointError, DimensionError
from .regression import _restrict, frechet_weights

SCENARIOS = {1: "prediction-time regressor excluded", 2: "prediction-time regressor included"}


@dataclass(frozen=True)
class SelectionConfig:
    """Thresholds and candidate set.

    Attributes
    ----------
    k_nn : int or None
        Neighbourhood size; ``None`` means ``ceil(0.1 * candidates)``.
    weight_quantile : float
        Fraction of candidates, by ascending weight, kept in ``S2``.
    include_s_star : bool
        Scenario 2 when True (the regressor at the prediction time is a
        candidate), Scenario 1 otherwise.
    candidate_times : tuple of int or None
        Sample indices eligible as regressors; all indices by default.
    """

    k_nn: int | None = None
    weight_quantile: float = 0.2
    include_s_star: bool = False
    candidate_times: tuple | None = None

    def __post_init__(self):
        if not 0 < self.weight_quantile <= 1:
            raise ValueError("weight_quantile must lie in (0, 1]")
        if self.k_nn is not None and self.k_nn < 1:
            raise ValueError("k_nn must be positive")

    @property
    def scenario(self):
        return 2 if self.include_s_star else 1


@dataclass(frozen=True)
class SelectionResult:
    s_star: int
    scenario: int
    candidates: tuple
    s1: tuple
    s2: tuple
    selected: tuple
    distances: np.ndarray = field(repr=False)           # (responses, candidates), raw
    relative_distances: np.ndarray = field(repr=False)  # divided by each response's median
    weights: np.ndarray = field(repr=False)             # (candidates,)
    empty: bool = False

    def as_dict(self):
        return {
            "s_star": self.s_star,
            "scenario": self.scenario,
            "candidates": list(self.candidates),
            "s1": list(self.s1),
            "s2": list(self.s2),
            "selected": list(self.selected),
            "empty_intersection": self.empty,
            "weights": [float(w) for w in self.weights],
            "distances": [[float(d) for d in row] for row in self.distances],
            "relative_distances": [[float(d) for d in row] for row in self.relative_distances],
        }


def _nuclear_norm(A, B):
    # singular values of A^T B without forming the (D x D) product when D is large
    if A.shape[1] > A.shape[0]:
        _, Ra = np.linalg.qr(A.T)
        _, Rb = np.linalg.qr(B.T)
        return float(np.sum(np.linalg.svd(Ra @ Rb.T, compute_uv=False)))
    return float(np.sum(np.linalg.svd(A.T @ B, compute_uv=False)))


def lag_trace_norms(grid, V, max_lag, center=True):
    """Nuclear norms of the empirical lag-``k`` covariances, ``k = 0..max_lag``."""
    V = np.asarray(V, dtype=float)
    n = V.shape[0]
    if center:
        V = V - V.mean(axis=0)
    W = whiten(grid, V)
    return np.array([_nuclear_norm(W[:n - k], W[k:]) / (n - k) for k in range(max_lag + 1)])


def estimate_lag_range(tangent_curves, threshold=0.2, grid=None):
    """Smallest lag whose covariance trace norm drops below ``threshold`` times lag 0.

    Parameters
    ----------
    tangent_curves : sequence of TangentCurve, or ndarray (n, N, d0) with ``grid``
    threshold : float in (0, 1)

    Returns
    -------
    int
        The lag, capped at ``n // 4`` (also returned when no lag qualifies).
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if isinstance(tangent_curves, np.ndarray):
        if grid is None:
            raise ValueError("grid is required for array input")
        V = tangent_curves
    else:
        grid = tangent_curves[0].grid
        V = np.stack([c.vectors for c in tangent_curves])
    n = V.shape[0]
    if n < 10:
        raise ValueError("need at least 10 curves to estimate the lag range")
    cap = n // 4
    norms = lag_trace_norms(grid, V, cap)
    if norms[0] == 0:
        return cap
    below = np.flatnonzero(norms[1:] < threshold * norms[0])
    return int(min(below[0] + 1, cap)) if below.size else cap


def lag0_inverse(model):
    """Regularized inverse of the lag-0 covariance of the log-mapped regressors."""
    op0 = assemble_block_array(model.work_grid, model.logs, 0, center=True)
    return RegularizedInverse(op0, model.config.ridge, model.config.rel_cutoff)


def response_logs(model, responses):
    """Log-maps of response curves at the fitted mean, on the working grid."""
    pts = np.stack([_restrict(model, y) for y in responses])
    try:
        v = geo._log(np.broadcast_to(model.mu_work.points, pts.shape), pts)
    except AntipodalPointError as err:
        raise AntipodalPointError(f"response {err.index[0]} is antipodal to the mean at node "
                                  f"{err.index[1]}", index=err.index) from None
    return [TangentCurve(model.mu_work, x) for x in v]


def _as_log_array(model, logs):
    out = []
    for v in logs:
        if isinstance(v, TangentCurve):
            if v.grid != model.work_grid:
                raise DimensionError("response logs must live on the model's working grid")
            out.append(v.vectors)
        else:
            out.append(np.asarray(v, dtype=float))
    return np.stack(out)


def mahalanobis_to_candidates(model, logs, candidates, inverse=None):
    """Raw semi-distances, shape ``(len(logs), len(candidates))``."""
    inverse = inverse or lag0_inverse(model)
    R = _as_log_array(model, logs)
    C = model.logs[np.asarray(candidates)]
    cr = inverse.coords(R[:, None]) * np.sqrt(inverse.coefficients)
    cc = inverse.coords(C[:, None]) * np.sqrt(inverse.coefficients)
    d2 = np.sum((cr[:, None, :] - cc[None, :, :]) ** 2, axis=-1)
    return np.sqrt(np.maximum(d2, 0.0))


def candidate_weights(model, s_star, candidates):
    """Fréchet weight of each candidate (see module docstring)."""
    m = model.m
    if not m <= s_star < model.n:
        raise IndexError(f"s_star must lie in [{m}, {model.n - 1}]")
    window = list(model.regressors[s_star - m:s_star + 1])
    out = np.empty(len(candidates))
    for k, j in enumerate(candidates):
        q = window[:-1] + [model.regressors[j]]
        w = frechet_weights(model, q)
        out[k] = w[max(j, m) - m]
    return out


def _smallest(values, count):
    order = np.lexsort((np.arange(values.size), values))  # ties by ascending index
    return order[:count]


def scvsa(model, logs, cfg=None, s_star=None):
    """Select regressors for predicting the response at ``s_star``.

    Parameters
    ----------
    model : RegressionModel
    logs : sequence of TangentCurve
        Log-mapped response curves at the fitted mean (working grid), e.g.
        from :func:`response_logs`.
    cfg : SelectionConfig, optional
    s_star : int, optional
        Prediction time (sample index); defaults to the last index.

    Returns
    -------
    SelectionResult
        ``empty`` is set when ``S1`` and ``S2`` do not intersect.
    """
    cfg = cfg or SelectionConfig()
    s_star = model.n - 1 if s_star is None else int(s_star)
    times = range(model.n) if cfg.candidate_times is None else cfg.candidate_times
    cands = sorted(set(int(t) for t in times if 0 <= int(t) < model.n))
    if cfg.include_s_star:
        cands = sorted(set(cands) | {s_star})
    else:
        cands = [t for t in cands if t != s_star]
    if not cands:
        raise ValueError("no regressor candidates")
    C = len(cands)
    k = cfg.k_nn if cfg.k_nn is not None else math.ceil(0.1 * C)
    if k > C:
        raise ValueError(f"k_nn = {k} exceeds the {C} candidates")

    dist = mahalanobis_to_candidates(model, logs, cands)
    med = np.median(dist, axis=1, keepdims=True)
    rel = dist / np.where(med > 0, med, 1.0)
    s1 = set()
    for row in rel:
        s1.update(cands[i] for i in _smallest(row, k))

    weights = candidate_weights(model, s_star, cands)
    keep = max(1, math.ceil(cfg.weight_quantile * C - 1e-12))
    s2 = {cands[i] for i in _smallest(weights, keep)}
    selected = s1 & s2
    return SelectionResult(s_star, cfg.scenario, tuple(cands), tuple(sorted(s1)), tuple(sorted(s2)),
                           tuple(sorted(selected)), dist, rel, weights, empty=not selected)
