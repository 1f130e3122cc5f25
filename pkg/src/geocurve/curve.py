"""Discretized sphere-valued curves, tangent curves and curve metrics."""

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import AntipodalPointError, DimensionError, GridMismatchError, NotOnSphereError

#: Adjacent nodes of a stored curve must be closer than this (radians).
CONTINUITY_GUARD = np.pi / 2


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class TimeGrid:
    """Strictly increasing nodes ``t_1 < ... < t_N`` of a compact interval.

    Parameters
    ----------
    nodes : array_like, shape (N,)
        At least two finite, strictly increasing values.
    """

    __slots__ = ("nodes", "_weights")

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a time grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("time grid nodes must be finite")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("time grid nodes must be strictly increasing")
        self.nodes = _frozen(nodes)
        self._weights = None

    @classmethod
    def uniform(cls, n_nodes, start=0.0, stop=1.0):
        return cls(np.linspace(start, stop, n_nodes))

    def __len__(self):
        return self.nodes.size

    def __eq__(self, other):
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return self is other or np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash(self.nodes.tobytes())

    def __repr__(self):
        return f"TimeGrid(N={len(self)}, [{self.nodes[0]:g}, {self.nodes[-1]:g}])"

    @property
    def length(self):
        return float(self.nodes[-1] - self.nodes[0])

    @property
    def weights(self):
        """Composite trapezoid quadrature weights (sum to ``length``)."""
        if self._weights is None:
            dt = np.diff(self.nodes)
            w = np.zeros(self.nodes.size)
            w[:-1] += dt / 2
            w[1:] += dt / 2
            self._weights = _frozen(w)
        return self._weights

    def integrate(self, values, axis=-1):
        """Trapezoid rule along ``axis`` of ``values`` sampled at the nodes."""
        values = np.asarray(values, dtype=float)
        return np.tensordot(np.moveaxis(values, axis, -1), self.weights, axes=([-1], [0]))

    def subsample(self, n_nodes):
        """Indices of ``n_nodes`` nodes spread evenly over the grid (endpoints kept)."""
        if n_nodes >= len(self):
            return np.arange(len(self))
        if n_nodes < 2:
            raise ValueError("need at least two nodes")
        return np.unique(np.round(np.linspace(0, len(self) - 1, n_nodes)).astype(int))


@dataclass(frozen=True, eq=False)
class ManifoldCurve:
    """A curve on the sphere: one unit vector per grid node.

    ``points`` has shape ``(N, d0)``.  Construction checks unit norms and the
    discrete continuity guard (adjacent geodesic steps below pi/2).
    """

    grid: TimeGrid
    points: np.ndarray

    def __post_init__(self):
        pts = geo.check_points(self.points)
        if pts.ndim != 2 or pts.shape[0] != len(self.grid):
            raise DimensionError(
                f"expected points of shape ({len(self.grid)}, d0), got {pts.shape}")
        steps = geo._distance(pts[:-1], pts[1:])
        if np.any(steps >= CONTINUITY_GUARD):
            k = int(np.argmax(steps))
            raise NotOnSphereError(
                f"adjacent nodes {k} and {k + 1} are {steps[k]:.3f} rad apart "
                f"(continuity guard {CONTINUITY_GUARD:.3f})")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def restrict(self, index):
        """Curve restricted to the grid nodes ``index``."""
        index = np.asarray(index)
        return ManifoldCurve(TimeGrid(self.grid.nodes[index]), self.points[index])

    def __repr__(self):
        return f"ManifoldCurve(N={len(self)}, d0={self.dim})"


@dataclass(frozen=True, eq=False)
class TangentCurve:
    """Tangent vectors attached pointwise to a base curve."""

    base: ManifoldCurve
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.shape != self.base.points.shape:
            raise DimensionError(f"expected vectors of shape {self.base.points.shape}, got {v.shape}")
        geo.check_tangent(self.base.points, v)
        object.__setattr__(self, "vectors", _frozen(v))

    @property
    def grid(self):
        return self.base.grid

    def scaled(self, factor):
        return TangentCurve(self.base, factor * self.vectors)

    def norm(self):
        """Ambient L2 norm ``(int |v(t)|^2 dt)^(1/2)`` with trapezoid weights."""
        return float(np.sqrt(self.grid.integrate(np.sum(self.vectors ** 2, axis=-1))))

    def __repr__(self):
        return f"TangentCurve(N={len(self.base)}, d0={self.base.dim})"


def check_same_grid(*curves):
    grid = curves[0].grid
    dim = curves[0].points.shape[1] if hasattr(curves[0], "points") else curves[0].base.dim
    for c in curves[1:]:
        if c.grid != grid:
            raise GridMismatchError("curves are defined on different time grids")
        d = c.points.shape[1] if hasattr(c, "points") else c.base.dim
        if d != dim:
            raise DimensionError(f"curves live in different ambient dimensions ({dim} vs {d})")
    return grid


def stack_points(curves):
    """Array of shape ``(n, N, d0)`` from curves sharing one grid."""
    check_same_grid(*curves)
    return np.stack([c.points for c in curves])


def pointwise_distance(x, y):
    """Geodesic distance at every node, shape ``(N,)``."""
    check_same_grid(x, y)
    return geo._distance(x.points, y.points)


def sup_geodesic_distance(x, y):
    """``max_t d(x(t), y(t))`` over the grid nodes."""
    return float(np.max(pointwise_distance(x, y)))


def integrated_sq_geodesic_distance(x, y):
    """Trapezoid approximation of ``int_T d(x(t), y(t))^2 dt``."""
    grid = check_same_grid(x, y)
    return float(grid.integrate(geo._distance(x.points, y.points) ** 2))


def log_map_curve(mean, x):
    """Pointwise logarithm of ``x`` at the nodes of ``mean``.

    Raises
    ------
    AntipodalPointError
        With ``index`` set to the first offending node.
    """
    check_same_grid(mean, x)
    try:
        v = geo._log(mean.points, x.points)
    except AntipodalPointError as err:
        raise AntipodalPointError(f"node {err.index}: {err}", index=err.index) from None
    return TangentCurve(mean, v)


def exp_map_curve(v):
    """Pointwise exponential of a tangent curve."""
    return ManifoldCurve(v.grid, geo._exp(v.base.points, v.vectors))


def lipschitz_estimate(x):
    """Largest adjacent-node ratio ``d(x(t_k), x(t_k+1)) / (t_k+1 - t_k)``.

    A lower bound on the Lipschitz constant of the underlying curve.
    """
    steps = geo._distance(x.points[:-1], x.points[1:])
    return float(np.max(steps / np.diff(x.grid.nodes)))


def resample_curve(x, grid):
    """Evaluate ``x`` on a new grid by geodesic interpolation between nodes.

    Each new node inside ``[t_k, t_k+1]`` is ``exp_{x_k}(lam * log_{x_k}(x_k+1))``
    with ``lam`` the linear interpolation fraction.  Extrapolation is refused.
    """
    t = x.grid.nodes
    tau = grid.nodes
    if tau[0] < t[0] - 1e-12 or tau[-1] > t[-1] + 1e-12:
        raise ValueError("target grid extends beyond the source interval")
    k = np.clip(np.searchsorted(t, tau, side="right") - 1, 0, len(t) - 2)
    lam = np.clip((tau - t[k]) / (t[k + 1] - t[k]), 0.0, 1.0)
    p = x.points[k]
    v = geo._log(p, x.points[k + 1])
    return ManifoldCurve(grid, geo._exp(p, lam[:, None] * v))


def downsample(x, n_nodes):
    """Restrict a curve to ``n_nodes`` evenly spread nodes of its grid."""
    return x.restrict(x.grid.subsample(n_nodes))
