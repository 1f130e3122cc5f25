"""Synthetic time-correlated samples of sphere-valued curves.

The bivariate generator composes five steps:

1. an ARIMA series ``a_1..a_n`` sets the volatility ``V_i = sqrt(|a_i|)``;
2. Euler-Maruyama paths of ``dX = mu(t) X dt + diag(X) V_i dW`` on a grid;
3. absolute values normalized by their sup norm give ``U1, U2`` in ``[0, 1]``;
4. the inverse von Mises-Fisher transform maps ``(U1, U2)`` to S^2 (the response);
5. the regressor keeps the response azimuth and transforms its polar angle.

Seeds: a master seed is split with :class:`numpy.random.SeedSequence`; the
ARIMA series uses child 0 and path ``i`` uses grandchild ``i`` of child 1, so
any subset of paths can be regenerated independently and in any order.

Two controlled test beds are also provided: smooth curves in a geodesic cap
with AR(1) dependence across samples, and a planted-lag design where each
response is a geodesic combination of earlier regressors.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from . import geometry as geo
from .curve import ManifoldCurve, TimeGrid

NORTH = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ArimaSpec:
    """ARIMA(p, i, q) with Gaussian innovations.

    ``ar`` holds ``phi_1..phi_p`` of ``a_t = sum phi_k a_{t-k} + e_t + sum theta_k e_{t-k}``.
    The first ``burn_in`` values of the ARMA recursion are discarded.
    """

    ar: tuple = ()
    i: int = 0
    ma: tuple = ()
    noise_sd: float = 1.0
    n: int = 100
    seed: int = 0
    burn_in: int = 500

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(c) for c in self.ar))
        object.__setattr__(self, "ma", tuple(float(c) for c in self.ma))
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        if self.n < 1 or self.i < 0 or self.burn_in < 0:
            raise ValueError("n must be positive; i and burn_in nonnegative")
        if self.i == 0 and self.ar and not is_stationary(self.ar):
            raise ValueError("AR polynomial has a root on or inside the unit circle")


def is_stationary(ar):
    """True when ``1 - phi_1 z - ... - phi_p z^p`` has all roots outside the unit circle."""
    if len(ar) == 0:
        return True
    # roots of z^p - phi_1 z^(p-1) - ... - phi_p are the reciprocals
    return bool(np.all(np.abs(np.roots(np.r_[1.0, -np.asarray(ar)])) < 1.0))


def arima_simulate(spec, rng=None):
    """One realization of length ``spec.n``; deterministic given ``spec.seed``."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    total = spec.n + spec.burn_in
    e = rng.normal(0.0, spec.noise_sd, total) if spec.noise_sd > 0 else np.zeros(total)
    a = lfilter(np.r_[1.0, spec.ma], np.r_[1.0, -np.asarray(spec.ar)], e)[spec.burn_in:]
    for _ in range(spec.i):
        a = np.cumsum(a)
    return a


@dataclass(frozen=True)
class SdeSpec:
    """Linear-drift SDE ``dX = mu(t) X dt + diag(X) V dW`` on a uniform grid.

    Attributes
    ----------
    mu : float, ndarray (d, d) or callable
        Drift rate; a callable receives ``t`` and returns a scalar or matrix.
    v_scale : ndarray, shape (n,)
        Volatility multiplier of each path.
    x0 : ndarray, shape (d,)
    grid : TimeGrid
    seed : int
    correlated_components : bool
        Drive the components with equicorrelated Brownian motions.
    correlation : float
        Pairwise correlation used when ``correlated_components`` is set.
    antithetic : bool
        Paths ``2k`` and ``2k+1`` use increments ``dW`` and ``-dW``.
    """

    mu: object = 0.1
    v_scale: np.ndarray = field(default_factory=lambda: np.ones(1))
    x0: np.ndarray = field(default_factory=lambda: np.ones(2))
    grid: TimeGrid = field(default_factory=lambda: TimeGrid.uniform(1000))
    seed: int = 0
    correlated_components: bool = False
    correlation: float = 0.5
    antithetic: bool = False

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if not np.any(x0 != 0):
            raise ValueError("x0 must be nonzero")
        dt = np.diff(self.grid.nodes)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise ValueError("the SDE grid must be uniform")
        d = x0.size
        if self.correlated_components and d > 1 and not -1 / (d - 1) < self.correlation < 1:
            raise ValueError("correlation outside the positive-definite range")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "v_scale", np.atleast_1d(np.asarray(self.v_scale, dtype=float)))


def _drift_matrix(mu, t, d):
    m = mu(t) if callable(mu) else mu
    m = np.asarray(m, dtype=float)
    return m * np.eye(d) if m.ndim == 0 else m


def brownian_increments(spec, index):
    """``dW`` of path ``index``, shape ``(N - 1, d)``, honoring the antithetic option."""
    source = index // 2 if spec.antithetic else index
    sign = -1.0 if spec.antithetic and index % 2 else 1.0
    # identical to SeedSequence(seed).spawn(source + 1)[source], without the O(index) spawn
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(source,)))
    d = spec.x0.size
    dt = spec.grid.nodes[1] - spec.grid.nodes[0]
    dw = rng.normal(0.0, np.sqrt(dt), (len(spec.grid) - 1, d))
    if spec.correlated_components and d > 1:
        C = np.full((d, d), spec.correlation) + (1 - spec.correlation) * np.eye(d)
        dw = dw @ np.linalg.cholesky(C).T
    return sign * dw


def euler_path(mu, x0, grid, dw, v=1.0):
    """Euler-Maruyama recursion ``X_{k+1} = X_k + mu(t_k) X_k dt + X_k * v * dW_k``.

    ``dw`` has shape ``(..., N - 1, d)``; leading axes index independent
    paths, with ``v`` broadcasting against them.  Returns ``(..., N, d)``.
    """
    t = grid.nodes
    dw = np.asarray(dw, dtype=float)
    d = x0.size
    lead = dw.shape[:-2]
    v = np.broadcast_to(np.asarray(v, dtype=float), lead)[..., None]
    x = np.empty(lead + (len(t), d))
    x[..., 0, :] = x0
    const = None if callable(mu) else _drift_matrix(mu, 0.0, d)
    for k in range(len(t) - 1):
        A = const if const is not None else _drift_matrix(mu, t[k], d)
        dt = t[k + 1] - t[k]
        xk = x[..., k, :]
        x[..., k + 1, :] = xk + dt * (xk @ A.T) + xk * v * dw[..., k, :]
    return x


def euler_sde(spec):
    """Sample paths, shape ``(n, N, d)`` with ``n = len(spec.v_scale)``."""
    dw = np.stack([brownian_increments(spec, i) for i in range(spec.v_scale.size)])
    return euler_path(spec.mu, spec.x0, spec.grid, dw, spec.v_scale)


def normalize_sup(paths, axis=-2):
    """``|path| / sup |path|`` separately for each component along the time ``axis``.

    For a single path of shape ``(N, 2)`` the columns are ``U1`` and ``U2``.
    """
    a = np.abs(np.asarray(paths, dtype=float))
    sup = np.max(a, axis=axis, keepdims=True)
    if np.any(sup == 0):
        raise ValueError("cannot normalize an identically zero path")
    return a / sup


@dataclass(frozen=True)
class VmfSpec:
    kappa: float = 1.5

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")


def vmf_polar_cosine(u1, kappa):
    """Inverse CDF of ``<x, pole>`` under vMF on S^2: ``log(2 u sinh k + e^-k) / k``.

    Evaluated as ``1 + log(u + (1 - u) e^(-2k)) / k``, which is the same
    quantity without overflow for large ``k``; ``u = 0`` gives exactly -1.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    u1 = np.asarray(u1, dtype=float)
    with np.errstate(divide="ignore"):
        y3 = 1.0 + np.logaddexp(np.log(u1), np.log1p(-u1) - 2.0 * kappa) / kappa
    return np.clip(y3, -1.0, 1.0)


def inverse_vmf(u1, u2, kappa, grid=None):
    """Pointwise inverse vMF transform onto S^2 about the north pole.

    Returns an ``(..., 3)`` array, or a :class:`ManifoldCurve` when ``grid``
    is given.
    """
    y3 = vmf_polar_cosine(u1, kappa)
    r = np.sqrt(np.maximum(0.0, 1.0 - y3 ** 2))
    phi = 2 * np.pi * np.asarray(u2, dtype=float)
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), y3], axis=-1)
    pts = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
    return ManifoldCurve(grid, pts) if grid is not None else pts


def vmf_mean_resultant_length(kappa):
    """``E<x, pole> = coth(k) - 1/k`` on S^2."""
    return 1.0 / np.tanh(kappa) - 1.0 / kappa


def vmf_polar_cdf(y3, kappa):
    """CDF of ``<x, pole>``: ``(e^(k y) - e^-k) / (2 sinh k)``."""
    y3 = np.asarray(y3, dtype=float)
    # e^(k (y - 1)) (1 - e^(-k (y + 1))) / (1 - e^(-2k)) never overflows
    return np.exp(kappa * (y3 - 1.0)) * np.expm1(-kappa * (y3 + 1.0)) / np.expm1(-2.0 * kappa)


def spherical_angles(points):
    """Polar angle from the north pole and azimuth, both for ``(..., 3)`` arrays."""
    p = np.asarray(points, dtype=float)
    theta = np.arctan2(np.hypot(p[..., 0], p[..., 1]), p[..., 2])
    phi = np.arctan2(p[..., 1], p[..., 0])
    return theta, phi


def from_angles(theta, phi):
    s = np.sin(theta)
    return np.stack([s * np.cos(phi), s * np.sin(phi), np.cos(theta)], axis=-1)


def regressor_from_response(y, polar_transform):
    """Curve with the azimuth of ``y`` and polar angle ``polar_transform(theta)``."""
    if y.dim != 3:
        raise ValueError("regressor subordination is defined on S^2")
    theta, phi = spherical_angles(y.points)
    new = np.asarray(polar_transform(theta), dtype=float)
    if np.any(new < 0) or np.any(new > np.pi) or not np.all(np.isfinite(new)):
        raise ValueError("polar transform left [0, pi]")
    return ManifoldCurve(y.grid, from_angles(new, phi))


@dataclass(frozen=True)
class PolarFamily:
    """``theta -> clip(a(s) theta + b(s), eps, pi - eps)`` with ``a, b`` linear in ``s``.

    ``s = i / (n - 1)`` is the relative sample time of curve ``i``.
    """

    a_start: float = 1.0
    a_end: float = 0.7
    b_start: float = 0.2
    b_end: float = 0.5
    eps: float = 1e-3

    def coefficients(self, i, n):
        s = i / (n - 1) if n > 1 else 0.0
        return (self.a_start + s * (self.a_end - self.a_start),
                self.b_start + s * (self.b_end - self.b_start))

    def transform(self, i, n):
        a, b = self.coefficients(i, n)
        return lambda theta: np.clip(a * theta + b, self.eps, np.pi - self.eps)


@dataclass(frozen=True)
class BivariateConfig:
    """Settings of the five-step bivariate generator."""

    n: int = 100
    n_nodes: int = 1000
    interval: tuple = (0.0, 1.0)
    arima: ArimaSpec = field(default_factory=lambda: ArimaSpec(ar=(0.8,), noise_sd=0.3))
    mu: float = 0.1
    x0: tuple = (1.0, 1.0)
    correlated_components: bool = False
    correlation: float = 0.5
    antithetic: bool = False
    vmf: VmfSpec = field(default_factory=VmfSpec)
    polar: PolarFamily = field(default_factory=PolarFamily)
    seed: int = 0


def seed_children(seed):
    """``(arima_seed, sde_seed)`` derived from a master seed."""
    a, s = np.random.SeedSequence(seed).spawn(2)
    return int(a.generate_state(1)[0]), int(s.generate_state(1)[0])


def volatility(cfg):
    arima_seed, _ = seed_children(cfg.seed)
    a = arima_simulate(replace(cfg.arima, n=cfg.n, seed=arima_seed))
    return np.sqrt(np.abs(a))


def generate_bivariate_sample(cfg):
    """Paired response and regressor curves ``(Y, X)`` on S^2.

    Returns
    -------
    Y, X : list of ManifoldCurve
    """
    _, sde_seed = seed_children(cfg.seed)
    grid = TimeGrid(np.linspace(cfg.interval[0], cfg.interval[1], cfg.n_nodes))
    spec = SdeSpec(mu=cfg.mu, v_scale=volatility(cfg), x0=np.asarray(cfg.x0, dtype=float),
                   grid=grid, seed=sde_seed, correlated_components=cfg.correlated_components,
                   correlation=cfg.correlation, antithetic=cfg.antithetic)
    Y, X = [], []
    for i, v in enumerate(spec.v_scale):
        path = euler_path(spec.mu, spec.x0, grid, brownian_increments(spec, i), v)
        u = normalize_sup(path)
        y = inverse_vmf(u[:, 0], u[:, 1], cfg.vmf.kappa, grid)
        Y.append(y)
        X.append(regressor_from_response(y, cfg.polar.transform(i, cfg.n)))
    return Y, X


# ---------------------------------------------------------------------------
# controlled test beds


def tangent_frame(pole):
    """Orthonormal basis ``(2, d0)`` of the tangent plane at ``pole`` (d0 = 3)."""
    pole = geo.check_points(pole)
    helper = np.eye(3)[np.argmin(np.abs(pole))]
    e1 = geo.normalize(helper - np.dot(helper, pole) * pole)
    return np.stack([e1, np.cross(pole, e1)])


def cosine_basis(t, n_modes):
    """``sqrt(2) cos(k pi t)`` for ``k = 1..n_modes`` on ``t`` rescaled to [0, 1]."""
    s = (t - t[0]) / (t[-1] - t[0])
    k = np.arange(1, n_modes + 1)[:, None]
    return np.sqrt(2.0) * np.cos(np.pi * k * s)


def squash(v, radius):
    """Shrink tangent vectors radially to norm ``radius * tanh(|v| / radius)``."""
    r = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, v * (radius * np.tanh(r / radius) / safe), 0.0)


def ar1_scores(rng, n, dim, rho, burn_in=100):
    """Stationary Gaussian AR(1) rows with unit marginal variance."""
    z = rng.standard_normal((n + burn_in, dim))
    out = np.empty_like(z)
    out[0] = z[0]
    s = np.sqrt(1.0 - rho ** 2)
    for k in range(1, len(z)):
        out[k] = rho * out[k - 1] + s * z[k]
    return out[burn_in:]


def cap_tangents(n, grid, radius, seed, rho=0.6, n_modes=4, decay=0.7, pole=NORTH):
    """Tangent fields at ``pole`` of ``n`` smooth curves in the radius cap.

    Mode ``k`` of each frame direction has standard deviation ``decay ** k``
    and AR(1) dependence ``rho`` across samples; the field is squashed so
    every node stays strictly inside the cap.
    """
    rng = np.random.default_rng(seed)
    basis = cosine_basis(grid.nodes, n_modes)
    scale = decay ** np.arange(n_modes)
    c = ar1_scores(rng, n, 2 * n_modes, rho).reshape(n, 2, n_modes) * scale
    frame = tangent_frame(pole)
    fields = np.einsum("ijk,kt,jd->itd", c, basis, frame) * (radius / 2)
    return squash(fields, radius)


def cap_sample(n, n_nodes=200, radius=0.3, seed=0, rho=0.6, n_modes=4, decay=0.7, pole=NORTH):
    """``n`` time-correlated curves inside the geodesic cap of ``radius`` about ``pole``."""
    grid = TimeGrid.uniform(n_nodes)
    v = cap_tangents(n, grid, radius, seed, rho, n_modes, decay, pole)
    pts = geo._exp(np.broadcast_to(pole, v.shape), v)
    return [ManifoldCurve(grid, p) for p in pts]


@dataclass(frozen=True)
class PlantedLagConfig:
    """Responses driven by regressors at fixed lags.

    ``log Y_i = sum_l c_l log X_{i-l} + noise`` in the tangent plane at the
    pole, with regressors i.i.d. across samples.
    """

    n: int = 60
    n_nodes: int = 200
    lags: tuple = (1, 2)
    coefs: tuple = (0.5, 0.5)
    radius: float = 0.6
    n_modes: int = 6
    decay: float = 0.85
    noise: float = 0.02
    rho: float = 0.0
    seed: int = 0


def planted_lag_sample(cfg):
    """``(Y, X)`` with ``Y_i`` a geodesic combination of ``X_{i-l}`` for planted ``l``.

    The first ``max(lags)`` responses use the regressors available, i.e.
    the missing lagged terms are dropped.
    """
    if len(cfg.lags) != len(cfg.coefs):
        raise ValueError("lags and coefs must have equal length")
    grid = TimeGrid.uniform(cfg.n_nodes)
    seed_x, seed_e = np.random.SeedSequence(cfg.seed).spawn(2)
    vx = cap_tangents(cfg.n, grid, cfg.radius, seed_x, cfg.rho, cfg.n_modes, cfg.decay)
    rng = np.random.default_rng(seed_e)
    frame = tangent_frame(NORTH)
    basis = cosine_basis(grid.nodes, cfg.n_modes)
    noise = np.einsum("ijk,kt,jd->itd", rng.standard_normal((cfg.n, 2, cfg.n_modes)), basis, frame)
    vy = cfg.noise * noise
    for lag, c in zip(cfg.lags, cfg.coefs):
        vy[lag:] += c * vx[:cfg.n - lag]
    pole = np.broadcast_to(NORTH, vx.shape)
    X = [ManifoldCurve(grid, p) for p in geo._exp(pole, vx)]
    Y = [ManifoldCurve(grid, p) for p in geo._exp(pole, vy)]
    return Y, X
