import numpy as np
import pytest
from scipy import stats

from geocurve import simulation as sim
from geocurve.curve import TimeGrid


def test_ar1_moments():
    a = sim.arima_simulate(sim.ArimaSpec(ar=(0.8,), noise_sd=0.3, n=200000, seed=1))
    assert a.var() == pytest.approx(0.09 / (1 - 0.64), rel=0.03)
    assert np.corrcoef(a[:-1], a[1:])[0, 1] == pytest.approx(0.8, abs=0.01)


def test_ma1_autocorrelation():
    a = sim.arima_simulate(sim.ArimaSpec(ma=(0.5,), noise_sd=1.0, n=200000, seed=2))
    assert np.corrcoef(a[:-1], a[1:])[0, 1] == pytest.approx(0.5 / 1.25, abs=0.01)
    assert np.corrcoef(a[:-2], a[2:])[0, 1] == pytest.approx(0.0, abs=0.01)


def test_integration_order_is_cumsum():
    base = sim.arima_simulate(sim.ArimaSpec(ar=(0.5,), n=50, seed=3))
    integrated = sim.arima_simulate(sim.ArimaSpec(ar=(0.5,), i=1, n=50, seed=3))
    np.testing.assert_allclose(integrated, np.cumsum(base))


def test_nonstationary_ar_rejected():
    assert not sim.is_stationary((1.0,))
    assert sim.is_stationary((0.5, 0.3))
    with pytest.raises(ValueError):
        sim.ArimaSpec(ar=(1.2,))


def test_euler_zero_volatility_is_compound_growth():
    grid = TimeGrid.uniform(1001)
    x = sim.euler_path(0.7, np.array([1.0, 2.0]), grid, np.zeros((1000, 2)), v=0.0)
    np.testing.assert_allclose(x[-1], np.array([1.0, 2.0]) * (1 + 0.7e-3) ** 1000, rtol=1e-12)


def test_euler_time_varying_drift():
    grid = TimeGrid.uniform(2001)
    x = sim.euler_path(lambda t: 2 * t, np.array([1.0]), grid, np.zeros((2000, 1)), v=0.0)
    assert x[-1, 0] == pytest.approx(np.e, rel=1e-3)


def test_geometric_brownian_log_mean():
    grid = TimeGrid.uniform(201)
    spec = sim.SdeSpec(mu=0.0, v_scale=np.full(4000, 0.5), x0=np.ones(1), grid=grid, seed=4)
    x = sim.euler_sde(spec)[:, -1, 0]
    # E[X_T] = x0 e^{mu T} for the linear SDE
    assert x.mean() == pytest.approx(1.0, abs=0.03)


def test_brownian_increments_are_independent_of_order():
    spec = sim.SdeSpec(v_scale=np.ones(5), seed=9)
    a = sim.brownian_increments(spec, 3)
    paths = sim.euler_sde(spec)
    np.testing.assert_array_equal(sim.euler_path(spec.mu, spec.x0, spec.grid, a, 1.0), paths[3])


def test_antithetic_pairs_negate():
    spec = sim.SdeSpec(v_scale=np.ones(4), seed=9, antithetic=True)
    np.testing.assert_array_equal(sim.brownian_increments(spec, 2), -sim.brownian_increments(spec, 3))


def test_correlated_components():
    spec = sim.SdeSpec(v_scale=np.ones(1), seed=1, correlated_components=True, correlation=0.6,
                       grid=TimeGrid.uniform(50001))
    dw = sim.brownian_increments(spec, 0)
    assert np.corrcoef(dw.T)[0, 1] == pytest.approx(0.6, abs=0.02)


def test_normalize_sup():
    p = np.array([[1.0, -4.0], [-2.0, 2.0]])
    np.testing.assert_allclose(sim.normalize_sup(p), [[0.5, 1.0], [1.0, 0.5]])
    with pytest.raises(ValueError):
        sim.normalize_sup(np.zeros((3, 2)))


def test_vmf_polar_inverse_cdf_roundtrip():
    u = np.linspace(0, 1, 101)
    for kappa in (0.1, 1.5, 8.0, 500.0):
        y = sim.vmf_polar_cosine(u, kappa)
        assert np.all(np.isfinite(y)) and y[0] == -1.0 and y[-1] == 1.0
        np.testing.assert_allclose(sim.vmf_polar_cdf(y, kappa), u, atol=1e-9)


def test_vmf_moments_and_ks(rng):
    u1, u2 = rng.uniform(size=(2, 50000))
    pts = sim.inverse_vmf(u1, u2, 3.0)
    assert pts[:, 2].mean() == pytest.approx(sim.vmf_mean_resultant_length(3.0), abs=0.01)
    assert stats.kstest(pts[:, 2], lambda y: sim.vmf_polar_cdf(y, 3.0)).statistic < 0.01
    # azimuth is uniform
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    assert stats.kstest((phi + np.pi) / (2 * np.pi), "uniform").statistic < 0.01


def test_spherical_angles_roundtrip(rng):
    th = rng.uniform(0, np.pi, 100)
    ph = rng.uniform(-np.pi, np.pi, 100)
    t2, p2 = sim.spherical_angles(sim.from_angles(th, ph))
    np.testing.assert_allclose(t2, th, atol=1e-12)
    np.testing.assert_allclose(np.cos(p2 - ph), 1.0, atol=1e-12)


def test_polar_family_endpoints():
    fam = sim.PolarFamily()
    assert fam.coefficients(0, 11) == (1.0, 0.2)
    assert fam.coefficients(10, 11) == pytest.approx((0.7, 0.5))
    f = fam.transform(0, 11)
    assert f(np.array([np.pi]))[0] == pytest.approx(np.pi - 1e-3)


def test_bivariate_sample_structure():
    cfg = sim.BivariateConfig(n=6, n_nodes=100, seed=5)
    Y, X = sim.generate_bivariate_sample(cfg)
    assert len(Y) == len(X) == 6
    for y, x in zip(Y, X):
        assert np.max(np.abs(np.linalg.norm(y.points, axis=1) - 1)) < 1e-12
        _, py = sim.spherical_angles(y.points)
        tx, px = sim.spherical_angles(x.points)
        moving = np.hypot(y.points[:, 0], y.points[:, 1]) > 1e-9
        np.testing.assert_allclose(np.cos(px - py)[moving], 1.0, atol=1e-9)
        assert np.all((tx > 0) & (tx < np.pi))
    Y2, _ = sim.generate_bivariate_sample(cfg)
    np.testing.assert_array_equal(Y[3].points, Y2[3].points)


def test_all_kappa_values_run():
    for kappa in (1.5, 8.0, 0.1):
        Y, _ = sim.generate_bivariate_sample(
            sim.BivariateConfig(n=3, n_nodes=1000, vmf=sim.VmfSpec(kappa), seed=0))
        assert len(Y) == 3


def test_cap_sample_stays_in_cap():
    X = sim.cap_sample(30, n_nodes=80, radius=0.3, seed=1)
    pts = np.stack([x.points for x in X])
    assert np.max(np.arccos(np.clip(pts[..., 2], -1, 1))) < 0.3


def test_planted_lag_structure():
    Y, X = sim.planted_lag_sample(sim.PlantedLagConfig(n=20, n_nodes=30, noise=0.0, seed=3))
    from geocurve import geometry as geo
    pole = np.array([0.0, 0, 1])
    ly = geo.log_map(pole, Y[10].points)
    ref = 0.5 * geo.log_map(pole, X[9].points) + 0.5 * geo.log_map(pole, X[8].points)
    np.testing.assert_allclose(ly, ref, atol=1e-12)
    with pytest.raises(ValueError):
        sim.planted_lag_sample(sim.PlantedLagConfig(lags=(1,), coefs=(1.0, 2.0)))
