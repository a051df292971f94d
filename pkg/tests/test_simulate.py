"""Noise sampling, exact path law, stochastic integrals, Monte Carlo engines."""

import numpy as np
import pytest

from spde_lab import (
    DalangConditionError,
    NoiseModel,
    PathEnsemble,
    SpaceTimeLattice,
    SpectralMeasure,
    kernel_eval,
    mc_covariance,
    mc_isometry,
    mc_isometry_batch,
    mc_representer,
    norm0,
    random_band_limited,
    sample_noise_increment,
    simulate_u,
    stochastic_integral,
)
from spde_lab.markov import covariance_oracle


def _lat(n=32, nt=16, L=8.0, T=1.0):
    return SpaceTimeLattice(1, (L,), (n,), T, nt)


def _model(alpha=2.0, **kw):
    return NoiseModel(SpectralMeasure("bessel", alpha, 1), _lat(**kw))


def test_existence_condition_enforced():
    lat = SpaceTimeLattice(5, (4.0,) * 5, (4,) * 5, 0.5, 4)
    with pytest.raises(DalangConditionError):
        NoiseModel(SpectralMeasure("riesz", 1.0, 5, formal=True), lat)
    with pytest.raises(DalangConditionError):
        NoiseModel(SpectralMeasure("white", 1.0, 2),
                   SpaceTimeLattice(2, (4.0, 4.0), (8, 8), 0.5, 4))


def test_unit_pair_determinism_and_independence():
    model = _model()
    z1a, z2a = model.unit_pair(9, 3, 7)
    z1b, z2b = model.unit_pair(9, 3, 7)
    np.testing.assert_array_equal(z1a, z1b)
    np.testing.assert_array_equal(z2a, z2b)
    z1c, _ = model.unit_pair(9, 3, 8)
    assert not np.array_equal(z1a, z1c)
    z1d, _ = model.unit_pair(9, 4, 7)
    assert not np.array_equal(z1a, z1d)


def test_unit_field_has_unit_mode_variance():
    """E|z(xi)|^2 = 1 for the Hermitian unit field, per mode."""
    model = _model(n=16, nt=4)
    acc = np.zeros(16)
    n = 400
    for p in range(n):
        z1, _ = model.unit_pair(1234, p, 0)
        acc += np.abs(z1) ** 2
    acc /= n
    # 400 samples of a unit-mean variable: allow 5 sigma of chi2 noise
    assert np.max(np.abs(acc - 1.0)) < 5.0 * np.sqrt(2.0 / n)


def test_noise_increment_physical_covariance_matches_kernel():
    """Var of the physical increment at x equals dt * f(0) (matching the
    covariance kernel of the driving noise) within Monte Carlo error."""
    model = _model(n=16, nt=4)
    lat = model.lattice
    n = 2000
    vals = np.empty((n, 16))
    for p in range(n):
        vals[p] = sample_noise_increment(model, 77, p, 0).values.real
    var = vals.var(axis=0)
    f0 = kernel_eval(model.measure, lat).values.real[0]
    expected = lat.dt * f0
    assert np.max(np.abs(var - expected)) < 6.0 * expected * np.sqrt(2.0 / n)


def test_simulate_paths_start_at_zero_and_are_real():
    ens = simulate_u(SpectralMeasure("bessel", 2.0, 1), _lat(), seed=5, n_paths=3)
    assert ens.values.shape == (3, 17, 32)
    assert not np.any(ens.values[:, 0])
    assert np.all(np.isfinite(ens.values))


def test_simulate_is_deterministic_and_thread_oblivious():
    meas = SpectralMeasure("bessel", 2.0, 1)
    lat = _lat(n=16, nt=8)
    a = simulate_u(meas, lat, seed=42, n_paths=7, threads=1).values
    b = simulate_u(meas, lat, seed=42, n_paths=7, threads=4).values
    np.testing.assert_array_equal(a, b)


def test_single_path_variance_matches_oracle():
    """Pathwise marginal variance at the final time matches the covariance
    oracle within Monte Carlo chi-squared error."""
    meas = SpectralMeasure("bessel", 2.0, 1)
    lat = _lat(n=16, nt=8)
    n = 3000
    ens = simulate_u(meas, lat, seed=11, n_paths=n)
    x0 = (1.0, (0.0,))
    exact = covariance_oracle(meas, lat, x0, x0)
    mc = ens.values[:, -1, 0].var()
    assert mc == pytest.approx(exact, abs=5.0 * exact * np.sqrt(2.0 / n))


def test_isometry_small_ensemble():
    model = _model(n=16, nt=8)
    phi = random_band_limited(model.lattice, np.random.default_rng(3))
    row = mc_isometry(model, phi, seed=21, n_paths=1500)
    assert row["exact"] == pytest.approx(norm0(phi, model.measure) ** 2, rel=1e-12)
    assert abs(row["z_score"]) < 5.0


def test_isometry_batch_matches_single():
    model = _model(n=16, nt=8)
    rng = np.random.default_rng(4)
    phis = [random_band_limited(model.lattice, rng) for _ in range(3)]
    batch = mc_isometry_batch(model, phis, seed=8, n_paths=200)
    for phi, row in zip(phis, batch):
        single = mc_isometry(model, phi, seed=8, n_paths=200)
        assert single["mc_var"] == pytest.approx(row["mc_var"], rel=1e-12)


def test_stochastic_integral_mean_zero_linear():
    model = _model(n=16, nt=8)
    rng = np.random.default_rng(5)
    phi = random_band_limited(model.lattice, rng)
    vals = np.array([stochastic_integral(model, phi, 31, p) for p in range(600)])
    sd = norm0(phi, model.measure)
    assert abs(vals.mean()) < 5.0 * sd / np.sqrt(600)


def test_mc_representer_unbiased_for_representer_field():
    """E[M(phi) u(t,x)] should agree with the deterministic representer h."""
    from spde_lab import representer

    model = _model(n=16, nt=8)
    phi = random_band_limited(model.lattice, np.random.default_rng(6))
    elem = representer(phi, model.measure)
    point = (model.lattice.n_time, (3,))  # final slice, site 3
    est = mc_representer(model, phi, point, seed=13, n_paths=4000)
    h_val = elem.h.values.real[point[0], point[1][0]]
    assert abs(est["estimate"] - h_val) < 4.5 * est["stderr"]


def test_mc_covariance_agrees_with_oracle():
    model = _model(n=16, nt=8)
    lat = model.lattice
    pts_idx = [(4, (0,)), (8, (4,)), (6, (9,))]  # (time index, site index)
    pts_phys = [(m * lat.dt, (j[0] * lat.extent[0] / lat.n_space[0],))
                for m, j in pts_idx]
    rep = mc_covariance(model, pts_idx, seed=17, n_paths=4000)
    for i in range(len(pts_idx)):
        for j in range(len(pts_idx)):
            exact = covariance_oracle(model.measure, lat, pts_phys[i], pts_phys[j])
            z = (rep["estimate"][i, j] - exact) / rep["stderr"][i, j]
            assert abs(z) < 4.5


def test_ensemble_save_load_round_trip(tmp_path):
    ens = simulate_u(SpectralMeasure("bessel", 2.0, 1), _lat(n=16, nt=8),
                     seed=3, n_paths=4)
    d = ens.save(tmp_path / "run")
    again = PathEnsemble.load(d)
    np.testing.assert_array_equal(again.values, ens.values)
    assert again.seed == ens.seed
    assert again.measure == ens.measure


def test_ensemble_load_detects_corruption(tmp_path):
    ens = simulate_u(SpectralMeasure("bessel", 2.0, 1), _lat(n=16, nt=8),
                     seed=3, n_paths=2)
    d = ens.save(tmp_path / "run").parent
    victim = sorted(d.glob("path_*.fld"))[0]
    raw = bytearray(victim.read_bytes())
    raw[-1] ^= 0xFF
    victim.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        PathEnsemble.load(d)
