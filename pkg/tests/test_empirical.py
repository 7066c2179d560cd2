"""Sampled-data pathway: noise-level sampling, Monte Carlo risk, SGD training."""

import math

import numpy as np
import pytest

from noisealloc.core import BinDistribution, check_trainer, make_grid
from noisealloc.empirical import (
    LOG_LOSS_FLOOR,
    SampleBatch,
    SgdConfig,
    SgdLinearTrainer,
    derive_rng,
    derive_seed,
    generate_pairs,
    log_risk_of_losses,
    mc_conditional_risk,
    mc_log_baseline,
    mc_log_conditional_risk,
    sample_noise_levels,
    sgd_train_linear,
)
from noisealloc.exceptions import DivergenceError, UnnormalizedWeightsError
from noisealloc.linear import (
    LinearEstimator,
    baseline_table,
    log_conditional_risk,
    train_closed_form,
)

# ---------------------------------------------------------------------------
# noise-level sampling


def test_sample_noise_levels_point_mass():
    grid = make_grid(0, 10, 4)
    pi = BinDistribution.point_mass(grid, 3)
    out = sample_noise_levels(pi, 5, 0)
    np.testing.assert_array_equal(out, np.full(5, grid.representatives[3]))


def test_sample_noise_levels_uniform_frequencies():
    grid = make_grid(0, 100, 10)
    pi = BinDistribution.uniform(grid)
    out = sample_noise_levels(pi, 100_000, 42)
    for rep in grid.representatives:
        freq = float(np.mean(out == rep))
        assert abs(freq - 0.1) <= 0.005


def test_sample_noise_levels_skewed_frequencies():
    grid = make_grid(0, 10, 2)
    pi = BinDistribution(grid, [0.8, 0.2])
    out = sample_noise_levels(pi, 10_000, 7)
    freq = float(np.mean(out == grid.representatives[0]))
    assert abs(freq - 0.8) <= 0.016


def test_sample_noise_levels_total_variation(rng):
    grid = make_grid(0, 10, 40)
    w = rng.dirichlet(np.ones(40))
    pi = BinDistribution(grid, w / w.sum())
    out = sample_noise_levels(pi, 1_000_000, 123)
    freqs = np.array([np.mean(out == rep) for rep in grid.representatives])
    assert 0.5 * float(np.abs(freqs - pi.weights).sum()) <= 0.01


def test_sample_noise_levels_deterministic():
    grid = make_grid(0, 10, 5)
    pi = BinDistribution.uniform(grid)
    np.testing.assert_array_equal(
        sample_noise_levels(pi, 1000, 11), sample_noise_levels(pi, 1000, 11)
    )


def test_sample_noise_levels_validation():
    grid = make_grid(0, 10, 2)
    with pytest.raises(UnnormalizedWeightsError):
        sample_noise_levels(BinDistribution.multiplier(grid, [2.0, 3.0]), 10, 0)
    with pytest.raises(ValueError):
        sample_noise_levels(BinDistribution.uniform(grid), 0, 0)


# ---------------------------------------------------------------------------
# pair generation


def test_generate_pairs_zero_noise_reproduces_signal(model):
    batch = generate_pairs(model, np.zeros(100), 3)
    np.testing.assert_array_equal(batch.x, batch.y)


def test_generate_pairs_moments(model):
    batch = generate_pairs(model, np.full(1_000_000, 10.0), 20240814)
    # var(x) = sigma_y^2 + sigma^2, cov(x, y) = sigma_y^2
    assert abs(float(np.var(batch.x)) - 200.0) <= 1.5
    assert abs(float(np.cov(batch.x, batch.y)[0, 1]) - 100.0) <= 1.5


def test_generate_pairs_deterministic(model):
    b1 = generate_pairs(model, np.full(50, 3.0), 99)
    b2 = generate_pairs(model, np.full(50, 3.0), 99)
    np.testing.assert_array_equal(b1.x, b2.x)
    np.testing.assert_array_equal(b1.y, b2.y)
    assert b1.seed == 99


def test_generate_pairs_rejects_empty(model):
    with pytest.raises(ValueError):
        generate_pairs(model, np.array([]), 0)


def test_sample_batch_shape_check():
    with pytest.raises(ValueError):
        SampleBatch(x=np.zeros(3), y=np.zeros(2), sigma=np.zeros(3))
    batch = SampleBatch(x=np.zeros(3), y=np.zeros(3), sigma=np.zeros(3))
    assert len(batch) == 3


# ---------------------------------------------------------------------------
# Monte Carlo risk


def test_mc_risk_exact_estimator_zero_noise(model):
    mean, stderr = mc_conditional_risk(LinearEstimator(1.0), model, 0.0, 100, 0)
    assert mean == 0.0 and stderr == 0.0


def test_mc_risk_zero_estimator_signal_variance(model):
    mean, stderr = mc_conditional_risk(LinearEstimator(0.0), model, 5.0, 100_000, 8)
    assert stderr > 0
    assert abs(mean - 100.0) <= 4.0 * stderr


def test_mc_risk_requires_two_samples(model):
    with pytest.raises(ValueError):
        mc_conditional_risk(LinearEstimator(0.5), model, 1.0, 1, 0)


# ---------------------------------------------------------------------------
# log-domain estimates


def test_log_risk_of_constant_losses():
    mean, stderr = log_risk_of_losses(np.full(10, 2.5))
    assert mean == pytest.approx(math.log(2.5), rel=1e-15)
    # identical logs: stderr is zero up to catastrophic-cancellation dust
    assert stderr <= 1e-15


def test_log_risk_floors_zero_losses():
    mean, _ = log_risk_of_losses(np.zeros(4))
    assert mean == pytest.approx(math.log(LOG_LOSS_FLOOR), rel=1e-15)


def test_mc_log_risk_matches_exact_value(model):
    est = LinearEstimator(0.5)
    exact = float(log_conditional_risk(model, est, 10.0))
    mean, stderr = mc_log_conditional_risk(est, model, 10.0, 100_000, 5)
    assert abs(mean - exact) <= 4.0 * stderr


def test_mc_log_risk_seed_consistency(model):
    est = LinearEstimator(0.3)
    m1, s1 = mc_log_conditional_risk(est, model, 4.0, 50_000, 1)
    m2, s2 = mc_log_conditional_risk(est, model, 4.0, 50_000, 2)
    assert abs(m1 - m2) <= 4.0 * math.hypot(s1, s2)


def test_mc_log_baseline_tracks_exact_normalizers(model):
    grid = make_grid(0, 10, 5)
    exact = baseline_table(model, grid).log_values
    mc = mc_log_baseline(model, grid, n=20_000, seed=0)
    assert np.all(np.abs(np.log(mc) - np.log(exact)) <= 0.07)


# ---------------------------------------------------------------------------
# derived streams


def test_derive_seed_deterministic_and_distinct():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert derive_seed(0, 1) != derive_seed(0, 2)
    assert derive_seed(0, 1) != derive_seed(1, 1)


def test_derive_rng_streams_are_reproducible():
    a = derive_rng(7, 1, 3).random(5)
    b = derive_rng(7, 1, 3).random(5)
    c = derive_rng(7, 1, 4).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


# ---------------------------------------------------------------------------
# SGD training


def test_sgd_config_validation():
    with pytest.raises(ValueError):
        SgdConfig(epochs_per_round=0)
    with pytest.raises(ValueError):
        SgdConfig(batch_size=-1)
    with pytest.raises(ValueError):
        SgdConfig(step_size=-1e-3)
    assert SgdConfig(step_size=0.0).step_size == 0.0


def test_sgd_zero_step_returns_warm_start(model):
    grid = make_grid(0, 10, 4)
    pi = BinDistribution.uniform(grid)
    warm = LinearEstimator(0.37)
    out = sgd_train_linear(model, pi, SgdConfig(step_size=0.0), warm_start=warm)
    assert out is warm


def test_sgd_point_mass_recovers_half_gain(model):
    grid = make_grid(0, 20, 1)
    pi = BinDistribution.point_mass(grid, 0)
    # batch 512 at step 3e-4 keeps the constant-step noise floor under ~0.007
    out = sgd_train_linear(model, pi, SgdConfig(batch_size=512, step_size=3e-4, seed=3))
    assert abs(out.a - 0.5) <= 0.015


def test_sgd_uniform_fine_grid_matches_closed_form(model, grid10):
    pi = BinDistribution.uniform(grid10)
    target = train_closed_form(model, pi).a
    out = sgd_train_linear(model, pi, SgdConfig(batch_size=512, step_size=3e-4, seed=5))
    assert abs(out.a - target) <= 0.015


def test_sgd_uniform_coarse_grid_matches_closed_form(model):
    # Wide noise range: the quadratic's curvature is ~2 * 3525, so the step
    # must be much smaller than on the [0, 10] grid.
    grid = make_grid(0, 100, 10)
    pi = BinDistribution.uniform(grid)
    target = train_closed_form(model, pi).a
    cfg = SgdConfig(epochs_per_round=20, batches_per_epoch=50, batch_size=512, step_size=2e-5, seed=1)
    out = sgd_train_linear(model, pi, cfg)
    assert abs(out.a - target) <= 0.005


def test_sgd_deterministic_given_seed(model, grid10):
    pi = BinDistribution.uniform(grid10)
    cfg = SgdConfig(epochs_per_round=2, seed=9)
    assert sgd_train_linear(model, pi, cfg).a == sgd_train_linear(model, pi, cfg).a


def test_sgd_warm_start_chain_refines(model):
    grid = make_grid(0, 20, 1)
    pi = BinDistribution.point_mass(grid, 0)
    est = LinearEstimator(0.0)
    # decaying steps: later rounds shrink the noise floor of earlier rounds
    for step in (1e-3, 2e-4, 4e-5):
        cfg = SgdConfig(epochs_per_round=5, step_size=step, seed=13)
        est = sgd_train_linear(model, pi, cfg, warm_start=est)
    assert abs(est.a - 0.5) <= 0.01


def test_sgd_diverges_with_oversized_step(model):
    grid = make_grid(0, 20, 1)
    pi = BinDistribution.point_mass(grid, 0)
    with pytest.raises(DivergenceError):
        sgd_train_linear(model, pi, SgdConfig(step_size=0.1, seed=0))


def test_sgd_rejects_unnormalized_weights(model):
    grid = make_grid(0, 10, 2)
    lam = BinDistribution.multiplier(grid, [1.0, 2.0])
    with pytest.raises(UnnormalizedWeightsError):
        sgd_train_linear(model, lam, SgdConfig())


# ---------------------------------------------------------------------------
# SGD trainer contract


def test_sgd_trainer_satisfies_contract(model):
    trainer = SgdLinearTrainer(model, make_grid(0, 10, 4))
    check_trainer(trainer)


def test_sgd_trainer_replays_identically(model):
    grid = make_grid(0, 10, 4)
    pi = BinDistribution.uniform(grid)
    kwargs = dict(sgd=SgdConfig(epochs_per_round=2), mc_samples=2000, seed=17)
    t1 = SgdLinearTrainer(model, grid, **kwargs)
    t2 = SgdLinearTrainer(model, grid, **kwargs)
    h1, h2 = t1.train(pi), t2.train(pi)
    assert h1.params.a == h2.params.a
    r1, r2 = t1.evaluate(h1, grid), t2.evaluate(h2, grid)
    np.testing.assert_array_equal(r1.values, r2.values)
    np.testing.assert_array_equal(r1.stderr, r2.stderr)


def test_sgd_trainer_reevaluation_is_stable(model):
    # Evaluation seeds key on (round, bin), not on call order.
    grid = make_grid(0, 10, 3)
    trainer = SgdLinearTrainer(model, grid, sgd=SgdConfig(epochs_per_round=1), mc_samples=1000, seed=2)
    handle = trainer.train(BinDistribution.uniform(grid))
    first = trainer.evaluate(handle, grid)
    second = trainer.evaluate(handle, grid)
    np.testing.assert_array_equal(first.values, second.values)


def test_sgd_trainer_reports_stderr_and_rounds(model):
    grid = make_grid(0, 10, 3)
    trainer = SgdLinearTrainer(model, grid, sgd=SgdConfig(epochs_per_round=1), mc_samples=1000, seed=4)
    pi = BinDistribution.uniform(grid)
    h0 = trainer.train(pi)
    h1 = trainer.train(pi)
    assert (h0.round_index, h1.round_index) == (0, 1)
    risk = trainer.evaluate(h1, grid)
    assert risk.stderr is not None and np.all(risk.stderr > 0)
    log_risk = trainer.evaluate_log(h1, grid)
    assert log_risk.stderr is not None and np.all(log_risk.stderr > 0)


def test_sgd_trainer_rejects_tiny_mc_budget(model):
    with pytest.raises(ValueError):
        SgdLinearTrainer(model, make_grid(0, 10, 2), mc_samples=1)
