"""Group spike-and-slab sampler: summaries, EM updates, persistence."""

import math
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

import blog.bglss as bglss
from blog._kernels import gibbs_chain_python
from blog.bglss import (
    ChainSummary,
    GibbsConfig,
    load_beta_draws,
    mcem_lambda_update,
    posterior_median_select,
    run_gibbs,
    save_beta_draws,
)
from blog.deltadesign import DifferencedDesign
from blog.errors import DimensionMismatch, EmptyChain, ValidationError


def toy_design(seed=103, n=120, signal=True):
    rng = np.random.default_rng([seed])
    x = rng.standard_normal((n, 6))
    beta_true = np.array([3.0, -2.0, 4.0, 0.0, 0.0, 0.0])
    y = x @ beta_true + rng.standard_normal(n)
    if not signal:
        y = rng.standard_normal(n)
    return DifferencedDesign(
        y=y, x=x, block_sizes=(3, 3), feature_index=(0, 0, 0, 1, 1, 1)
    )


FAST = GibbsConfig(n_iter=2000, burn_in=1000, mcem_rounds=3, mcem_inner_iters=300, seed=11)


# -----------------------------------------------------------------------
# configuration and layout validation


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_iter=0),
        dict(burn_in=10, n_iter=10),
        dict(seed=-1),
        dict(pi0_beta_a=0.0),
        dict(lambda_init=0.0),
        dict(mcem_rounds=-1),
        dict(mcem_rounds=1, mcem_inner_iters=1),
        dict(sigma2_shape=-0.5),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        GibbsConfig(**kwargs)


def test_design_layout_validation():
    # DifferencedDesign rejects these layouts itself, so feed bare objects
    d = toy_design()
    cases = [
        dict(y=d.y, x=d.x, block_sizes=(4, 2)),
        dict(y=d.y, x=d.x, block_sizes=()),
        dict(y=d.y, x=d.x[:, :5], block_sizes=(3, 3)),
        dict(y=d.y[:-1], x=d.x, block_sizes=(3, 3)),
    ]
    for case in cases:
        with pytest.raises(DimensionMismatch):
            run_gibbs(SimpleNamespace(**case), FAST)


# -----------------------------------------------------------------------
# behaviour on planted designs


def test_strong_signal_is_selected_and_noise_group_is_not():
    summary = run_gibbs(toy_design(), FAST, keep_draws=True)
    assert summary.selected.tolist() == [True, False]
    assert summary.inclusion_prop[0] > 0.99
    assert summary.inclusion_prop[1] < 0.05
    np.testing.assert_allclose(summary.group_medians[0], [3.0, -2.0, 4.0], atol=0.5)
    # unselected group medians are exact zeros, not small numbers
    assert (summary.group_medians[1] == 0.0).all()
    lo, hi = summary.sigma2_interval
    assert lo < 1.0 < hi
    assert summary.n_kept == 1000
    assert summary.draws.beta.shape == (1000, 6)
    assert summary.draws.sigma2.shape == (1000,)
    med = np.median(summary.draws.beta, axis=0).reshape(2, 3)
    np.testing.assert_allclose(med, summary.group_medians, rtol=1e-12, atol=1e-15)


def test_pure_noise_selects_nothing():
    summary = run_gibbs(toy_design(signal=False), FAST)
    assert summary.selected.tolist() == [False, False]
    assert (summary.group_medians == 0.0).all()


def test_rerun_is_bitwise_identical():
    a = run_gibbs(toy_design(), FAST, keep_draws=True)
    b = run_gibbs(toy_design(), FAST, keep_draws=True)
    assert (a.group_medians == b.group_medians).all()
    assert (a.draws.beta == b.draws.beta).all()
    assert (a.lambda_trace == b.lambda_trace).all()
    assert a.sigma2_interval == b.sigma2_interval


def test_interpreted_kernel_gives_identical_summaries(monkeypatch):
    compiled = run_gibbs(toy_design(), FAST, keep_draws=True)
    monkeypatch.setattr(bglss, "gibbs_chain", gibbs_chain_python)
    interpreted = run_gibbs(toy_design(), FAST, keep_draws=True)
    assert (compiled.draws.beta == interpreted.draws.beta).all()
    assert (compiled.draws.tau2 == interpreted.draws.tau2).all()
    assert (compiled.lambda_trace == interpreted.lambda_trace).all()
    assert compiled.sigma2_mean == interpreted.sigma2_mean


def test_column_rescaling_only_rescales_reported_coefficients():
    # power-of-two factor keeps unit-norm standardization bit-exact
    d = toy_design()
    scale = np.ones(6)
    scale[3:] = 128.0
    scaled = DifferencedDesign(
        y=d.y, x=d.x * scale, block_sizes=d.block_sizes, feature_index=d.feature_index
    )
    a = run_gibbs(d, FAST)
    b = run_gibbs(scaled, FAST)
    assert (a.selected == b.selected).all()
    assert (a.inclusion_prop == b.inclusion_prop).all()
    assert (a.lambda_trace == b.lambda_trace).all()
    assert (b.group_medians[1] == a.group_medians[1] / 128.0).all()
    assert (b.group_medians[0] == a.group_medians[0]).all()


def test_lambda_trace_layout():
    summary = run_gibbs(toy_design(), FAST)
    assert summary.lambda_trace.shape == (FAST.mcem_rounds + 1, 2)
    assert (summary.lambda_trace[0] == FAST.lambda_init).all()
    # pooled EM keeps one shared scale
    assert (summary.lambda_trace[:, 0] == summary.lambda_trace[:, 1]).all()

    per_group = run_gibbs(toy_design(), replace(FAST, lambda_per_group=True))
    assert per_group.lambda_trace.shape == (FAST.mcem_rounds + 1, 2)
    # one strong and one empty group must end up with different scales
    assert per_group.lambda_trace[-1, 0] != per_group.lambda_trace[-1, 1]


def test_zero_em_rounds_keeps_initial_scale():
    cfg = replace(FAST, mcem_rounds=0, lambda_init=2.5)
    summary = run_gibbs(toy_design(), cfg)
    assert summary.lambda_trace.shape == (1, 2)
    assert (summary.lambda_trace == 2.5).all()


# -----------------------------------------------------------------------
# EM update


def test_lambda_update_known_value():
    # group means 3 and 4: lambda = sqrt((12 + 2) / 7) = sqrt(2)
    draws = np.array([[2.0, 3.0], [4.0, 5.0]])
    assert mcem_lambda_update(draws, 12, 2) == math.sqrt(2.0)


def test_lambda_update_validation():
    with pytest.raises(ValidationError):
        mcem_lambda_update(np.ones(3), 6, 1)
    with pytest.raises(EmptyChain):
        mcem_lambda_update(np.empty((0, 2)), 6, 2)
    with pytest.raises(DimensionMismatch):
        mcem_lambda_update(np.ones((5, 3)), 6, 2)
    with pytest.raises(ValidationError):
        mcem_lambda_update(np.zeros((5, 2)), 6, 2)


# -----------------------------------------------------------------------
# median selection


def test_posterior_median_select_hand_case():
    draws = np.array(
        [
            [1.0, 2.0, 0.0, 0.0],
            [1.5, 2.5, 0.0, 0.0],
            [0.5, 1.5, 3.0, -1.0],
        ]
    )
    medians, selected = posterior_median_select(draws, (2, 2))
    assert (medians == np.array([[1.0, 2.0], [0.0, 0.0]])).all()
    assert selected.tolist() == [True, False]


def test_posterior_median_select_validation():
    with pytest.raises(ValidationError):
        posterior_median_select(np.ones(4), (2, 2))
    with pytest.raises(EmptyChain):
        posterior_median_select(np.empty((0, 4)), (2, 2))
    with pytest.raises(DimensionMismatch):
        posterior_median_select(np.ones((3, 4)), (2, 3))
    with pytest.raises(DimensionMismatch):
        posterior_median_select(np.ones((3, 4)), (3, 3))


# -----------------------------------------------------------------------
# draw persistence


def test_draw_dump_round_trip(tmp_path):
    rng = np.random.default_rng([121])
    draws = rng.standard_normal((40, 6))
    draws[rng.random((40, 6)) < 0.3] = 0.0
    path = tmp_path / "draws.bin"
    save_beta_draws(draws, path)
    back = load_beta_draws(path)
    assert back.shape == draws.shape
    assert (back == draws).all()


def test_draw_dump_header_validation(tmp_path):
    path = tmp_path / "draws.bin"
    save_beta_draws(np.ones((2, 3)), path)
    raw = bytearray(path.read_bytes())

    truncated = tmp_path / "short.bin"
    truncated.write_bytes(raw[:10])
    with pytest.raises(ValidationError):
        load_beta_draws(truncated)

    wrong_magic = tmp_path / "magic.bin"
    wrong_magic.write_bytes(b"NOPE" + bytes(raw[4:]))
    with pytest.raises(ValidationError):
        load_beta_draws(wrong_magic)

    bad_version = bytearray(raw)
    bad_version[4] = 99
    versioned = tmp_path / "version.bin"
    versioned.write_bytes(bytes(bad_version))
    with pytest.raises(ValidationError):
        load_beta_draws(versioned)

    clipped = tmp_path / "clipped.bin"
    clipped.write_bytes(bytes(raw[:-8]))
    with pytest.raises(ValidationError):
        load_beta_draws(clipped)

    with pytest.raises(ValidationError):
        save_beta_draws(np.ones(5), tmp_path / "flat.bin")
