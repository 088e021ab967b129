import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdcsim.dynamics import run_ensemble
from pdcsim.exceptions import DomainError, NonThermalError, UndefinedStatisticError
from pdcsim.statistics import (
    g2, g2_stderr, mode_count_from_g2, multithermal_ensemble, summarize, variance_from_g2,
)

positive_ensembles = arrays(np.float64, st.integers(2, 60), elements=st.floats(1e-3, 1e9))


def test_g2_constant_ensemble():
    assert g2(np.full(100, 3.7e8)) == 1.0


def test_g2_two_point():
    assert g2([0.0, 2e6] * 50) == 2.0


def test_g2_exponential(rng):
    assert g2(rng.exponential(5e4, 100_000)) == pytest.approx(2.0, abs=0.03)


def test_g2_zero_mean():
    with pytest.raises(UndefinedStatisticError):
        g2(np.zeros(10))
    with pytest.raises(DomainError):
        g2([])


def test_g2_normal_order_poisson(rng):
    assert g2(rng.poisson(20.0, 200_000), normal_order=True) == pytest.approx(1.0, abs=0.01)


def test_variance_from_g2():
    assert variance_from_g2(1e6, 1.0) == 1e6
    assert variance_from_g2(1e6, 2.0) == 1e6 + 1e12
    assert variance_from_g2(1e6, 1 + 1 / 18) == pytest.approx(55556555555.555556, rel=1e-12)


@pytest.mark.parametrize("g, M", [(1.05556, 17.99856), (2.0, 1.0), (1.5, 2.0)])
def test_mode_count(g, M):
    assert mode_count_from_g2(g) == pytest.approx(M, rel=1e-5)


def test_mode_count_eighteen_modes():
    assert round(mode_count_from_g2(1.05556)) == 18


@pytest.mark.parametrize("g", [1.0, 0.9])
def test_mode_count_non_thermal(g):
    with pytest.raises(NonThermalError):
        mode_count_from_g2(g)


def test_bootstrap_constant_is_zero():
    assert g2_stderr(np.full(50, 12.0), 200, rng=1) == 0.0


def test_bootstrap_reproducible(rng):
    x = rng.exponential(1.0, 500)
    assert g2_stderr(x, 300, rng=9) == g2_stderr(x, 300, rng=9)


def test_bootstrap_preconditions(rng):
    with pytest.raises(DomainError):
        g2_stderr(np.ones(5), 200)
    with pytest.raises(DomainError):
        g2_stderr(np.ones(50), 50)


def test_bootstrap_matches_repeated_experiments(rng):
    spread = np.std([g2(rng.exponential(1.0, 2000)) for _ in range(200)])
    boot = g2_stderr(rng.exponential(1.0, 2000), 1000, rng=rng)
    assert spread / 2 < boot < 2 * spread


def test_summarize_multithermal(rng):
    x = multithermal_ensemble(1e9, 18, 2000, rng)
    s = summarize(x, rng=rng)
    assert s.n_pulses == 2000 and s.var_n >= 0
    assert abs(s.g2 - (1 + 1 / 18)) < 3 * s.g2_stderr
    assert 16 <= mode_count_from_g2(s.g2) <= 20


def test_summarize_simulated_undepleted_signal(nominal_cfg):
    ens = run_ensemble(nominal_cfg, (6 / nominal_cfg.gain_coeff_b) ** 2)
    s = summarize(ens.n_signal, rng=1)
    assert abs(s.g2 - (1 + 1 / nominal_cfg.mode_count_M)) < 3 * s.g2_stderr


def test_summarize_coherent_pump(nominal_cfg):
    ens = run_ensemble(nominal_cfg.replace(pulses_per_point=200), 1.0)
    s = summarize(ens.n_pump_out, n_resamples=200, rng=1)
    # float rounding of <N^2>/<N>^2 at N ~ 1e9 sits near 1e-16
    assert abs(s.g2 - 1) <= 3 * s.g2_stderr + 1e-12


@given(positive_ensembles, st.floats(1e-6, 1e6))
def test_scale_invariance(x, c):
    assert g2(c * x) == pytest.approx(g2(x), rel=1e-12)


@given(positive_ensembles)
def test_variance_identity(x):
    # g2 is stored near 1, so the identity holds to rounding of <N^2>
    m = x.mean()
    assert abs(variance_from_g2(m, g2(x)) - (x.var() + m)) <= 1e-12 * np.mean(x * x)


@given(st.integers(1, 10_000))
def test_mode_count_inverts(M):
    assert mode_count_from_g2(1 + 1 / M) == pytest.approx(M, rel=1e-12)


def test_normal_order_difference(rng):
    x = rng.normal(1e10, 1e8, 1000)
    diff = g2(x) - g2(x, normal_order=True)
    assert diff == pytest.approx(1 / x.mean(), rel=1e-6)
    assert diff < 1e-9
