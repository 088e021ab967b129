import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdcsim.detection import (
    apply_efficiency, detect, hwp_power, hwp_transmission, nd_attenuation,
    photons_to_voltage_area, voltage_area_to_photons,
)
from pdcsim.exceptions import DomainError
from pdcsim.model import DetectorParams
from pdcsim.statistics import g2


def test_efficiency_deterministic():
    assert apply_efficiency(1e6, 0.86) == pytest.approx(8.6e5, rel=1e-15)


@pytest.mark.parametrize("stochastic", [False, True])
def test_lossless_detection(stochastic, rng):
    assert apply_efficiency(1234.0, 1.0, rng, stochastic) == 1234.0


def test_binomial_thinning_mean(rng):
    out = apply_efficiency(np.full(10_000, 1000.0), 0.5, rng, stochastic=True)
    sigma = np.sqrt(1000 * 0.25 / out.size)
    assert abs(out.mean() - 500) < 3 * sigma


def test_gaussian_branch_mean(rng):
    out = apply_efficiency(np.full(10_000, 1e8), 0.86, rng, stochastic=True)
    assert abs(out.mean() - 0.86e8) < 3 * np.sqrt(0.86 * 0.14 * 1e8 / out.size)


@pytest.mark.parametrize("eta", [0.0, -0.1, 1.01])
def test_efficiency_domain(eta):
    with pytest.raises(DomainError):
        apply_efficiency(10.0, eta)


def test_nd_attenuation():
    assert nd_attenuation(1e6, 1.0) == pytest.approx(1e5, rel=1e-15)
    assert nd_attenuation(1e6, 0.0) == 1e6
    assert nd_attenuation(4.3e11, 5.0) == pytest.approx(4.3e6, rel=1e-12)


def test_voltage_area():
    assert photons_to_voltage_area(1, 6.65e-12) == 6.65e-12
    assert photons_to_voltage_area(0, 9.47e-12) == 0
    back = voltage_area_to_photons(photons_to_voltage_area(1e9, 6.65e-12), 6.65e-12)
    assert back == pytest.approx(1e9, rel=1e-12)


@pytest.mark.parametrize("theta, t", [(0, 1.0), (45, 0.0), (22.5, 0.5)])
def test_hwp(theta, t):
    assert hwp_transmission(theta) == pytest.approx(t, abs=1e-15)


def test_hwp_power_scales_maximum():
    assert hwp_power(22.5, 320.0) == pytest.approx(160.0, rel=1e-12)


ensembles = arrays(np.float64, st.integers(2, 50), elements=st.floats(1.0, 1e10))


@given(ensembles, st.floats(0.01, 1.0), st.floats(0, 8))
def test_deterministic_losses_keep_g2(x, eta, od):
    assert g2(apply_efficiency(x, eta)) == pytest.approx(g2(x), rel=1e-12)
    assert g2(nd_attenuation(x, od)) == pytest.approx(g2(x), rel=1e-12)


@given(st.floats(0, 1e12), st.floats(0.01, 1.0), st.floats(0, 8))
def test_losses_commute(n, eta, od):
    a = nd_attenuation(apply_efficiency(n, eta), od)
    b = apply_efficiency(nd_attenuation(n, od), eta)
    assert a == pytest.approx(b, rel=1e-14)


def test_detect_chain_deterministic_and_ordered():
    det = DetectorParams(0.86, 6.65e-12, 5.0)
    n = np.array([1e11, 2e11])
    np.testing.assert_allclose(detect(n, det), 0.86 * n, rtol=1e-12)


def test_detect_chain_thins_small_numbers(rng):
    det = DetectorParams(0.5, 9.47e-12, 0.0)
    out = detect(np.full(4000, 100.0), det, rng)
    np.testing.assert_allclose(out, np.rint(out), rtol=1e-12)
    assert abs(out.mean() - 50) < 3 * np.sqrt(25 / out.size)
