import math

import numpy as np
import pytest

from decayquench import dynamics as dyn
from decayquench import oracles
from decayquench.errors import InvalidParameterError, NumericalError
from decayquench.oracles import CaseIIParams, CaseIParams

P1 = CaseIParams(1.0)


@pytest.mark.parametrize("t, expected", [(0.0, 1.0), (math.pi / 4, 0.5), (math.pi / 2, 0.0)])
def test_case1_probability(t, expected):
    assert oracles.case1_probability(P1, t) == pytest.approx(expected, abs=1e-15)


def test_case1_entangled():
    tau = np.linspace(0, 5, 51)
    np.testing.assert_allclose(oracles.case1_entangled(P1, math.pi / 4, tau), 0.5, atol=1e-15)
    np.testing.assert_allclose(oracles.case1_entangled(P1, 0.0, tau), np.cos(tau) ** 2, atol=1e-15)
    assert oracles.case1_entangled(P1, math.pi / 8, math.pi / 8) == pytest.approx(0.75, abs=1e-15)


def test_case1_entangled_rate():
    tau = np.linspace(0.01, 5, 50)
    np.testing.assert_allclose(oracles.case1_entangled_rate(P1, math.pi / 4, tau), 0.0, atol=1e-15)
    assert oracles.case1_entangled_rate(P1, 3 * math.pi / 8, math.pi / 8) == pytest.approx(-0.5, abs=1e-15)
    assert abs(oracles.case1_entangled_rate(P1, 0.4, 1e-9)) < 1e-8


def test_case1_rate_is_derivative_of_entangled():
    p = CaseIParams(0.7)
    h = 1e-6
    for t, tau in [(0.2, 0.3), (1.4, 2.0), (2.2, 0.05)]:
        fd = (oracles.case1_entangled(p, t, tau - h) - oracles.case1_entangled(p, t, tau + h)) / (2 * h)
        assert oracles.case1_entangled_rate(p, t, tau) == pytest.approx(fd, abs=1e-8)


@pytest.mark.parametrize("dt", [0.1, 0.5, math.pi / 8, 1.3])
def test_zeno_closed_single_event(dt):
    assert oracles.zeno_incoherent_closed(P1, 1, dt) == pytest.approx(math.cos(dt) ** 2, abs=1e-15)
    assert oracles.zeno_filtered_closed(P1, 1, dt) == pytest.approx(math.cos(dt) ** 2, abs=1e-15)


def test_zeno_closed_values():
    assert oracles.zeno_incoherent_closed(P1, 2, math.pi / 8) == pytest.approx(0.75, abs=1e-15)
    assert oracles.zeno_filtered_closed(P1, 2, math.pi / 8) == pytest.approx(0.7285533905932737, abs=1e-15)
    assert oracles.zeno_incoherent_closed(P1, 500, math.pi / 4) == pytest.approx(0.5, abs=1e-15)
    assert oracles.zeno_filtered_closed(P1, 10_000, math.pi / 8) < 1e-6


def test_breit_wigner_shape():
    p = CaseIIParams(0.3, 1.2)
    peak = oracles.breit_wigner_density(p, 1.2)
    assert peak == pytest.approx(2 / (math.pi * 0.3), rel=1e-15)
    for side in (1.2 - 0.15, 1.2 + 0.15):
        assert oracles.breit_wigner_density(p, side) == pytest.approx(peak / 2, rel=1e-14)
    # omega = centre + (gamma/2) tan(theta) maps the real line onto (-pi/2, pi/2)
    theta = np.linspace(-math.pi / 2, math.pi / 2, 200_001)[1:-1]
    omega = 1.2 + 0.15 * np.tan(theta)
    jac = 0.15 / np.cos(theta) ** 2
    total = np.trapezoid(oracles.breit_wigner_density(p, omega) * jac, theta)
    assert total == pytest.approx(1.0, abs=1e-4)


def test_exponential_law():
    p = CaseIIParams(0.0157, 0.4)
    assert oracles.exponential_amplitude(p, 0.0) == 1.0
    assert abs(oracles.exponential_amplitude(p, 1 / p.gamma)) ** 2 == pytest.approx(math.exp(-1), rel=1e-14)
    for with_phase in (False, True):
        a = lambda t: oracles.exponential_amplitude(p, t, with_phase=with_phase)
        assert a(3.0 + 11.0) == pytest.approx(a(3.0) * a(11.0), rel=1e-14)
    assert oracles.exponential_rate(p, 0.0) == pytest.approx(p.gamma, rel=1e-15)
    assert oracles.exponential_rate(p, 1 / p.gamma) == pytest.approx(p.gamma / math.e, rel=1e-14)


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        CaseIParams(0.0)
    with pytest.raises(InvalidParameterError):
        CaseIIParams(-1.0)
    assert CaseIIParams.from_flat_band(0.005, 0.01).gamma == pytest.approx(0.015707963267948967, rel=1e-14)


class _Series:
    def __init__(self, grid, values):
        self.grid = np.asarray(grid)
        self.values = np.asarray(values)


def test_fit_gamma_synthetic():
    gamma = 0.0157
    t = np.linspace(0, 300, 301)
    fit = oracles.fit_gamma(_Series(t, np.exp(-gamma * t / 2) * np.exp(-0.3j * t)), (10.0, 200.0))
    assert abs(fit.gamma - gamma) < 1e-10
    assert fit.residual < 1e-12


def test_fit_gamma_flat_band(flat_band, flat_band_model):
    gamma = flat_band_model.predicted_gamma()
    grid = np.linspace(0.0, 3.0 / gamma, 1201)
    series = dyn.amplitude_series(flat_band, grid)
    fit = oracles.fit_gamma(series, (0.5 / gamma, 2.5 / gamma), recurrence_time=flat_band_model.recurrence_time())
    assert fit.gamma == pytest.approx(gamma, rel=0.03)


def test_fit_gamma_two_mode_flags_residual(two_mode):
    series = dyn.amplitude_series(two_mode, np.linspace(0, 1.4, 141))
    fit = oracles.fit_gamma(series, (0.1, 1.4))
    assert fit.residual > 0.1


def test_fit_gamma_errors():
    t = np.linspace(0, 10, 11)
    s = _Series(t, np.exp(-0.1 * t))
    with pytest.raises(InvalidParameterError):
        oracles.fit_gamma(s, (5.0, 20.0))
    with pytest.raises(InvalidParameterError):
        oracles.fit_gamma(s, (2.0, 8.0), recurrence_time=6.0)
    with pytest.raises(InvalidParameterError):
        oracles.fit_gamma(_Series(t, np.zeros(11)), (0.0, 10.0))
    with pytest.raises(NumericalError):
        oracles.fit_gamma(_Series(t, np.ones(11)), (0.0, 10.0))
