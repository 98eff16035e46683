import math

import numpy as np
import pytest

from decayquench import dynamics as dyn
from decayquench import oracles, zeno
from decayquench.errors import InvalidParameterError
from decayquench.zeno import SectorDensityMatrix, ZenoSchedule

from conftest import expm_taylor, random_model, solve

CASE1 = oracles.CaseIParams(1.0)


def _random_rho(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    m = x @ x.conj().T
    return SectorDensityMatrix(m / np.trace(m).real)


def test_initial_state(two_mode):
    rho = zeno.initial_state(two_mode)
    np.testing.assert_array_equal(rho.entries, [[1, 0], [0, 0]])
    assert rho.trace == 1.0
    assert rho.purity == 1.0
    rho.check()


def test_evolve_identity_and_case1(two_mode):
    rho = zeno.initial_state(two_mode)
    np.testing.assert_allclose(zeno.evolve(rho, two_mode, 0.0).entries, rho.entries, atol=1e-15)
    after = zeno.evolve(rho, two_mode, math.pi / 4)
    assert after.survival == pytest.approx(0.5, abs=1e-15)


def test_evolve_matches_taylor_propagator(three_mode):
    rng = np.random.default_rng(2)
    rho = _random_rho(rng, 3)
    u = expm_taylor(three_mode.hamiltonian.matrix(), 1.7)
    expected = u @ rho.entries @ u.conj().T
    np.testing.assert_allclose(zeno.evolve(rho, three_mode, 1.7).entries, expected, atol=1e-12)


def test_evolve_group_and_spectrum():
    rng = np.random.default_rng(4)
    for _ in range(10):
        e = solve(random_model(rng, k_max=8))
        rho = _random_rho(rng, e.dimension)
        t1, t2 = rng.uniform(-3, 3, size=2)
        two = zeno.evolve(zeno.evolve(rho, e, t1), e, t2)
        one = zeno.evolve(rho, e, t1 + t2)
        assert np.max(np.abs(two.entries - one.entries)) < 1e-12
        np.testing.assert_allclose(np.linalg.eigvalsh(one.entries), np.linalg.eigvalsh(rho.entries), atol=1e-12)
        one.check()


def test_evolve_dimension_mismatch(two_mode, three_mode):
    with pytest.raises(InvalidParameterError):
        zeno.evolve(zeno.initial_state(two_mode), three_mode, 1.0)


def test_dephase_reproduces_incoherent_mixture(two_mode):
    for t in (0.3, math.pi / 4, 1.1):
        rho = zeno.dephase(zeno.evolve(zeno.initial_state(two_mode), two_mode, t))
        np.testing.assert_allclose(rho.entries, np.diag([math.cos(t) ** 2, math.sin(t) ** 2]), atol=1e-15)


def test_dephase_properties():
    rng = np.random.default_rng(6)
    for n in (2, 3, 7):
        rho = _random_rho(rng, n)
        d = zeno.dephase(rho)
        assert abs(d.trace - rho.trace) < 1e-12
        np.testing.assert_array_equal(zeno.dephase(d).entries, d.entries)
        assert not d.entries[0, 1:].any() and not d.entries[1:, 0].any()
        np.testing.assert_array_equal(d.entries[1:, 1:], rho.entries[1:, 1:])
        d.check()
    init = zeno.initial_state(solve(random_model(rng)))
    np.testing.assert_array_equal(zeno.dephase(init).entries, init.entries)


def test_filter(two_mode):
    init = zeno.initial_state(two_mode)
    kept, w = zeno.filter(init)
    np.testing.assert_array_equal(kept.entries, init.entries)
    assert w == 1.0
    dt = 0.37
    kept, w = zeno.filter(zeno.evolve(init, two_mode, dt))
    assert w == pytest.approx(math.cos(dt) ** 2, abs=1e-15)
    assert kept.trace == pytest.approx(w, abs=1e-15)
    kept.check(weight=w)
    rng = np.random.default_rng(0)
    for _ in range(20):
        _, w = zeno.filter(_random_rho(rng, 4))
        assert 0.0 <= w <= 1.0


def test_survival_rate_finite_difference(three_mode):
    rng = np.random.default_rng(1)
    rho = _random_rho(rng, 3)
    h = 1e-5
    fd = (zeno.evolve(rho, three_mode, -h).survival - zeno.evolve(rho, three_mode, h).survival) / (2 * h)
    assert abs(zeno.survival_rate(rho, three_mode) - fd) < 1e-8


def test_run_schedule_examples(two_mode):
    inc = zeno.run_schedule(two_mode, ZenoSchedule(2, math.pi / 8, "incoherent"))
    assert inc.final == pytest.approx(0.75, abs=1e-14)
    fil = zeno.run_schedule(two_mode, ZenoSchedule(2, math.pi / 8, "filtered"))
    assert fil.final == pytest.approx(0.7285533905932737, abs=1e-14)
    assert inc.survival[0] == fil.survival[0] == 1.0
    assert fil.weights == pytest.approx([math.cos(math.pi / 8) ** 2] * 2, abs=1e-14)


def test_run_schedule_single_event_modes_agree():
    rng = np.random.default_rng(13)
    for _ in range(10):
        e = solve(random_model(rng))
        dt = float(rng.uniform(0.1, 3.0))
        inc = zeno.run_schedule(e, ZenoSchedule(1, dt, "incoherent")).final
        fil = zeno.run_schedule(e, ZenoSchedule(1, dt, "filtered")).final
        p = dyn.survival_probability(e, dt)
        assert abs(inc - p) < 1e-12 and abs(fil - p) < 1e-12


def test_run_schedule_matches_site_basis_maps():
    rng = np.random.default_rng(17)
    for mode in zeno.MODES:
        e = solve(random_model(rng, k_max=6))
        dt = 0.45
        rho = zeno.initial_state(e)
        expected = [1.0]
        weight = 1.0
        for _ in range(6):
            rho = zeno.evolve(rho, e, dt)
            if mode == "incoherent":
                rho = zeno.dephase(rho)
                expected.append(rho.survival)
            else:
                rho, weight = zeno.filter(rho)
                expected.append(weight)
        got = zeno.run_schedule(e, ZenoSchedule(6, dt, mode)).survival
        np.testing.assert_allclose(got, expected, atol=1e-12)


@pytest.mark.parametrize("gdt", [math.pi / 16, math.pi / 8, math.pi / 4, 0.3])
def test_closed_forms_two_mode(two_mode, gdt):
    inc = zeno.run_schedule(two_mode, ZenoSchedule(64, gdt, "incoherent")).survival
    fil = zeno.run_schedule(two_mode, ZenoSchedule(64, gdt, "filtered")).survival
    for n in range(1, 65):
        assert abs(inc[n] - oracles.zeno_incoherent_closed(CASE1, n, gdt)) < 1e-10
        assert abs(fil[n] - oracles.zeno_filtered_closed(CASE1, n, gdt)) < 1e-10
        if n >= 2 and gdt < math.pi / 4:
            assert inc[n] - fil[n] > 0
    if gdt < math.pi / 4:
        assert np.all(np.diff(inc) < 0) and np.all(inc >= 0.5)


def test_filter_weights_multiply():
    e = solve(random_model(np.random.default_rng(30)))
    r = zeno.run_schedule(e, ZenoSchedule(8, 0.5, "filtered"))
    np.testing.assert_allclose(np.cumprod(r.weights), r.survival[1:], rtol=1e-12)


def test_zeno_limit_scan_protocols(two_mode):
    rows = zeno.zeno_limit_scan(two_mode, [1, 10, 100, 1000], total_t=math.pi / 2)
    p = [r.incoherent for r in rows]
    assert all(b > a for a, b in zip(p, p[1:]))
    assert p[-1] > 0.995
    rows = zeno.zeno_limit_scan(two_mode, [1, 2, 10, 50], delta_t=math.pi / 8)
    q50 = rows[-1].filtered
    assert q50 == pytest.approx(math.cos(math.pi / 8) ** 100, rel=1e-10)
    assert q50 < 2e-2
    p = [r.incoherent for r in rows]
    assert all(b < a for a, b in zip(p, p[1:])) and p[-1] > 0.5
    assert rows[0].incoherent == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-14)
    assert rows[0].filtered == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-14)


def test_zeno_limit_scan_validation(two_mode):
    with pytest.raises(InvalidParameterError):
        zeno.zeno_limit_scan(two_mode, [1, 2])
    with pytest.raises(InvalidParameterError):
        zeno.zeno_limit_scan(two_mode, [1, 2], total_t=1.0, delta_t=0.1)
    with pytest.raises(InvalidParameterError):
        zeno.zeno_limit_scan(two_mode, [3, 2], total_t=1.0)


@pytest.mark.parametrize("n, dt, mode", [(0, 0.1, "incoherent"), (2, 0.0, "incoherent"), (2, 0.1, "observed"), (1.5, 0.1, "filtered")])
def test_schedule_validation(n, dt, mode):
    with pytest.raises(InvalidParameterError):
        ZenoSchedule(n, dt, mode)


def test_result_csv(two_mode):
    r = zeno.run_schedule(two_mode, ZenoSchedule(3, 0.25, "filtered"))
    lines = r.to_csv().splitlines()
    assert lines[0] == "k,t,survival,mode"
    assert lines[1] == "0,0,1,filtered"
    assert len(lines) == 5
    k, t, s, mode = lines[3].split(",")
    assert (int(k), float(t), mode) == (2, 0.5, "filtered")
    assert float(s) == pytest.approx(math.cos(0.25) ** 4, abs=1e-15)


def test_post_event_rate_matches_amplitude_route():
    rng = np.random.default_rng(40)
    for _ in range(10):
        e = solve(random_model(rng))
        t = float(rng.uniform(0, 3))
        tau = np.array([0.0, 0.2, 1.5])
        np.testing.assert_allclose(zeno.post_event_decay_rate(e, t, tau), dyn.entangled_decay_rate(e, t, tau), atol=1e-12)
        assert abs(zeno.post_event_decay_rate(e, t, 0.0)) < 1e-12


def test_post_event_rate_site_basis(three_mode):
    t, tau = 0.9, 0.4
    rho = zeno.evolve(zeno.dephase(zeno.evolve(zeno.initial_state(three_mode), three_mode, t)), three_mode, tau)
    assert abs(zeno.survival_rate(rho, three_mode) - zeno.post_event_decay_rate(three_mode, t, tau)) < 1e-12


def test_density_matrix_validation():
    with pytest.raises(InvalidParameterError):
        SectorDensityMatrix(np.zeros((2, 3)))
    with pytest.raises(InvalidParameterError):
        SectorDensityMatrix(np.array([[1.0, 1.0], [0.0, 0.0]])).check()
    with pytest.raises(InvalidParameterError):
        SectorDensityMatrix(np.diag([1.5, -0.5])).check()
