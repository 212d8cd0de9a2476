import dataclasses

import numpy as np
import pytest

from noisesync.engine import (
    LinearNetwork,
    SimConfig,
    State,
    ZenoError,
    extract_troughs,
    initial_state,
    read_trace_csv,
    simulate,
    write_events_csv,
    write_trace_csv,
)
from noisesync.model import DEFAULT_PARAMS, build_network, natural_period
from noisesync.noise import NoiseSpec

pF = 1e-12


@pytest.fixture(scope="module")
def single():
    net = build_network(1, c_noise=0.0)
    return net, simulate(net, NoiseSpec(), SimConfig.for_network(net), seed=0)


def test_single_oscillator_period(single):
    _, tr = single
    gaps = np.diff(tr.troughs(0))
    t0 = natural_period(DEFAULT_PARAMS)
    assert abs(gaps.mean() / t0 - 1) < 1e-3
    assert np.all(np.abs(gaps / t0 - 1) < 1e-3)


def test_noise_capacitor_loads_the_node():
    net = build_network(1)  # 1 pF noise capacitor, source silent
    tr = simulate(net, NoiseSpec(), SimConfig.for_network(net))
    expected = natural_period(DEFAULT_PARAMS) * 101 / 100
    assert np.diff(tr.troughs(0)).mean() == pytest.approx(expected, rel=1e-4)


def test_duty_cycle_and_voltage_range(single):
    net, tr = single
    ev = tr.events
    rises = [t for _, t, d in ev if d == "rise"]
    falls = [t for _, t, d in ev if d == "fall"]
    n = min(len(rises), len(falls)) - 1
    r, f = np.array(rises[:n + 1]), np.array(falls[:n + 1])
    if f[0] < r[0]:
        high, low = f[1:n + 1] - r[:n], r[:n] - f[:n]
    else:
        high, low = f[:n] - r[:n], r[1:n + 1] - f[:n]
    duty = high.mean() / (high.mean() + low.mean())
    assert abs(duty - 0.5) < 1e-3
    assert np.all(np.abs(tr.v_samples) < DEFAULT_PARAMS.v_a)


def test_events_alternate_and_respect_guard():
    net = build_network(3, [(0, 1), (1, 2)], c_c=5 * pF, detune=(0, 0.01, 0.02))
    cfg = SimConfig.for_network(net)
    tr = simulate(net, NoiseSpec(0.2, seed=3), cfg, seed=3)
    for i in range(3):
        mask = tr.event_osc == i
        kinds = tr.event_rise[mask]
        assert np.all(kinds[1:] != kinds[:-1])
        assert np.all(np.diff(tr.event_time[mask]) >= cfg.zeno_guard)
    assert np.all(np.diff(tr.event_time) >= 0)


def test_initial_state_contract():
    net = build_network(5)
    a, b = initial_state(net, 11), initial_state(net, 11)
    np.testing.assert_array_equal(a.v, b.v)
    np.testing.assert_array_equal(a.s, b.s)
    assert np.all(np.abs(a.v) < DEFAULT_PARAMS.threshold)
    assert set(np.unique(a.s)) <= {-1, 1}


def test_initial_state_is_centred():
    one = build_network(1)
    vs = np.array([initial_state(one, s).v[0] for s in range(1000)])
    width = 2 * DEFAULT_PARAMS.threshold
    assert abs(vs.mean()) < 0.05 * width


def test_identical_oscillators_identical_traces():
    net = build_network(2)
    init = State(0.0, np.array([0.3, 0.3]), np.array([1, 1], dtype=np.int8))
    tr = simulate(net, NoiseSpec(0.5, seed=1), SimConfig.for_network(net), initial=init)
    np.testing.assert_array_equal(tr.v_samples[0], tr.v_samples[1])
    np.testing.assert_array_equal(tr.troughs(0), tr.troughs(1))


def test_decoupled_pair_matches_isolated_runs():
    pair = build_network(2, detune=(0, 0.02))
    cfg = SimConfig.for_network(pair)
    init = initial_state(pair, 4)
    tr = simulate(pair, NoiseSpec(), cfg, initial=init)
    for i in range(2):
        solo = build_network(1, detune=(pair.oscillators[i].r_f / 1e6 - 1,))
        st = State(0.0, init.v[i:i + 1], init.s[i:i + 1])
        ref = simulate(solo, NoiseSpec(), cfg, initial=st)
        # restarts at the other oscillator's switches only perturb rounding
        np.testing.assert_allclose(tr.v_samples[i], ref.v_samples[0], rtol=0, atol=1e-9)
        np.testing.assert_allclose(tr.troughs(i), ref.troughs(0), rtol=0, atol=cfg.crossing_tol)


def test_determinism_bitwise():
    net = build_network(3, [(0, 1), (0, 2)], c_c=3 * pF, detune=(0, 0.01, -0.01))
    cfg = SimConfig.for_network(net, t_end=5e-3)
    a = simulate(net, NoiseSpec(0.4, seed=8), cfg, seed=2)
    b = simulate(net, NoiseSpec(0.4, seed=8), cfg, seed=2)
    assert a.v_samples.tobytes() == b.v_samples.tobytes()
    assert a.event_time.tobytes() == b.event_time.tobytes()


def test_step_halving_convergence():
    net = build_network(2, [(0, 1)], c_c=5 * pF, detune=(0, 0.02))
    cfg = SimConfig.for_network(net)
    a = simulate(net, NoiseSpec(), cfg, seed=3)
    b = simulate(net, NoiseSpec(), dataclasses.replace(cfg, dt=cfg.dt / 2), seed=3)
    assert np.max(np.abs(a.v_samples[:, -1] - b.v_samples[:, -1])) < 1e-4 * DEFAULT_PARAMS.v_a


@pytest.mark.parametrize("common", [True, False])
def test_noise_kick_conserves_charge(common):
    net = build_network(4, [(0, 1), (1, 2), (2, 3)], c_c=5 * pF, noise_common=common)
    sys = LinearNetwork(net)
    dvn = 0.7 if common else np.array([0.3, -0.2, 0.5, 0.1])
    dv = sys.kick(dvn)
    lhs = sys.m @ dv
    rhs = np.asarray(net.c_noise) * dvn
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * np.max(np.abs(rhs))


def test_independent_noise_desynchronises_identical_pair():
    net = build_network(2, noise_common=False)
    init = State(0.0, np.array([0.3, 0.3]), np.array([1, 1], dtype=np.int8))
    tr = simulate(net, NoiseSpec(0.5, seed=1), SimConfig.for_network(net), initial=init)
    assert not np.array_equal(tr.v_samples[0], tr.v_samples[1])


def test_zeno_guard_aborts():
    p = dataclasses.replace(DEFAULT_PARAMS, beta=0.02)
    net = build_network(1, defaults=p, c_noise=100e-12)
    cfg = SimConfig.for_network(net, t_end=2e-3, zeno_guard=2e-6)
    with pytest.raises(ZenoError):
        simulate(net, NoiseSpec(2.0, seed=0), cfg, seed=0)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(dt=1e-5, dt_out=1e-6)
    with pytest.raises(ValueError):
        SimConfig(t_end=0)
    with pytest.raises(ValueError):
        SimConfig(crossing_tol=1e-6, dt=1e-7)


def test_troughs_empty_before_first_rise(single):
    _, tr = single
    first = tr.troughs(0)[0]
    assert len(extract_troughs(tr.truncated(first * 0.5), 0)) == 0


def test_anti_phase_pair_troughs_interleave():
    net = build_network(2, [(0, 1)], c_c=5 * pF, detune=(0, 0.02))
    tr = simulate(net, NoiseSpec(), SimConfig.for_network(net, t_end=20e-3), seed=1)
    a, b = tr.troughs(0), tr.troughs(1)
    a = a[a > 10e-3]
    b = b[(b > a[0]) & (b < a[-1])]
    assert len(b) == len(a) - 1
    assert np.all(np.searchsorted(a, b) == np.arange(1, len(a)))


def test_csv_round_trip(tmp_path, single):
    _, tr = single
    p = tmp_path / "t.csv"
    write_trace_csv(tr, p)
    assert p.read_text().splitlines()[0] == "t,v1,s1"
    back = read_trace_csv(p)
    np.testing.assert_allclose(back.v_samples, tr.v_samples, rtol=1e-13, atol=1e-15)
    np.testing.assert_array_equal(back.s_samples, tr.s_samples)
    q = tmp_path / "e.csv"
    write_events_csv(tr, q)
    lines = q.read_text().splitlines()
    assert lines[0] == "osc,t,direction" and lines[1].split(",")[0] == "1"
