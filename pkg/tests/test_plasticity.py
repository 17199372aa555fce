import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrsnn.crossbar import REFERENCE, map_weights
from mrsnn.device import DEFAULT_VARIATION, DeviceArray, DeviceParams, sample_param_array
from mrsnn.errors import ConfigError, DimensionMismatch
from mrsnn.neurons import BOXCAR, SIGMOID, TraceState, sigmoid_rate, update_trace
from mrsnn.plasticity import (
    DATA,
    RECONSTRUCTION,
    FeedbackWeights,
    PulseProgram,
    RuleConfig,
    apply_program,
    calibrate_e0,
    decolle_update,
    delta_w_to_pulses,
    ecd_modulate,
    eghr_update,
    erbp_update,
    laplace_energy,
    stdp_update,
    superspike_update,
    three_factor_update,
)


def test_rule_config_validation():
    with pytest.raises(ConfigError):
        RuleConfig("hebb")
    with pytest.raises(ConfigError):
        RuleConfig(learning_rate=-1)
    with pytest.raises(ConfigError):
        RuleConfig(pre_decay=1.0)
    cfg = RuleConfig("eghr", e0=4.0)
    assert RuleConfig.from_dict(cfg.to_dict()) == cfg


def test_feedback_is_frozen_and_seeded():
    a = FeedbackWeights.random(5, 3, 7)
    b = FeedbackWeights.random(5, 3, 7)
    assert a.g.shape == (5, 3) and np.array_equal(a.g, b.g)
    assert np.all(np.abs(a.g) <= 1 / np.sqrt(3))
    with pytest.raises(ValueError):
        a.g[0, 0] = 1.0


# -- STDP and the generic rule -----------------------------------------------


def _run_stdp(pre_times, post_times, steps=10):
    cfg = RuleConfig("stdp")
    pre_t, post_t = TraceState.zeros(1, cfg.pre_decay), TraceState.zeros(1, cfg.post_decay)
    total = np.zeros((1, 1))
    for t in range(steps):
        s_pre = np.array([float(t in pre_times)])
        s_post = np.array([float(t in post_times)])
        pre_t, post_t = update_trace(pre_t, s_pre), update_trace(post_t, s_post)
        total += stdp_update(pre_t.value, post_t.value, s_pre, s_post, cfg)
    return total[0, 0]


def test_stdp_causal_and_anticausal():
    assert _run_stdp({1}, {3}) > 0
    assert _run_stdp({3}, {1}) < 0
    assert _run_stdp(set(), set()) == 0


def test_three_factor_basics(rng):
    pre, post = rng.random(4), rng.random(3)
    assert np.all(three_factor_update(pre, post, np.zeros(3), 0.1) == 0)
    dw = three_factor_update(pre, post, rng.normal(size=3), 0.1)
    assert np.linalg.matrix_rank(dw) <= 1
    with pytest.raises(DimensionMismatch):
        three_factor_update(pre, post, np.ones(2), 0.1)


def test_three_factor_reduces_to_stdp_ltp_term(rng):
    trace_pre = rng.random(4)
    s_post = (rng.random(3) < 0.5).astype(float)
    cfg = RuleConfig("stdp", a_minus=0.0)
    stdp = stdp_update(trace_pre, np.zeros(3), np.zeros(4), s_post, cfg)
    assert np.array_equal(three_factor_update(trace_pre, s_post, np.ones(3), 1.0), stdp)


# -- eRBP and SuperSpike -----------------------------------------------------


def test_erbp_examples():
    cfg = RuleConfig("erbp", learning_rate=1.0, surrogate_width=1.0, surrogate_center=1.0)
    fb = FeedbackWeights(np.array([[1.0]]))
    assert erbp_update([1.0], [1.0], [0.5], fb, cfg)[0, 0] == 0.5
    assert np.all(erbp_update([1.0], [1.0], [0.0], fb, cfg) == 0)
    fb3 = FeedbackWeights.random(3, 2, 0)
    dw = erbp_update(np.ones(4), np.array([1.0, 9.0, 1.2]), np.array([0.3, -0.2]), fb3, cfg)
    assert np.all(dw[1] == 0) and np.any(dw[0] != 0)


def test_erbp_batch_sums_in_order(rng):
    cfg = RuleConfig("erbp", learning_rate=0.1, surrogate_width=4.0)
    fb = FeedbackWeights.random(3, 2, 1)
    pre, u, err = rng.random((5, 4)), rng.normal(1, 1, (5, 3)), rng.normal(size=(5, 2))
    single = sum(erbp_update(pre[b], u[b], err[b], fb, cfg) for b in range(5))
    assert np.allclose(erbp_update(pre, u, err, fb, cfg), single, rtol=1e-12)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_superspike_reduces_to_erbp(n_post, n_pre, seed):
    r = np.random.default_rng(seed)
    cfg = RuleConfig("superspike", learning_rate=0.3, surrogate=BOXCAR, surrogate_width=1.0,
                     surrogate_center=1.0, outer_decay=0.0)
    pre = (r.random(n_pre) < 0.5).astype(float)
    u = r.normal(1.0, 0.8, n_post)
    err = r.normal(size=n_post)
    ss, _ = superspike_update(pre, u, err, cfg)
    eb = erbp_update(pre, u, err, FeedbackWeights.identity(n_post), cfg)
    assert np.allclose(ss, eb, rtol=1e-14, atol=0)


def test_superspike_signs_and_zero_trace(rng):
    cfg = RuleConfig("superspike", surrogate=SIGMOID)
    err = np.array([0.5, -0.7])
    dw, _ = superspike_update(rng.random(3) + 0.1, np.array([0.9, 1.1]), err, cfg)
    assert np.all(np.sign(dw) == np.sign(err)[:, None])
    zero, _ = superspike_update(np.zeros(3), np.array([0.9, 1.1]), err, cfg)
    assert np.all(zero == 0)


def test_superspike_outer_trace_accumulates():
    cfg = RuleConfig("superspike", learning_rate=1.0, outer_decay=0.5)
    dw1, outer = superspike_update([1.0], [1.0], [1.0], cfg)
    dw2, _ = superspike_update([0.0], [1.0], [1.0], cfg, outer)
    assert dw2[0, 0] == pytest.approx(0.5 * dw1[0, 0])


# -- DECOLLE -----------------------------------------------------------------


def test_decolle_zero_error_zero_update(rng):
    cfg = RuleConfig("decolle")
    fb = FeedbackWeights.random(4, 2, 3)
    s = (rng.random(4) < 0.5).astype(float)
    dw, err = decolle_update(rng.random(5), rng.normal(size=4), s, s @ fb.g, fb, cfg)
    assert np.all(err == 0) and np.all(dw == 0)


def test_decolle_locality(rng):
    cfg = RuleConfig("decolle", surrogate=SIGMOID)
    fb = FeedbackWeights.random(6, 3, 4)
    x = rng.random(5)
    w1, w2 = rng.normal(size=(6, 5)), rng.normal(size=(2, 6))
    targets = rng.random(3)

    def layer_one_update(w_down):
        u1 = w1 @ x
        s1 = (u1 >= 1.0).astype(float)
        _ = w_down @ s1  # downstream layer runs but cannot feed back
        return decolle_update(x, u1, s1, targets, fb, cfg)[0]

    assert np.array_equal(layer_one_update(w2), layer_one_update(w2 + rng.normal(size=w2.shape)))


def test_decolle_scalar_delta_rule():
    cfg = RuleConfig("decolle", learning_rate=0.2, surrogate=SIGMOID, surrogate_width=1.0)
    fb = FeedbackWeights(np.array([[0.7]]))
    dw, err = decolle_update([0.4], [0.8], [1.0], [0.1], fb, cfg)
    slope = float(cfg.slope(0.8))
    assert err[0] == pytest.approx(0.1 - 0.7)
    assert dw[0, 0] == pytest.approx(0.2 * 0.7 * (0.1 - 0.7) * slope * 0.4)


def _rate_cost(w, trace, targets, g, width):
    u = w @ trace
    return 0.5 * np.sum((targets - sigmoid_rate(u, 1.0, width) @ g) ** 2)


def test_decolle_matches_finite_difference_gradient(rng):
    for _ in range(20):
        n_post, n_pre, k = rng.integers(1, 6, 3)
        w = rng.normal(0, 0.8, (n_post, n_pre))
        trace = rng.random(n_pre)
        targets = rng.random(k)
        fb = FeedbackWeights.random(int(n_post), int(k), int(rng.integers(1 << 30)))
        cfg = RuleConfig("decolle", learning_rate=1.0, surrogate=SIGMOID, surrogate_width=0.7)
        u = w @ trace
        dw, _ = decolle_update(trace, u, sigmoid_rate(u, 1.0, 0.7), targets, fb, cfg)
        h = 1e-5
        fd = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            wp, wm = w.copy(), w.copy()
            wp[idx] += h
            wm[idx] -= h
            fd[idx] = (_rate_cost(wp, trace, targets, fb.g, 0.7)
                       - _rate_cost(wm, trace, targets, fb.g, 0.7)) / (2 * h)
        assert np.allclose(dw, -fd, rtol=1e-4, atol=1e-9)


# -- EGHR --------------------------------------------------------------------


def test_eghr_examples():
    cfg = RuleConfig("eghr", learning_rate=1.0, e0=3.0)
    u = np.array([1.0, 2.0])
    assert np.all(eghr_update(np.array([1.0, 1.0]), u, cfg) == 0)
    one = RuleConfig("eghr", learning_rate=0.5, e0=2.0)
    assert eghr_update(np.array([1.0]), np.array([0.5]), one)[0, 0] > 0
    assert laplace_energy(np.array([[1.0, -2.0]]))[0] == 3.0
    # default E0 is twice the output dimension
    assert np.all(eghr_update(np.ones(2), np.array([2.0, -2.0]), RuleConfig("eghr", learning_rate=1.0)) == 0)


def test_eghr_stationary_at_unmixing():
    rng = np.random.default_rng(99)
    n, b, theta = 100_000, 0.5, np.pi / 6
    a = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    s = rng.laplace(scale=b, size=(n, 2))
    x = s @ a.T
    u = x @ np.linalg.inv(a).T
    e0 = 3.0 * b  # E[(E0 - |s1| - |s2|) |s1|] = 0 for Laplace scale b
    cfg = RuleConfig("eghr", learning_rate=1.0, e0=e0)
    mean = eghr_update(x, u, cfg) / n
    per_sample = ((e0 - laplace_energy(u))[:, None, None] * np.sign(u)[:, :, None] * x[:, None, :])
    sigma = per_sample.std(axis=0) / np.sqrt(n)
    assert np.allclose(mean, per_sample.mean(axis=0), rtol=1e-9, atol=1e-12)
    assert np.all(np.abs(mean) < 3 * sigma)
    assert calibrate_e0(u) == pytest.approx(e0, rel=0.02)


def test_ecd():
    dw = np.array([[0.1, -0.2]])
    assert np.array_equal(ecd_modulate(dw, DATA), dw)
    assert np.array_equal(ecd_modulate(dw, RECONSTRUCTION), -dw)
    assert np.all(ecd_modulate(dw, DATA) + ecd_modulate(dw, RECONSTRUCTION) == 0)
    with pytest.raises(ValueError):
        ecd_modulate(dw, "sleep")


# -- device bridge -----------------------------------------------------------


def _varied_state(dev3, w, seed=0, scheme="differential-pair"):
    r = np.random.default_rng(seed)
    pos = sample_param_array(dev3, DEFAULT_VARIATION, w.shape, r)
    neg = sample_param_array(dev3, DEFAULT_VARIATION, w.shape, r)
    lo = max(np.max(pos.g_min), np.max(neg.g_min))
    hi = min(np.min(pos.g_max), np.min(neg.g_max))
    nominal_like = DeviceParams(g_max=hi, g_min=lo, alpha_p=dev3.alpha_p, alpha_d=dev3.alpha_d,
                                  beta_p=dev3.beta_p, beta_d=dev3.beta_d)
    state = map_weights(w, 1.0, nominal_like, scheme=scheme)
    return state.with_arrays(DeviceArray(state.g_pos, pos), DeviceArray(state.g_neg, neg))


def test_zero_update_zero_program(dev3):
    state = map_weights(np.array([[0.2, -0.4]]), 1.0, dev3)
    prog = delta_w_to_pulses(np.zeros((1, 2)), state, 100.0)
    assert np.all(prog.pos == 0) and np.all(prog.neg == 0) and not prog.clipped.any()


@given(st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_exact_bridge_round_trip(seed):
    from mrsnn.device import preset

    dev3 = preset("mo-tiox-tin-3v")
    r = np.random.default_rng(seed)
    w = r.uniform(-0.9, 0.9, (3, 4))
    state = _varied_state(dev3, w, seed)
    dw = r.uniform(-0.3, 0.3, w.shape)
    eta_prime = 200.0
    prog = delta_w_to_pulses(dw, state, eta_prime)
    after = apply_program(state, prog, "none")
    ok = ~prog.clipped
    change = after.net - state.net
    assert np.allclose(change[ok], eta_prime * dw[ok], rtol=1e-9, atol=1e-9 * dev3.g_max)


def test_bridge_routes_overflow_to_negative_device(dev3):
    state = map_weights(np.array([[0.0]]), 1.0, dev3)  # both devices at g_min
    prog = delta_w_to_pulses(np.array([[-0.5]]), state, dev3.delta_g)
    assert prog.pos[0, 0] == 0 and prog.neg[0, 0] > 0
    after = apply_program(state, prog, "none")
    assert after.net[0, 0] == pytest.approx(-0.5 * dev3.delta_g, rel=1e-9)


def test_bridge_clips_beyond_pair_headroom(dev3):
    state = map_weights(np.array([[0.9]]), 1.0, dev3)
    prog = delta_w_to_pulses(np.array([[3.0]]), state, dev3.delta_g)
    assert prog.clipped[0, 0]


def test_reference_scheme_never_touches_reference(dev3):
    state = map_weights(np.array([[0.1, -0.1]]), 1.0, dev3, scheme=REFERENCE)
    prog = delta_w_to_pulses(np.array([[0.2, -0.2]]), state, dev3.delta_g)
    after = apply_program(state, prog, "none")
    assert np.array_equal(after.g_neg, state.g_neg)


def test_linearized_bridge_close_to_exact(dev3):
    r = np.random.default_rng(5)
    w = r.uniform(-0.8, 0.8, (4, 4))
    state = map_weights(w, 1.0, dev3)
    room = np.minimum(dev3.g_max - state.g_pos, state.g_pos - dev3.g_min)
    dg = 0.01 * room * r.choice([-1.0, 1.0], w.shape) * r.uniform(0.1, 1.0, w.shape)
    exact = delta_w_to_pulses(dg, state, 1.0)
    lin = delta_w_to_pulses(dg, state, 1.0, mode="linearized")
    nz = exact.pos != 0
    assert np.all(np.abs(lin.pos[nz] - exact.pos[nz]) / np.abs(exact.pos[nz]) <= 0.01)
    with pytest.raises(ValueError):
        delta_w_to_pulses(dg, state, 1.0, mode="guess")
    with pytest.raises(DimensionMismatch):
        delta_w_to_pulses(np.zeros((2, 2)), state, 1.0)


def test_nominal_model_controller_stays_in_range(dev3):
    w = np.random.default_rng(2).uniform(-0.9, 0.9, (5, 5))
    state = _varied_state(dev3, w, 2)
    dw = np.random.default_rng(3).uniform(-1, 1, w.shape)
    prog = delta_w_to_pulses(dw, state, 300.0, model=dev3)
    after = apply_program(state, prog, "nearest", 0)
    assert np.all(np.isfinite(after.net))
    assert np.all(after.g_pos >= state.pos.params.g_min - 1e-9)
    assert np.all(after.g_pos <= state.pos.params.g_max + 1e-9)


def test_pulse_program(tmp_path):
    with pytest.raises(ValueError):
        PulseProgram(np.array([[np.inf]]), np.zeros((1, 1)))
    prog = PulseProgram(np.array([[1.5]]), np.array([[-2.0]]))
    path = tmp_path / "p.csv"
    prog.to_csv(path)
    assert path.read_text().splitlines() == ["row,col,device,pulses", "0,0,+,1.5", "0,0,-,-2.0"]
