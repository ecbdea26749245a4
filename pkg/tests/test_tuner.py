from __future__ import annotations

import math
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acpid import mlp, tuner as tn
from acpid.errors import ConfigurationError
from acpid.gradcheck import check_pipeline, random_step
from acpid.loop import AxisController
from acpid.pid import PidChannel, StaticGains

SCALE = (0.5, 0.2, 0.05)


def bundle(seed=0, **kw):
    return tn.TunerBundle.create(tn.TunerConfig(gain_scale=SCALE, **kw), seed)


class TestConfig:
    @pytest.mark.parametrize("kw", [{"gamma": 1.0}, {"gamma": -0.1}, {"eta": 0.0}, {"sigma_min": 0.0},
                                    {"gain_scale": (1.0, 1.0)}, {"gain_scale": (1.0, -1.0, 1.0)}, {"r1": -1.0}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            tn.TunerConfig(**kw)

    def test_network_shapes(self):
        b = bundle()
        assert b.gain_net.sizes == (7, 16, 16, 3)
        assert b.gain_net.activations == ("sigmoid", "sigmoid", "tanh")
        assert b.actor_net.sizes == (3, 16, 16, 2)
        assert b.critic_net.sizes == (3, 16, 16, 1)
        for net in (b.gain_net, b.actor_net, b.critic_net):
            assert np.max(np.abs(net.params)) <= 0.1


class TestGains:
    def test_zero_weights_zero_gains(self):
        b = bundle()
        b.gain_net = b.gain_net.with_params(np.zeros(b.gain_net.params.size))
        gains, _, _ = tn.compute_dynamic_gains(b, np.arange(7.0))
        np.testing.assert_array_equal(gains, 0.0)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=7, max_size=7), st.integers(0, 1000))
    def test_bounded_by_scale(self, x, seed):
        b = bundle(seed)
        rng = np.random.default_rng(seed)
        b.gain_net = b.gain_net.with_params(rng.uniform(-5, 5, b.gain_net.params.size))
        gains, _, _ = tn.compute_dynamic_gains(b, x)
        assert np.all(np.abs(gains) <= np.asarray(SCALE))

    def test_deterministic(self):
        x = np.linspace(-1, 1, 7)
        g1, _, _ = tn.compute_dynamic_gains(bundle(3), x)
        g2, _, _ = tn.compute_dynamic_gains(bundle(3), x)
        assert g1.tobytes() == g2.tobytes()


class TestIdentify:
    def test_zero_noise_gives_mean(self):
        idn = tn.identify(bundle(), 0.3, 0.1, 0.05, eps=0.0)
        assert idn.s_m == idn.mu
        assert idn.sigma > 0

    def test_monte_carlo_mean(self):
        b = bundle(5)
        tn.identify(b, 0.3, 0.1, 0.05)  # one warm call fixes the normalizer
        samples = np.array([tn.identify(b, 0.3, 0.1, 0.05, update_stats=False).s_m for _ in range(100_000)])
        ref = tn.identify(b, 0.3, 0.1, 0.05, eps=0.0, update_stats=False)
        assert abs(samples.mean() - ref.mu) < 3 * ref.sigma / math.sqrt(samples.size)

    def test_only_sample_varies(self):
        b = bundle(6)
        tn.identify(b, 0.3, 0.1, 0.05)
        a = tn.identify(b, 0.3, 0.1, 0.05, update_stats=False)
        c = tn.identify(b, 0.3, 0.1, 0.05, update_stats=False)
        assert (a.mu, a.sigma, a.v) == (c.mu, c.sigma, c.v)
        assert a.s_m != c.s_m

    def test_sigma_floor(self):
        b = bundle()
        # drive the sigma head far negative
        p = b.actor_net.params.copy()
        p[b.actor_net.layer_slices()[-1]][-1] = -1e3
        b.actor_net = b.actor_net.with_params(p)
        idn = tn.identify(b, 0.0, 0.0, 0.0, eps=0.0)
        assert idn.sigma >= b.config.sigma_min

    def test_nonfinite_input(self):
        from acpid.errors import NumericalError
        with pytest.raises(NumericalError):
            tn.identify(bundle(), math.nan, 0.0, 0.0)


class TestReward:
    def test_perfect_is_zero(self):
        assert tn.reward(tn.TunerConfig(), 1.0, 1.0, 0.5, 0.5, 0.0) == 0.0

    def test_arithmetic(self):
        cfg = tn.TunerConfig(r1=1, r2=0, r3=0)
        assert tn.reward(cfg, 3.0, 1.0, 0.0, 5.0, 7.0) == -4.0

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 100), st.floats(0, 100), st.floats(-10, 10), st.floats(-10, 10))
    def test_monotone_and_nonpositive(self, e1, e2, dd, u):
        cfg = tn.TunerConfig()
        r_small = tn.reward(cfg, min(e1, e2), 0.0, dd, 0.0, u)
        r_big = tn.reward(cfg, max(e1, e2), 0.0, dd, 0.0, u)
        assert r_big <= r_small <= 0.0

    def test_tracking_term_off_by_default(self):
        cfg = tn.TunerConfig()
        assert tn.reward(cfg, 1.0, 1.0, 0, 0, 0, tracking_error=5.0) == 0.0
        cfg2 = replace(cfg, tracking_weight=2.0)
        assert tn.reward(cfg2, 1.0, 1.0, 0, 0, 0, tracking_error=3.0) == -18.0


class TestTd:
    @pytest.mark.parametrize("v", [0.0, 2.5, -7.0])
    def test_fixed_point(self, v):
        # gamma = 1 lies outside TunerConfig's range, so pass a bare stand-in
        assert tn.td_error(SimpleNamespace(gamma=1.0), 0.0, v, v) == 0.0

    def test_myopic(self):
        cfg = tn.TunerConfig(gamma=0.0)
        assert tn.td_error(cfg, -2.0, 0.5, 100.0) == -2.5

    def test_arithmetic(self):
        assert tn.td_error(tn.TunerConfig(gamma=0.9), -1.0, 0.0, 1.0) == pytest.approx(-0.1)


class TestLosses:
    def test_entropy_residual(self):
        cfg = tn.TunerConfig()
        la, lc, lt = tn.losses(cfg, 1.0, 1.0, 0.3, 0.0)
        assert la == pytest.approx(cfg.w2 * math.sqrt(2 * math.pi * math.e) * 0.3)
        assert lc == 0.0 and lt == la

    def test_eta_keeps_loss_alive(self):
        cfg = tn.TunerConfig(w1=1, eta=0.01, w2=0)
        la, _, _ = tn.losses(cfg, 2.0, 1.0, 0.5, 0.0)
        assert la == pytest.approx(0.01)

    @pytest.mark.parametrize("delta", [0.1, -1.5, 7.0])
    def test_critic_quadratic(self, delta):
        cfg = tn.TunerConfig()
        lc1 = tn.losses(cfg, 0, 0, 1, delta)[1]
        lc2 = tn.losses(cfg, 0, 0, 1, 2 * delta)[1]
        assert lc2 == pytest.approx(4 * lc1)

    def test_sigma_positive(self):
        with pytest.raises(ConfigurationError):
            tn.losses(tn.TunerConfig(), 0, 0, 0.0, 0)


class TestUpdate:
    @pytest.mark.parametrize("seed", range(5))
    def test_pipeline_matches_finite_differences(self, seed):
        res = check_pipeline(seed)
        assert res.passed, res.line()

    @pytest.mark.parametrize("seed", range(3))
    def test_critic_path_only(self, seed):
        cfg = tn.TunerConfig(gain_scale=SCALE, w1=0.0, w2=0.0)
        b, ctx, s_next, v_next = random_step(seed, cfg)
        g = tn.pipeline_gradients(b, ctx, s_next, v_next)
        assert not g.actor.any()
        delta = g.report.td_error
        _, gin = mlp.backward(b.critic_net, ctx.ident.critic_trace, np.array([-2.0 * cfg.w3 * delta]))
        dl_du = gin[0] / ctx.ident.x_std[0]
        expected, _ = mlp.backward(b.gain_net, ctx.gain_trace, dl_du * ctx.errors * np.asarray(SCALE))
        np.testing.assert_allclose(g.gain, expected, rtol=1e-12, atol=1e-300)

    def test_all_weights_zero_no_change(self):
        cfg = tn.TunerConfig(gain_scale=SCALE, w1=0.0, w2=0.0, w3=0.0)
        b, ctx, s_next, v_next = random_step(1, cfg)
        before = [n.params.copy() for n in (b.gain_net, b.actor_net, b.critic_net)]
        rep = tn.update(b, ctx, s_next, v_next)
        assert not rep.skipped
        for old, net in zip(before, (b.gain_net, b.actor_net, b.critic_net)):
            assert old.tobytes() == net.params.tobytes()

    def test_gradient_shapes_exclude_errors(self):
        b, ctx, s_next, v_next = random_step(2)
        g = tn.pipeline_gradients(b, ctx, s_next, v_next)
        assert g.gain.shape == b.gain_net.params.shape
        assert g.actor.shape == b.actor_net.params.shape
        assert g.critic.shape == b.critic_net.params.shape
        # the errors scale the gain-net signal but are never optimized
        errors = ctx.errors.copy()
        tn.update(b, ctx, s_next, v_next)
        np.testing.assert_array_equal(ctx.errors, errors)

    def test_converged_identification_leaves_entropy_path(self):
        cfg = tn.TunerConfig(gain_scale=SCALE)
        b, ctx, _, _ = random_step(3, cfg)
        s_next = ctx.ident.s_m
        ds = (s_next - ctx.s_prev) / ctx.dt
        ctx = replace(ctx, s_m_prev=ctx.ident.s_m - ds * ctx.dt)  # matching rates too
        r = tn.reward(cfg, ctx.ident.s_m, s_next, ds, ds, ctx.u)
        v_next = (ctx.ident.v - r) / cfg.gamma  # makes delta exactly zero
        g = tn.pipeline_gradients(b, ctx, s_next, v_next)
        assert abs(g.report.td_error) < 1e-12
        entropy_only = replace(cfg, w1=0.0, w3=0.0)
        b2 = replace(b, config=entropy_only)
        g2 = tn.pipeline_gradients(b2, ctx, s_next, v_next)
        for a, c in ((g.gain, g2.gain), (g.actor, g2.actor)):
            np.testing.assert_allclose(a, c, rtol=1e-9, atol=1e-12)
        assert np.max(np.abs(g.critic)) < 1e-9

    def test_nonfinite_gradient_skips(self):
        b, ctx, s_next, v_next = random_step(4)
        before = [n.params.copy() for n in (b.gain_net, b.actor_net, b.critic_net)]
        rep = tn.update(b, ctx, s_next, v_next=math.inf)
        assert rep.skipped and b.incidents
        for old, net in zip(before, (b.gain_net, b.actor_net, b.critic_net)):
            assert old.tobytes() == net.params.tobytes()

    def test_toy_plant_identification_improves(self):
        cfg = tn.TunerConfig(gain_scale=(0.2, 0.05, 0.01))
        b = tn.TunerBundle.create(cfg, 0)
        ctrl = AxisController("toy", PidChannel(StaticGains(1.0, 0.5, 0.05), -5, 5), b, 0.01)
        s, errs = 0.0, []
        while len(errs) < 500:
            sp = 1.0 if (len(errs) // 100) % 2 == 0 else -1.0
            _, u, _ = ctrl.step(sp, s)
            s_new = 0.98 * s + 0.05 * u  # first-order plant
            if ctrl.pending is not None:
                errs.append(abs(ctrl.pending.ident.s_m - s_new))
            s = s_new
        assert len(ctrl.reports) >= 499
        assert np.mean(errs[-50:]) < np.mean(errs[:50])

    def test_snapshot_round_trip(self):
        b = bundle(8)
        data = tn.snapshot(b)
        other = bundle(9)
        tn.restore(other, data)
        for a, c in ((b.gain_net, other.gain_net), (b.actor_net, other.actor_net)):
            assert a.params.tobytes() == c.params.tobytes()
        bad = tn.TunerBundle.create(tn.TunerConfig(hidden=(8, 8)), 0)
        with pytest.raises(ConfigurationError):
            tn.restore(bad, data)


class TestRunningNorm:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=100))
    def test_matches_numpy(self, xs):
        rn = tn.RunningNorm(1)
        for x in xs:
            rn.update(np.array([x]))
        assert rn.mean[0] == pytest.approx(np.mean(xs), abs=1e-9 * (1 + np.max(np.abs(xs))))
        assert rn.std[0] == pytest.approx(max(np.std(xs), 1e-6), rel=1e-6, abs=1e-6)
