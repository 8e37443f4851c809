import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lanedrop import controllers as ctl
from lanedrop import demand as dm
from lanedrop.errors import ConfigError, InvariantViolation

C = 6 / 11


class TestArrivals:
    @pytest.mark.parametrize("t, expected", [(3000, C), (0, 0.0), (5000, 0.5 * C), (1000, 0.5 * C), (6000, 0.0)])
    def test_trapezoid(self, t, expected):
        assert dm.arrival_rate(dm.TrapezoidArrival(peak=C), t) == pytest.approx(expected, abs=1e-15)

    def test_zero_noise_total(self):
        r = dm.arrival_series(dm.TrapezoidArrival(peak=C), np.arange(8000.0))
        assert r.sum() == pytest.approx(4000 * C, rel=1e-12)

    def test_series_matches_sequential_draws(self):
        pat = dm.TrapezoidArrival(peak=C, noise_std=0.02 * C, seed=11)
        times = np.arange(500.0)
        rng = pat.rng()
        seq = [dm.arrival_rate(pat, t, rng) for t in times]
        assert np.allclose(dm.arrival_series(pat, times), seq, rtol=1e-13, atol=1e-16)

    def test_noise_statistics(self):
        z = dm.NormalStream(5).draws(200_000)
        assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01

    def test_noise_is_deterministic_per_seed(self):
        assert np.array_equal(dm.NormalStream(3).draws(10), dm.NormalStream(3).draws(10))
        assert not np.array_equal(dm.NormalStream(3).draws(10), dm.NormalStream(4).draws(10))

    def test_noise_needs_stream(self):
        with pytest.raises(ValueError):
            dm.arrival_rate(dm.TrapezoidArrival(peak=C, noise_std=0.01), 10.0)

    def test_clipped_at_zero(self):
        r = dm.arrival_series(dm.TrapezoidArrival(peak=C, noise_std=0.02 * C), np.arange(8000.0))
        assert r.min() == 0.0

    @pytest.mark.parametrize("kw", [dict(peak=-1), dict(peak=1, ramp_rate=0), dict(peak=1, noise_std=-1),
                                    dict(peak=1, plateau_end=100)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            dm.TrapezoidArrival(**kw)


class TestPointQueue:
    def test_examples(self):
        cap = 12 / 11
        assert dm.queue_demand(dm.QueueState(0.0), 0.5 * C, 1.0, cap) == pytest.approx(0.5 * C)
        assert dm.queue_demand(dm.QueueState(10.0), 0.5, 1.0, cap) == pytest.approx(cap)

    def test_balanced_flow_keeps_queue(self):
        q = dm.QueueState(3.0)
        for _ in range(100):
            q = dm.queue_step(q, 0.4, 0.4, 1.0)
        assert q.lam == 3.0

    def test_overdraw_is_invariant_violation(self):
        with pytest.raises(InvariantViolation):
            dm.queue_step(dm.QueueState(0.0), 0.1, 0.5, 1.0)
        with pytest.raises(InvariantViolation):
            dm.QueueState(-1.0)

    def test_round_off_absorbed(self):
        q = dm.queue_step(dm.QueueState(0.1), 0.2, 0.3 + 1e-14, 1.0)
        assert q.lam == 0.0

    @given(st.lists(st.tuples(st.floats(0, 2), st.floats(0, 1)), min_size=1, max_size=200))
    def test_queue_stays_non_negative_when_flux_within_demand(self, steps):
        q = dm.QueueState(0.0)
        for r, frac in steps:
            d = dm.queue_demand(q, r, 1.0, 12 / 11)
            q = dm.queue_step(q, r, frac * d, 1.0)
            assert q.lam >= 0.0


class TestController:
    def test_init(self, dc):
        assert ctl.init(ctl.ControllerConfig.pi(beta=4), dc, 0.0).u == dc.v_f
        assert ctl.init(ctl.ControllerConfig.constant(dc.v_1), dc, 0.0).u == dc.v_1
        assert ctl.init(ctl.ControllerConfig(), dc, 0.0).u == dc.v_f

    def test_non_feedback_kinds_hold(self, dc):
        for cfg in (ctl.ControllerConfig(), ctl.ControllerConfig.constant(dc.v_1)):
            s = ctl.init(cfg, dc, 0.0)
            assert ctl.update(cfg, dc, s, 0.2, 1.0) is s

    def test_increment_algebra(self, dc):
        cfg = ctl.ControllerConfig.pi(alpha=500, beta=20, xi=0.1)
        inc = ctl.increment(cfg, dc, 0.02, 0.021, 0.5)
        assert inc == pytest.approx(-500 * 0.001 + 20 * (1.1 * dc.k_1 - 0.02) * 0.5, rel=1e-13)

    def test_incremental_sum_matches_positional_form(self, dc):
        # Without clamping, u_J = u_0 - alpha (k_J - k_0) + beta sum_j (k_bar - k_j) dt.
        cfg = ctl.ControllerConfig.pi(alpha=3.0, beta=0.5)
        ks = dc.k_1 + 1e-4 * np.sin(np.arange(50) / 3)
        s = ctl.ControllerState(10.0, ks[0])
        for k in ks[1:]:
            s = ctl.update(cfg, dc, s, float(k), 1.0)
        expected = 10.0 - 3.0 * (ks[-1] - ks[0]) + 0.5 * np.sum(dc.k_1 - ks[:-1])
        assert s.u == pytest.approx(expected, rel=1e-12)

    def test_clamping(self, dc):
        cfg = ctl.ControllerConfig.pi(beta=5000.0)
        s = ctl.update(cfg, dc, ctl.ControllerState(dc.v_1, 0.2), 0.2, 1.0)
        assert s.u == cfg.u_min
        s = ctl.update(cfg, dc, ctl.ControllerState(dc.v_1, 0.0), 0.0, 1.0)
        assert s.u == dc.v_f

    def test_array_state(self, dc):
        cfg = ctl.ControllerConfig.pi(beta=4.0)
        s = ctl.update(cfg, dc, ctl.ControllerState(np.full(3, 5.0), np.zeros(3)), np.array([0.0, 0.1, 0.2]), 1.0)
        assert s.u.shape == (3,) and np.all((s.u >= 0.5) & (s.u <= dc.v_f))

    def test_target_density(self, dc):
        assert ctl.ControllerConfig.pi(beta=4, xi=-0.1).target_density(dc) == pytest.approx(0.9 * dc.k_1)

    @pytest.mark.parametrize("kw", [dict(kind="pi"), dict(kind="pi", alpha=-1, beta=2), dict(kind="constant"),
                                    dict(kind="bogus"), dict(kind="pi", beta=1, u_min=-1)])
    def test_invalid_configs(self, kw):
        with pytest.raises(ConfigError):
            ctl.ControllerConfig(**kw)

    def test_u_min_must_sit_below_v2(self, dc):
        with pytest.raises(ConfigError, match="v_2"):
            ctl.init(ctl.ControllerConfig.pi(beta=4, u_min=3.0), dc, 0.0)

    def test_constant_out_of_range(self, dc):
        with pytest.raises(ConfigError):
            ctl.init(ctl.ControllerConfig.constant(40.0), dc, 0.0)

    def test_bad_dt(self, dc):
        cfg = ctl.ControllerConfig.pi(beta=4)
        with pytest.raises(ConfigError):
            ctl.update(cfg, dc, ctl.init(cfg, dc, 0.0), 0.0, 0.0)
        assert math.isfinite(dc.v_2)
