import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanedrop import analysis as an
from lanedrop.errors import ConfigError
from lanedrop.flow_core import reference_constants

DC = reference_constants()


class TestOpenLoop:
    def test_no_control_high_demand(self, dc):
        (eq,) = an.open_loop_equilibria(dc, 2 * dc.C, dc.v_f)
        assert eq.regime == "congested" and eq.k_star == dc.k_2 and eq.g_star == pytest.approx(0.8 * dc.C)

    def test_low_demand(self, dc):
        (eq,) = an.open_loop_equilibria(dc, 0.5 * dc.C, dc.v_f)
        assert eq.regime == "uncongested" and eq.k_star == pytest.approx(0.5 * dc.C / dc.v_f)
        assert eq.basin_note == an.ANY

    def test_bistable_at_v1(self, dc):
        free, jam = an.open_loop_equilibria(dc, 2 * dc.C, dc.v_1)
        assert free.k_star == pytest.approx(dc.k_1, rel=1e-14) and free.basin_note == an.BELOW_K1
        assert jam.k_star == dc.k_2 and jam.basin_note == an.ABOVE_K1
        assert free.attracts(dc.k_1, dc) and not free.attracts(1.01 * dc.k_1, dc)

    def test_degenerate_dropped_capacity_demand(self, dc):
        eqs = an.open_loop_equilibria(dc, 0.8 * dc.C, dc.v_f)
        assert [e.regime for e in eqs] == ["uncongested", "congested"]
        assert "stationary" in eqs[1].basin_note

    @settings(max_examples=300)
    @given(st.floats(0, 2.5), st.floats(0, 30))
    def test_flux_balance(self, d, u):
        for eq in an.open_loop_equilibria(DC, d, u):
            assert an.flux_residual(DC, eq, d) < 1e-12

    @pytest.mark.parametrize("d, u", [(-0.1, 30.0), (1.0, 31.0)])
    def test_invalid(self, dc, d, u):
        with pytest.raises(ConfigError):
            an.open_loop_equilibria(dc, d, u)


class TestOptimalSpeed:
    def test_high_demand(self, dc):
        opt = an.optimal_speed_limit(dc, 2 * dc.C)
        assert opt.u_star == dc.v_1 and opt.g_star == dc.C and opt.requires_uncongested_start

    def test_dropped_capacity_demand(self, dc):
        opt = an.optimal_speed_limit(dc, 0.8 * dc.C)
        assert opt.u_star is None and opt.u_threshold == pytest.approx(dc.v_2, rel=1e-14)
        assert opt.g_star == pytest.approx(0.8 * dc.C)

    def test_zero_demand(self, dc):
        opt = an.optimal_speed_limit(dc, 0.0)
        assert opt.u_threshold == 0.0 and opt.g_star == 0.0


class TestStability:
    def test_congested_rate(self, dc):
        _, jam = an.open_loop_equilibria(dc, 2 * dc.C, dc.v_1)
        st_ = an.classify_stability(dc, jam, 2 * dc.C, 600.0)
        assert st_.kind == "exp_stable" and st_.rate == pytest.approx(7.2917e-3, rel=1e-4)

    def test_saddle(self, dc):
        free, _ = an.open_loop_equilibria(dc, 2 * dc.C, dc.v_1)
        assert an.classify_stability(dc, free, 2 * dc.C, 600.0).kind == "saddle_unstable_positive_side"

    def test_escape_threshold(self, dc):
        free = an.open_loop_equilibria(dc, 0.9 * dc.C, dc.v_1)[0]
        st_ = an.classify_stability(dc, free, 0.9 * dc.C, 600.0)
        assert st_.kind == "exp_stable_with_escape_threshold"
        assert st_.rate == pytest.approx(0.05) and st_.escape_threshold == dc.k_1

    def test_plain_uncongested(self, dc):
        (eq,) = an.open_loop_equilibria(dc, 0.5 * dc.C, dc.v_f)
        assert an.classify_stability(dc, eq, 0.5 * dc.C, 600.0).kind == "exp_stable"


class TestClosedLoop:
    def test_pi_unique(self, dc):
        (eq,) = an.closed_loop_equilibria(dc, 2 * dc.C, 500, 20)
        assert (eq.k_star, eq.u_star, eq.g_star) == (dc.k_1, dc.v_1, dc.C)

    @pytest.mark.parametrize("alpha", [0.0, 7.0, 500.0])
    def test_low_demand_with_integral(self, dc, alpha):
        (eq,) = an.closed_loop_equilibria(dc, 0.5 * dc.C, alpha, 4)
        assert eq.k_star == pytest.approx(0.5 * dc.C / dc.v_f) and eq.u_star == dc.v_f

    def test_threshold(self, dc):
        assert an.p_gain_threshold(dc) == pytest.approx(6.2025, abs=1e-4)

    def test_p_only_above_threshold(self, dc):
        free, jam = an.closed_loop_equilibria(dc, 2 * dc.C, 10.0, 0.0)
        assert free.k_star == dc.k_1
        assert jam.u_star == dc.v_2 and jam.k_star == pytest.approx(dc.k_1 + (dc.v_1 - dc.v_2) / 10)
        assert jam.g_star == pytest.approx(0.8 * dc.C)

    def test_p_only_below_threshold(self, dc):
        _, jam = an.closed_loop_equilibria(dc, 2 * dc.C, 2.0, 0.0)
        assert jam.k_star == dc.k_2 and jam.u_star == pytest.approx(dc.v_1 - 2 * (dc.k_2 - dc.k_1))

    def test_p_only_at_threshold_merges(self, dc):
        _, jam = an.closed_loop_equilibria(dc, 2 * dc.C, an.p_gain_threshold(dc), 0.0)
        assert jam.k_star == dc.k_2 and jam.u_star == dc.v_2

    def test_p_only_congested_states_balance(self, dc):
        for alpha in (2.0, 10.0):
            _, jam = an.closed_loop_equilibria(dc, 2 * dc.C, alpha, 0.0)
            assert an.flux_residual(dc, jam, 2 * dc.C) < 1e-12

    def test_both_gains_zero_rejected(self, dc):
        with pytest.raises(ConfigError):
            an.closed_loop_equilibria(dc, 2 * dc.C, 0, 0)

    def test_rhs_vanishes_at_equilibrium(self, dc):
        dk, du = an.closed_loop_rhs(dc, 600.0, 500, 20, 2 * dc.C, dc.k_1, dc.v_1)
        assert abs(dk) < 1e-15 and abs(du) < 1e-12


class TestSwitchedSystem:
    def test_matrices(self, dc):
        s = an.build_switched_system(dc, 600.0, 0.0, 4.0)
        assert np.allclose(s.A_neg, [[-0.05, 1.5128e-4], [-4, 0]], rtol=1e-4, atol=0)
        assert np.allclose(s.A_pos, [[0, 1.5128e-4], [-4, 0]], rtol=1e-4, atol=0)
        assert np.allclose(s.b_pos, [dc.C * 0.2 / 600, 0.0])

    def test_origin_is_fixed(self, dc):
        b = an.classify_limit_behavior(an.build_switched_system(dc, 600.0, 0.0, 4.0), 0.0, 0.0)
        assert b.kind == "converges_to_origin" and b.amplitude == 0.0

    @pytest.mark.parametrize("alpha, beta, kind", [(0, 4, "converges_to_origin"), (0, 20, "limit_cycle"),
                                                   (500, 20, "converges_to_origin"), (300, 20, "limit_cycle")])
    def test_classification(self, dc, alpha, beta, kind):
        s = an.build_switched_system(dc, 600.0, alpha, beta)
        b = an.classify_limit_behavior(s, dc.k_1, 0.0)
        assert b.kind == kind
        if kind == "limit_cycle":
            assert b.period > 0 and b.mean_g_deficit > 0

    @settings(max_examples=200)
    @given(st.floats(-1e-3, 0), st.floats(-1e-3, 1e-3), st.floats(0, 600), st.floats(0, 30))
    def test_matches_nonlinear_rhs_to_second_order(self, z, eps, alpha, beta):
        # In the z <= 0 branch only the speed-limit cap is nonlinear; the gap is its curvature term.
        s = an.build_switched_system(DC, 600.0, alpha, beta)
        lin = s.rhs(np.array([z, eps]))
        k, u = DC.k_1 + z, DC.v_1 + eps
        dk, du = an.closed_loop_rhs(DC, 600.0, alpha, beta, 2 * DC.C, k, u)
        curvature = 2 * DC.w ** 2 * DC.k_j / (DC.v_1 + DC.w) ** 3 / 600
        bound = curvature * eps ** 2 * (1 + 1e-6) + 1e-15
        assert abs(lin[0] - dk) <= bound
        assert abs(lin[1] - du) <= alpha * bound + 1e-13

    def test_exact_on_the_cap_free_axis(self, dc):
        # With eps = 0 the linearisation is exact on both branches.
        for alpha, beta in ((0, 4), (500, 20)):
            s = an.build_switched_system(dc, 600.0, alpha, beta)
            for z in (-1e-3, -1e-5, 1e-5, 1e-3):
                lin = s.rhs(np.array([z, 0.0]))
                dk, du = an.closed_loop_rhs(dc, 600.0, alpha, beta, 2 * dc.C, dc.k_1 + z, dc.v_1)
                assert lin[0] == pytest.approx(dk, rel=1e-12, abs=1e-18)
                assert lin[1] == pytest.approx(du, rel=1e-12, abs=1e-16)
