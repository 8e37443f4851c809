import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanedrop import flow_core as fc
from lanedrop.errors import ConfigError, DomainError


class TestDerivedConstants:
    def test_reference_values(self, dc):
        # Oracle: exact fractions with v_f=30, w=35/8, k_j=2/7, C=6/11, delta=0.2.
        assert dc.k_c == pytest.approx(2 / 55, rel=1e-15)
        assert dc.k_1 == pytest.approx(1 / 55, rel=1e-15)
        assert dc.k_2 == pytest.approx(2 / 7 - 0.8 * 6 / 11 / 4.375, rel=1e-14)
        assert dc.k_2 == pytest.approx(0.185974, abs=1e-6)
        assert dc.v_1 == pytest.approx(105 / 31, rel=1e-14)
        assert dc.v_2 == pytest.approx(2.346369, abs=1e-6)
        assert dc.k_3 == pytest.approx(0.0907674, abs=1e-7)
        assert dc.fd.capacity == pytest.approx(12 / 11, rel=1e-15)

    def test_cap_at_v1_and_v2(self, dc):
        assert fc.vsl_cap(dc.fd, dc.v_1) == pytest.approx(dc.C, rel=1e-14)
        assert fc.vsl_cap(dc.fd, dc.v_2) == pytest.approx(0.8 * dc.C, rel=1e-14)

    def test_k3_is_cap_slope_at_v1(self, dc):
        h = 1e-6
        slope = (fc.vsl_cap(dc.fd, dc.v_1 + h) - fc.vsl_cap(dc.fd, dc.v_1 - h)) / (2 * h)
        assert slope == pytest.approx(dc.k_3, rel=1e-8)

    def test_aliases(self, dc):
        assert (dc.v_f, dc.w, dc.k_j, dc.C, dc.delta) == (30.0, 4.375, 2 / 7, 6 / 11, 0.2)

    def test_capacity_above_road_capacity_rejected(self):
        fd, _ = fc.reference_parameters()
        with pytest.raises(ConfigError, match="bottleneck.C"):
            fc.derive_constants(fd, fc.Bottleneck(C=1.2, delta=0.2))

    @pytest.mark.parametrize("kw", [dict(v_f=0, w=1, k_j=1), dict(v_f=1, w=-1, k_j=1), dict(v_f=1, w=1, k_j=0)])
    def test_bad_diagram(self, kw):
        with pytest.raises(ConfigError):
            fc.FundamentalDiagram(**kw)

    @pytest.mark.parametrize("delta", [-0.1, 1.0])
    def test_bad_delta(self, delta):
        with pytest.raises(ConfigError):
            fc.Bottleneck(C=0.5, delta=delta)


class TestFlow:
    def test_examples(self, dc):
        fd = dc.fd
        assert fc.flow(fd, 0.0) == 0.0
        assert fc.flow(fd, fd.k_j) == pytest.approx(0.0, abs=1e-15)
        assert fc.flow(fd, dc.k_c) == pytest.approx(12 / 11, rel=1e-14)
        assert fc.demand(fd, fd.k_j) == pytest.approx(fd.capacity)
        assert fc.supply(fd, 0.0) == pytest.approx(fd.capacity)

    @given(st.floats(0.0, 2 / 7))
    def test_min_of_demand_and_supply_is_flow(self, rho):
        fd = fc.reference_parameters()[0]
        assert min(fc.demand(fd, rho), fc.supply(fd, rho)) == pytest.approx(fc.flow(fd, rho), abs=1e-15)

    def test_monotone_on_grid(self, dc):
        rho = np.linspace(0.0, dc.k_j, 2001)
        assert np.all(np.diff(fc.demand(dc.fd, rho)) >= 0)
        assert np.all(np.diff(fc.supply(dc.fd, rho)) <= 0)

    @pytest.mark.parametrize("rho", [-1e-6, 0.3, math.nan])
    def test_out_of_range_density(self, dc, rho):
        with pytest.raises(DomainError):
            fc.flow(dc.fd, rho)

    def test_speed_for_flow_inverts_cap(self, dc):
        u = np.linspace(0.5, 30, 50)
        assert np.allclose(fc.speed_for_flow(dc.fd, fc.vsl_cap(dc.fd, u)), u, rtol=1e-12)


class TestBoundaryFluxes:
    def test_discharge_examples(self, dc):
        assert fc.discharge_flux(dc, dc.k_1) == pytest.approx(dc.C, rel=1e-15)
        assert fc.discharge_flux(dc, dc.k_1 * (1 + 1e-9)) == pytest.approx(0.436364, abs=1e-6)
        assert fc.discharge_flux(dc, dc.k_1 / 2) == pytest.approx(dc.C / 2, rel=1e-15)

    def test_discharge_vectorised(self, dc):
        k = np.array([0.0, dc.k_1, 2 * dc.k_1])
        assert np.allclose(fc.discharge_flux(dc, k), [0.0, dc.C, 0.8 * dc.C])

    def test_inflow_examples(self, dc):
        assert fc.inflow_flux(dc, 2 * dc.C, dc.v_f, 0.0) == pytest.approx(12 / 11, rel=1e-14)
        assert fc.inflow_flux(dc, 2 * dc.C, dc.v_1, 1e-3) == pytest.approx(dc.C, rel=1e-14)
        for u in (0.5, dc.v_1, dc.v_f):
            assert fc.inflow_flux(dc, 2 * dc.C, u, dc.k_j) == pytest.approx(0.0, abs=1e-15)

    def test_inflow_rejects_bad_inputs(self, dc):
        with pytest.raises(DomainError):
            fc.inflow_flux(dc, -0.1, dc.v_f, 0.0)
        with pytest.raises(DomainError):
            fc.inflow_flux(dc, 0.1, 31.0, 0.0)

    @settings(max_examples=200)
    @given(st.floats(0, 2.0), st.floats(0, 30), st.floats(0, 2 / 7))
    def test_inflow_never_exceeds_any_limit(self, d, u, k):
        dc = fc.reference_constants()
        f = fc.inflow_flux(dc, d, u, k)
        assert 0 <= f <= d + 1e-15
        assert f <= fc.vsl_cap(dc.fd, u) + 1e-15
        assert f <= dc.w * (dc.k_j - k) + 1e-15

    def test_scalar_and_array_paths_agree(self, dc):
        rng = np.random.default_rng(3)
        d, u, k = rng.uniform(0, 1, 100), rng.uniform(0, 30, 100), rng.uniform(0, dc.k_j, 100)
        arr = fc._inflow(dc, d, u, k)
        assert np.array_equal(arr, [fc._inflow(dc, float(a), float(b), float(c)) for a, b, c in zip(d, u, k)])
        assert np.array_equal(fc._discharge(dc, k), [fc._discharge(dc, float(c)) for c in k])
