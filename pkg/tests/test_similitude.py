import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blastsim.blastload import (
    BlastScenario,
    BlastWaveform,
    reflected_pressure_peak,
    scaled_reflected_impulse,
    waveform_from_scenario,
    z_window,
)
from blastsim.errors import DomainError, InfeasibleScalingError, ZRangeError
from blastsim.rockdyn import Event, EventKind, Outcome, ResponseHistory, RigidBlock
from blastsim.similitude import (
    KinematicState,
    ScaleSet,
    blast_load_ratios,
    compare_histories,
    design_model,
    downscale_response,
    impulsiveness_report,
    lambda_z_residual,
    pi_groups,
    pi_terms,
    scale_set_general,
    scale_set_hopkinson,
    solve_lambda_z,
)

lengths = st.floats(1e-3, 1.0)
densities = st.floats(0.02, 5.0)


class TestScaleSet:
    def test_identity(self):
        s = scale_set_general(1.0, 1.0, 1.0).with_lambda_z(1.0)
        for name, value in s.as_dict().items():
            assert value == pytest.approx(1.0), name

    def test_general_factors(self):
        lam = 1 / 200
        s = scale_set_general(lam, 1.0, 1.0)
        assert s.time == pytest.approx(1 / math.sqrt(200), rel=1e-15)
        assert s.inertia == pytest.approx(lam**5, rel=1e-15)
        assert s.impulse == pytest.approx(lam**1.5, rel=1e-15)
        assert s.angular_velocity == pytest.approx(lam**-0.5, rel=1e-15)
        assert s.linear_velocity == pytest.approx(lam**0.5, rel=1e-15)
        assert s.displacement == lam and s.angle == 1.0 and s.friction == 1.0
        assert scale_set_general(1 / 20, 0.07).mass == pytest.approx(0.07 / 20**3, rel=1e-15)

    def test_accelerations_follow_time_scale(self):
        # second derivatives scale as displacement / time^2 (shared gravity)
        lam = 0.03
        s = scale_set_general(lam, 0.5)
        assert s.angular_acceleration == pytest.approx(s.angle / s.time**2, rel=1e-14)
        assert s.linear_acceleration == pytest.approx(s.displacement / s.time**2, rel=1e-14)
        assert s.angular_acceleration == pytest.approx(1 / lam, rel=1e-14)
        assert s.linear_acceleration == 1.0
        sig = 1.7
        s = scale_set_general(lam, 0.5, sig)
        assert s.angular_acceleration == pytest.approx(sig / lam, rel=1e-14)
        assert s.linear_acceleration == pytest.approx(sig, rel=1e-14)

    def test_gravity_forms(self):
        lam, gam, sig = 0.1, 0.4, 2.0
        s = scale_set_general(lam, gam, sig)
        assert s.angular_velocity == pytest.approx(math.sqrt(sig / lam))
        assert s.linear_velocity == pytest.approx(math.sqrt(sig * lam))
        assert s.time == pytest.approx(math.sqrt(sig * lam))
        assert s.pressure == pytest.approx(gam * sig * lam)
        assert s.impulse == pytest.approx(gam * math.sqrt(sig * lam**3))

    @settings(max_examples=80, deadline=None)
    @given(lengths, densities)
    def test_closure_relations(self, lam, gam):
        s = scale_set_general(lam, gam)
        assert s.pressure == pytest.approx(gam * lam, rel=1e-13)
        assert s.impulse == pytest.approx(gam * lam**1.5, rel=1e-13)
        # impulse = pressure * time; force / mass = acceleration; impulse * area / mass = velocity
        assert s.impulse / s.pressure == pytest.approx(s.time, rel=1e-13)
        assert s.pressure * lam**2 / s.mass == pytest.approx(s.linear_acceleration, rel=1e-13)
        assert s.impulse * lam**2 / s.mass == pytest.approx(s.linear_velocity, rel=1e-13)
        assert s.inertia / (s.mass * lam**2) == pytest.approx(1.0, rel=1e-13)

    @pytest.mark.xfail(strict=True, reason="printed closure identity is not dimensionally consistent")
    def test_printed_closure_identity(self):
        s = scale_set_general(1 / 20, 0.5)
        assert s.impulse**2 / (s.pressure * s.mass) == pytest.approx(
            s.time * s.length / s.displacement, rel=1e-9)

    def test_charge_factor(self):
        s = ScaleSet(0.01, 1.0, 1.0, 2.5)
        assert s.charge == pytest.approx((0.01 / 2.5) ** 3, rel=1e-15)
        assert ScaleSet(0.01).charge is None

    @pytest.mark.parametrize("bad", [dict(length=0), dict(length=1, density=-1),
                                     dict(length=1, gravity=0), dict(length=1, lambda_z=0),
                                     dict(length=1, friction=0.5)])
    def test_invalid(self, bad):
        with pytest.raises(DomainError):
            ScaleSet(**bad)


class TestHopkinson:
    @pytest.mark.parametrize("lam", [1.0, 1 / 2, 1 / 20, 1 / 200])
    def test_embedding(self, lam):
        h = scale_set_hopkinson(lam)
        g = scale_set_general(lam, lam**-0.5, 1.0).with_lambda_z(1.0)
        for name, value in g.as_dict().items():
            assert getattr(h, name) == pytest.approx(value, rel=1e-14), name

    def test_named_factors(self):
        h = scale_set_hopkinson(1 / 200)
        assert h.charge == pytest.approx(1 / 8e6, rel=1e-14)
        assert h.density == pytest.approx(math.sqrt(200), rel=1e-15)
        assert scale_set_hopkinson(1 / 20).impulse == pytest.approx(1 / 20, rel=1e-14)
        assert h.inertia == pytest.approx((1 / 200) ** 4.5, rel=1e-14)
        assert h.mass == pytest.approx((1 / 200) ** 2.5, rel=1e-14)

    @pytest.mark.parametrize("z", [0.2, 0.543, 3.0])
    def test_degenerate_lambda_z(self, z):
        for lam in (1 / 2, 1 / 20, 1 / 200):
            assert solve_lambda_z(z, lam, lam**-0.5) == pytest.approx(1.0, abs=1e-12)


class TestLambdaZ:
    @pytest.mark.parametrize("z, lam, expected", [
        (0.543, 1 / 20, 0.99), (0.431, 1 / 20, 0.78), (0.46, 1 / 20, 0.85),
        (0.543, 1 / 200, 1.62), (0.431, 1 / 200, 1.26), (0.46, 1 / 200, 1.37)])
    def test_table_scaled_distances(self, z, lam, expected):
        assert z * solve_lambda_z(z, lam, 1.0) == pytest.approx(expected, rel=0.02)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.1, 3.0), st.floats(1e-3, 0.9), st.floats(0.05, 1.0))
    def test_residual_at_root(self, z, lam, gam):
        try:
            lz = solve_lambda_z(z, lam, gam)
        except InfeasibleScalingError:
            return
        assert abs(lambda_z_residual(lz, z, lam, gam)) < 1e-8
        lhs = scaled_reflected_impulse(z * lz) / scaled_reflected_impulse(z) / lz
        assert lhs == pytest.approx(gam * math.sqrt(lam), rel=1e-8)

    def test_residual_monotone_over_window(self):
        z = 0.543
        lo, hi = z_window()
        lz = np.geomspace(lo / z, hi / z, 4000)
        res = [lambda_z_residual(v, z, 1 / 200, 1.0) for v in lz]
        assert np.all(np.diff(res) < 0)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.2, 2.0), st.floats(1e-3, 0.99), st.floats(0.05, 1.0))
    def test_reduced_model_loads(self, z, lam, gam):
        try:
            lz = solve_lambda_z(z, lam, gam)
        except InfeasibleScalingError:
            return
        assert lz > 1
        assert reflected_pressure_peak(z * lz) < reflected_pressure_peak(z)
        assert scaled_reflected_impulse(z * lz) < scaled_reflected_impulse(z)

    def test_infeasible(self):
        with pytest.raises(InfeasibleScalingError) as info:
            solve_lambda_z(0.543, 1 / 200, 1e-6)
        lo, hi = info.value.achievable
        assert 0 < lo < hi

    def test_errors(self):
        with pytest.raises(ZRangeError):
            solve_lambda_z(100.0, 0.1)
        with pytest.raises(DomainError):
            solve_lambda_z(0.5, -0.1)


class TestDesign:
    def test_geometry_1_200(self, prototype_block):
        d = design_model(prototype_block, BlastScenario(50, 2), 1 / 200, 1.0)
        assert 2 * d.block.half_height == pytest.approx(0.05, rel=1e-14)
        assert 2 * d.block.half_width == pytest.approx(0.0134, abs=5e-5)
        assert d.block.slenderness == pytest.approx(math.radians(15), rel=1e-14)
        assert d.scenario.standoff == pytest.approx(0.01, rel=1e-14)
        assert d.block.density == 2000.0
        assert d.block.friction_angle == prototype_block.friction_angle
        assert d.scenario.scaled_distance == pytest.approx(1.62, rel=0.02)
        assert d.scenario.charge_mass == pytest.approx(2.33e-7, rel=0.01)
        assert d.scenario.charge_mass == pytest.approx(50 * (1 / (200 * d.scale.lambda_z)) ** 3, rel=1e-12)

    def test_geometry_1_20(self, prototype_block):
        d = design_model(prototype_block, BlastScenario(50, 2), 1 / 20, 1.0)
        assert 2 * d.block.half_height == pytest.approx(0.5, rel=1e-14)
        assert d.scenario.standoff == pytest.approx(0.1, rel=1e-14)
        assert d.scenario.scaled_distance == pytest.approx(0.99, rel=0.02)
        assert d.scenario.charge_mass == pytest.approx(1.0e-3, rel=0.01)

    def test_density_scaled_model(self, prototype_block):
        d = design_model(prototype_block, BlastScenario(50, 2), 1 / 20, 0.07)
        assert d.block.density == pytest.approx(140.0)
        assert d.block.mass == pytest.approx(0.07 * prototype_block.mass / 20**3, rel=1e-12)

    def test_hopkinson_design(self, prototype_block):
        d = design_model(prototype_block, BlastScenario(50, 2), 1 / 200, hopkinson=True)
        assert d.scenario.scaled_distance == pytest.approx(d.prototype_scenario.scaled_distance, rel=1e-12)
        assert d.load_ratios["pressure"] == pytest.approx(1.0, rel=1e-12)
        with pytest.raises(DomainError):
            design_model(prototype_block, BlastScenario(50, 2), 1 / 200, 1.0, hopkinson=True)

    def test_friction_fixed(self, prototype_block):
        with pytest.raises(DomainError):
            design_model(prototype_block, BlastScenario(50, 2), 0.1, friction=0.5)

    def test_infeasible_design(self, prototype_block):
        with pytest.raises(InfeasibleScalingError):
            design_model(prototype_block, BlastScenario(50, 2), 1 / 200, 1e-6)

    def test_as_dict_is_plain(self, prototype_block):
        d = design_model(prototype_block, BlastScenario(50, 2), 1 / 200, 1.0).as_dict()
        assert set(d) >= {"prototype", "model", "scale", "load_ratios"}

    def test_load_ratios_need_lambda_z(self):
        with pytest.raises(DomainError):
            blast_load_ratios(0.5, ScaleSet(0.1))


class TestPiTerms:
    def test_rest_state(self, prototype_block):
        p = pi_terms(prototype_block)
        for name in ("displacement", "angle", "angular_acceleration", "angular_velocity",
                     "linear_acceleration", "linear_velocity", "thrust", "impulse"):
            assert getattr(p, name) == 0.0

    @pytest.mark.parametrize("alpha_deg", [5, 15, 30])
    def test_inertia_group(self, alpha_deg):
        block = RigidBlock.from_slenderness(4.0, math.radians(alpha_deg))
        h, r = block.half_height, block.radius
        assert pi_terms(block).inertia == pytest.approx(r**2 / (3 * h**2), rel=1e-14)

    def test_gravity_halves_thrust(self, prototype_block):
        wave = waveform_from_scenario(BlastScenario(50, 2))
        heavy = RigidBlock(prototype_block.half_width, prototype_block.half_height,
                           prototype_block.half_depth, prototype_block.density,
                           gravity=2 * prototype_block.gravity)
        assert pi_terms(heavy, wave).thrust == pytest.approx(0.5 * pi_terms(prototype_block, wave).thrust, rel=1e-14)

    def test_unit_invariance(self):
        # the same physical state in SI and in (cm, g, ms) gives the same groups
        state = KinematicState(0.1, 2.0, 30.0, 0.05, 0.3, 4.0, 0.2)
        si = pi_groups(2.0, 9.81, 50.0, 70.0, 1e5, 40.0, 0.6, state)
        cm, g, ms = 1e2, 1e3, 1e3
        cgs_state = KinematicState(0.1, 2.0 / ms, 30.0 / ms**2, 0.05 * cm, 0.3 * cm / ms,
                                   4.0 * cm / ms**2, 0.2 * ms)
        other = pi_groups(2.0 * cm, 9.81 * cm / ms**2, 50.0 * g, 70.0 * g * cm**2,
                          1e5 * g / (cm * ms**2), 40.0 * g / (cm * ms), 0.6, cgs_state)
        for name, value in si.as_dict().items():
            if name != "inertia_ratios":
                assert getattr(other, name) == pytest.approx(value, rel=1e-12), name

    def test_similar_systems_share_groups(self, prototype_block):
        s = scale_set_general(1 / 20, 0.3).with_lambda_z(1.0)
        wave = waveform_from_scenario(BlastScenario(50, 2))
        model = prototype_block.scaled(s.length, s.density)
        p_state = KinematicState(0.02, 0.1, 0.5, 0.01, 0.2, 3.0, 0.7)
        m_state = KinematicState(0.02, 0.1 * s.angular_velocity, 0.5 * s.angular_acceleration,
                                 0.01 * s.displacement, 0.2 * s.linear_velocity,
                                 3.0 * s.linear_acceleration, 0.7 * s.time)
        a = pi_terms(prototype_block, wave, p_state)
        b = pi_terms(model, wave.scaled(s.pressure, s.time), m_state)
        for name, value in a.as_dict().items():
            assert getattr(b, name) == pytest.approx(value, rel=1e-12), name


class TestResponseMapping:
    def _history(self):
        t = np.linspace(0, 2, 11)
        events = (Event(0.0, EventKind.ROCKING_START), Event(1.3, EventKind.IMPACT, -0.2, -0.18))
        return ResponseHistory(t, np.sin(t) * 0.1, np.cos(t) * 0.1, t**2, 2 * t, events,
                               Outcome.ROCKING_DECAYED)

    def test_identity(self):
        h = self._history()
        u = downscale_response(h, ScaleSet(1.0))
        for f in ("t", "theta", "theta_dot", "x", "x_dot"):
            np.testing.assert_array_equal(getattr(u, f), getattr(h, f))

    @settings(max_examples=40, deadline=None)
    @given(lengths, densities, st.floats(0.5, 2.0))
    def test_round_trip(self, lam, gam, sig):
        from blastsim.similitude import upscale_response
        h = self._history()
        s = scale_set_general(lam, gam, sig)
        back = upscale_response(downscale_response(h, s), s)
        for f in ("t", "theta", "theta_dot", "x", "x_dot"):
            np.testing.assert_allclose(getattr(back, f), getattr(h, f), rtol=1e-14, atol=0)
        assert back.events[1].time == pytest.approx(1.3, rel=1e-14)

    def test_impact_retimed(self):
        from blastsim.similitude import upscale_response
        s = scale_set_general(1 / 200)
        model = downscale_response(self._history(), s)
        t_model = model.first_time(EventKind.IMPACT)
        up = upscale_response(model, s)
        assert up.first_time(EventKind.IMPACT) == pytest.approx(t_model * math.sqrt(200), rel=1e-14)

    def test_compare_identical(self):
        h = self._history()
        m = compare_histories(h, h)
        assert m["pre_impact_sup_error"] == 0.0
        assert m["same_outcome"]


class TestImpulsiveness:
    def test_prototype(self, prototype_block):
        wave = waveform_from_scenario(BlastScenario(50, 2))
        rep = impulsiveness_report(prototype_block, wave)
        assert rep.characteristic_time == pytest.approx(math.sqrt(10 / 9.81), rel=1e-14)
        assert rep.characteristic_time == pytest.approx(1.01, abs=0.005)
        assert rep.impulsive
        assert rep.thrust_pi == pytest.approx(pi_terms(prototype_block, wave).thrust)

    def test_linear_in_duration(self, prototype_block):
        a = BlastWaveform.from_decay(1.0, 2.0, 1.0)
        b = BlastWaveform.from_decay(1.0, 4.0, 1.0)
        ra = impulsiveness_report(prototype_block, a)
        rb = impulsiveness_report(prototype_block, b)
        assert rb.duration_ratio == pytest.approx(2 * ra.duration_ratio, rel=1e-14)

    def test_short_pulse_limit(self, prototype_block):
        tiny = BlastWaveform.from_decay(1.0, 1e-12, 1.0)
        assert impulsiveness_report(prototype_block, tiny).duration_ratio < 1e-14
        slow = BlastWaveform.from_decay(1.0, 1e3, 1.0)
        assert not impulsiveness_report(prototype_block, slow).impulsive
        assert impulsiveness_report(prototype_block, slow, threshold=10.0).impulsive
