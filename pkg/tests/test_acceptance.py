"""Acceptance criteria, one PASS/FAIL line each in the terminal summary.

Every check records its verdict before asserting, so a failing criterion
still shows up in the summary with the measured value.
"""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blastsim.blastload import BlastScenario, BlastWaveform, RectangularPulse, waveform_from_scenario
from blastsim.rockdyn import (
    DEFAULT_RTOL,
    MPA,
    MS,
    Outcome,
    RigidBlock,
    critical_charge,
    simulate_rocking,
    simulate_sliding,
)
from blastsim.similitude import (
    blast_load_ratios,
    compare_histories,
    design_model,
    scale_set_general,
    scale_set_hopkinson,
    similar_waveform,
    solve_lambda_z,
    upscale_response,
)

from .conftest import ACCEPTANCE

# prototype charges of the validation study and their scaled distances at R = 2 m
TABLE_Z = {50.0: 0.543, 100.0: 0.431, 79.8: 0.46}
MODEL_Z = {(0.543, 1 / 20): 0.99, (0.431, 1 / 20): 0.78, (0.46, 1 / 20): 0.85,
           (0.543, 1 / 200): 1.62, (0.431, 1 / 200): 1.26, (0.46, 1 / 200): 1.37}


def check(name, ok, detail):
    ACCEPTANCE.append((name, bool(ok), detail))
    assert ok, f"{name}: {detail}"


def dense_pair(block, design, t_end=8.0, n=40001, rtol=DEFAULT_RTOL):
    grid = np.linspace(0.0, t_end, n)
    proto = simulate_rocking(block, waveform_from_scenario(design.prototype_scenario), t_end,
                             t_eval=grid, rtol=rtol)
    model = simulate_rocking(design.block, waveform_from_scenario(design.scenario),
                             t_end * design.scale.time, t_eval=grid * design.scale.time, rtol=rtol)
    return proto, upscale_response(model, design.scale)


# 1 ------------------------------------------------------------------------

@pytest.mark.parametrize("z, lam", sorted(MODEL_Z))
def test_c1_scaled_distances(z, lam):
    target = MODEL_Z[(z, lam)]
    got = z * solve_lambda_z(z, lam, 1.0)
    err = got / target - 1
    check(f"1 scaled distance Z_p={z} lambda=1/{round(1 / lam)}", abs(err) <= 0.02,
          f"model Z {got:.4f} vs {target} ({err:+.2%}, tol 2%)")


# 2 ------------------------------------------------------------------------

def test_c2_critical_charge(prototype_block):
    start = time.perf_counter()
    res = critical_charge(prototype_block, 2.0, (40.0, 160.0))
    elapsed = time.perf_counter() - start
    err = res.charge / 79.8 - 1
    check("2 critical charge", abs(err) <= 0.05,
          f"W_c = {res.charge:.3f} kg vs 79.8 kg ({err:+.2%}, tol 5%), "
          f"{len(res.evaluations)} runs in {elapsed:.2f} s")


# 3 ------------------------------------------------------------------------

@pytest.mark.parametrize("charge, expected", [(50.0, Outcome.ROCKING_DECAYED), (100.0, Outcome.OVERTURNED)])
def test_c3_outcomes(prototype_block, charge, expected):
    h = simulate_rocking(prototype_block, waveform_from_scenario(BlastScenario(charge, 2.0)))
    check(f"3 outcome {charge:g} kg", h.outcome is expected,
          f"{h.outcome.value} (expected {expected.value}), peak theta {h.peak_theta:.4f} rad")


# 4 ------------------------------------------------------------------------

def _ratios(z, lam, gam):
    return blast_load_ratios(z, scale_set_general(lam, gam).with_lambda_z(solve_lambda_z(z, lam, gam)))


@pytest.mark.parametrize("charge", sorted(TABLE_Z))
def test_c4_pressure_ratio(charge):
    z = BlastScenario(charge, 2.0).scaled_distance
    r = _ratios(z, 1 / 200, 1.0)["pressure"]
    check(f"4 pressure ratio {charge:g} kg, gamma=1", 0.05 <= r <= 0.08, f"{r:.2%} (band 5%-8%)")


@pytest.mark.parametrize("charge", sorted(TABLE_Z))
def test_c4_impulse_ratio(charge):
    z = BlastScenario(charge, 2.0).scaled_distance
    r = _ratios(z, 1 / 200, 1.0)["impulse"]
    check(f"4 impulse ratio {charge:g} kg, gamma=1", abs(r - 0.003) <= 0.001,
          f"{r:.4%} vs 0.3% +/- 0.1 pt (gamma*lambda^1.5 = {200 ** -1.5:.4%})")


def test_c4_low_density_pressure_ratio():
    r = _ratios(BlastScenario(50.0, 2.0).scaled_distance, 1 / 200, 0.05)["pressure"]
    check("4 pressure ratio 50 kg, gamma=0.05", abs(r - 0.0018) <= 0.0005,
          f"{r:.3%} vs 0.18% +/- 0.05 pt")


# 5 ------------------------------------------------------------------------

@pytest.mark.parametrize("lam", [1 / 20, 1 / 200])
@pytest.mark.parametrize("charge", sorted(TABLE_Z))
def test_c5_table_scenarios(prototype_block, charge, lam):
    design = design_model(prototype_block, BlastScenario(charge, 2.0), lam, 1.0)
    proto, model = dense_pair(prototype_block, design)
    m = compare_histories(proto, model)
    err = m["pre_impact_sup_error"]
    check(f"5 closure {charge:g} kg lambda=1/{round(1 / lam)}", err <= 0.02,
          f"pre-impact sup error {err:.3%} of peak theta (tol 2%); outcomes "
          f"{m['prototype_outcome']}/{m['model_outcome']}")


_similar_failures: list[str] = []


@settings(max_examples=12, deadline=None, derandomize=True)
@given(st.floats(1e-3, 0.5), st.floats(0.05, 1.0), st.sampled_from([30.0, 50.0, 100.0]))
def _similar_case(lam, gam, charge):
    block = RigidBlock.from_slenderness(10.0, math.radians(15.0), density=2000.0)
    scale = scale_set_general(lam, gam)
    tri = waveform_from_scenario(BlastScenario(charge, 2.0), "triangular")
    grid = np.linspace(0.0, 6.0, 3001)
    proto = simulate_rocking(block, tri, 6.0, t_eval=grid)
    model = simulate_rocking(block.scaled(lam, gam), similar_waveform(tri, scale), 6.0 * scale.time,
                             t_eval=grid * scale.time)
    up = upscale_response(model, scale)
    err = float(np.max(np.abs(up.theta - proto.theta))) / proto.peak_theta
    if not (err <= 10 * DEFAULT_RTOL and up.outcome is proto.outcome):
        _similar_failures.append(f"lambda={lam:.4g} gamma={gam:.3g} W={charge}: {err:.2e}")
    _similar_case.worst = max(getattr(_similar_case, "worst", 0.0), err)


def test_c5_similar_triangular_loads():
    _similar_failures.clear()
    _similar_case()
    worst = getattr(_similar_case, "worst", math.nan)
    check("5 closure, fully similar triangular loads", not _similar_failures,
          f"worst relative theta error {worst:.2e} (tol {10 * DEFAULT_RTOL:g})"
          + (f"; failing: {_similar_failures}" if _similar_failures else ""))


@pytest.mark.parametrize("lam, gam", [(1 / 20, 1.0), (1 / 200, 1.0), (1 / 200, 0.07)])
def test_c5_nondimensional(prototype_block, lam, gam):
    scale = scale_set_general(lam, gam)
    wave = waveform_from_scenario(BlastScenario(79.8, 2.0))
    grid = np.linspace(0.0, 6.0, 3001)
    proto = simulate_rocking(prototype_block, wave, 6.0, t_eval=grid, nondimensional=True)
    model = simulate_rocking(prototype_block.scaled(lam, gam), similar_waveform(wave, scale),
                             6.0 * scale.time, t_eval=grid * scale.time, nondimensional=True)
    up = upscale_response(model, scale)
    err = float(np.max(np.abs(up.theta - proto.theta))) / proto.peak_theta
    check(f"5 closure, nondimensional lambda=1/{round(1 / lam)} gamma={gam}", err <= 10 * DEFAULT_RTOL,
          f"relative theta error {err:.2e} (tol {10 * DEFAULT_RTOL:g})")


# 6 ------------------------------------------------------------------------

def test_c6_quadrature():
    worst = 0.0
    for w in (1e-6, 1e-3, 1.0, 50.0, 79.8, 100.0, 2500.0):
        for r in (0.01, 0.1, 1.0, 2.0, 3.0, 10.0):
            try:
                wave = waveform_from_scenario(BlastScenario(w, r))
            except Exception:
                continue  # outside the fit window or without a decay solution
            worst = max(worst, abs(wave.quadrature_impulse() / wave.impulse - 1))
    check("6 Friedlander quadrature", worst <= 1e-6, f"worst relative error {worst:.2e} (tol 1e-6)")


def test_c6_triangular_area():
    worst = 0.0
    for w, r in ((50, 2), (100, 2), (79.8, 2), (1e-3, 0.1), (2.33e-7, 0.01)):
        tri = waveform_from_scenario(BlastScenario(w, r), "triangular")
        worst = max(worst, abs(0.5 * tri.peak_pressure * tri.linear_duration - tri.impulse) / tri.impulse)
    check("6 triangular area", worst <= 4 * np.finfo(float).eps, f"worst relative error {worst:.1e}")


def test_c6_decay_round_trip():
    from blastsim.blastload import friedlander_decay, friedlander_impulse
    d = np.geomspace(0.01, 20.0, 400)
    back = np.array([friedlander_decay(2.0, 3.0, friedlander_impulse(2.0, 3.0, v)) for v in d])
    worst = float(np.max(np.abs(back / d - 1)))
    check("6 decay round trip", worst <= 1e-8, f"worst relative error {worst:.1e} over d in [0.01, 20]")


# 7 ------------------------------------------------------------------------

def test_c7_hopkinson_lambda_z():
    worst = 0.0
    for lam in (1 / 2, 1 / 20, 1 / 200):
        for z in (0.2, 0.431, 0.46, 0.543, 2.0):
            worst = max(worst, abs(solve_lambda_z(z, lam, lam**-0.5) - 1))
    check("7 Hopkinson lambda_Z", worst <= 1e-6, f"max |lambda_Z - 1| = {worst:.1e}")


# printed Hopkinson-Cranz table: factor as a function of lambda
PRINTED_TABLE = {
    "length": lambda l: l,
    "angle": lambda l: 1.0,
    "density": lambda l: l**-0.5,
    "angular_velocity": lambda l: l**-0.5,
    "displacement": lambda l: l,
    "angular_acceleration": lambda l: 1.0,
    "linear_velocity": lambda l: l**0.5,
    "time": lambda l: l**0.5,
    "linear_acceleration": lambda l: l**-1,
    "mass": lambda l: l**2.5,
    "impulse": lambda l: l,
    "inertia": lambda l: l**4.5,
    "charge": lambda l: l**3,
}


@pytest.mark.parametrize("row", list(PRINTED_TABLE))
def test_c7_hopkinson_table(row):
    bad = []
    for lam in (1 / 2, 1 / 20, 1 / 200):
        got = getattr(scale_set_hopkinson(lam), row)
        want = PRINTED_TABLE[row](lam)
        if not math.isclose(got, want, rel_tol=1e-12):
            bad.append(f"lambda=1/{round(1 / lam)}: {got:.6g} vs printed {want:.6g}")
    check(f"7 Hopkinson table row {row}", not bad, "; ".join(bad) or "matches for lambda 1/2, 1/20, 1/200")


# 8 ------------------------------------------------------------------------

def test_c8_frictionless_impulse_momentum():
    block = RigidBlock(0.5, 1.0, 0.5, 2000.0, friction_angle=1e-12)
    worst = 0.0
    for pulse in (RectangularPulse(0.2, 5.0), BlastWaveform.from_decay(3.0, 2.0, 1.3)):
        h = simulate_sliding(block, pulse, 0.05)
        expected = block.incident_area * pulse.impulse * MPA * MS / block.mass
        worst = max(worst, abs(h.x_dot[-1] / expected - 1))
    check("8 frictionless impulse-momentum", worst <= 10 * DEFAULT_RTOL,
          f"relative velocity error {worst:.1e} (tol {10 * DEFAULT_RTOL:g})")


def test_c8_far_field_slide():
    block = RigidBlock.from_slenderness(10.0, math.radians(35.0), depth=3.5, density=2000.0)
    h = simulate_sliding(block, waveform_from_scenario(BlastScenario(2500.0, 3.0)))
    ok = 0.1 <= h.peak_x <= 10.0 and h.outcome is Outcome.REST
    check("8 slide distance order of magnitude", ok, f"{h.peak_x:.2f} m (expected O(1 m), i.e. 0.1-10 m)")
