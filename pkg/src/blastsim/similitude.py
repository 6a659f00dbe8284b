"""Similitude laws for the rigid-body blast response of blocks.

Scale factors are model/prototype ratios.  Three are independent: length
``lambda``, density ``gamma`` and gravity ``varsigma``.  The charge of the
model follows from the scaled-distance factor ``lambda_Z``, chosen so the
reflected impulse scales like the structural impulse factor while the
stand-off distance scales geometrically.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .blastload import (
    BlastScenario,
    BlastWaveform,
    reflected_pressure_peak,
    scaled_positive_duration,
    scaled_reflected_impulse,
    z_window,
)
from .errors import DomainError, InfeasibleScalingError, ZRangeError
from .rockdyn import MPA, MS, Event, EventKind, ResponseHistory, RigidBlock

__all__ = [
    "KinematicState",
    "ModelDesign",
    "PiTerms",
    "ImpulsivenessReport",
    "ScaleSet",
    "blast_load_ratios",
    "compare_histories",
    "design_model",
    "downscale_response",
    "impulsiveness_report",
    "lambda_z_residual",
    "pi_groups",
    "pi_terms",
    "scale_set_general",
    "scale_set_hopkinson",
    "similar_waveform",
    "solve_lambda_z",
    "upscale_response",
]


@dataclass(frozen=True)
class ScaleSet:
    """Independent scale factors plus every derived model/prototype ratio."""

    length: float
    density: float = 1.0
    gravity: float = 1.0
    lambda_z: float | None = None
    friction: float = 1.0

    def __post_init__(self):
        for name in ("length", "density", "gravity"):
            if not getattr(self, name) > 0:
                raise DomainError(f"scale factor {name} must be positive, got {getattr(self, name)!r}")
        if self.lambda_z is not None and not self.lambda_z > 0:
            raise DomainError("lambda_z must be positive")
        if self.friction != 1.0:
            raise DomainError("friction must be identical in model and prototype (factor 1)")

    displacement = property(lambda self: self.length)
    angle = property(lambda self: 1.0)
    angular_velocity = property(lambda self: math.sqrt(self.gravity / self.length))
    angular_acceleration = property(lambda self: self.gravity / self.length)
    linear_velocity = property(lambda self: math.sqrt(self.gravity * self.length))
    linear_acceleration = property(lambda self: self.gravity)
    # gravity enters as printed in the scaling table; exact for gravity == 1
    time = property(lambda self: math.sqrt(self.gravity * self.length))
    mass = property(lambda self: self.density * self.length**3)
    inertia = property(lambda self: self.density * self.length**5)
    pressure = property(lambda self: self.density * self.gravity * self.length)
    impulse = property(lambda self: self.density * math.sqrt(self.gravity * self.length**3))

    @property
    def charge(self) -> float | None:
        """TNT-equivalent mass factor ``(lambda / lambda_Z)^3``."""
        if self.lambda_z is None:
            return None
        return (self.length / self.lambda_z) ** 3

    def with_lambda_z(self, lambda_z: float) -> "ScaleSet":
        return replace(self, lambda_z=lambda_z)

    def as_dict(self) -> dict:
        names = ("length", "density", "gravity", "lambda_z", "charge", "displacement", "angle",
                 "angular_velocity", "angular_acceleration", "linear_velocity",
                 "linear_acceleration", "time", "mass", "inertia", "pressure", "impulse",
                 "friction")
        return {n: getattr(self, n) for n in names}


def scale_set_general(length: float, density: float = 1.0, gravity: float = 1.0) -> ScaleSet:
    return ScaleSet(length, density, gravity)


def scale_set_hopkinson(length: float) -> ScaleSet:
    """Hopkinson-Cranz scaling: density forced to ``lambda^-1/2``, ``lambda_Z = 1``."""
    if not length > 0:
        raise DomainError("length scale must be positive")
    return ScaleSet(length, length**-0.5, 1.0, 1.0)


# --------------------------------------------------------------------------
# Pi terms
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KinematicState:
    theta: float = 0.0
    theta_dot: float = 0.0
    theta_ddot: float = 0.0
    x: float = 0.0
    x_dot: float = 0.0
    x_ddot: float = 0.0
    t: float = 0.0


@dataclass(frozen=True)
class PiTerms:
    inertia_ratios: tuple[float, ...]
    displacement: float
    angle: float
    angular_acceleration: float
    angular_velocity: float
    linear_acceleration: float
    linear_velocity: float
    time: float
    friction: float
    inertia: float
    thrust: float
    impulse: float

    def as_dict(self) -> dict:
        return asdict(self)


def pi_groups(length, gravity, mass, inertia, pressure, impulse, friction,
              state: KinematicState = KinematicState(), inertia_ratios=()) -> PiTerms:
    """Dimensionless groups from raw quantities in any consistent unit system.

    ``pressure`` and ``impulse`` are per unit area (Pa and Pa*s in SI).
    """
    l, g = length, gravity
    return PiTerms(
        inertia_ratios=tuple(inertia_ratios),
        displacement=state.x / l,
        angle=state.theta,
        angular_acceleration=state.theta_ddot * l / g,
        angular_velocity=state.theta_dot * math.sqrt(l / g),
        linear_acceleration=state.x_ddot / g,
        linear_velocity=state.x_dot / math.sqrt(l * g),
        time=state.t * math.sqrt(g / l),
        friction=friction,
        inertia=inertia / (mass * l**2),
        thrust=pressure * l**2 / (mass * g),
        impulse=impulse / mass * math.sqrt(l**3 / g),
    )


def pi_terms(block: RigidBlock, load=None, state: KinematicState = KinematicState()) -> PiTerms:
    """Pi terms of ``block`` under ``load`` (peak pressure and impulse) at ``state``.

    The characteristic length is the block height ``2h``; ``state`` is in SI.
    """
    pressure = load.peak_pressure * MPA if load is not None else 0.0
    impulse = load.impulse * MPA * MS if load is not None else 0.0
    return pi_groups(block.characteristic_length, block.gravity, block.mass,
                     block.pivot_inertia, pressure, impulse, block.friction_coefficient,
                     state, block.inertia_ratios)


# --------------------------------------------------------------------------
# Scaled-distance factor
# --------------------------------------------------------------------------

def _impulse_target(length, density, gravity):
    return density * math.sqrt(gravity * length)


def lambda_z_residual(lambda_z, z_prototype, length, density, gravity=1.0, window=None):
    """Relative mismatch between blast and structural impulse scaling.

    Zero when ``irw(Z lambda_Z) / (lambda_Z irw(Z)) == gamma sqrt(varsigma lambda)``.
    """
    ratio = (scaled_reflected_impulse(z_prototype * lambda_z, window)
             / scaled_reflected_impulse(z_prototype, window))
    return ratio / lambda_z / _impulse_target(length, density, gravity) - 1.0


def solve_lambda_z(z_prototype: float, length: float, density: float = 1.0,
                   gravity: float = 1.0, window=None, grid: int = 400) -> float:
    """Scaled-distance factor ``lambda_Z`` giving impulse similarity.

    The model scaled distance ``Z lambda_Z`` is scanned on a log grid over
    the fit window to bracket the root, which is then refined by Brent's
    method.
    """
    for name, v in (("length", length), ("density", density), ("gravity", gravity)):
        if not v > 0:
            raise DomainError(f"{name} scale must be positive, got {v!r}")
    lo, hi = z_window(window)
    if not lo <= z_prototype <= hi:
        raise ZRangeError(z_prototype, lo, hi)
    target = _impulse_target(length, density, gravity)
    z_model = np.geomspace(lo, hi, grid)
    lz = z_model / z_prototype
    lhs = scaled_reflected_impulse(z_model, window) / scaled_reflected_impulse(z_prototype, window) / lz
    res = lhs / target - 1.0
    exact = np.flatnonzero(res == 0.0)
    if exact.size:
        return float(lz[exact[0]])
    flips = np.flatnonzero(np.sign(res[:-1]) != np.sign(res[1:]))
    if flips.size == 0:
        raise InfeasibleScalingError(
            f"no lambda_Z within Z window [{lo:g}, {hi:g}] gives gamma*sqrt(lambda) = {target:.6g}; "
            f"achievable range [{lhs.min():.6g}, {lhs.max():.6g}]",
            achievable=(float(lhs.min()), float(lhs.max())),
        )
    k = flips[0]
    root = brentq(lambda_z_residual, lz[k], lz[k + 1],
                  args=(z_prototype, length, density, gravity, window),
                  xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(root)


def blast_load_ratios(z_prototype: float, scale: ScaleSet, window=None) -> dict:
    """Model/prototype ratios of peak pressure, impulse and duration."""
    if scale.lambda_z is None:
        raise DomainError("scale set has no lambda_z")
    z_model = z_prototype * scale.lambda_z
    cube = scale.length / scale.lambda_z
    return {
        "scaled_distance": z_model,
        "pressure": reflected_pressure_peak(z_model, window) / reflected_pressure_peak(z_prototype, window),
        "impulse": scaled_reflected_impulse(z_model, window)
        / scaled_reflected_impulse(z_prototype, window) * cube,
        "duration": scaled_positive_duration(z_model, window)
        / scaled_positive_duration(z_prototype, window) * cube,
    }


@dataclass(frozen=True)
class ModelDesign:
    prototype_block: RigidBlock
    prototype_scenario: BlastScenario
    block: RigidBlock
    scenario: BlastScenario
    scale: ScaleSet
    load_ratios: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        def blk(b: RigidBlock):
            return {"height": b.characteristic_length, "width": 2 * b.half_width,
                    "depth": 2 * b.half_depth, "slenderness_deg": math.degrees(b.slenderness),
                    "density": b.density, "friction_angle_deg": math.degrees(b.friction_angle),
                    "gravity": b.gravity, "mass": b.mass}

        def scn(s: BlastScenario):
            return {"charge_mass": s.charge_mass, "standoff": s.standoff,
                    "scaled_distance": s.scaled_distance}

        return {
            "prototype": {"block": blk(self.prototype_block), "blast": scn(self.prototype_scenario)},
            "model": {"block": blk(self.block), "blast": scn(self.scenario)},
            "scale": self.scale.as_dict(),
            "load_ratios": dict(self.load_ratios),
        }


def design_model(block: RigidBlock, scenario: BlastScenario, length: float,
                 density: float | None = None, gravity: float = 1.0, *,
                 hopkinson: bool = False, friction: float = 1.0, window=None) -> ModelDesign:
    """Scaled specimen and charge reproducing the prototype's rigid-body response.

    Lengths (including the stand-off) scale by ``length``; the charge by
    ``(length / lambda_Z)^3``.  With ``hopkinson`` the density factor is
    imposed as ``length^-1/2`` and the scaled distance is preserved.
    """
    if friction != 1.0:
        raise DomainError("friction scaling other than 1 is not supported")
    if hopkinson:
        if density is not None and not math.isclose(density, length**-0.5):
            raise DomainError("Hopkinson-Cranz scaling fixes the density factor to length^-1/2")
        if gravity != 1.0:
            raise DomainError("Hopkinson-Cranz scaling assumes a shared gravity field")
        scale = scale_set_hopkinson(length)
    else:
        density = 1.0 if density is None else density
        lz = solve_lambda_z(scenario.scaled_distance, length, density, gravity, window)
        scale = ScaleSet(length, density, gravity, lz)
    model_block = block.scaled(scale.length, scale.density, scale.gravity)
    model_scenario = BlastScenario(scenario.charge_mass * scale.charge, scenario.standoff * length)
    ratios = blast_load_ratios(scenario.scaled_distance, scale, window)
    return ModelDesign(block, scenario, model_block, model_scenario, scale, ratios)


def similar_waveform(waveform: BlastWaveform, scale: ScaleSet) -> BlastWaveform:
    """Model pulse that satisfies pressure, duration and impulse similarity at once."""
    return waveform.scaled(scale.pressure, scale.time)


# --------------------------------------------------------------------------
# Response mapping
# --------------------------------------------------------------------------

def _map_history(history: ResponseHistory, time_f, rate_f, disp_f, vel_f) -> ResponseHistory:
    ev_rate = rate_f if history.mechanism == "rocking" else vel_f
    return replace(
        history,
        t=history.t * time_f,
        theta=history.theta.copy(),
        theta_dot=history.theta_dot * rate_f,
        x=history.x * disp_f,
        x_dot=history.x_dot * vel_f,
        events=tuple(Event(e.time * time_f, e.kind, e.rate_before * ev_rate, e.rate_after * ev_rate)
                     for e in history.events),
    )


def upscale_response(history: ResponseHistory, scale: ScaleSet) -> ResponseHistory:
    """Map a model response to prototype quantities (divide by each factor)."""
    return _map_history(history, 1 / scale.time, 1 / scale.angular_velocity,
                        1 / scale.displacement, 1 / scale.linear_velocity)


def downscale_response(history: ResponseHistory, scale: ScaleSet) -> ResponseHistory:
    """Map a prototype response to model quantities."""
    return _map_history(history, scale.time, scale.angular_velocity,
                        scale.displacement, scale.linear_velocity)


@dataclass(frozen=True)
class ImpulsivenessReport:
    thrust_pi: float
    duration_ratio: float
    characteristic_time: float
    threshold: float

    @property
    def impulsive(self) -> bool:
        return self.duration_ratio < self.threshold

    def as_dict(self) -> dict:
        return {"pi23": self.thrust_pi, "duration_ratio": self.duration_ratio,
                "characteristic_time": self.characteristic_time,
                "threshold": self.threshold, "impulsive": self.impulsive}


def impulsiveness_report(block: RigidBlock, waveform, threshold: float = 0.1) -> ImpulsivenessReport:
    """Check a posteriori that the load acts fast compared with ``sqrt(l/g)``."""
    t_char = block.characteristic_time
    pis = pi_terms(block, waveform)
    ratio = waveform.positive_duration * MS / t_char
    return ImpulsivenessReport(pis.thrust, ratio, t_char, threshold)


def _pre_impact_end(history: ResponseHistory) -> float:
    for kind in (EventKind.IMPACT, EventKind.OVERTURN):
        t = history.first_time(kind)
        if t is not None:
            return t
    return float(history.t[-1])


def compare_histories(prototype: ResponseHistory, model: ResponseHistory) -> dict:
    """Agreement metrics between a prototype and an (already upscaled) model run.

    ``pre_impact_sup_error`` is the largest angle mismatch before the first
    impact (or overturn) of either system, relative to the prototype's peak
    angle over that window.
    """
    t_stop = min(_pre_impact_end(prototype), _pre_impact_end(model))
    grid = prototype.t[prototype.t <= t_stop]
    if grid.size < 2:
        grid = np.linspace(0.0, t_stop, 201)
    theta_p = prototype.sample(grid)
    theta_m = model.sample(grid)
    peak = float(np.max(np.abs(theta_p)))
    sup = float(np.max(np.abs(theta_p - theta_m))) / peak if peak > 0 else 0.0

    def rel(a, b):
        if a is None or b is None or b == 0:
            return None
        return abs(a - b) / abs(b)

    return {
        "window_end_s": t_stop,
        "pre_impact_sup_error": sup,
        "peak_theta_rel_error": rel(model.peak_theta, prototype.peak_theta),
        "first_impact_rel_error": rel(model.first_time(EventKind.IMPACT),
                                      prototype.first_time(EventKind.IMPACT)),
        "prototype_outcome": prototype.outcome.value,
        "model_outcome": model.outcome.value,
        "same_outcome": prototype.outcome is model.outcome,
    }
