"""Empirical reflected-blast parameters and positive-phase pressure histories.

Units follow the fits: pressure in MPa, time in ms, impulse in MPa*ms,
distance in m, TNT-equivalent mass in kg.  Scaled quantities (suffix ``w``)
are per kg^(1/3).

The fits are only trusted on a window of scaled distances, by default
``[0.05, 40]`` m/kg^(1/3).  The window may be overridden per call or, for all
calls, through the ``BLASTSIM_Z_WINDOW`` environment variable (``"lo,hi"``).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, NoDecaySolutionError, ZRangeError

__all__ = [
    "DEFAULT_Z_WINDOW",
    "Z_WINDOW_ENV",
    "BlastScenario",
    "BlastWaveform",
    "RectangularPulse",
    "WaveformKind",
    "arrival_time",
    "friedlander_decay",
    "friedlander_impulse",
    "positive_duration",
    "pressure_at",
    "reflected_impulse",
    "reflected_pressure_peak",
    "scaled_arrival_time",
    "scaled_distance",
    "scaled_positive_duration",
    "scaled_reflected_impulse",
    "waveform_from_scenario",
    "z_window",
]

DEFAULT_Z_WINDOW = (0.05, 40.0)
Z_WINDOW_ENV = "BLASTSIM_Z_WINDOW"

# Below this scaled distance the time fits collapse to constants.
Z_NEAR_FIELD = 0.18
T_ARRIVAL_NEAR = 0.0315495
T_DURATION_NEAR = 0.251703

DECAY_BRACKET = (1e-9, 60.0)
DECAY_MAXITER = 200


def z_window(window: tuple[float, float] | None = None) -> tuple[float, float]:
    """Resolve the active validity window (explicit > environment > default)."""
    if window is None:
        raw = os.environ.get(Z_WINDOW_ENV)
        if raw:
            try:
                lo, hi = (float(v) for v in raw.replace(";", ",").split(","))
            except ValueError as exc:
                raise DomainError(
                    f"{Z_WINDOW_ENV} must be 'lo,hi', got {raw!r}"
                ) from exc
            window = (lo, hi)
        else:
            window = DEFAULT_Z_WINDOW
    lo, hi = float(window[0]), float(window[1])
    if not (0.0 < lo < hi):
        raise DomainError(f"invalid Z window {window!r}")
    return lo, hi


def _check_z(z, window):
    lo, hi = z_window(window)
    arr = np.asarray(z, dtype=float)
    bad = ~((arr >= lo) & (arr <= hi))
    if np.any(bad):
        first = float(arr[bad].flat[0]) if arr.ndim else float(arr)
        raise ZRangeError(first, lo, hi)
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def scaled_distance(charge_mass: float, standoff: float) -> float:
    """Hopkinson-Cranz scaled distance ``R / W^(1/3)``."""
    if not (charge_mass > 0 and standoff > 0):
        raise DomainError(
            f"charge mass and stand-off must be positive, got W={charge_mass}, R={standoff}"
        )
    return standoff / np.cbrt(charge_mass)


@dataclass(frozen=True)
class BlastScenario:
    """TNT-equivalent charge ``charge_mass`` [kg] detonated at ``standoff`` [m]."""

    charge_mass: float
    standoff: float

    def __post_init__(self):
        # validates and raises DomainError
        scaled_distance(self.charge_mass, self.standoff)

    @property
    def scaled_distance(self) -> float:
        return scaled_distance(self.charge_mass, self.standoff)

    @property
    def cube_root_mass(self) -> float:
        return float(np.cbrt(self.charge_mass))


# --------------------------------------------------------------------------
# Empirical fits
# --------------------------------------------------------------------------

def reflected_pressure_peak(z, window=None):
    """Peak normally reflected overpressure [MPa] at scaled distance ``z``."""
    z = _check_z(z, window)
    lz = np.log(z)
    s = np.sin(lz)
    core = 2.0304 - 1.8036 * lz - 0.09293 * lz**2 - 0.8779 * s - 0.3603 * s**2
    return _out((1.0 + 0.5 * np.exp(-10.0 * z)) * np.exp(core))


def scaled_reflected_impulse(z, window=None):
    """Positive reflected impulse per kg^(1/3) [MPa*ms/kg^(1/3)]."""
    z = _check_z(z, window)
    lz = np.log(z)
    return _out(np.exp(-0.110157 - 1.40609 * lz + 0.0847358 * lz**2))


def scaled_arrival_time(z, window=None):
    """Shock arrival time per kg^(1/3) [ms/kg^(1/3)]."""
    z = _check_z(z, window)
    lz = np.log(z)
    far = np.exp(-0.6847 + 1.4288 * lz + 0.0290 * lz**2 + 0.4108 * np.sin(lz))
    return _out(np.where(z < Z_NEAR_FIELD, T_ARRIVAL_NEAR, far))


_DURATION_POLY = (0.592, 2.913, -1.287, -1.788, 1.151, 0.325, -0.383, 0.090, -0.004, -0.0004)


def scaled_positive_duration(z, window=None):
    """Positive-phase duration per kg^(1/3) [ms/kg^(1/3)]."""
    z = _check_z(z, window)
    lz = np.log(z)
    poly = np.polynomial.polynomial.polyval(lz, _DURATION_POLY)
    osc = 0.537 * np.cos(1.032 * (lz - 0.859)) ** 7 * np.sinh(1.088 * (lz - 2.023))
    far = np.exp(poly + osc)
    return _out(np.where(z < Z_NEAR_FIELD, T_DURATION_NEAR, far))


def reflected_impulse(scenario: BlastScenario, window=None) -> float:
    """Positive reflected impulse [MPa*ms]."""
    return scenario.cube_root_mass * scaled_reflected_impulse(scenario.scaled_distance, window)


def arrival_time(scenario: BlastScenario, window=None) -> float:
    """Arrival time [ms]."""
    return scenario.cube_root_mass * scaled_arrival_time(scenario.scaled_distance, window)


def positive_duration(scenario: BlastScenario, window=None) -> float:
    """Positive-phase duration [ms]."""
    return scenario.cube_root_mass * scaled_positive_duration(scenario.scaled_distance, window)


# --------------------------------------------------------------------------
# Friedlander impulse and its inverse
# --------------------------------------------------------------------------

def _impulse_shape(d: float) -> float:
    """(e^-d + d - 1) / d^2, evaluated without cancellation near d = 0."""
    if d < 1e-3:
        return 0.5 + d * (-1 / 6 + d * (1 / 24 + d * (-1 / 120 + d / 720)))
    return (math.expm1(-d) + d) / (d * d)


def friedlander_impulse(peak_pressure: float, duration: float, decay: float) -> float:
    """Area under the modified Friedlander positive phase."""
    if not (peak_pressure > 0 and duration > 0 and decay > 0):
        raise DomainError("peak pressure, duration and decay must be positive")
    return _impulse_shape(decay) * peak_pressure * duration


def friedlander_decay(peak_pressure: float, duration: float, impulse: float) -> float:
    """Decay coefficient ``d`` whose Friedlander pulse carries ``impulse``.

    Solves ``(e^-d + d - 1) P t / d^2 = i`` on ``(1e-9, 60]``.  The left side
    decreases monotonically from ``P t / 2`` so the root is unique when it
    exists.
    """
    if not (peak_pressure > 0 and duration > 0):
        raise DomainError("peak pressure and duration must be positive")
    if not impulse > 0:
        raise DomainError(f"impulse must be positive, got {impulse}")
    target = impulse / (peak_pressure * duration)
    lo, hi = DECAY_BRACKET
    if target >= 0.5:
        raise NoDecaySolutionError(
            f"impulse ratio i/(P*t_o) = {target:.6g} >= 1/2: no Friedlander decay d > 0"
        )
    if target < _impulse_shape(hi):
        raise NoDecaySolutionError(
            f"impulse ratio i/(P*t_o) = {target:.6g} needs a decay coefficient above {hi}"
        )
    if target > _impulse_shape(lo):
        return lo
    return brentq(
        lambda d: _impulse_shape(d) - target,
        lo,
        hi,
        xtol=1e-15,
        rtol=4 * np.finfo(float).eps,
        maxiter=DECAY_MAXITER,
    )


# --------------------------------------------------------------------------
# Waveforms
# --------------------------------------------------------------------------

class WaveformKind(str, Enum):
    FRIEDLANDER = "friedlander"
    TRIANGULAR = "triangular"


@dataclass(frozen=True)
class BlastWaveform:
    """Positive-phase reflected pressure history, time origin at shock arrival.

    For the triangular kind the pulse decays linearly to zero over
    ``linear_duration = 2 i / P`` so its area equals ``impulse``;
    ``positive_duration`` is still carried for reporting.
    """

    peak_pressure: float
    positive_duration: float
    impulse: float
    arrival_time: float = 0.0
    decay: float | None = None
    kind: WaveformKind = WaveformKind.FRIEDLANDER
    scaled_distance: float | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", WaveformKind(self.kind))
        if not (self.peak_pressure > 0 and self.positive_duration > 0 and self.impulse > 0):
            raise DomainError("waveform needs positive peak pressure, duration and impulse")
        if not self.arrival_time >= 0:
            raise DomainError("arrival time must be non-negative")
        if self.kind is WaveformKind.FRIEDLANDER:
            if self.decay is None or not self.decay > 0:
                raise DomainError("Friedlander waveform needs a positive decay coefficient")
            expected = friedlander_impulse(self.peak_pressure, self.positive_duration, self.decay)
            if abs(expected - self.impulse) > 1e-10 * self.impulse:
                raise DomainError(
                    f"impulse {self.impulse!r} inconsistent with decay {self.decay!r} "
                    f"(expected {expected!r})"
                )

    @classmethod
    def friedlander(cls, peak_pressure, positive_duration, impulse, arrival_time=0.0, **kw):
        decay = friedlander_decay(peak_pressure, positive_duration, impulse)
        # store the impulse implied by the solved decay so the identity holds exactly
        impulse = friedlander_impulse(peak_pressure, positive_duration, decay)
        return cls(peak_pressure, positive_duration, impulse, arrival_time, decay,
                   WaveformKind.FRIEDLANDER, **kw)

    @classmethod
    def from_decay(cls, peak_pressure, positive_duration, decay, arrival_time=0.0):
        impulse = friedlander_impulse(peak_pressure, positive_duration, decay)
        return cls(peak_pressure, positive_duration, impulse, arrival_time, decay)

    @classmethod
    def triangular(cls, peak_pressure, impulse, positive_duration=None, arrival_time=0.0, **kw):
        if positive_duration is None:
            positive_duration = 2.0 * impulse / peak_pressure
        return cls(peak_pressure, positive_duration, impulse, arrival_time, None,
                   WaveformKind.TRIANGULAR, **kw)

    @property
    def linear_duration(self) -> float:
        return 2.0 * self.impulse / self.peak_pressure

    @property
    def end_time(self) -> float:
        """Time [ms] after which the pressure is identically zero."""
        if self.kind is WaveformKind.TRIANGULAR:
            return self.linear_duration
        return self.positive_duration

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.end_time,)

    def pressure(self, t):
        """Pressure [MPa] at time ``t`` [ms] after arrival (zero before and after)."""
        t = np.asarray(t, dtype=float)
        if self.kind is WaveformKind.TRIANGULAR:
            tau = t / self.linear_duration
            p = self.peak_pressure * (1.0 - tau)
        else:
            tau = t / self.positive_duration
            p = self.peak_pressure * (1.0 - tau) * np.exp(-self.decay * tau)
        p = np.where((tau >= 0.0) & (tau < 1.0), p, 0.0)
        return _out(p)

    def scaled(self, pressure_factor: float, time_factor: float) -> "BlastWaveform":
        """Same pulse shape with pressure and time axes rescaled."""
        return BlastWaveform(
            self.peak_pressure * pressure_factor,
            self.positive_duration * time_factor,
            self.impulse * pressure_factor * time_factor,
            self.arrival_time * time_factor,
            self.decay,
            self.kind,
        )

    def quadrature_impulse(self) -> float:
        """Impulse by adaptive quadrature of :meth:`pressure`."""
        value, _ = quad(self.pressure, 0.0, self.end_time, epsabs=0.0, epsrel=1e-12, limit=200)
        return value


@dataclass(frozen=True)
class RectangularPulse:
    """Constant pressure [MPa] held for ``duration`` ms (``inf`` for a step load).

    A zero ``pressure`` gives the unloaded case.
    """

    pressure_value: float
    duration: float = math.inf

    def __post_init__(self):
        if self.pressure_value < 0 or not self.duration > 0:
            raise DomainError("rectangular pulse needs pressure >= 0 and duration > 0")

    @property
    def peak_pressure(self) -> float:
        return self.pressure_value

    @property
    def impulse(self) -> float:
        return self.pressure_value * self.duration

    @property
    def positive_duration(self) -> float:
        return self.duration

    @property
    def end_time(self) -> float:
        return self.duration

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return () if math.isinf(self.duration) else (self.duration,)

    def pressure(self, t):
        t = np.asarray(t, dtype=float)
        return _out(np.where((t >= 0.0) & (t < self.duration), self.pressure_value, 0.0))


def pressure_at(waveform, t):
    """Reflected pressure [MPa] of ``waveform`` at ``t`` ms after arrival."""
    return waveform.pressure(t)


def waveform_from_scenario(scenario: BlastScenario, kind="friedlander", window=None) -> BlastWaveform:
    """Build the reflected pressure pulse for ``scenario`` from the empirical fits."""
    kind = WaveformKind(kind)
    z = scenario.scaled_distance
    c = scenario.cube_root_mass
    peak = reflected_pressure_peak(z, window)
    t_o = c * scaled_positive_duration(z, window)
    i_ro = c * scaled_reflected_impulse(z, window)
    t_a = c * scaled_arrival_time(z, window)
    if kind is WaveformKind.TRIANGULAR:
        return BlastWaveform.triangular(peak, i_ro, t_o, t_a, scaled_distance=z)
    return BlastWaveform.friedlander(peak, t_o, i_ro, t_a, scaled_distance=z)
