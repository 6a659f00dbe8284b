"""Rigid-block response to blast loads: rocking with impacts and Coulomb sliding.

Blocks are described in SI units; loads follow :mod:`blastsim.blastload`
(MPa and ms) and are converted at the boundary.  The blast pushes toward
positive ``theta`` and positive ``x``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .blastload import BlastScenario, waveform_from_scenario
from .errors import BracketError, DomainError, IntegrationError, NonMonotoneOutcomeError

logger = logging.getLogger(__name__)

__all__ = [
    "GRAVITY",
    "CriticalChargeResult",
    "Event",
    "EventKind",
    "Outcome",
    "ResponseHistory",
    "RigidBlock",
    "classify_outcome",
    "critical_charge",
    "default_restitution",
    "impact_map",
    "rocking_rhs",
    "simulate_rocking",
    "simulate_sliding",
]

GRAVITY = 9.81
MPA = 1e6
MS = 1e-3

REST_ANGLE = 1e-6
REST_RATE = 1e-6  # multiplied by sqrt(g/l)
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class RigidBlock:
    """Uniform rectangular block ``2b x 2h x 2w`` standing on a rigid base.

    ``half_depth`` is measured along the blast-facing surface, so the loaded
    area is ``4 h w``.  ``inertia_ratios`` and ``angles`` carry the
    generalized geometry descriptors of non-rectangular structures; they
    do not enter the rectangular-block dynamics.
    """

    half_width: float
    half_height: float
    half_depth: float = 0.5
    density: float = 2000.0
    friction_angle: float = math.radians(35.0)
    gravity: float = GRAVITY
    inertia_ratios: tuple[float, ...] = ()
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("half_width", "half_height", "half_depth", "density", "gravity"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not 0.0 < self.friction_angle < math.pi / 2:
            raise DomainError("friction angle must lie in (0, pi/2)")

    @classmethod
    def from_slenderness(cls, height, slenderness, depth=1.0, **kwargs) -> "RigidBlock":
        """Block of total ``height`` [m] and slenderness angle [rad]."""
        h = 0.5 * height
        return cls(h * math.tan(slenderness), h, 0.5 * depth, **kwargs)

    @property
    def slenderness(self) -> float:
        return math.atan2(self.half_width, self.half_height)

    @property
    def radius(self) -> float:
        return math.hypot(self.half_width, self.half_height)

    @property
    def mass(self) -> float:
        return 8.0 * self.density * self.half_width * self.half_height * self.half_depth

    @property
    def pivot_inertia(self) -> float:
        return 4.0 / 3.0 * self.mass * self.radius**2

    @property
    def incident_area(self) -> float:
        return 4.0 * self.half_height * self.half_depth

    @property
    def friction_coefficient(self) -> float:
        return math.tan(self.friction_angle)

    @property
    def characteristic_length(self) -> float:
        """Total height ``2h``."""
        return 2.0 * self.half_height

    @property
    def characteristic_time(self) -> float:
        return math.sqrt(self.characteristic_length / self.gravity)

    def scaled(self, length: float, density: float = 1.0, gravity: float = 1.0) -> "RigidBlock":
        return replace(
            self,
            half_width=self.half_width * length,
            half_height=self.half_height * length,
            half_depth=self.half_depth * length,
            density=self.density * density,
            gravity=self.gravity * gravity,
        )


class EventKind(str, Enum):
    ROCKING_START = "rocking_start"
    IMPACT = "impact"
    STICK_TO_SLIP = "stick_to_slip"
    SLIP_TO_STICK = "slip_to_stick"
    OVERTURN = "overturn"
    REST = "rest"


class Outcome(str, Enum):
    REST = "rest"
    ROCKING_DECAYED = "rocking_decayed"
    OVERTURNED = "overturned"
    # still in motion when the simulation window closed
    MOVING = "moving"


@dataclass(frozen=True)
class Event:
    time: float
    kind: EventKind
    rate_before: float = 0.0
    rate_after: float = 0.0

    def retimed(self, time_factor: float, rate_factor: float) -> "Event":
        return Event(self.time * time_factor, self.kind,
                     self.rate_before * rate_factor, self.rate_after * rate_factor)

    def to_dict(self) -> dict:
        return {"time": self.time, "kind": self.kind.value,
                "rate_before": self.rate_before, "rate_after": self.rate_after}

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        return cls(float(d["time"]), EventKind(d["kind"]),
                   float(d.get("rate_before", 0.0)), float(d.get("rate_after", 0.0)))


@dataclass(frozen=True)
class ResponseHistory:
    """Sampled response; ``t`` in s, ``theta`` in rad, ``x`` in m."""

    t: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    x: np.ndarray
    x_dot: np.ndarray
    events: tuple[Event, ...] = ()
    outcome: Outcome = Outcome.REST
    mechanism: str = "rocking"

    @property
    def peak_theta(self) -> float:
        return float(np.max(np.abs(self.theta))) if self.theta.size else 0.0

    @property
    def peak_x(self) -> float:
        return float(np.max(np.abs(self.x))) if self.x.size else 0.0

    @property
    def overturned(self) -> bool:
        return self.outcome is Outcome.OVERTURNED

    def events_of(self, kind: EventKind) -> list[Event]:
        return [e for e in self.events if e.kind is kind]

    def first_time(self, kind: EventKind) -> float | None:
        found = self.events_of(kind)
        return found[0].time if found else None

    def sample(self, times, field_name: str = "theta") -> np.ndarray:
        """Linear interpolation of one channel at ``times``."""
        return np.interp(times, self.t, getattr(self, field_name))

    def until(self, t_stop: float) -> "ResponseHistory":
        keep = self.t <= t_stop
        return replace(
            self,
            t=self.t[keep], theta=self.theta[keep], theta_dot=self.theta_dot[keep],
            x=self.x[keep], x_dot=self.x_dot[keep],
            events=tuple(e for e in self.events if e.time <= t_stop),
        )


def default_restitution(slenderness: float) -> float:
    """Angular-momentum restitution of a rectangular block, ``1 - 1.5 sin^2(alpha)``."""
    return 1.0 - 1.5 * math.sin(slenderness) ** 2


def impact_map(theta_dot_before: float, block: RigidBlock, restitution: float | None = None) -> float:
    """Angular velocity just after the block lands on the opposite corner."""
    e = default_restitution(block.slenderness) if restitution is None else restitution
    if not 0.0 < e <= 1.0:
        raise DomainError(f"restitution must lie in (0, 1], got {e}")
    return e * theta_dot_before


def _corner(theta: float, applied_moment: float) -> float:
    if theta > 0:
        return 1.0
    if theta < 0:
        return -1.0
    return 1.0 if applied_moment >= 0 else -1.0


def rocking_rhs(theta: float, theta_dot: float, t: float, block: RigidBlock, waveform,
                corner: float | None = None) -> float:
    """Angular acceleration [rad/s^2] at time ``t`` [s].

    ``corner`` (+1/-1) selects the active pivot.  When omitted it follows
    the sign of ``theta``; at ``theta == 0`` the loaded corner is used and
    a block at rest whose overturning moment does not exceed the
    restoring moment stays put.
    """
    alpha = block.slenderness
    r = block.radius
    p = float(waveform.pressure(t / MS)) * MPA
    load = block.incident_area * r * p
    weight = block.mass * block.gravity * r
    at_rest = corner is None and theta == 0.0 and theta_dot == 0.0
    if corner is None:
        corner = _corner(theta, load)
    phase = alpha * corner - theta
    acc = (load * math.cos(phase) - weight * math.sin(phase)) / block.pivot_inertia
    if at_rest and acc * corner <= 0.0:
        return 0.0
    return acc


class _RockingSystem:
    """Rocking EOM in chosen time and moment units.

    Dimensional: seconds and N*m.  Nondimensional: time in units of
    ``sqrt(l/g)`` and moments in units of ``m g l``, so the coefficients
    are the dimensionless groups J/(m l^2), r/l and S r / (m g l).
    """

    def __init__(self, block: RigidBlock, waveform, nondimensional: bool):
        m, g, r = block.mass, block.gravity, block.radius
        if nondimensional:
            self.time_unit = block.characteristic_time
            moment_unit = m * g * block.characteristic_length
        else:
            self.time_unit = 1.0
            moment_unit = 1.0
        self.inertia = block.pivot_inertia / (moment_unit * self.time_unit**2)
        self.weight = m * g * r / moment_unit
        self.load = block.incident_area * r * MPA / moment_unit
        self.alpha = block.slenderness
        self.waveform = waveform
        self.to_ms = self.time_unit / MS

    def pressure(self, t):
        return float(self.waveform.pressure(t * self.to_ms))

    def rhs(self, t, y, corner):
        phase = self.alpha * corner - y[0]
        acc = (self.load * self.pressure(t) * math.cos(phase) - self.weight * math.sin(phase)) / self.inertia
        return (y[1], acc)

    def drives(self, t) -> bool:
        # rocking from rest about the loaded corner
        return self.load * self.pressure(t) * math.cos(self.alpha) > self.weight * math.sin(self.alpha)

    def energy(self, y, corner):
        """Kinetic plus potential energy measured from the resting position."""
        return (0.5 * self.inertia * y[1] ** 2
                + self.weight * (math.cos(self.alpha * corner - y[0]) - math.cos(self.alpha)))


class _Recorder:
    def __init__(self):
        self.t: list[np.ndarray] = []
        self.y: list[np.ndarray] = []
        self.events: list[Event] = []

    def add(self, t, y):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        y = np.asarray(y, dtype=float).reshape(2, -1)
        if self.t and t.size:
            last = self.t[-1][-1] if self.t[-1].size else -np.inf
            keep = t > last
            t, y = t[keep], y[:, keep]
        if t.size:
            self.t.append(t)
            self.y.append(y)

    def arrays(self):
        if not self.t:
            return np.zeros(0), np.zeros((2, 0))
        return np.concatenate(self.t), np.concatenate(self.y, axis=1)


def _leg(fun, t0, t1, y0, events, rtol, atol, t_eval, method):
    pts = None
    if t_eval is not None:
        inner = t_eval[(t_eval > t0) & (t_eval < t1)]
        pts = np.concatenate(([t0], inner, [t1]))
    sol = solve_ivp(fun, (t0, t1), y0, method=method, rtol=rtol, atol=atol,
                    events=events, t_eval=pts)
    return sol


def _pad(t_arr, y_arr, end, t_eval, hold):
    """Extend a settled response up to ``end`` (zeros, or the last position)."""
    if not end > t_arr[-1]:
        return t_arr, y_arr
    if t_eval is None:
        tail = np.array([end])
    else:
        tail = t_eval[(t_eval > t_arr[-1]) & (t_eval <= end)]
    fill = np.zeros((2, tail.size))
    if hold:
        fill[0] = y_arr[0, -1]
    return np.concatenate((t_arr, tail)), np.concatenate((y_arr, fill), axis=1)


def _event(fn, direction):
    fn.terminal = True
    fn.direction = direction
    return fn


def _load_end(waveform, time_unit) -> float:
    end = getattr(waveform, "end_time", math.inf)
    return end * MS / time_unit


def classify_outcome(history: ResponseHistory) -> Outcome:
    """Three-way outcome (plus ``MOVING`` for runs cut off before settling)."""
    kinds = {e.kind for e in history.events}
    if EventKind.OVERTURN in kinds:
        return Outcome.OVERTURNED
    started = EventKind.ROCKING_START in kinds or EventKind.STICK_TO_SLIP in kinds
    if not started:
        return Outcome.REST
    if EventKind.REST in kinds:
        return Outcome.ROCKING_DECAYED if EventKind.ROCKING_START in kinds else Outcome.REST
    return Outcome.MOVING


def simulate_rocking(block: RigidBlock, waveform, t_end: float | None = None, *,
                     rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                     restitution: float | None = None, t_eval=None,
                     nondimensional: bool = False, max_impacts: int = 5000,
                     stop_when_stable: bool = False, method: str = "DOP853") -> ResponseHistory:
    """Integrate the rocking response of an initially resting block.

    ``t_end`` [s] bounds the run; with ``None`` the block is followed until
    it overturns or comes to rest.  ``t_eval`` [s] requests output at fixed
    times (event instants are always included).  ``stop_when_stable`` ends
    the run once the load is over and the remaining energy cannot carry
    the block over its corner; the outcome is then ``ROCKING_DECAYED``.
    With ``nondimensional`` the equation is integrated in units of
    ``sqrt(l/g)`` and ``m g l`` and converted back on output.
    """
    sys = _RockingSystem(block, waveform, nondimensional)
    T = sys.time_unit
    e = default_restitution(block.slenderness) if restitution is None else restitution
    if not 0.0 < e <= 1.0:
        raise DomainError(f"restitution must lie in (0, 1], got {e}")
    load_end = _load_end(waveform, T)
    if t_end is None:
        finite_load = load_end if math.isfinite(load_end) else 0.0
        horizon = finite_load + 2000.0 * block.characteristic_time / T
        open_ended = True
    else:
        horizon = t_end / T
        open_ended = False
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float) / T
    rest_rate = REST_RATE * math.sqrt(block.gravity / block.characteristic_length) * T
    barrier = sys.weight * (1.0 - math.cos(sys.alpha))

    rec = _Recorder()
    rec.add(0.0, [[0.0], [0.0]])
    events = rec.events
    y = np.zeros(2)
    t = 0.0
    corner = 0.0
    impacts = 0
    status = "running"

    breaks = sorted({b for b in (load_end,) if 0.0 < b < horizon} | {horizon})

    if sys.drives(0.0):
        corner = 1.0
        events.append(Event(0.0, EventKind.ROCKING_START))
    else:
        # monotone loads never build up after arrival: the block stays put
        status = "rest"

    def failed(msg):
        t_arr, y_arr = rec.arrays()
        partial = _history(t_arr * T, y_arr[0], y_arr[1] / T, events, T, "rocking", rocking=True)
        raise IntegrationError(msg, state={"t": t * T, "theta": y[0], "theta_dot": y[1] / T},
                               history=partial)

    while status == "running":
        t_next = next(b for b in breaks if b > t)
        c = corner

        def fun(tt, yy):
            return sys.rhs(tt, yy, c)

        impact = _event(lambda tt, yy: c * yy[0], -1)
        topple = _event(lambda tt, yy: c * yy[0] - 0.5 * math.pi, 1)
        sol = _leg(fun, t, t_next, y, [impact, topple], rtol, atol, t_eval, method)
        if sol.status == -1:
            failed(f"rocking integration failed at t={t * T:.6g} s: {sol.message}")
        rec.add(sol.t, sol.y)
        if sol.status == 1 and sol.t_events[1].size:
            t = float(sol.t_events[1][0])
            y = sol.y_events[1][0].copy()
            rec.add(t, y.reshape(2, 1))
            events.append(Event(t, EventKind.OVERTURN, y[1], y[1]))
            status = "overturned"
            break
        if sol.status == 1 and sol.t_events[0].size:
            t = float(sol.t_events[0][0])
            y = sol.y_events[0][0].copy()
            y[0] = 0.0
            rec.add(t, y.reshape(2, 1))
            before = y[1]
            after = e * before
            impacts += 1
            if t >= load_end and abs(after) < rest_rate:
                events.append(Event(t, EventKind.IMPACT, before, 0.0))
                events.append(Event(t, EventKind.REST))
                y[:] = 0.0
                status = "rest"
                break
            events.append(Event(t, EventKind.IMPACT, before, after))
            y[1] = after
            corner = -c if after != 0.0 else c
            if impacts >= max_impacts:
                status = "cutoff"
                break
        else:
            t = t_next
            y = sol.y[:, -1].copy()
        if (stop_when_stable and t >= load_end
                and sys.energy(y, corner) < barrier * (1.0 - 1e-9)):
            status = "stable"
            break
        if t >= horizon:
            status = "cutoff"
            break

    t_arr, y_arr = rec.arrays()
    if status == "rest":
        if not open_ended:
            end = horizon
        elif not events and math.isfinite(load_end):
            end = load_end
        else:
            end = t_arr[-1]
        t_arr, y_arr = _pad(t_arr, y_arr, end, t_eval, hold=False)
    hist = _history(t_arr * T, y_arr[0], y_arr[1] / T, events, T, "rocking", rocking=True)
    if status == "stable":
        return replace(hist, outcome=Outcome.ROCKING_DECAYED)
    if status == "cutoff" and open_ended:
        logger.warning("rocking run hit the impact/time cap before settling")
    return hist


def _history(t, a, a_dot, events, time_unit, mechanism, rocking):
    evs = tuple(e.retimed(time_unit, 1.0 / time_unit) for e in events)
    zeros = np.zeros_like(t)
    if rocking:
        h = ResponseHistory(t, a, a_dot, zeros, zeros.copy(), evs, Outcome.REST, mechanism)
    else:
        h = ResponseHistory(t, zeros, zeros.copy(), a, a_dot, evs, Outcome.REST, mechanism)
    return replace(h, outcome=classify_outcome(h))


def simulate_sliding(block: RigidBlock, waveform, t_end: float | None = None, *,
                     rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                     t_eval=None, method: str = "DOP853") -> ResponseHistory:
    """Pure-translation Coulomb stick-slip response of a resting block.

    Sticks while the blast thrust ``S P(t)`` stays within ``mu m g``; in slip
    ``m x'' = S P(t) - mu m g sgn(x')``.  Without ``t_end`` the run ends
    when the block sticks again after the load is over.
    """
    m, g, mu = block.mass, block.gravity, block.friction_coefficient
    area = block.incident_area
    cap = mu * m * g
    load_end = _load_end(waveform, 1.0)

    def thrust(tt):
        return area * float(waveform.pressure(tt / MS)) * MPA

    if t_end is None:
        # slip started by the pulse ends within impulse/(mu m g) after it
        impulse = getattr(waveform, "impulse", 0.0) * MPA * MS
        finite_load = load_end if math.isfinite(load_end) else 0.0
        horizon = finite_load + 2.0 * area * impulse / cap + 10.0 * block.characteristic_time
        if not math.isfinite(horizon):
            horizon = 100.0 * block.characteristic_time
    else:
        horizon = float(t_end)
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)

    rec = _Recorder()
    rec.add(0.0, [[0.0], [0.0]])
    events = rec.events
    y = np.zeros(2)
    t = 0.0
    breaks = sorted({b for b in (load_end,) if 0.0 < b < horizon} | {horizon})

    def fun(tt, yy):
        return (yy[1], thrust(tt) / m - mu * g)

    stop = _event(lambda tt, yy: yy[1], -1)
    slipping = thrust(0.0) > cap
    status = "running"
    if slipping:
        events.append(Event(0.0, EventKind.STICK_TO_SLIP))
    else:
        status = "rest"

    while status == "running":
        t_next = next(b for b in breaks if b > t)
        sol = _leg(fun, t, t_next, y, [stop], rtol, atol, t_eval, method)
        if sol.status == -1:
            t_arr, y_arr = rec.arrays()
            partial = _history(t_arr, y_arr[0], y_arr[1], events, 1.0, "sliding", rocking=False)
            raise IntegrationError(f"sliding integration failed at t={t:.6g} s: {sol.message}",
                                   state={"t": t, "x": y[0], "x_dot": y[1]}, history=partial)
        rec.add(sol.t, sol.y)
        if sol.status == 1:
            t = float(sol.t_events[0][0])
            y = sol.y_events[0][0].copy()
            y[1] = 0.0
            rec.add(t, y.reshape(2, 1))
            events.append(Event(t, EventKind.SLIP_TO_STICK))
            # thrust is non-increasing, so it cannot break the block loose again
            events.append(Event(t, EventKind.REST))
            status = "rest"
            break
        t = t_next
        y = sol.y[:, -1].copy()
        if t >= horizon:
            status = "cutoff"

    t_arr, y_arr = rec.arrays()
    if status == "rest":
        if t_end is not None:
            end = horizon
        elif not events and math.isfinite(load_end):
            end = load_end
        else:
            end = t_arr[-1]
        t_arr, y_arr = _pad(t_arr, y_arr, end, t_eval, hold=True)
    return _history(t_arr, y_arr[0], y_arr[1], events, 1.0, "sliding", rocking=False)


# --------------------------------------------------------------------------
# Critical charge
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalChargeResult:
    charge: float
    bracket: tuple[float, float]
    evaluations: tuple[tuple[float, bool], ...] = ()
    sandwich: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.evaluations)


def _overturns(block, standoff, charge, kind, window, sim_kwargs) -> bool:
    wave = waveform_from_scenario(BlastScenario(charge, standoff), kind, window)
    hist = simulate_rocking(block, wave, stop_when_stable=True, **sim_kwargs)
    return hist.overturned


def critical_charge(block: RigidBlock, standoff: float, bracket: tuple[float, float],
                    rel_tol: float = 1e-3, *, kind="friedlander", window=None,
                    scan_points: int = 3, verify: bool = True, map_fn=map,
                    **sim_kwargs) -> CriticalChargeResult:
    """Largest charge [kg] at ``standoff`` [m] that does not overturn ``block``.

    Bisection on the charge until ``(hi - lo) / mid < rel_tol``.  Extra
    keyword arguments (``rtol``, ``atol``, ``restitution``) go to the integrator.  ``scan_points``
    interior charges are checked first so that a non-monotone outcome
    (overturning, then not, then again) is reported instead of hidden.
    ``map_fn`` may be a parallel map (e.g. ``executor.map``) for the scan
    and verification runs.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 < lo < hi:
        raise BracketError(f"invalid bracket {bracket!r}")

    def test(ws):
        ws = list(ws)
        return list(map_fn(_overturns, [block] * len(ws), [standoff] * len(ws), ws,
                           [kind] * len(ws), [window] * len(ws), [sim_kwargs] * len(ws)))

    ends = test([lo, hi])
    if ends[0]:
        raise BracketError(f"lower charge {lo:.6g} kg already overturns the block")
    if not ends[1]:
        raise BracketError(f"upper charge {hi:.6g} kg does not overturn the block")
    evaluations = [(lo, False), (hi, True)]

    if scan_points > 0:
        grid = list(np.geomspace(lo, hi, scan_points + 2)[1:-1])
        flags = test(grid)
        evaluations += list(zip(grid, flags))
        ws = [lo] + grid + [hi]
        fs = [False] + flags + [True]
        switches = [(ws[i], ws[i + 1]) for i in range(len(ws) - 1) if fs[i] != fs[i + 1]]
        if len(switches) > 1:
            raise NonMonotoneOutcomeError(
                f"overturning is not monotone in the charge over [{lo:.6g}, {hi:.6g}] kg",
                switches,
            )
        lo, hi = switches[0]

    while (hi - lo) / (0.5 * (lo + hi)) >= rel_tol:
        mid = 0.5 * (lo + hi)
        flag = _overturns(block, standoff, mid, kind, window, sim_kwargs)
        evaluations.append((mid, flag))
        if flag:
            hi = mid
        else:
            lo = mid
    charge = 0.5 * (lo + hi)
    sandwich = {}
    if verify:
        below, above = test([0.99 * charge, 1.01 * charge])
        sandwich = {"below": {"charge": 0.99 * charge, "overturned": below},
                    "above": {"charge": 1.01 * charge, "overturned": above}}
        if below or not above:
            logger.warning("critical charge sandwich check failed: %s", sandwich)
    return CriticalChargeResult(charge, (lo, hi), tuple(evaluations), sandwich)
