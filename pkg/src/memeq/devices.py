"""Stateful memristor device models.

Seven device kinds share one interface: a normalized internal state ``x``
bounded to the device's state window, a memristance read-out ``M(x)``, a
state-velocity ``dx/dt`` driven by the applied voltage/current, and pulse
programming. All state math accepts scalars or numpy arrays, so a whole
crossbar of identical devices can be integrated in one call.

Orientation convention: every kind maps ``x = x_max`` to ``R_ON`` and
``x = x_min`` to ``R_OFF``, and positive applied voltage moves ``x`` toward
``x_max`` -- except VTEAM, whose hysteresis runs the opposite way (positive
voltage drives the device toward ``R_OFF``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Yakopcic devices have a bias-dependent I-V curve; the network needs a single
# resistance number, so memristance is always read out at this reference bias.
YAKOPCIC_READOUT_VOLTS = 1.0

# Fixed substep count for rectangular-pulse integration. A constant count (not
# a duration-derived one) keeps width-modulated and amplitude-modulated pulses
# with equal volt-seconds numerically interchangeable for drift-type devices.
PULSE_SUBSTEPS = 64


class DeviceKind(Enum):
    """The six published memristor models plus the linear-update baseline."""

    LINEAR_BASELINE = "linear_baseline"
    LINEAR_ION_DRIFT = "linear_ion_drift"
    JOGLEKAR = "joglekar"
    BIOLEK = "biolek"
    VTEAM = "vteam"
    YAKOPCIC = "yakopcic"
    MMS = "mms"


# Kinds whose memristance is linear in x (R_ON at x=1, R_OFF at x=0).
_RESISTANCE_LINEAR = {
    DeviceKind.LINEAR_ION_DRIFT,
    DeviceKind.JOGLEKAR,
    DeviceKind.BIOLEK,
    DeviceKind.VTEAM,
}

# Kinds whose conductance is linear in x.
_CONDUCTANCE_LINEAR = {DeviceKind.LINEAR_BASELINE, DeviceKind.MMS}

# Kinds whose state only moves once |u| crosses a hard voltage threshold.
HARD_THRESHOLD_KINDS = {DeviceKind.VTEAM, DeviceKind.YAKOPCIC}

# Kinds whose final state after a constant-sign pulse depends only on the
# voltage-time integral, not on the (amplitude, duration) split.
FLUX_DRIVEN_KINDS = {
    DeviceKind.LINEAR_BASELINE,
    DeviceKind.LINEAR_ION_DRIFT,
    DeviceKind.JOGLEKAR,
    DeviceKind.BIOLEK,
}


@dataclass(frozen=True)
class DeviceParams:
    """Device constants for one memristor model.

    Only the fields of the chosen ``kind`` are meaningful; the rest keep
    their defaults and are ignored. ``r_on``/``r_off`` are the resistance
    bounds in ohm, rates are per second (after state normalization).
    """

    kind: DeviceKind
    r_on: float = 100.0
    r_off: float = 10_000.0

    # drift-type models (baseline, ion drift, Joglekar, Biolek)
    k: float = 0.0              # baseline: 1/(V*s); current-driven kinds: 1/C
    p: int = 2                  # Joglekar/Biolek window exponent

    # VTEAM
    v_off: float = 0.5          # off-switching threshold, > 0
    v_on: float = -0.8          # on-switching threshold, < 0
    k_off: float = 0.0          # 1/s
    k_on: float = 0.0           # 1/s
    alpha_off: float = 1.0
    alpha_on: float = 1.0

    # Yakopcic
    a: float = 0.2              # I-V scale, S-like
    b: float = 0.05             # I-V curvature, 1/V
    lam: float = 0.0            # state rate, 1/s
    v_p: float = 0.5            # positive threshold magnitude, V
    v_n: float = 0.5            # negative threshold magnitude, V
    alpha_p: float = 1.0
    alpha_n: float = 3.0
    x_p: float = 0.6
    x_n: float = 0.5
    x_on: float = 0.01          # lower state bound, maps to R_OFF

    # MMS
    t_c: float = 1e-3           # time constant, s
    v_th: float = 0.4           # switching threshold, V
    v_t: float = 0.05           # thermal-like softness, V

    def __post_init__(self):
        if not (self.r_on > 0 and self.r_off > self.r_on):
            raise ValueError("require 0 < r_on < r_off")
        if self.kind is DeviceKind.VTEAM and not (self.v_on < 0 < self.v_off):
            raise ValueError("VTEAM thresholds must satisfy v_on < 0 < v_off")
        if self.kind is DeviceKind.YAKOPCIC:
            if not (0 <= self.x_on < 1 - self.x_n):
                raise ValueError("Yakopcic window needs 0 <= x_on < 1 - x_n")
        for name in ("k", "k_off", "k_on", "lam", "t_c", "v_t"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def g_on(self) -> float:
        return 1.0 / self.r_on

    @property
    def g_off(self) -> float:
        return 1.0 / self.r_off

    def state_bounds(self) -> tuple[float, float]:
        if self.kind is DeviceKind.YAKOPCIC:
            return (self.x_on, 1.0)
        return (0.0, 1.0)


@dataclass
class DeviceState:
    """Normalized internal state, clamped to [x_min, x_max] at all times.

    ``x`` may be a scalar or an ndarray (one entry per device of a bank of
    identical-parameter devices).
    """

    x: float | np.ndarray
    x_min: float = 0.0
    x_max: float = 1.0

    def __post_init__(self):
        self.x = np.clip(self.x, self.x_min, self.x_max)

    @classmethod
    def for_params(cls, params: DeviceParams, x) -> "DeviceState":
        lo, hi = params.state_bounds()
        return cls(x=x, x_min=lo, x_max=hi)

    def clamped(self, x) -> "DeviceState":
        return DeviceState(x=x, x_min=self.x_min, x_max=self.x_max)


@dataclass(frozen=True)
class PulseCommand:
    """One rectangular programming pulse: signed amplitude (V), duration (s)."""

    amplitude: float
    duration: float

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and math.isfinite(self.duration)):
            raise ValueError("pulse amplitude and duration must be finite")
        if self.duration < 0:
            raise ValueError("pulse duration must be >= 0")


def memristance(params: DeviceParams, state: DeviceState):
    """Resistance of the device at its current state, in ohm.

    Guaranteed inside [r_on, r_off] for resistance/conductance-linear kinds;
    for Yakopcic the bounds are set by ``a`` and ``x_on`` and the read-out is
    taken at the +-1 V reference bias.
    """
    return memristance_of(params, state.x)


def memristance_of(params: DeviceParams, x):
    """Memristance as a function of raw state values (scalar or array)."""
    if params.kind in _RESISTANCE_LINEAR:
        return params.r_on * x + params.r_off * (1.0 - x)
    if params.kind in _CONDUCTANCE_LINEAR:
        return 1.0 / (params.g_off + x * (params.g_on - params.g_off))
    # Yakopcic: i = a*x*sinh(b*u), read out at the reference bias.
    return 1.0 / (params.a * x * math.sinh(params.b * YAKOPCIC_READOUT_VOLTS))


def conductance_of(params: DeviceParams, x):
    return 1.0 / memristance_of(params, x)


def state_from_memristance(params: DeviceParams, m):
    """Invert M(x) = m; used when initial weights are drawn in memristance.

    Closed form for every kind; the result is clipped to the state bounds
    (relevant only for Yakopcic, whose read-out bounds are within a fraction
    of a percent of [r_on, r_off] rather than exactly equal).
    """
    if params.kind in _RESISTANCE_LINEAR:
        x = (params.r_off - np.asarray(m, dtype=float)) / (params.r_off - params.r_on)
    elif params.kind in _CONDUCTANCE_LINEAR:
        x = (1.0 / np.asarray(m, dtype=float) - params.g_off) / (params.g_on - params.g_off)
    else:
        x = 1.0 / (params.a * math.sinh(params.b * YAKOPCIC_READOUT_VOLTS) * np.asarray(m, dtype=float))
    lo, hi = params.state_bounds()
    return np.clip(x, lo, hi)


def _logistic(z):
    # overflow-safe logistic; exact 0/1 only in the clipped tails
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def state_derivative(params: DeviceParams, state: DeviceState, voltage, current=None):
    """State velocity dx/dt (1/s) for the given drive.

    ``current`` may be omitted; it is then derived from the voltage and the
    present memristance. Threshold kinds (VTEAM, Yakopcic) return exactly
    zero below their thresholds; MMS decays smoothly instead.
    """
    if current is None:
        current = voltage / memristance_of(params, state.x)
    return _derivative(params, state.x, voltage, current)


def _derivative(params, x, u, i):
    kind = params.kind
    if kind is DeviceKind.LINEAR_BASELINE:
        return params.k * u * np.ones_like(np.asarray(x, dtype=float))
    if kind is DeviceKind.LINEAR_ION_DRIFT:
        return params.k * i * np.ones_like(np.asarray(x, dtype=float))
    if kind is DeviceKind.JOGLEKAR:
        window = 1.0 - (2.0 * x - 1.0) ** (2 * params.p)
        return params.k * i * window
    if kind is DeviceKind.BIOLEK:
        # direction-dependent window; the step tie-breaks to 0.5 at i = 0,
        # where dx/dt vanishes anyway
        target = np.where(i > 0, 0.0, np.where(i < 0, 1.0, 0.5))
        window = 1.0 - (x - target) ** (2 * params.p)
        return params.k * i * window
    if kind is DeviceKind.VTEAM:
        return _vteam_derivative(params, x, u)
    if kind is DeviceKind.YAKOPCIC:
        return _yakopcic_derivative(params, x, u)
    return _mms_derivative(params, x, u)


def _vteam_derivative(params, x, u):
    # positive over-threshold drive moves x down (toward R_OFF): the VTEAM
    # loop runs opposite to the other kinds
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    off_drive = np.where(u > params.v_off, u / params.v_off - 1.0, 0.0)
    on_drive = np.where(u < params.v_on, u / params.v_on - 1.0, 0.0)
    rate = params.k_on * on_drive ** params.alpha_on - params.k_off * off_drive ** params.alpha_off
    return rate * np.ones_like(x)


def _yakopcic_derivative(params, x, u):
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    g = np.where(
        u > params.v_p,
        np.exp(np.minimum(u, 500.0)) - math.exp(params.v_p),
        np.where(u < -params.v_n, -(np.exp(np.minimum(-u, 500.0)) - math.exp(params.v_n)), 0.0),
    )
    # window for rising state: exponential damping past x_p, vanishing at x=1
    ramp_p = (params.x_p - x) / (1.0 - params.x_p) + 1.0
    f_p = np.where(x >= params.x_p, np.exp(-params.alpha_p * (x - params.x_p)) * ramp_p, 1.0)
    # window for falling state: modified to vanish smoothly at x_on
    ramp_n = (x - params.x_on) / (params.x_n - params.x_on)
    f_n = np.where(
        x < params.x_on,
        0.0,
        np.where(x <= 1.0 - params.x_n, np.exp(params.alpha_n * (x + params.x_n - 1.0)) * ramp_n, 1.0),
    )
    return params.lam * g * np.where(g >= 0.0, f_p, f_n)


def _mms_derivative(params, x, u):
    x = np.asarray(x, dtype=float)
    p_up = _logistic((u - params.v_th) / params.v_t)
    p_down = _logistic((-u - params.v_th) / params.v_t)
    return ((1.0 - x) * p_up - x * p_down) / params.t_c


def _derivative_scalar(params, x: float, u: float, i: float) -> float:
    """Pure-float twin of :func:`_derivative` for tight integration loops.

    Must stay formula-identical with the array version (checked by tests).
    """
    kind = params.kind
    if kind is DeviceKind.LINEAR_BASELINE:
        return params.k * u
    if kind is DeviceKind.LINEAR_ION_DRIFT:
        return params.k * i
    if kind is DeviceKind.JOGLEKAR:
        return params.k * i * (1.0 - (2.0 * x - 1.0) ** (2 * params.p))
    if kind is DeviceKind.BIOLEK:
        target = 0.0 if i > 0 else (1.0 if i < 0 else 0.5)
        return params.k * i * (1.0 - (x - target) ** (2 * params.p))
    if kind is DeviceKind.VTEAM:
        if u > params.v_off:
            return -params.k_off * (u / params.v_off - 1.0) ** params.alpha_off
        if u < params.v_on:
            return params.k_on * (u / params.v_on - 1.0) ** params.alpha_on
        return 0.0
    if kind is DeviceKind.YAKOPCIC:
        if u > params.v_p:
            g = math.exp(min(u, 500.0)) - math.exp(params.v_p)
        elif u < -params.v_n:
            g = -(math.exp(min(-u, 500.0)) - math.exp(params.v_n))
        else:
            return 0.0
        if g >= 0.0:
            if x >= params.x_p:
                f = math.exp(-params.alpha_p * (x - params.x_p)) \
                    * ((params.x_p - x) / (1.0 - params.x_p) + 1.0)
            else:
                f = 1.0
        else:
            if x < params.x_on:
                f = 0.0
            elif x <= 1.0 - params.x_n:
                f = math.exp(params.alpha_n * (x + params.x_n - 1.0)) \
                    * (x - params.x_on) / (params.x_n - params.x_on)
            else:
                f = 1.0
        return params.lam * g * f
    z_up = min(max((u - params.v_th) / params.v_t, -500.0), 500.0)
    z_down = min(max((-u - params.v_th) / params.v_t, -500.0), 500.0)
    p_up = 1.0 / (1.0 + math.exp(-z_up))
    p_down = 1.0 / (1.0 + math.exp(-z_down))
    return ((1.0 - x) * p_up - x * p_down) / params.t_c


def _memristance_scalar(params, x: float) -> float:
    if params.kind in _RESISTANCE_LINEAR:
        return params.r_on * x + params.r_off * (1.0 - x)
    if params.kind in _CONDUCTANCE_LINEAR:
        return 1.0 / (params.g_off + x * (params.g_on - params.g_off))
    return 1.0 / (params.a * x * math.sinh(params.b * YAKOPCIC_READOUT_VOLTS))


def apply_pulse(params: DeviceParams, state: DeviceState, pulse: PulseCommand) -> DeviceState:
    """Integrate the state over one rectangular pulse.

    Substepped explicit Euler with a hard clamp to the state bounds after
    every substep; a zero-duration pulse returns the state unchanged.
    """
    x = apply_pulse_raw(params, np.asarray(state.x, dtype=float), pulse.amplitude, pulse.duration,
                        state.x_min, state.x_max)
    return state.clamped(x)


def apply_pulse_raw(params, x, amplitude, duration, x_min, x_max):
    """Array-level pulse integration; amplitude/duration broadcast against x."""
    amplitude = np.asarray(amplitude, dtype=float)
    duration = np.asarray(duration, dtype=float)
    if not (np.all(np.isfinite(amplitude)) and np.all(np.isfinite(duration))):
        raise ValueError("pulse amplitude and duration must be finite")
    if np.any(duration < 0):
        raise ValueError("pulse duration must be >= 0")
    x = np.array(x, dtype=float, copy=True)
    h = duration / PULSE_SUBSTEPS
    for _ in range(PULSE_SUBSTEPS):
        i = amplitude / memristance_of(params, x)
        x += h * _derivative(params, x, amplitude, i)
        x = np.clip(x, x_min, x_max)
    return x


@dataclass
class WaveformTrace:
    """Sampled response to a periodic drive: time, voltage, current, state.

    ``charge`` and ``flux`` are the running trapezoidal integrals of the
    current and voltage columns.
    """

    t: np.ndarray
    u: np.ndarray
    i: np.ndarray
    x: np.ndarray

    @property
    def charge(self) -> np.ndarray:
        return _cumtrapz(self.i, self.t)

    @property
    def flux(self) -> np.ndarray:
        return _cumtrapz(self.u, self.t)

    def to_csv(self, path) -> None:
        rows = np.column_stack([self.t, self.u, self.i, self.x])
        np.savetxt(path, rows, delimiter=",", header="t,V,I,x", comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "WaveformTrace":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(t=rows[:, 0], u=rows[:, 1], i=rows[:, 2], x=rows[:, 3])

    def tail_period(self, frequency: float) -> "WaveformTrace":
        """The last full drive period of the trace (the settled cycle)."""
        dt = self.t[1] - self.t[0]
        n = int(round(1.0 / (frequency * dt)))
        if n + 1 > len(self.t):
            raise ValueError("trace shorter than one period")
        sl = slice(len(self.t) - n - 1, None)
        return WaveformTrace(t=self.t[sl], u=self.u[sl], i=self.i[sl], x=self.x[sl])


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def simulate_waveform(params: DeviceParams, initial: DeviceState, amplitude: float,
                      frequency: float, periods: int = 1, dt: float | None = None) -> WaveformTrace:
    """Drive the device with ``amplitude * sin(2 pi f t)`` and record i(t).

    Fixed-step RK4 on the state, state clamped after every step. ``dt`` must
    resolve the drive with at least 1000 steps per period (default: 2048).
    """
    if frequency <= 0:
        raise ValueError("frequency must be > 0")
    if periods < 1:
        raise ValueError("periods must be >= 1")
    if dt is None:
        dt = 1.0 / (frequency * 2048.0)
    if not dt < 1.0 / (1000.0 * frequency):
        raise ValueError("dt too coarse: need dt < 1/(1000*frequency)")

    n_steps = int(round(periods / (frequency * dt)))
    omega = 2.0 * math.pi * frequency
    lo, hi = initial.x_min, initial.x_max

    t = np.arange(n_steps + 1) * dt
    u = amplitude * np.sin(omega * t)
    x = np.empty(n_steps + 1)
    x[0] = float(np.asarray(initial.x))

    def rate(xv, tv):
        uv = amplitude * math.sin(omega * tv)
        iv = uv / _memristance_scalar(params, xv)
        return _derivative_scalar(params, xv, uv, iv)

    for n in range(n_steps):
        xv, tv = x[n], t[n]
        k1 = rate(xv, tv)
        k2 = rate(min(max(xv + 0.5 * dt * k1, lo), hi), tv + 0.5 * dt)
        k3 = rate(min(max(xv + 0.5 * dt * k2, lo), hi), tv + 0.5 * dt)
        k4 = rate(min(max(xv + dt * k3, lo), hi), tv + dt)
        x[n + 1] = min(max(xv + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0, lo), hi)

    i = u / memristance_of(params, x)
    return WaveformTrace(t=t, u=u, i=i, x=x)


def loop_area(trace: WaveformTrace) -> float:
    """Total enclosed area of the pinched u-i loop.

    The loop pinches at the origin into one lobe per voltage half-plane, and
    the lobes are traversed with opposite orientation, so a single shoelace
    over the full polygon would cancel them. Each edge's shoelace term is
    therefore attributed to the half-plane it lies in and the lobe areas are
    summed unsigned. Edges straddling u = 0 pass next to the origin and
    contribute negligibly.
    """
    u, i = trace.u, trace.i
    cross = u * np.roll(i, -1) - np.roll(u, -1) * i
    side = u + np.roll(u, -1)
    positive = float(np.sum(cross[side > 0]))
    negative = float(np.sum(cross[side < 0]))
    return 0.5 * (abs(positive) + abs(negative))


def pinch_ratio(trace: WaveformTrace) -> float:
    """Largest |i| at a zero crossing of u, relative to the loop's peak |i|.

    Crossings are located by linear interpolation between samples; a true
    memristive loop pinches at the origin, so this stays near zero.
    """
    u, i = trace.u, trace.i
    peak = float(np.max(np.abs(i)))
    if peak == 0.0:
        return 0.0
    s = np.sign(u)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if idx.size == 0:
        return 0.0
    frac = -u[idx] / (u[idx + 1] - u[idx])
    i_cross = i[idx] + frac * (i[idx + 1] - i[idx])
    worst = float(np.max(np.abs(i_cross)))
    exact = np.abs(i[u == 0.0])
    if exact.size:
        worst = max(worst, float(np.max(exact)))
    return worst / peak
