"""Rate-constant calibration for the device presets.

Rule: under a 1 V sinusoid at a model's lower characterization frequency,
the state must sweep (almost all of) its window within one half period --
slow enough to need the whole half-wave, fast enough to finish it. The rates
in :mod:`memeq.presets` were produced by this module; rerun it after
changing any other device parameter.
"""

from __future__ import annotations

import math
from dataclasses import replace

from .devices import DeviceKind, DeviceParams, _derivative, memristance_of

HALF_PERIOD_STEPS = 2048
COVERAGE = 0.99     # fraction of the state window that must be swept


def integrate_half_period(params: DeviceParams, frequency: float, polarity: float,
                          x0: float, steps: int = HALF_PERIOD_STEPS) -> float:
    """RK4 state integration over one half period of a 1 V sine."""
    lo, hi = params.state_bounds()
    dt = 1.0 / (2.0 * frequency * steps)
    omega = 2.0 * math.pi * frequency
    x = x0

    def rate(xv, tv):
        uv = polarity * math.sin(omega * tv)
        iv = uv / memristance_of(params, xv)
        return float(_derivative(params, xv, uv, iv))

    t = 0.0
    for _ in range(steps):
        k1 = rate(x, t)
        k2 = rate(min(max(x + 0.5 * dt * k1, lo), hi), t + 0.5 * dt)
        k3 = rate(min(max(x + 0.5 * dt * k2, lo), hi), t + 0.5 * dt)
        k4 = rate(min(max(x + dt * k3, lo), hi), t + dt)
        x = min(max(x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0, lo), hi)
        t += dt
    return x


def _smallest_sufficient_rate(make_params, frequency, polarity, start_at_low: bool,
                              coverage: float = COVERAGE) -> float:
    """Bisect the smallest rate that sweeps `coverage` of the window."""

    def reached(rate_value: float) -> bool:
        params = make_params(rate_value)
        lo, hi = params.state_bounds()
        margin = (1.0 - coverage) * (hi - lo)
        x0 = lo + margin if start_at_low else hi - margin
        x_end = integrate_half_period(params, frequency, polarity, x0)
        target = hi if start_at_low else lo
        return abs(x_end - target) <= margin

    rate = 1e-6
    while not reached(rate):
        rate *= 10.0
        if rate > 1e30:
            raise RuntimeError("calibration failed to bracket a rate")
    low, high = rate / 10.0, rate
    for _ in range(60):
        mid = math.sqrt(low * high)
        if reached(mid):
            high = mid
        else:
            low = mid
    return high


def calibrate(kind: DeviceKind, frequency: float, base: DeviceParams) -> dict:
    """Return the calibrated rate field(s) for one device kind."""
    if kind in (DeviceKind.LINEAR_BASELINE, DeviceKind.LINEAR_ION_DRIFT,
                DeviceKind.JOGLEKAR, DeviceKind.BIOLEK):
        k = _smallest_sufficient_rate(lambda r: replace(base, k=r), frequency, +1.0, True)
        return {"k": k}
    if kind is DeviceKind.VTEAM:
        # positive half-wave drives toward R_OFF, negative toward R_ON
        k_off = _smallest_sufficient_rate(lambda r: replace(base, k_off=r, k_on=0.0),
                                          frequency, +1.0, False)
        k_on = _smallest_sufficient_rate(lambda r: replace(base, k_on=r, k_off=0.0),
                                         frequency, -1.0, True)
        return {"k_off": k_off, "k_on": k_on}
    if kind is DeviceKind.YAKOPCIC:
        # the two drive directions see different windows; take the rate that
        # completes the slower one so both transitions finish in half a period
        lam_up = _smallest_sufficient_rate(lambda r: replace(base, lam=r), frequency, +1.0, True)
        lam_down = _smallest_sufficient_rate(lambda r: replace(base, lam=r), frequency, -1.0, False)
        return {"lam": max(lam_up, lam_down)}
    if kind is DeviceKind.MMS:
        inv = _smallest_sufficient_rate(lambda r: replace(base, t_c=1.0 / r), frequency, +1.0, True)
        return {"t_c": 1.0 / inv}
    raise ValueError(f"unknown kind {kind}")
