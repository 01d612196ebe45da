"""Pure-Python kernel twin.

Reference implementation of the hot loops. The compiled twin in
``_native.pyx`` mirrors this file operation for operation; any change here
must be applied there identically or cross-backend bit-equality breaks.
"""

from __future__ import annotations

import math
from array import array
from typing import Sequence

_DEG2RAD = math.pi / 180.0


def _lag_factor(dt: float, tau: float) -> float:
    # Euler relaxation factor, clamped so coarse steps stay stable.
    if dt == 0.0:
        return 0.0
    if tau <= 0.0:
        return 1.0
    f = dt / tau
    return 1.0 if f > 1.0 else f


def step_once(
    x: float,
    y: float,
    speed: float,
    heading: float,
    ach_thrust: float,
    ach_rudder: float,
    cmd_thrust: float,
    cmd_rudder: float,
    estop: bool,
    dt: float,
    v_max: float,
    rudder_limit: float,
    t_eng: float,
    t_mech: float,
    emergency_decel: float,
    drag_coeff: float,
    turn_rate_gain: float,
) -> tuple[float, float, float, float, float, float]:
    """One explicit-Euler hull update; all derivatives use the pre-step state."""
    if cmd_thrust < 0.0:
        cmd_thrust = 0.0
    elif cmd_thrust > 1.0:
        cmd_thrust = 1.0
    if cmd_rudder < -rudder_limit:
        cmd_rudder = -rudder_limit
    elif cmd_rudder > rudder_limit:
        cmd_rudder = rudder_limit
    if estop:
        cmd_thrust = 0.0

    rad = heading * _DEG2RAD
    nx = x + speed * math.sin(rad) * dt
    ny = y + speed * math.cos(rad) * dt

    nheading = heading + turn_rate_gain * ach_rudder * speed * dt
    nheading = math.fmod(nheading, 360.0)
    if nheading < 0.0:
        nheading += 360.0

    if estop:
        nspeed = speed - emergency_decel * dt
    else:
        vt = ach_thrust * v_max
        nspeed = speed + drag_coeff * (vt * vt - speed * speed) * dt
    if nspeed < 0.0:
        nspeed = 0.0

    f_eng = _lag_factor(dt, t_eng)
    f_mech = _lag_factor(dt, t_mech)
    nath = ach_thrust + (cmd_thrust - ach_thrust) * f_eng
    nard = ach_rudder + (cmd_rudder - ach_rudder) * f_mech

    return nx, ny, nspeed, nheading, nath, nard


def interp_positions(
    ts: Sequence[float],
    xs: Sequence[float],
    ys: Sequence[float],
    qts: Sequence[float],
) -> tuple[array, array]:
    """Sample a piecewise-linear track at query times; ends are held."""
    n = len(ts)
    out_x = array("d")
    out_y = array("d")
    t_first = ts[0]
    t_last = ts[n - 1]
    for t in qts:
        if t <= t_first:
            out_x.append(xs[0])
            out_y.append(ys[0])
        elif t >= t_last:
            out_x.append(xs[n - 1])
            out_y.append(ys[n - 1])
        else:
            lo = 0
            hi = n - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if ts[mid] <= t:
                    lo = mid
                else:
                    hi = mid
            f = (t - ts[lo]) / (ts[hi] - ts[lo])
            out_x.append(xs[lo] + (xs[hi] - xs[lo]) * f)
            out_y.append(ys[lo] + (ys[hi] - ys[lo]) * f)
    return out_x, out_y


def distances(
    axs: Sequence[float],
    ays: Sequence[float],
    bxs: Sequence[float],
    bys: Sequence[float],
) -> array:
    """Elementwise planar distances between two aligned position arrays."""
    out = array("d")
    for i in range(len(axs)):
        dx = axs[i] - bxs[i]
        dy = ays[i] - bys[i]
        out.append(math.sqrt(dx * dx + dy * dy))
    return out


def segment_cpa(
    rx: float, ry: float, rvx: float, rvy: float, t0: float, t1: float
) -> tuple[float, float]:
    """Closest approach of a constant relative motion r(t) = r0 + rv*t over [t0, t1].

    r0 is the relative position at t = 0 (not at t0).
    """
    vv = rvx * rvx + rvy * rvy
    if vv == 0.0:
        t = t0
    else:
        t = -(rx * rvx + ry * rvy) / vv
        if t < t0:
            t = t0
        elif t > t1:
            t = t1
    dx = rx + rvx * t
    dy = ry + rvy * t
    return t, math.sqrt(dx * dx + dy * dy)


def forward_min_distance(
    own: Sequence[float],
    command: Sequence[float],
    params: Sequence[float],
    obs_x: Sequence[float],
    obs_y: Sequence[float],
    obs_vx: Sequence[float],
    obs_vy: Sequence[float],
    dt: float,
    n_steps: int,
) -> tuple[float, float, int]:
    """Hold a command for n_steps and track the minimum distance to any
    constant-velocity obstacle; distances are checked at every step instant
    including t = 0.

    own: (x, y, speed, heading, ach_thrust, ach_rudder)
    command: (thrust, rudder, estop)
    params: (v_max, rudder_limit, t_eng, t_mech, emergency_decel,
             drag_coeff, turn_rate_gain)
    Returns (min_distance, time_of_min, obstacle_index); index -1 when there
    are no obstacles.
    """
    x, y, speed, heading, ath, ard = own
    cth, crd, estop_f = command
    estop = bool(estop_f)
    v_max, rudder_limit, t_eng, t_mech, decel, dragk, turng = params
    m = len(obs_x)

    best_d = math.inf
    best_t = 0.0
    best_i = -1
    for k in range(n_steps + 1):
        t = k * dt
        for i in range(m):
            ox = obs_x[i] + obs_vx[i] * t
            oy = obs_y[i] + obs_vy[i] * t
            dx = x - ox
            dy = y - oy
            d = math.sqrt(dx * dx + dy * dy)
            if d < best_d:
                best_d = d
                best_t = t
                best_i = i
        if k < n_steps:
            x, y, speed, heading, ath, ard = step_once(
                x, y, speed, heading, ath, ard,
                cth, crd, estop, dt,
                v_max, rudder_limit, t_eng, t_mech, decel, dragk, turng,
            )
    return best_d, best_t, best_i
