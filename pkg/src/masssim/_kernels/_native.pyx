# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel twin.

Mirrors ``_pure.py`` operation for operation so both backends produce
bit-identical doubles. IEEE double arithmetic in source order; libm sin/
cos/sqrt/fmod are the same functions CPython's math module calls.
"""

from array import array

from libc.math cimport M_PI, cos, fmod, sin, sqrt

cdef double INF = float("inf")
cdef double DEG2RAD = M_PI / 180.0


cdef inline double _lag_factor(double dt, double tau) nogil:
    if dt == 0.0:
        return 0.0
    if tau <= 0.0:
        return 1.0
    cdef double f = dt / tau
    return 1.0 if f > 1.0 else f


cdef inline void _step(double* s, double cmd_thrust, double cmd_rudder,
                       bint estop, double dt, double v_max,
                       double rudder_limit, double t_eng, double t_mech,
                       double emergency_decel, double drag_coeff,
                       double turn_rate_gain) nogil:
    # s = [x, y, speed, heading, ach_thrust, ach_rudder], updated in place
    cdef double rad, nx, ny, nheading, nspeed, vt, f_eng, f_mech

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

    rad = s[3] * DEG2RAD
    nx = s[0] + s[2] * sin(rad) * dt
    ny = s[1] + s[2] * cos(rad) * dt

    nheading = s[3] + turn_rate_gain * s[5] * s[2] * dt
    nheading = fmod(nheading, 360.0)
    if nheading < 0.0:
        nheading += 360.0

    if estop:
        nspeed = s[2] - emergency_decel * dt
    else:
        vt = s[4] * v_max
        nspeed = s[2] + drag_coeff * (vt * vt - s[2] * s[2]) * dt
    if nspeed < 0.0:
        nspeed = 0.0

    f_eng = _lag_factor(dt, t_eng)
    f_mech = _lag_factor(dt, t_mech)
    s[4] = s[4] + (cmd_thrust - s[4]) * f_eng
    s[5] = s[5] + (cmd_rudder - s[5]) * f_mech
    s[0] = nx
    s[1] = ny
    s[2] = nspeed
    s[3] = nheading


def step_once(double x, double y, double speed, double heading,
              double ach_thrust, double ach_rudder,
              double cmd_thrust, double cmd_rudder, estop, double dt,
              double v_max, double rudder_limit, double t_eng,
              double t_mech, double emergency_decel, double drag_coeff,
              double turn_rate_gain):
    """One explicit-Euler hull update; all derivatives use the pre-step state."""
    cdef double s[6]
    s[0] = x
    s[1] = y
    s[2] = speed
    s[3] = heading
    s[4] = ach_thrust
    s[5] = ach_rudder
    _step(s, cmd_thrust, cmd_rudder, bool(estop), dt, v_max, rudder_limit,
          t_eng, t_mech, emergency_decel, drag_coeff, turn_rate_gain)
    return s[0], s[1], s[2], s[3], s[4], s[5]


cdef double[::1] _as_view(obj):
    if isinstance(obj, array) and obj.typecode == "d":
        return obj
    return array("d", obj)


def interp_positions(ts, xs, ys, qts):
    """Sample a piecewise-linear track at query times; ends are held."""
    cdef double[::1] tv = _as_view(ts)
    cdef double[::1] xv = _as_view(xs)
    cdef double[::1] yv = _as_view(ys)
    cdef double[::1] qv = _as_view(qts)
    cdef Py_ssize_t n = tv.shape[0]
    cdef Py_ssize_t nq = qv.shape[0]
    out_x = array("d", bytes(8 * nq))
    out_y = array("d", bytes(8 * nq))
    cdef double[::1] ox = out_x
    cdef double[::1] oy = out_y
    cdef double t_first = tv[0]
    cdef double t_last = tv[n - 1]
    cdef Py_ssize_t i, lo, hi, mid
    cdef double t, f
    for i in range(nq):
        t = qv[i]
        if t <= t_first:
            ox[i] = xv[0]
            oy[i] = yv[0]
        elif t >= t_last:
            ox[i] = xv[n - 1]
            oy[i] = yv[n - 1]
        else:
            lo = 0
            hi = n - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if tv[mid] <= t:
                    lo = mid
                else:
                    hi = mid
            f = (t - tv[lo]) / (tv[hi] - tv[lo])
            ox[i] = xv[lo] + (xv[hi] - xv[lo]) * f
            oy[i] = yv[lo] + (yv[hi] - yv[lo]) * f
    return out_x, out_y


def distances(axs, ays, bxs, bys):
    """Elementwise planar distances between two aligned position arrays."""
    cdef double[::1] ax = _as_view(axs)
    cdef double[::1] ay = _as_view(ays)
    cdef double[::1] bx = _as_view(bxs)
    cdef double[::1] by = _as_view(bys)
    cdef Py_ssize_t n = ax.shape[0]
    out = array("d", bytes(8 * n))
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef double dx, dy
    for i in range(n):
        dx = ax[i] - bx[i]
        dy = ay[i] - by[i]
        ov[i] = sqrt(dx * dx + dy * dy)
    return out


def segment_cpa(double rx, double ry, double rvx, double rvy,
                double t0, double t1):
    """Closest approach of a constant relative motion r(t) = r0 + rv*t over [t0, t1].

    r0 is the relative position at t = 0 (not at t0).
    """
    cdef double vv = rvx * rvx + rvy * rvy
    cdef double t, dx, dy
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
    return t, sqrt(dx * dx + dy * dy)


def forward_min_distance(own, command, params,
                         obs_x, obs_y, obs_vx, obs_vy,
                         double dt, Py_ssize_t n_steps):
    """Hold a command for n_steps and track the minimum distance to any
    constant-velocity obstacle; distances are checked at every step instant
    including t = 0.

    See the pure twin for the argument layout.
    """
    cdef double s[6]
    s[0] = own[0]
    s[1] = own[1]
    s[2] = own[2]
    s[3] = own[3]
    s[4] = own[4]
    s[5] = own[5]
    cdef double cth = command[0]
    cdef double crd = command[1]
    cdef bint estop = bool(command[2])
    cdef double v_max = params[0]
    cdef double rudder_limit = params[1]
    cdef double t_eng = params[2]
    cdef double t_mech = params[3]
    cdef double decel = params[4]
    cdef double dragk = params[5]
    cdef double turng = params[6]

    cdef double[::1] oxv = _as_view(obs_x)
    cdef double[::1] oyv = _as_view(obs_y)
    cdef double[::1] ovxv = _as_view(obs_vx)
    cdef double[::1] ovyv = _as_view(obs_vy)
    cdef Py_ssize_t m = oxv.shape[0]

    cdef double best_d = INF
    cdef double best_t = 0.0
    cdef Py_ssize_t best_i = -1
    cdef Py_ssize_t k, i
    cdef double t, ox, oy, dx, dy, d
    with nogil:
        for k in range(n_steps + 1):
            t = k * dt
            for i in range(m):
                ox = oxv[i] + ovxv[i] * t
                oy = oyv[i] + ovyv[i] * t
                dx = s[0] - ox
                dy = s[1] - oy
                d = sqrt(dx * dx + dy * dy)
                if d < best_d:
                    best_d = d
                    best_t = t
                    best_i = i
            if k < n_steps:
                _step(s, cth, crd, estop, dt, v_max, rudder_limit,
                      t_eng, t_mech, decel, dragk, turng)
    return best_d, best_t, best_i
