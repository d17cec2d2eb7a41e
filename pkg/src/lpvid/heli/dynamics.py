"""Six-degree-of-freedom helicopter model with lumped rotor flapping.

State vector layout (15 entries)::

    0:3   position, NED (m)
    3:7   attitude quaternion, scalar first, body -> NED
    7:10  body velocity u, v, w (m/s)
    10:13 body rates p_b, q_b, r_b (rad/s)
    13:15 flapping a1 (longitudinal), b1 (lateral) (rad)

Body axes are x forward, y right, z down. Component forces follow a
simplified parametric model (thrust-tilt rotor with hub stiffness,
flat-plate fuselage drag, linear tail surfaces, torque ~ T^1.5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, SingularityError, StructuralError
from .params import HeliParams

STATE_SIZE = 15
POS, QUAT, VEL, RATES, FLAP = slice(0, 3), slice(3, 7), slice(7, 10), slice(10, 13), slice(13, 15)


@dataclass(frozen=True)
class ControlInput:
    dlat: float = 0.0
    dlon: float = 0.0
    dcol: float = 0.0
    dped: float = 0.0

    def __post_init__(self):
        for name in ("dlat", "dlon", "dcol", "dped"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [-1, 1]")

    def as_tuple(self):
        return (self.dlat, self.dlon, self.dcol, self.dped)


@dataclass(frozen=True)
class Wind:
    u: float = 0.0
    v: float = 0.0
    w: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.u, self.v, self.w)):
            raise ValueError("wind components must be finite")

    def as_tuple(self):
        return (self.u, self.v, self.w)


CALM = Wind()


@dataclass(frozen=True)
class HeliState:
    pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rates: np.ndarray = field(default_factory=lambda: np.zeros(3))
    flap: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        for name, n in (("pos", 3), ("quat", 4), ("vel", 3), ("rates", 3), ("flap", 2)):
            arr = np.array(getattr(self, name), dtype=float).ravel()
            if arr.size != n:
                raise StructuralError(f"{name} needs {n} entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.pos, self.quat, self.vel, self.rates, self.flap])

    @classmethod
    def from_vector(cls, x) -> "HeliState":
        x = np.asarray(x, dtype=float)
        return cls(x[POS], x[QUAT], x[VEL], x[RATES], x[FLAP])

    @classmethod
    def from_euler(cls, phi=0.0, theta=0.0, psi=0.0, **kw) -> "HeliState":
        return cls(quat=euler_to_quat(phi, theta, psi), **kw)

    @property
    def euler(self):
        return quat_to_euler(self.quat)

    @property
    def airspeed(self) -> float:
        return float(np.linalg.norm(self.vel))


@dataclass(frozen=True)
class ForceMoments:
    """Component forces (N) and moments (N m); totals follow the rigid-body equations' grouping."""

    X_mr: float = 0.0
    Y_mr: float = 0.0
    Z_mr: float = 0.0
    L_mr: float = 0.0
    M_mr: float = 0.0
    X_fus: float = 0.0
    Y_fus: float = 0.0
    Z_fus: float = 0.0
    Y_tr: float = 0.0
    L_tr: float = 0.0
    N_tr: float = 0.0
    Y_vf: float = 0.0
    L_vf: float = 0.0
    N_vf: float = 0.0
    Z_ht: float = 0.0
    M_ht: float = 0.0
    Q_e: float = 0.0
    thrust: float = 0.0

    @property
    def X(self):
        return self.X_mr + self.X_fus

    @property
    def Y(self):
        return self.Y_mr + self.Y_fus + self.Y_tr + self.Y_vf

    @property
    def Z(self):
        return self.Z_mr + self.Z_fus + self.Z_ht

    @property
    def L(self):
        return self.L_mr + self.L_vf + self.L_tr

    @property
    def M(self):
        return self.M_mr + self.M_ht

    @property
    def N(self):
        return -self.Q_e + self.N_vf + self.N_tr

    @classmethod
    def from_totals(cls, X=0.0, Y=0.0, Z=0.0, L=0.0, M=0.0, N=0.0) -> "ForceMoments":
        return cls(X_mr=X, Y_mr=Y, Z_mr=Z, L_mr=L, M_mr=M, N_tr=N)


ZERO_FM = ForceMoments()


# -- attitude ---------------------------------------------------------------

def euler_to_quat(phi, theta, psi) -> np.ndarray:
    cr, sr = math.cos(phi / 2), math.sin(phi / 2)
    cp, sp = math.cos(theta / 2), math.sin(theta / 2)
    cy, sy = math.cos(psi / 2), math.sin(psi / 2)
    return np.array([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])


def quat_to_euler(q):
    """ZYX Euler angles ``(phi, theta, psi)`` of a unit quaternion."""
    q0, q1, q2, q3 = (float(v) for v in q)
    phi = math.atan2(2 * (q0 * q1 + q2 * q3), 1 - 2 * (q1 * q1 + q2 * q2))
    s = max(-1.0, min(1.0, 2 * (q0 * q2 - q3 * q1)))
    theta = math.asin(s)
    psi = math.atan2(2 * (q0 * q3 + q1 * q2), 1 - 2 * (q2 * q2 + q3 * q3))
    return phi, theta, psi


def quat_to_dcm(q) -> np.ndarray:
    """Rotation matrix taking body-frame vectors to NED."""
    q0, q1, q2, q3 = (float(v) for v in q)
    return np.array([
        [1 - 2 * (q2 * q2 + q3 * q3), 2 * (q1 * q2 - q0 * q3), 2 * (q1 * q3 + q0 * q2)],
        [2 * (q1 * q2 + q0 * q3), 1 - 2 * (q1 * q1 + q3 * q3), 2 * (q2 * q3 - q0 * q1)],
        [2 * (q1 * q3 - q0 * q2), 2 * (q2 * q3 + q0 * q1), 1 - 2 * (q1 * q1 + q2 * q2)],
    ])


def euler_kinematics(phi, theta, psi, rates, eps=1e-3) -> np.ndarray:
    """Euler angle rates from body rates."""
    if abs(theta) >= math.pi / 2 - eps:
        raise SingularityError(f"pitch {theta:.6f} rad too close to +-pi/2")
    p, q, r = rates
    sphi, cphi = math.sin(phi), math.cos(phi)
    tth, cth = math.tan(theta), math.cos(theta)
    return np.array([
        p + tth * sphi * q + tth * cphi * r,
        cphi * q - sphi * r,
        sphi / cth * q + cphi / cth * r,
    ])


def quat_kinematics(q, rates, tol=1e-6) -> np.ndarray:
    """``qdot = 0.5 * q (x) [0, omega]`` for body rates ``omega``."""
    q = np.asarray(q, dtype=float)
    if abs(np.linalg.norm(q) - 1.0) > tol:
        raise StructuralError(f"quaternion norm {np.linalg.norm(q)!r} is not 1")
    return _qdot(q[0], q[1], q[2], q[3], *rates)


def _qdot(q0, q1, q2, q3, p, q, r):
    return np.array([
        0.5 * (-q1 * p - q2 * q - q3 * r),
        0.5 * (q0 * p + q2 * r - q3 * q),
        0.5 * (q0 * q - q1 * r + q3 * p),
        0.5 * (q0 * r + q1 * q - q2 * p),
    ])


# -- component models -------------------------------------------------------

def rigid_body_derivs(state: HeliState, fm: ForceMoments, params: HeliParams) -> np.ndarray:
    """Translational and rotational accelerations ``(udot, vdot, wdot, pdot, qdot, rdot)``."""
    phi, theta, _ = state.euler
    u, v, w = state.vel
    p, q, r = state.rates
    m, g = params.mass, params.g
    Ixx, Iyy, Izz = params.Ixx, params.Iyy, params.Izz
    return np.array([
        v * r - w * q - g * math.sin(theta) + fm.X / m,
        w * p - u * r + g * math.sin(phi) * math.cos(theta) + fm.Y / m,
        u * q - v * p + g * math.cos(phi) * math.cos(theta) + fm.Z / m,
        q * r * (Iyy - Izz) / Ixx + fm.L / Ixx,
        p * r * (Izz - Ixx) / Iyy + fm.M / Iyy,
        p * q * (Ixx - Iyy) / Izz + fm.N / Izz,
    ])


def flap_derivs(state: HeliState, wind: Wind, inp: ControlInput, params: HeliParams) -> np.ndarray:
    """``(b1dot, a1dot)`` of the lumped rotor/stabilizer-bar flapping."""
    u, v, w = state.vel
    p, q, _ = state.rates
    a1, b1 = state.flap
    return np.array(_flap(u - wind.u, v - wind.v, w - wind.w, p, q, a1, b1,
                          inp.dlat, inp.dlon, params))[::-1]


def _flap(ur, vr, wr, p, q, a1, b1, dlat, dlon, P: HeliParams):
    tau, vt = P.tau_e, P.tip_speed
    a1dot = (-q - a1 / tau + (P.da1_dmu * ur / vt + P.da1_dmuz * wr / vt) / tau
             + P.A_lon / tau * dlon)
    b1dot = -p - b1 / tau - P.db1_dmuv * vr / vt / tau + P.B_lat / tau * dlat
    return a1dot, b1dot


def forces_moments(state: HeliState, wind: Wind, inp: ControlInput, params: HeliParams) -> ForceMoments:
    u, v, w = state.vel
    p, q, r = state.rates
    a1, b1 = state.flap
    return ForceMoments(*_forces(u - wind.u, v - wind.v, w - wind.w, p, q, r, a1, b1,
                                 inp.dcol, inp.dped, params))


def _forces(ur, vr, wr, p, q, r, a1, b1, dcol, dped, P: HeliParams):
    """Component tuple in :class:`ForceMoments` field order."""
    T = P.mass * P.g * (1.0 + P.K_col * (dcol - P.dcol_trim))
    k_hub = P.K_beta + T * P.h_hub
    half_rho = 0.5 * P.rho
    # local side velocity at the tail rotor / fin hubs, vertical at the tailplane
    v_tr = vr - r * P.l_tr + p * P.h_tr
    v_vf = vr - r * P.l_vf + p * P.h_vf
    w_ht = wr + q * P.l_ht
    Y_tr = P.K_tr * dped - P.K_vr * v_tr
    Y_vf = -P.K_vf * v_vf
    Z_ht = -P.K_ht * w_ht
    return (
        -T * a1, T * b1, -T, k_hub * b1, k_hub * a1,
        -half_rho * P.S_x * abs(ur) * ur,
        -half_rho * P.S_y * abs(vr) * vr,
        -half_rho * P.S_z * abs(wr) * wr,
        Y_tr, Y_tr * P.h_tr, -Y_tr * P.l_tr,
        Y_vf, Y_vf * P.h_vf, -Y_vf * P.l_vf,
        Z_ht, P.l_ht * Z_ht,
        P.K_Q * max(T, 0.0) ** 1.5,
        T,
    )


def _totals(c):
    X_mr, Y_mr, Z_mr, L_mr, M_mr, X_fus, Y_fus, Z_fus, Y_tr, L_tr, N_tr, Y_vf, L_vf, N_vf, Z_ht, M_ht, Q_e, _ = c
    return (X_mr + X_fus, Y_mr + Y_fus + Y_tr + Y_vf, Z_mr + Z_fus + Z_ht,
            L_mr + L_vf + L_tr, M_mr + M_ht, -Q_e + N_vf + N_tr)


# -- full derivative field and integration ------------------------------------

def state_derivative(x, ctrl, wind=(0.0, 0.0, 0.0), params: HeliParams = None, force_fn=None):
    """Time derivative of the 15-entry state vector, returned as a list.

    ``ctrl`` is ``(dlat, dlon, dcol, dped)`` and ``wind`` a body-axis triple.
    ``force_fn(x, ctrl, wind)``, when given, replaces the component force model
    and must return a :class:`ForceMoments`.
    """
    P = params
    _, _, _, q0, q1, q2, q3, u, v, w, p, q, r, a1, b1 = x
    dlat, dlon, dcol, dped = ctrl
    ur, vr, wr = u - wind[0], v - wind[1], w - wind[2]
    if force_fn is None:
        X, Y, Z, L, M, N = _totals(_forces(ur, vr, wr, p, q, r, a1, b1, dcol, dped, P))
    else:
        fm = force_fn(x, ctrl, wind)
        X, Y, Z, L, M, N = fm.X, fm.Y, fm.Z, fm.L, fm.M, fm.N
    # gravity direction in body axes: (-sin th, sin ph cos th, cos ph cos th)
    gx = 2 * (q1 * q3 - q0 * q2)
    gy = 2 * (q2 * q3 + q0 * q1)
    gz = q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3
    g, m = P.g, P.mass
    Ixx, Iyy, Izz = P.Ixx, P.Iyy, P.Izz
    a1dot, b1dot = _flap(ur, vr, wr, p, q, a1, b1, dlat, dlon, P)
    return [
        (1 - 2 * (q2 * q2 + q3 * q3)) * u + 2 * (q1 * q2 - q0 * q3) * v + 2 * (q1 * q3 + q0 * q2) * w,
        2 * (q1 * q2 + q0 * q3) * u + (1 - 2 * (q1 * q1 + q3 * q3)) * v + 2 * (q2 * q3 - q0 * q1) * w,
        gx * u + gy * v + gz * w,
        0.5 * (-q1 * p - q2 * q - q3 * r),
        0.5 * (q0 * p + q2 * r - q3 * q),
        0.5 * (q0 * q - q1 * r + q3 * p),
        0.5 * (q0 * r + q1 * q - q2 * p),
        v * r - w * q + g * gx + X / m,
        w * p - u * r + g * gy + Y / m,
        u * q - v * p + g * gz + Z / m,
        q * r * (Iyy - Izz) / Ixx + L / Ixx,
        p * r * (Izz - Ixx) / Iyy + M / Iyy,
        p * q * (Ixx - Iyy) / Izz + N / Izz,
        a1dot,
        b1dot,
    ]


def rk4_vector(x, ctrl, wind, dt, params, force_fn=None):
    """One RK4 step on the raw state vector, quaternion renormalized afterwards."""
    f = state_derivative
    x = [float(v) for v in x]
    h2 = 0.5 * dt
    k1 = f(x, ctrl, wind, params, force_fn)
    k2 = f([a + h2 * b for a, b in zip(x, k1)], ctrl, wind, params, force_fn)
    k3 = f([a + h2 * b for a, b in zip(x, k2)], ctrl, wind, params, force_fn)
    k4 = f([a + dt * b for a, b in zip(x, k3)], ctrl, wind, params, force_fn)
    h6 = dt / 6.0
    xn = [a + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)]
    s = 1.0 / math.sqrt(xn[3] ** 2 + xn[4] ** 2 + xn[5] ** 2 + xn[6] ** 2)
    xn[3] *= s
    xn[4] *= s
    xn[5] *= s
    xn[6] *= s
    return xn


def step_rk4(state: HeliState, inp: ControlInput, wind: Wind, dt: float, params: HeliParams,
             force_fn=None) -> HeliState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    xn = np.array(rk4_vector(state.to_vector(), inp.as_tuple(), wind.as_tuple(), dt, params, force_fn))
    if not np.all(np.isfinite(xn)):
        raise DivergenceError(f"non-finite state after RK4 step: {xn}")
    return HeliState.from_vector(xn)


def simulate(x0, controls, dt, params: HeliParams, wind=(0.0, 0.0, 0.0), force_fn=None,
             t0=0.0) -> np.ndarray:
    """Integrate with one control tuple per step; returns states, shape ``(n + 1, 15)``."""
    controls = np.asarray(controls, dtype=float).reshape(-1, 4)
    out = np.empty((controls.shape[0] + 1, STATE_SIZE))
    x = np.array(x0, dtype=float)
    out[0] = x
    for k, c in enumerate(controls.tolist()):
        x = rk4_vector(x, c, wind, dt, params, force_fn)
        if not all(map(math.isfinite, x)):
            raise DivergenceError(f"trajectory diverged at t = {t0 + (k + 1) * dt:.4f} s",
                                  time=t0 + (k + 1) * dt)
        out[k + 1] = x
    return out
