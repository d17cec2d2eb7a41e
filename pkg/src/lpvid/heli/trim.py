"""Steady-flight trim by damped Newton iteration."""

from __future__ import annotations

import numpy as np

from ..errors import TrimError
from .dynamics import ControlInput, HeliState, euler_to_quat, quat_to_dcm, state_derivative
from .params import HeliParams

# unknowns: dcol, dped, dlat, dlon, phi, theta, a1, b1
_RESIDUAL = slice(7, 15)


def _trim_state(z, speed) -> np.ndarray:
    dcol, dped, dlat, dlon, phi, theta, a1, b1 = z
    q = euler_to_quat(phi, theta, 0.0)
    vel = quat_to_dcm(q).T @ np.array([speed, 0.0, 0.0])
    x = np.zeros(15)
    x[3:7] = q
    x[7:10] = vel
    x[13:15] = a1, b1
    return x


def _residual(z, speed, params):
    x = _trim_state(z, speed)
    ctrl = (z[2], z[3], z[0], z[1])
    return np.asarray(state_derivative(x, ctrl, (0.0, 0.0, 0.0), params))[_RESIDUAL]


def trim_forward(params: HeliParams, speed: float = 0.0, tol: float = 1e-11, max_iter: int = 100,
                 z0=None):
    """Trim in straight and level flight at ``speed`` (m/s, heading north).

    Returns ``(HeliState, ControlInput)``. Converges when the norm of the
    acceleration/flap-rate residual drops below ``tol``.
    """
    z = np.array([params.dcol_trim, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]) if z0 is None else np.array(z0, float)
    r = _residual(z, speed, params)
    for _ in range(max_iter):
        if np.linalg.norm(r) < tol:
            break
        J = np.empty((8, 8))
        for i in range(8):
            h = 1e-7 * max(1.0, abs(z[i]))
            zp, zm = z.copy(), z.copy()
            zp[i] += h
            zm[i] -= h
            J[:, i] = (_residual(zp, speed, params) - _residual(zm, speed, params)) / (2 * h)
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        t = 1.0
        while t > 1e-6:
            zn = z + t * step
            rn = _residual(zn, speed, params)
            if rn @ rn < r @ r:
                break
            t *= 0.5
        else:
            raise TrimError(f"trim line search stalled at speed {speed} m/s", residual=r)
        z, r = zn, rn
    else:
        if np.linalg.norm(r) >= tol:
            raise TrimError(f"trim did not converge in {max_iter} iterations at speed {speed} m/s",
                            residual=r)
    dcol, dped, dlat, dlon = z[:4]
    if np.any(np.abs(z[:4]) > 1.0):
        raise TrimError(f"trim controls out of range at speed {speed} m/s: {z[:4]}", residual=r)
    x = _trim_state(z, speed)
    return HeliState.from_vector(x), ControlInput(dlat=dlat, dlon=dlon, dcol=dcol, dped=dped)


def trim_hover(params: HeliParams, **kw):
    return trim_forward(params, 0.0, **kw)


def trim_table(params: HeliParams, speeds):
    """Trim at each speed, warm-starting from the previous point.

    Returns ``(speeds, states, controls)`` where ``states`` is ``(n, 15)`` and
    ``controls`` is ``(n, 4)`` ordered ``dlat, dlon, dcol, dped``.
    """
    speeds = np.asarray(speeds, dtype=float)
    states = np.empty((speeds.size, 15))
    controls = np.empty((speeds.size, 4))
    z0 = None
    for i, V in enumerate(speeds):
        st, c = trim_forward(params, V, z0=z0)
        states[i] = st.to_vector()
        controls[i] = c.as_tuple()
        phi, theta, _ = st.euler
        z0 = [c.dcol, c.dped, c.dlat, c.dlon, phi, theta, *st.flap]
    return speeds, states, controls
