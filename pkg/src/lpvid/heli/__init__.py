"""Nonlinear miniature-helicopter simulator used as the identification truth system."""

from .dynamics import (ControlInput, ForceMoments, HeliState, Wind, euler_kinematics, flap_derivs,
                       forces_moments, quat_kinematics, rigid_body_derivs, step_rk4)
from .params import HeliParams, default_params
from .signals import input_signal
from .trim import trim_forward, trim_hover
