"""Vehicle parameters for the miniature helicopter model (SI units throughout)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path


@dataclass(frozen=True)
class HeliParams:
    # rigid body
    mass: float = 10.0
    Ixx: float = 0.30
    Iyy: float = 0.60
    Izz: float = 0.50
    g: float = 9.81
    # rotor and flapping
    omega: float = 167.0        # rad/s, governed
    radius: float = 0.78
    tau_e: float = 0.10         # s, rotor + stabilizer bar
    A_lon: float = 0.15         # rad per unit stick
    B_lat: float = 0.15
    da1_dmu: float = 0.25
    da1_dmuz: float = 0.0
    db1_dmuv: float = 0.25
    # main rotor thrust and hub
    K_col: float = 1.0          # fractional thrust change per unit collective
    dcol_trim: float = 0.2
    K_beta: float = 60.0        # N m / rad
    h_hub: float = 0.25         # hub above c.g.
    # fuselage flat-plate areas
    S_x: float = 0.10
    S_y: float = 0.25
    S_z: float = 0.30
    rho: float = 1.225
    # tail rotor
    K_tr: float = 30.0          # N per unit pedal
    K_vr: float = 1.5           # N per m/s local side velocity
    l_tr: float = 1.0
    h_tr: float = 0.10
    # vertical fin
    K_vf: float = 1.0
    l_vf: float = 0.95
    h_vf: float = 0.10
    # horizontal tail
    K_ht: float = 2.0
    l_ht: float = 0.80
    # engine torque Q_e = K_Q T^1.5
    K_Q: float = 0.009

    def __post_init__(self):
        for name in ("mass", "Ixx", "Iyy", "Izz", "tau_e", "omega", "radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def tip_speed(self) -> float:
        return self.omega * self.radius

    def replace(self, **changes) -> "HeliParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HeliParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown helicopter parameters: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "HeliParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_params() -> HeliParams:
    """Parameters shipped with the package (``data/heli_default.json``)."""
    text = resources.files("lpvid").joinpath("data/heli_default.json").read_text()
    return HeliParams.from_dict(json.loads(text))
