"""Identification experiments on the simulated helicopter and on synthetic LPV data.

The helicopter experiment flies an open-loop airspeed sweep built from a
table of trim points, superimposes an excitation on the pitch cyclic, and
records pitch attitude, vertical velocity and forward velocity as deviations
from the trim point of the commanded speed. The scheduling parameter is the
total airspeed. One single-output LPV model is identified per channel.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import ident
from ._io import atomic_path, write_json
from .errors import StructuralError
from .heli.dynamics import STATE_SIZE, quat_to_euler, simulate
from .heli.params import HeliParams, default_params
from .heli.signals import input_signal
from .heli.trim import trim_hover, trim_table
from .ident import FitReport, IdentConfig
from .lpv import (LpvIoModel, TimeSeries, frozen_spectral_radius, rebase_basis, simulate_free_run,
                  write_columns_csv)

log = logging.getLogger(__name__)

CHANNELS = ("pitch", "w", "u")
TRAJECTORY_HEADER = ["t", "u", "v", "w", "p_b", "q_b", "r_b", "phi", "theta", "psi", "a1", "b1",
                     "dlat", "dlon", "dcol", "dped", "airspeed"]
DEFAULT_PERIOD = 0.11408
DEFAULT_P_RANGE = (0.0, 13.0)


def helicopter_ident_config(**changes) -> IdentConfig:
    """Default structure: three output lags, input lag 2, quadratic in airspeed."""
    base = dict(na=3, input_lags=(2,), n_basis=3, offset=6.5, half_range=6.5,
                forgetting=0.995, alpha=1e4)
    base.update(changes)
    return IdentConfig(**base)


@dataclass(frozen=True)
class ExperimentConfig:
    period: float = DEFAULT_PERIOD
    duration: float = 240.0
    channel: str = "pitch"
    profile: str = "sweep"              # "sweep" or "hover"
    v_max: float = 12.3
    sweep_period: float = 160.0
    excitation: dict = field(default_factory=lambda: {"kind": "prbs", "amplitude": 0.08, "hold": 2})
    noise_sigma: float = 0.0
    ident: IdentConfig = field(default_factory=helicopter_ident_config)
    p_range: tuple = DEFAULT_P_RANGE
    train_fraction: float = 0.7
    validation: str = "holdout"         # "holdout" or "same"
    dt_max: float = 0.002
    seed: int = 0
    params_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "p_range", tuple(float(x) for x in self.p_range))
        if not self.period > 0:
            raise ValueError("sample period must be positive")
        if self.duration < 100 * self.period:
            raise ValueError("duration must cover at least 100 sample periods")
        if not self.p_range[0] < self.p_range[1]:
            raise ValueError("p range lower bound must be below upper bound")
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        if self.profile not in ("sweep", "hover"):
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.validation not in ("holdout", "same"):
            raise ValueError(f"unknown validation protocol {self.validation!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.period))

    @property
    def substeps(self) -> int:
        return max(1, math.ceil(self.period / self.dt_max - 1e-9))

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ident"] = self.ident.to_dict()
        d["p_range"] = list(self.p_range)
        return d

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "ExperimentConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
        if "ident" in d:
            d["ident"] = helicopter_ident_config(**{k: (tuple(v) if k == "input_lags" else v)
                                                    for k, v in d["ident"].items()})
        if d.get("params_path") and base_dir is not None:
            p = Path(d["params_path"])
            d["params_path"] = str(p if p.is_absolute() else Path(base_dir) / p)
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)

    def load_params(self) -> HeliParams:
        return HeliParams.load(self.params_path) if self.params_path else default_params()


@dataclass
class Flight:
    """Decimated flight record of one experiment."""

    t: np.ndarray
    states: np.ndarray          # (n, 15) at the sample instants
    controls: np.ndarray        # (n, 4) held over [t_k, t_k + T)
    reference: np.ndarray       # (n, 15) trim state at the commanded speed
    reference_theta: np.ndarray  # (n,) trim pitch attitude at the commanded speed
    excitation: np.ndarray      # (n,) pitch-cyclic perturbation actually applied
    airspeed: np.ndarray        # (n,) clamped scheduling signal
    clamp_count: int

    def euler(self) -> np.ndarray:
        return np.array([quat_to_euler(q) for q in self.states[:, 3:7]])

    def trajectory_columns(self):
        e = self.euler()
        s = self.states
        return [self.t, s[:, 7], s[:, 8], s[:, 9], s[:, 10], s[:, 11], s[:, 12],
                e[:, 0], e[:, 1], e[:, 2], s[:, 13], s[:, 14],
                self.controls[:, 0], self.controls[:, 1], self.controls[:, 2], self.controls[:, 3],
                self.airspeed]

    def write_trajectory(self, path) -> None:
        with atomic_path(path) as tmp:
            write_columns_csv(tmp, TRAJECTORY_HEADER, self.trajectory_columns())


def speed_profile(cfg: ExperimentConfig, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if cfg.profile == "hover":
        return np.zeros_like(t)
    return 0.5 * cfg.v_max * (1.0 - np.cos(2 * np.pi * t / cfg.sweep_period))


def fly(cfg: ExperimentConfig, params: HeliParams | None = None) -> Flight:
    """Simulate the open-loop experiment and decimate to the sample period."""
    params = params or cfg.load_params()
    n = cfg.n_samples
    t = cfg.period * np.arange(n)
    hover_state, _ = trim_hover(params)

    v_cmd = speed_profile(cfg, t)
    grid = np.linspace(0.0, max(cfg.v_max, 1e-9), 27) if cfg.profile == "sweep" else np.zeros(1)
    speeds, trim_states, trim_ctrls = trim_table(params, grid)
    trim_theta = np.array([quat_to_euler(x[3:7])[1] for x in trim_states])
    if speeds.size > 1:
        ff = np.column_stack([np.interp(v_cmd, speeds, trim_ctrls[:, i]) for i in range(4)])
        ref = np.column_stack([np.interp(v_cmd, speeds, trim_states[:, i]) for i in range(STATE_SIZE)])
        ref_theta = np.interp(v_cmd, speeds, trim_theta)
    else:
        ff = np.repeat(trim_ctrls, n, axis=0)
        ref = np.repeat(trim_states, n, axis=0)
        ref_theta = np.repeat(trim_theta, n)

    exc_opts = dict(cfg.excitation)
    kind = exc_opts.pop("kind", "prbs")
    amplitude = exc_opts.pop("amplitude", 0.0)
    if amplitude > 0:
        exc = input_signal(kind, cfg.duration, cfg.period, amplitude, seed=cfg.seed, **exc_opts)[:n]
    else:
        exc = np.zeros(n)
    controls = ff.copy()
    controls[:, 1] += exc
    np.clip(controls, -1.0, 1.0, out=controls)
    applied = controls[:, 1] - ff[:, 1]

    m = cfg.substeps
    dt = cfg.period / m
    states = np.empty((n, STATE_SIZE))
    x = hover_state.to_vector()
    for k in range(n):
        states[k] = x
        x = simulate(x, np.repeat(controls[k][None, :], m, axis=0), dt, params, t0=t[k])[-1]

    raw = np.linalg.norm(states[:, 7:10], axis=1)
    lo, hi = cfg.p_range
    clamp_count = int(np.sum((raw < lo) | (raw > hi)))
    if clamp_count:
        log.warning("airspeed left [%g, %g] m/s at %d samples; clamped", lo, hi, clamp_count)
    airspeed = np.clip(raw, lo, hi)
    return Flight(t, states, controls, ref, ref_theta, applied, airspeed, clamp_count)


def channel_output(flight: Flight, channel: str) -> np.ndarray:
    """Channel signal as a deviation from the trim point of the commanded speed."""
    if channel == "pitch":
        theta = np.array([quat_to_euler(q)[1] for q in flight.states[:, 3:7]])
        return theta - flight.reference_theta
    col = {"u": 7, "w": 9}[channel]
    return flight.states[:, col] - flight.reference[:, col]


def datasets_from_flight(flight: Flight, cfg: ExperimentConfig) -> dict:
    rng = np.random.default_rng([cfg.seed, 1])
    out = {}
    for ch in CHANNELS:
        y = channel_output(flight, ch)
        sigma = cfg.noise_sigma.get(ch, 0.0) if isinstance(cfg.noise_sigma, dict) else cfg.noise_sigma
        noise = rng.standard_normal(y.size)
        if sigma > 0:
            y = y + sigma * noise
        out[ch] = TimeSeries(flight.t, flight.excitation, y, flight.airspeed, cfg.period)
    return out


def generate_dataset(cfg: ExperimentConfig, params: HeliParams | None = None) -> dict:
    """One :class:`TimeSeries` per channel (``pitch``, ``w``, ``u``) from a single flight."""
    return datasets_from_flight(fly(cfg, params), cfg)


def run_identification(series: TimeSeries, config: IdentConfig):
    return ident.identify(series, config)


@dataclass
class Validation:
    t: np.ndarray
    y_system: np.ndarray
    y_model: np.ndarray
    mode: str
    rmse: float
    fit_percent: float

    def write_csv(self, path) -> None:
        with atomic_path(path) as tmp:
            write_columns_csv(tmp, ["t", "y_system", "y_model"], [self.t, self.y_system, self.y_model])


def validate(model: LpvIoModel, series: TimeSeries, mode: str = "one_step") -> Validation:
    """Compare the model against recorded output from ``k = warmup`` onwards."""
    k0 = model.warmup
    if len(series) < k0 + 2:
        raise StructuralError(f"series of {len(series)} samples too short for model warmup {k0}")
    if mode == "one_step":
        cfg = IdentConfig(model.na, model.input_lags, model.basis.n, model.basis.offset,
                          model.basis.half_range)
        y_model = ident.regressor_matrix(series, cfg) @ model.theta
    elif mode == "free_run":
        y_model = simulate_free_run(model, series.u, series.p, series.y[: model.na])[k0:]
    else:
        raise ValueError(f"unknown validation mode {mode!r}")
    y_sys = series.y[k0:]
    rmse, fit = ident.fit_metrics(y_sys, y_model)
    return Validation(series.t[k0:], y_sys, y_model, mode, rmse, fit)


def _nan_to_none(x):
    return None if isinstance(x, float) and math.isnan(x) else x


def split_series(series: TimeSeries, cfg: ExperimentConfig):
    if cfg.validation == "same":
        return series, series
    cut = int(round(cfg.train_fraction * len(series)))
    return series.slice(0, cut), series.slice(cut, None)


def identify_and_validate(series: TimeSeries, cfg: ExperimentConfig, mode: str = "one_step"):
    train, test = split_series(series, cfg)
    fit, model = run_identification(train, cfg.ident)
    return fit, model, validate(model, test, mode)


RUN_FILES = ("dataset.csv", "theta_trace.csv", "model.json", "validation.csv", "report.json")


def write_run(out_dir, series: TimeSeries, fit: FitReport, model: LpvIoModel, val: Validation,
              config_echo: dict, extra: dict | None = None, include_trajectory: bool = False) -> list:
    """Write the five run files; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with atomic_path(out / "dataset.csv") as tmp:
        series.write_csv(tmp)
    with atomic_path(out / "theta_trace.csv") as tmp:
        ident.write_theta_trace(tmp, fit)
    write_json(out / "model.json", model.to_dict())
    val.write_csv(out / "validation.csv")
    identity = rebase_basis(model, 0.0, 1.0)
    report = {
        "config": config_echo,
        "identification": {
            "samples": len(fit.y_hat),
            "rmse": fit.rmse,
            "fit_percent": _nan_to_none(fit.fit_percent),
            "theta": model.theta.tolist(),
            "theta_identity_basis": identity.theta.tolist(),
            "innovations": fit.innovations.tolist(),
        },
        "validation": {
            "mode": val.mode,
            "samples": int(val.t.size),
            "rmse": val.rmse,
            "fit_percent": _nan_to_none(val.fit_percent),
        },
    }
    if include_trajectory:
        report["identification"]["theta_trajectory"] = fit.theta_trajectory.tolist()
    if extra:
        report.update(extra)
    write_json(out / "report.json", report)
    return [out / name for name in RUN_FILES]


def run_experiment(cfg: ExperimentConfig, out_dir=None, params: HeliParams | None = None,
                   mode: str = "one_step", datasets: dict | None = None):
    """Generate data (unless given), identify the configured channel, validate, optionally write files.

    Returns ``(series, fit, model, validation, clamp_count)``.
    """
    clamp = None
    if datasets is None:
        flight = fly(cfg, params)
        datasets = datasets_from_flight(flight, cfg)
        clamp = flight.clamp_count
    series = datasets[cfg.channel]
    fit, model, val = identify_and_validate(series, cfg, mode)
    if out_dir is not None:
        extra = {
            "seed": cfg.seed,
            "channel": cfg.channel,
            "validation_data": cfg.validation,
            "train_fraction": cfg.train_fraction,
            "clamp_count": clamp,
        }
        write_run(out_dir, series, fit, model, val, cfg.to_dict(), extra)
    return series, fit, model, val, clamp


# -- synthetic recovery --------------------------------------------------------

DEFAULT_TRUE_THETA = (
    # a_1(p), a_2(p), a_3(p) in the basis [1, pt, pt^2], pt = (p - 6.5) / 6.5
    -1.2, 0.2, 0.1,
    0.5, -0.1, 0.05,
    -0.08, 0.02, -0.01,
    # b_2(p)
    1.0, 0.3, -0.2,
)


@dataclass(frozen=True)
class SyntheticConfig:
    theta_true: tuple = DEFAULT_TRUE_THETA
    c0: float = 6.5
    c1: float = 6.5
    trajectory: str = "mapped"          # "mapped": c0 + c1 sin(pi k / 3); "raw": sin(pi k / 3)
    input_kind: str = "white"
    input_amplitude: float = 1.0
    n_samples: int = 2000
    noise_sigma: float = 0.0
    seed: int = 0
    ident: IdentConfig = field(default_factory=lambda: helicopter_ident_config(forgetting=1.0, alpha=1e6))

    def __post_init__(self):
        object.__setattr__(self, "theta_true", tuple(float(x) for x in self.theta_true))
        if self.trajectory not in ("mapped", "raw"):
            raise ValueError(f"unknown trajectory mode {self.trajectory!r}")
        lo, hi = self.p_interval
        grid = np.linspace(lo, hi, 50)
        model = self.true_model()
        rho = max(frozen_spectral_radius(model, p) for p in grid)
        if rho >= 1.0:
            raise ValueError(f"true model is not frozen-stable on [{lo}, {hi}] (spectral radius {rho:.4f})")

    @property
    def p_interval(self):
        if self.trajectory == "raw":
            return -1.0, 1.0
        return self.c0 - abs(self.c1), self.c0 + abs(self.c1)

    def basis_config(self) -> IdentConfig:
        if self.trajectory == "raw":
            return replace(self.ident, offset=0.0, half_range=1.0)
        return self.ident

    def true_model(self) -> LpvIoModel:
        c = self.basis_config()
        return LpvIoModel.from_theta(self.theta_true, c.na, c.input_lags, c.basis)

    def trajectory_values(self) -> np.ndarray:
        s = np.sin(np.pi * np.arange(self.n_samples) / 3.0)
        return s if self.trajectory == "raw" else self.c0 + self.c1 * s

    def to_dict(self) -> dict:
        d = asdict(self)
        d["theta_true"] = list(self.theta_true)
        d["ident"] = self.ident.to_dict()
        return d


def synthetic_series(cfg: SyntheticConfig) -> tuple:
    """``(noisy series, noise-free output)`` generated by the true model."""
    model = cfg.true_model()
    p = cfg.trajectory_values()
    u = input_signal(cfg.input_kind, cfg.n_samples, 1.0, cfg.input_amplitude, seed=cfg.seed)
    y_clean = simulate_free_run(model, u, p, np.zeros(model.na))
    y = y_clean.copy()
    if cfg.noise_sigma > 0:
        y = y + cfg.noise_sigma * np.random.default_rng([cfg.seed, 2]).standard_normal(y.size)
    return TimeSeries.from_arrays(u, y, p, 1.0), y_clean


def synthetic_experiment(cfg: SyntheticConfig) -> dict:
    """Identify the true model back from its own data and report the recovery error."""
    series, _ = synthetic_series(cfg)
    icfg = cfg.basis_config()
    fit, model = ident.identify(series, icfg)
    sigma_min, rank = ident.excitation_rank(series, icfg)
    err = model.theta - np.array(cfg.theta_true)
    identifiable = rank == icfg.n_params
    if not identifiable:
        log.warning("regressor rank %d < %d: constants are not uniquely identifiable", rank, icfg.n_params)
    return {
        "config": cfg.to_dict(),
        "theta_true": list(cfg.theta_true),
        "theta_hat": model.theta.tolist(),
        "errors": err.tolist(),
        "max_abs_error": float(np.max(np.abs(err))),
        "sigma_min": sigma_min,
        "rank": rank,
        "n_params": icfg.n_params,
        "identifiable": identifiable,
        "rms_output": float(np.sqrt(np.mean(series.y ** 2))),
        "fit_percent": _nan_to_none(fit.fit_percent),
        "rmse": fit.rmse,
        "_fit": fit,
        "_model": model,
        "_series": series,
    }


def public_report(report: dict) -> dict:
    return {k: v for k, v in report.items() if not k.startswith("_")}
