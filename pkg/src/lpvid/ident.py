"""Recursive least-squares identification of LPV-ARX models.

Parameter vector layout (fixed, used by every routine and file format here)::

    theta = [a_1^1 .. a_1^N, a_2^1 .. a_2^N, ..., a_na^N,
             b_j1^1 .. b_j1^N, ..., b_jm^N]        (input lags ascending)

and the regressor is ``phi(k) = [-y(k-i) f_l(p(k)) ..., u(k-j) f_l(p(k)) ...]``
in the same order, so that ``yhat(k) = phi(k) @ theta``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericError, StructuralError
from .lpv import LpvIoModel, PolyBasis, TimeSeries, write_columns_csv


@dataclass(frozen=True)
class IdentConfig:
    na: int = 3
    input_lags: tuple = (2,)
    n_basis: int = 3
    offset: float = 0.0
    half_range: float = 1.0
    forgetting: float = 1.0
    alpha: float = 1e6
    theta0: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "input_lags", tuple(int(j) for j in self.input_lags))
        if not 0.0 < self.forgetting <= 1.0:
            raise ValueError(f"forgetting factor must lie in (0, 1], got {self.forgetting}")
        if not self.alpha > 0:
            raise ValueError(f"initial covariance scale must be positive, got {self.alpha}")
        # validates lags, orders and basis
        LpvIoModel.zeros(self.na, self.input_lags, self.basis)
        if self.theta0 is not None:
            th = tuple(float(x) for x in np.ravel(self.theta0))
            if len(th) != self.n_params:
                raise StructuralError(f"theta0 has {len(th)} entries, expected {self.n_params}")
            object.__setattr__(self, "theta0", th)

    @property
    def basis(self) -> PolyBasis:
        return PolyBasis(self.n_basis, self.offset, self.half_range)

    @property
    def n_params(self) -> int:
        return (self.na + len(self.input_lags)) * self.n_basis

    @property
    def warmup(self) -> int:
        return max(self.na, max(self.input_lags, default=0))

    def initial_theta(self) -> np.ndarray:
        if self.theta0 is None:
            return np.zeros(self.n_params)
        return np.array(self.theta0)

    def to_dict(self) -> dict:
        return {
            "na": self.na,
            "input_lags": list(self.input_lags),
            "n_basis": self.n_basis,
            "offset": self.offset,
            "half_range": self.half_range,
            "forgetting": self.forgetting,
            "alpha": self.alpha,
            "theta0": None if self.theta0 is None else list(self.theta0),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IdentConfig":
        d = dict(d)
        if "input_lags" in d:
            d["input_lags"] = tuple(d["input_lags"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class RlsState:
    theta: np.ndarray
    P: np.ndarray
    samples_seen: int = 0
    last_innovation: float = 0.0


@dataclass
class FitReport:
    rmse: float
    fit_percent: float
    innovations: np.ndarray = field(default_factory=lambda: np.zeros(0))
    theta_trajectory: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    y_hat: np.ndarray = field(default_factory=lambda: np.zeros(0))
    k0: int = 0


def build_regressor(y_hist, u_hist, p_k: float, config: IdentConfig) -> np.ndarray:
    """Regressor ``phi(k)``; histories are ordered as in :func:`lpvid.lpv.predict_one_step`."""
    y_hist = np.asarray(y_hist, dtype=float)
    u_hist = np.asarray(u_hist, dtype=float)
    if y_hist.size < config.na:
        raise StructuralError(f"need {config.na} past outputs, got {y_hist.size}")
    lags = list(config.input_lags)
    if lags and u_hist.size < max(lags) + 1:
        raise StructuralError(f"need inputs back to lag {max(lags)}, got {u_hist.size} values")
    f = config.basis.evaluate(p_k)
    parts = [np.outer(-y_hist[: config.na], f).ravel(), np.outer(u_hist[lags], f).ravel()]
    return np.concatenate(parts)


def regressor_matrix(series: TimeSeries, config: IdentConfig) -> np.ndarray:
    """Stack ``phi(k)`` for ``k = warmup .. len-1`` (one row each)."""
    n = len(series)
    k0 = config.warmup
    if n <= k0:
        return np.zeros((0, config.n_params))
    F = config.basis.evaluate(series.p[k0:])                       # (m, N)
    ks = np.arange(k0, n)
    cols = []
    for i in range(1, config.na + 1):
        cols.append(-series.y[ks - i][:, None] * F)
    for j in config.input_lags:
        cols.append(series.u[ks - j][:, None] * F)
    return np.hstack(cols) if cols else np.zeros((ks.size, 0))


def rls_init(config: IdentConfig) -> RlsState:
    return RlsState(config.initial_theta(), config.alpha * np.eye(config.n_params))


def rls_step(state: RlsState, phi, y: float, forgetting: float = 1.0):
    """Exponentially weighted RLS update; returns ``(new_state, innovation)``."""
    phi = np.asarray(phi, dtype=float).ravel()
    if phi.shape != state.theta.shape:
        raise StructuralError(f"regressor has {phi.size} entries, state has {state.theta.size}")
    if not (np.all(np.isfinite(phi)) and np.isfinite(y)):
        raise NumericError("non-finite regressor or measurement")
    P = state.P
    Pphi = P @ phi
    e = float(y - phi @ state.theta)
    K = Pphi / (forgetting + phi @ Pphi)
    theta = state.theta + K * e
    P = (P - np.outer(K, Pphi)) / forgetting
    P = 0.5 * (P + P.T)
    return RlsState(theta, P, state.samples_seen + 1, e), e


def identify(series: TimeSeries, config: IdentConfig):
    """Run RLS over the whole series.

    Returns ``(FitReport, LpvIoModel)``. The report's ``y_hat`` holds the
    prediction made before each update (index 0 corresponds to ``k = warmup``).
    """
    k0 = config.warmup
    if len(series) <= k0 + config.n_params:
        raise StructuralError(
            f"series of {len(series)} samples too short for warmup {k0} and {config.n_params} parameters")
    Phi = regressor_matrix(series, config)
    y = series.y[k0:]
    state = rls_init(config)
    m = y.size
    traj = np.empty((m, config.n_params))
    innov = np.empty(m)
    y_hat = np.empty(m)
    for r in range(m):
        y_hat[r] = Phi[r] @ state.theta
        state, innov[r] = rls_step(state, Phi[r], y[r], config.forgetting)
        traj[r] = state.theta
    rmse, fit = fit_metrics(y, y_hat)
    model = LpvIoModel.from_theta(state.theta, config.na, config.input_lags, config.basis)
    return FitReport(rmse, fit, innov, traj, y_hat, k0), model


def batch_ls(series: TimeSeries, config: IdentConfig, n_samples: int | None = None) -> np.ndarray:
    """Regularized least squares over the first ``n_samples`` regressor rows.

    Minimizes ``sum (y - phi @ theta)^2 + ||theta - theta0||^2 / alpha``.
    """
    Phi = regressor_matrix(series, config)
    y = series.y[config.warmup:]
    if n_samples is not None:
        Phi, y = Phi[:n_samples], y[:n_samples]
    return regularized_lstsq(Phi, y, config.alpha, config.initial_theta())


def regularized_lstsq(Phi, y, alpha, theta0) -> np.ndarray:
    Phi = np.asarray(Phi, dtype=float).reshape(-1, np.size(theta0))
    y = np.asarray(y, dtype=float).ravel()
    theta0 = np.asarray(theta0, dtype=float)
    if not np.isfinite(alpha):
        # unregularized
        if Phi.shape[0] == 0 or np.linalg.matrix_rank(Phi) < Phi.shape[1]:
            raise NumericError("rank-deficient data without regularization")
        return np.linalg.lstsq(Phi, y, rcond=None)[0]
    w = 1.0 / np.sqrt(alpha)
    A = np.vstack([Phi, w * np.eye(theta0.size)])
    rhs = np.concatenate([y, w * theta0])
    return np.linalg.lstsq(A, rhs, rcond=None)[0]


def fit_metrics(y, y_hat):
    """Return ``(rmse, fit_percent)``; fit is NaN when ``y`` is constant."""
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise StructuralError("y and y_hat lengths differ")
    if y.size < 2:
        raise StructuralError("need at least two samples")
    err = np.linalg.norm(y - y_hat)
    rmse = float(np.sqrt(np.mean((y - y_hat) ** 2)))
    denom = np.linalg.norm(y - y.mean())
    fit = float("nan") if denom == 0 else float(100.0 * (1.0 - err / denom))
    return rmse, fit


def excitation_rank(series: TimeSeries, config: IdentConfig):
    """``(sigma_min, rank)`` of the stacked regressor matrix, rank threshold ``1e-10 * sigma_max``."""
    Phi = regressor_matrix(series, config)
    if Phi.size == 0:
        return 0.0, 0
    s = np.linalg.svd(Phi, compute_uv=False)
    full = np.zeros(config.n_params)
    full[: s.size] = s
    if full[0] == 0:
        return 0.0, 0
    rank = int(np.sum(full > 1e-10 * full[0]))
    return float(full[-1]), rank


def write_theta_trace(path, report: FitReport) -> None:
    n = report.theta_trajectory.shape[1]
    k = np.arange(report.k0, report.k0 + report.theta_trajectory.shape[0])
    header = ["k"] + [f"theta_{i + 1}" for i in range(n)]
    write_columns_csv(path, header, [k] + [report.theta_trajectory[:, i] for i in range(n)])


def run_report(report: FitReport, model: LpvIoModel, config: IdentConfig,
               include_trajectory: bool = False) -> dict:
    doc = {
        "config": config.to_dict(),
        "theta": model.theta.tolist(),
        "rmse": report.rmse,
        "fit_percent": None if np.isnan(report.fit_percent) else report.fit_percent,
        "innovations": report.innovations.tolist(),
    }
    if include_trajectory:
        doc["theta_trajectory"] = report.theta_trajectory.tolist()
    return doc


def write_run_report(path, report: FitReport, model: LpvIoModel, config: IdentConfig,
                     include_trajectory: bool = False) -> None:
    Path(path).write_text(json.dumps(run_report(report, model, config, include_trajectory), indent=2) + "\n")
