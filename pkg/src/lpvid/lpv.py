"""LPV input/output (LPV-ARX) model class.

The model relates a scalar input ``u`` and output ``y`` through

    A(d, p) y(k) = B(d, p) u(k)
    A(d, p) = 1 + a_1(p) d + ... + a_na(p) d^na
    B(d, p) = sum_{j in J} b_j(p) d^j

where ``d`` is the backward shift and every coefficient is a linear
combination of polynomial basis functions of the scheduling parameter,
``a_i(p) = sum_l a_i^l f_l(p)`` with ``f_l(p) = ((p - offset) / half_range)^(l-1)``.

All coefficient functions are evaluated at the current instant ``p(k)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import StructuralError


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PolyBasis:
    """Polynomial basis ``f_l(p) = ptilde^(l-1)`` with ``ptilde = (p - offset) / half_range``."""

    n: int
    offset: float = 0.0
    half_range: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise StructuralError(f"basis count must be a positive integer, got {self.n}")
        if self.half_range == 0 or not math.isfinite(self.half_range):
            raise ValueError("half_range must be finite and nonzero")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "half_range", float(self.half_range))

    def scale(self, p):
        return (np.asarray(p, dtype=float) - self.offset) / self.half_range

    def evaluate(self, p) -> np.ndarray:
        """Basis values at ``p``; shape ``(n,)`` for scalar p, ``(len(p), n)`` otherwise."""
        pt = self.scale(p)
        return pt[..., None] ** np.arange(self.n)

    def to_dict(self) -> dict:
        return {"n": self.n, "offset": self.offset, "half_range": self.half_range}


IDENTITY_SCALING = (0.0, 1.0)


@dataclass(frozen=True)
class CoefficientFunction:
    """Constants ``c^1..c^N`` of one coefficient function ``c(p) = sum_l c^l f_l(p)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(np.ravel(self.coeffs)))


def eval_coeff(cf: CoefficientFunction, basis: PolyBasis, p: float) -> float:
    coeffs = cf.coeffs if isinstance(cf, CoefficientFunction) else np.asarray(cf, dtype=float)
    if coeffs.shape != (basis.n,):
        raise StructuralError(
            f"coefficient function has {coeffs.size} constants, basis has {basis.n}"
        )
    return float(coeffs @ basis.evaluate(p))


@dataclass(frozen=True, eq=False)
class LpvIoModel:
    """LPV-ARX model with monic ``A``.

    Parameters
    ----------
    na : int
        Output lag order; output lags are ``1..na``.
    input_lags : sequence of int
        Strictly increasing nonnegative input lags ``J``.
    a : array, shape (na, N)
        Row ``i-1`` holds the constants of ``a_i(p)``.
    b : array, shape (len(J), N)
        Row ``m`` holds the constants of ``b_{J[m]}(p)``.
    basis : PolyBasis
    """

    na: int
    input_lags: tuple
    a: np.ndarray
    b: np.ndarray
    basis: PolyBasis = field(default_factory=lambda: PolyBasis(1))

    def __post_init__(self):
        lags = tuple(int(j) for j in self.input_lags)
        if any(j < 0 for j in lags) or any(j2 <= j1 for j1, j2 in zip(lags, lags[1:])):
            raise StructuralError(f"input lags must be strictly increasing and >= 0: {lags}")
        if int(self.na) != self.na or self.na < 0:
            raise StructuralError(f"na must be a nonnegative integer, got {self.na}")
        if self.na == 0 and not lags:
            raise StructuralError("model with na = 0 and no input lags has no terms")
        n = self.basis.n
        a = np.asarray(self.a, dtype=float).reshape(-1, n) if self.na else np.zeros((0, n))
        b = np.asarray(self.b, dtype=float).reshape(-1, n) if lags else np.zeros((0, n))
        if a.shape != (self.na, n):
            raise StructuralError(f"a must have shape {(self.na, n)}, got {a.shape}")
        if b.shape != (len(lags), n):
            raise StructuralError(f"b must have shape {(len(lags), n)}, got {b.shape}")
        object.__setattr__(self, "na", int(self.na))
        object.__setattr__(self, "input_lags", lags)
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", _frozen(b))

    @classmethod
    def zeros(cls, na, input_lags, basis: PolyBasis) -> "LpvIoModel":
        return cls(na, tuple(input_lags), np.zeros((na, basis.n)),
                   np.zeros((len(tuple(input_lags)), basis.n)), basis)

    @classmethod
    def from_theta(cls, theta, na, input_lags, basis: PolyBasis) -> "LpvIoModel":
        """Unstack ``[a_1^1..a_1^N, ..., a_na^N, b_j^1..b_j^N (ascending j)]``."""
        theta = np.asarray(theta, dtype=float).ravel()
        lags = tuple(input_lags)
        n = basis.n
        expected = (na + len(lags)) * n
        if theta.size != expected:
            raise StructuralError(f"theta has {theta.size} entries, structure needs {expected}")
        return cls(na, lags, theta[: na * n].reshape(na, n), theta[na * n:].reshape(len(lags), n), basis)

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.a.ravel(), self.b.ravel()])

    @property
    def n_functions(self) -> int:
        return self.na + len(self.input_lags)

    @property
    def max_input_lag(self) -> int:
        return max(self.input_lags) if self.input_lags else 0

    @property
    def warmup(self) -> int:
        return max(self.na, self.max_input_lag)

    @property
    def a_funcs(self) -> list:
        return [CoefficientFunction(row) for row in self.a]

    @property
    def b_funcs(self) -> list:
        return [CoefficientFunction(row) for row in self.b]

    def __eq__(self, other):
        if not isinstance(other, LpvIoModel):
            return NotImplemented
        return (self.na == other.na and self.input_lags == other.input_lags
                and self.basis == other.basis
                and np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b))

    def __hash__(self):
        return hash((self.na, self.input_lags, self.basis, self.theta.tobytes()))

    def to_dict(self) -> dict:
        return {
            "na": self.na,
            "input_lags": list(self.input_lags),
            "basis": self.basis.to_dict(),
            "a_funcs": self.a.tolist(),
            "b_funcs": self.b.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LpvIoModel":
        try:
            basis = PolyBasis(d["basis"]["n"], d["basis"]["offset"], d["basis"]["half_range"])
            return cls(d["na"], tuple(d["input_lags"]), np.array(d["a_funcs"], dtype=float),
                       np.array(d["b_funcs"], dtype=float), basis)
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed model document: {exc!r}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "LpvIoModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def predict_one_step(model: LpvIoModel, y_hist, u_hist, p_k: float) -> float:
    """One-step prediction ``yhat(k)``.

    ``y_hist[i-1]`` is ``y(k-i)`` for ``i = 1..na``; ``u_hist[j]`` is ``u(k-j)``.
    """
    y_hist = np.asarray(y_hist, dtype=float)
    u_hist = np.asarray(u_hist, dtype=float)
    if y_hist.size < model.na:
        raise StructuralError(f"need {model.na} past outputs, got {y_hist.size}")
    if model.input_lags and u_hist.size < model.max_input_lag + 1:
        raise StructuralError(f"need inputs back to lag {model.max_input_lag}, got {u_hist.size} values")
    f = model.basis.evaluate(p_k)
    a = model.a @ f
    b = model.b @ f
    yhat = -float(a @ y_hist[: model.na]) if model.na else 0.0
    if model.input_lags:
        yhat += float(b @ u_hist[list(model.input_lags)])
    return yhat


def frozen_lti(model: LpvIoModel, p_star: float):
    """Coefficients ``(a_1..a_na, b_j for j in J)`` with the parameter frozen at ``p_star``."""
    f = model.basis.evaluate(p_star)
    return model.a @ f, model.b @ f


def simulate_free_run(model: LpvIoModel, u_seq, p_seq, y_init) -> np.ndarray:
    """Simulate the model on its own past outputs.

    The first ``na`` outputs are taken from ``y_init``; inputs before the start
    of ``u_seq`` are treated as zero.
    """
    u_seq = np.asarray(u_seq, dtype=float).ravel()
    p_seq = np.asarray(p_seq, dtype=float).ravel()
    y_init = np.asarray(y_init, dtype=float).ravel()
    if u_seq.size != p_seq.size:
        raise StructuralError("u_seq and p_seq lengths differ")
    if y_init.size != model.na:
        raise StructuralError(f"y_init needs {model.na} values, got {y_init.size}")
    n = u_seq.size
    if n < model.na:
        raise StructuralError("sequence shorter than the output lag order")
    F = model.basis.evaluate(p_seq)            # (n, N)
    A = F @ model.a.T                          # (n, na)
    B = F @ model.b.T                          # (n, |J|)
    lags = model.input_lags
    y = np.zeros(n)
    y[: model.na] = y_init
    for k in range(model.na, n):
        acc = 0.0
        for i in range(1, model.na + 1):
            acc -= A[k, i - 1] * y[k - i]
        for m, j in enumerate(lags):
            if k - j >= 0:
                acc += B[k, m] * u_seq[k - j]
        y[k] = acc
    return y


def to_state_space(model: LpvIoModel, p_star: float):
    """Controller-companion realization of the frozen model.

    Returns ``(A, B, C, D)`` with state dimension ``max(na, max J)``; the
    realization has impulse response ``D, CB, CAB, ...`` equal to the ARX one.
    """
    a, bj = frozen_lti(model, p_star)
    n = model.warmup
    acoef = np.zeros(n + 1)
    acoef[1: model.na + 1] = a
    bcoef = np.zeros(n + 1)
    for m, j in enumerate(model.input_lags):
        bcoef[j] = bj[m]
    A = np.zeros((n, n))
    if n:
        A[0, :] = -acoef[1:]
        A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1))
    if n:
        B[0, 0] = 1.0
    D = np.array([[bcoef[0]]])
    C = (bcoef[1:] - bcoef[0] * acoef[1:]).reshape(1, n)
    return A, B, C, D


def companion(a) -> np.ndarray:
    a = np.asarray(a, dtype=float).ravel()
    n = a.size
    M = np.zeros((n, n))
    M[0, :] = -a
    M[1:, :-1] = np.eye(n - 1)
    return M


def frozen_spectral_radius(model: LpvIoModel, p_star: float) -> float:
    if model.na < 1:
        raise StructuralError("spectral radius needs na >= 1")
    a, _ = frozen_lti(model, p_star)
    return float(np.max(np.abs(np.linalg.eigvals(companion(a)))))


def _rebase_coeffs(c, old: PolyBasis, new_offset, new_half_range) -> np.ndarray:
    # ptilde_old = alpha * ptilde_new + beta
    alpha = new_half_range / old.half_range
    beta = (new_offset - old.offset) / old.half_range
    n = c.size
    out = np.zeros(n)
    for m in range(n):
        if c[m] == 0.0:
            continue
        for r in range(m + 1):
            out[r] += c[m] * math.comb(m, r) * alpha**r * beta ** (m - r)
    return out


def rebase_basis(model: LpvIoModel, new_offset: float, new_half_range: float) -> LpvIoModel:
    """Re-express the model in a basis with a different affine scaling."""
    if new_half_range == 0:
        raise ValueError("new_half_range must be nonzero")
    old = model.basis
    basis = PolyBasis(old.n, new_offset, new_half_range)
    a = np.array([_rebase_coeffs(row, old, new_offset, new_half_range) for row in model.a]).reshape(model.na, old.n)
    b = np.array([_rebase_coeffs(row, old, new_offset, new_half_range) for row in model.b]).reshape(len(model.input_lags), old.n)
    return LpvIoModel(model.na, model.input_lags, a, b, basis)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled ``(t, u, y, p)`` record."""

    t: np.ndarray
    u: np.ndarray
    y: np.ndarray
    p: np.ndarray
    period: float

    def __post_init__(self):
        if not self.period > 0:
            raise StructuralError(f"sample period must be positive, got {self.period}")
        arrs = [np.asarray(getattr(self, k), dtype=float).ravel() for k in ("t", "u", "y", "p")]
        if len({a.size for a in arrs}) != 1:
            raise StructuralError("t, u, y, p must have equal lengths")
        for name, arr in zip(("t", "u", "y", "p"), arrs):
            object.__setattr__(self, name, _frozen(arr))
        object.__setattr__(self, "period", float(self.period))
        if self.t.size > 1:
            expected = self.t[0] + self.period * np.arange(self.t.size)
            if not np.allclose(self.t, expected, rtol=0, atol=1e-9 * max(1.0, abs(expected[-1]))):
                raise StructuralError("time stamps are not uniformly spaced at the given period")

    @classmethod
    def from_arrays(cls, u, y, p, period, t0=0.0) -> "TimeSeries":
        u = np.asarray(u, dtype=float).ravel()
        return cls(t0 + period * np.arange(u.size), u, y, p, period)

    def __len__(self):
        return self.t.size

    def slice(self, start=None, stop=None) -> "TimeSeries":
        return TimeSeries(self.t[start:stop], self.u[start:stop], self.y[start:stop],
                          self.p[start:stop], self.period)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return self.period == other.period and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("t", "u", "y", "p"))

    def write_csv(self, path) -> None:
        write_columns_csv(path, ["t", "u", "y", "p"], [self.t, self.u, self.y, self.p])

    @classmethod
    def read_csv(cls, path, period=None) -> "TimeSeries":
        cols = read_columns_csv(path)
        missing = {"t", "u", "y", "p"} - set(cols)
        if missing:
            raise StructuralError(f"{path}: missing columns {sorted(missing)}")
        t = cols["t"]
        if period is None:
            if t.size < 2:
                raise StructuralError(f"{path}: cannot infer sample period from fewer than 2 rows")
            period = (t[-1] - t[0]) / (t.size - 1)
        return cls(t, cols["u"], cols["y"], cols["p"], period)


def write_columns_csv(path, header: Sequence[str], columns: Sequence) -> None:
    columns = [np.asarray(c).ravel() for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def read_columns_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise StructuralError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    try:
        data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
    except ValueError as exc:
        raise StructuralError(f"{path}: {exc}") from exc
    return {name: data[:, i] for i, name in enumerate(header)}
