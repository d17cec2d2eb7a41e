import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from lpvid.errors import StructuralError
from lpvid.lpv import (CoefficientFunction, LpvIoModel, PolyBasis, TimeSeries, eval_coeff, frozen_lti,
                       frozen_spectral_radius, predict_one_step, rebase_basis, simulate_free_run,
                       to_state_space)

finite = st.floats(-50, 50, allow_nan=False)


def random_model(rng, na, lags, n, offset=0.0, half_range=1.0, scale=0.3):
    basis = PolyBasis(n, offset, half_range)
    return LpvIoModel(na, lags, scale * rng.standard_normal((na, n)),
                      rng.standard_normal((len(lags), n)), basis)


def poly_value(coeffs, p, offset=0.0, half_range=1.0):
    # Horner, independent of PolyBasis.evaluate
    x = (p - offset) / half_range
    acc = 0.0
    for c in reversed(list(coeffs)):
        acc = acc * x + c
    return acc


def recurrence(model, u, p, y_init):
    """Plain difference-equation oracle, coefficient functions evaluated by Horner."""
    b = model.basis
    y = list(y_init)
    for k in range(len(y_init), len(u)):
        acc = 0.0
        for i in range(1, model.na + 1):
            acc -= poly_value(model.a[i - 1], p[k], b.offset, b.half_range) * y[k - i]
        for m, j in enumerate(model.input_lags):
            if k - j >= 0:
                acc += poly_value(model.b[m], p[k], b.offset, b.half_range) * u[k - j]
        y.append(acc)
    return np.array(y)


# -- basis and coefficient functions ------------------------------------------

def test_eval_coeff_examples():
    basis = PolyBasis(3)
    assert eval_coeff(CoefficientFunction([1, 2, 3]), basis, 0.0) == 1.0
    assert eval_coeff(CoefficientFunction([1, 2, 3]), basis, 2.0) == 17.0
    assert eval_coeff(CoefficientFunction([0, 0, 0]), basis, 7.3) == 0.0


def test_eval_coeff_length_mismatch():
    with pytest.raises(StructuralError):
        eval_coeff(CoefficientFunction([1, 2]), PolyBasis(3), 1.0)


@given(p=finite, n=st.integers(1, 6), offset=finite, half=st.floats(0.1, 20))
def test_constant_basis_term(p, n, offset, half):
    e1 = np.eye(n)[0]
    assert eval_coeff(CoefficientFunction(e1), PolyBasis(n, offset, half), p) == 1.0


def test_basis_scaling():
    b = PolyBasis(3, 6.5, 6.5)
    np.testing.assert_allclose(b.evaluate(13.0), [1.0, 1.0, 1.0])
    np.testing.assert_allclose(b.evaluate(0.0), [1.0, -1.0, 1.0])
    assert b.evaluate([0.0, 6.5]).shape == (2, 3)


@pytest.mark.parametrize("kw", [dict(n=0), dict(n=3, half_range=0.0)])
def test_basis_rejects(kw):
    with pytest.raises((ValueError, StructuralError)):
        PolyBasis(**kw)


def test_model_construction_rules():
    with pytest.raises(StructuralError):
        LpvIoModel(0, (), np.zeros((0, 1)), np.zeros((0, 1)))
    with pytest.raises(StructuralError):
        LpvIoModel(1, (2, 1), np.zeros((1, 1)), np.zeros((2, 1)))
    fir = LpvIoModel(0, (0, 1), np.zeros((0, 1)), [[1.0], [2.0]])
    assert fir.n_functions == 2


# -- prediction ------------------------------------------------------------------

def test_predict_zero_model():
    m = LpvIoModel.zeros(3, (2,), PolyBasis(3))
    assert predict_one_step(m, [1, 2, 3], [4, 5, 6], 3.0) == 0.0


def test_predict_integrator():
    m = LpvIoModel(1, (), [[-1.0]], np.zeros((0, 1)))
    assert predict_one_step(m, [2.5], [], 9.0) == 2.5


def test_predict_helicopter_structure_hand_expansion():
    # na = 3, J = {2}, N = 3, identity scaling
    a = np.array([[0.1, -0.2, 0.03], [0.4, 0.05, -0.01], [-0.3, 0.02, 0.002]])
    b = np.array([[1.5, -0.25, 0.04]])
    m = LpvIoModel(3, (2,), a, b, PolyBasis(3))
    y = {1: 0.7, 2: -1.1, 3: 0.4}      # y(k-i)
    u = {0: 0.9, 1: -0.3, 2: 1.2}      # u(k-j)
    p = 2.0
    expected = 0.0
    for i in (1, 2, 3):
        a_i = a[i - 1, 0] + a[i - 1, 1] * p + a[i - 1, 2] * p * p
        expected -= a_i * y[i]
    expected += (b[0, 0] + b[0, 1] * p + b[0, 2] * p * p) * u[2]
    got = predict_one_step(m, [y[1], y[2], y[3]], [u[0], u[1], u[2]], p)
    assert got == pytest.approx(expected, rel=1e-14, abs=1e-14)


def test_predict_insufficient_history():
    m = LpvIoModel.zeros(3, (2,), PolyBasis(3))
    with pytest.raises(StructuralError):
        predict_one_step(m, [1, 2], [1, 2, 3], 0.0)
    with pytest.raises(StructuralError):
        predict_one_step(m, [1, 2, 3], [1, 2], 0.0)


def test_prediction_ignores_current_output():
    # monic A: nothing multiplies y(k); longer histories beyond na are unused
    rng = np.random.default_rng(0)
    m = random_model(rng, 2, (0, 1), 2)
    yh = rng.standard_normal(2)
    uh = rng.standard_normal(2)
    assert predict_one_step(m, yh, uh, 0.3) == predict_one_step(m, np.r_[yh, 99.0], uh, 0.3)


def test_prediction_linear_in_theta():
    rng = np.random.default_rng(1)
    for _ in range(50):
        na, n = rng.integers(1, 4), rng.integers(1, 4)
        lags = (0, 2)
        basis = PolyBasis(int(n), 1.0, 2.0)
        th1 = rng.standard_normal((na + 2) * n)
        th2 = rng.standard_normal((na + 2) * n)
        c = rng.standard_normal()
        yh, uh, p = rng.standard_normal(na), rng.standard_normal(3), rng.uniform(-3, 3)

        def pred(th):
            return predict_one_step(LpvIoModel.from_theta(th, na, lags, basis), yh, uh, p)

        assert pred(th1 + th2) == pytest.approx(pred(th1) + pred(th2), abs=1e-12)
        assert pred(c * th1) == pytest.approx(c * pred(th1), abs=1e-12)


# -- free-run simulation ---------------------------------------------------------

def test_free_run_zero():
    m = random_model(np.random.default_rng(2), 3, (2,), 3)
    y = simulate_free_run(m, np.zeros(40), np.linspace(0, 1, 40), np.zeros(3))
    assert np.all(y == 0)
    assert y.size == 40


def test_free_run_frozen_matches_lfilter():
    rng = np.random.default_rng(3)
    m = random_model(rng, 3, (1, 2), 3, offset=6.5, half_range=6.5, scale=0.2)
    p_star = 4.2
    # leading zeros: the system is at rest over the pinned initial outputs
    u = np.r_[np.zeros(3), rng.standard_normal(200)]
    y = simulate_free_run(m, u, np.full(u.size, p_star), np.zeros(3))
    a, b = frozen_lti(m, p_star)
    num = np.zeros(3)
    num[[1, 2]] = b
    ref = signal.lfilter(num, np.r_[1.0, a], u)
    np.testing.assert_allclose(y, ref, rtol=1e-12, atol=1e-12)


def test_free_run_matches_recurrence_oracle():
    rng = np.random.default_rng(4)
    m = random_model(rng, 3, (0, 2), 3, offset=6.5, half_range=6.5, scale=0.15)
    u = rng.standard_normal(300)
    p = rng.uniform(0, 13, 300)
    y0 = rng.standard_normal(3)
    np.testing.assert_allclose(simulate_free_run(m, u, p, y0), recurrence(m, u, p, y0), rtol=1e-12, atol=1e-12)


def test_free_run_errors():
    m = LpvIoModel.zeros(2, (1,), PolyBasis(1))
    with pytest.raises(StructuralError):
        simulate_free_run(m, np.zeros(5), np.zeros(4), np.zeros(2))
    with pytest.raises(StructuralError):
        simulate_free_run(m, np.zeros(5), np.zeros(5), np.zeros(3))


# -- frozen LTI, realization, stability -------------------------------------------

def test_frozen_lti_examples():
    z = LpvIoModel.zeros(3, (2,), PolyBasis(3))
    a, b = frozen_lti(z, 5.0)
    assert np.all(a == 0) and np.all(b == 0)

    const = LpvIoModel(2, (1,), [[0.3], [-0.1]], [[2.0]], PolyBasis(1))
    for p in (-4.0, 0.0, 11.0):
        a, b = frozen_lti(const, p)
        np.testing.assert_array_equal(a, [0.3, -0.1])
        np.testing.assert_array_equal(b, [2.0])

    rng = np.random.default_rng(5)
    m = random_model(rng, 3, (2,), 3)
    a, b = frozen_lti(m, 0.0)
    np.testing.assert_array_equal(a, m.a[:, 0])
    np.testing.assert_array_equal(b, m.b[:, 0])


def impulse_ss(A, B, C, D, n):
    h = [D[0, 0]]
    x = B[:, 0].copy()
    for _ in range(n - 1):
        h.append(float(C[0] @ x))
        x = A @ x
    return np.array(h)


def impulse_arx(a, lags, b, n):
    u = np.zeros(n)
    u[0] = 1.0
    y = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for i, ai in enumerate(a, start=1):
            if k - i >= 0:
                acc -= ai * y[k - i]
        for j, bj in zip(lags, b):
            if k - j >= 0:
                acc += bj * u[k - j]
        y[k] = acc
    return y


def test_state_space_second_order_example():
    m = LpvIoModel(2, (1,), [[0.4], [-0.2]], [[1.7]], PolyBasis(1))
    A, B, C, D = to_state_space(m, 0.0)
    np.testing.assert_array_equal(A, [[-0.4, 0.2], [1.0, 0.0]])
    np.testing.assert_array_equal(B, [[1.0], [0.0]])
    np.testing.assert_array_equal(C, [[1.7, 0.0]])
    np.testing.assert_array_equal(D, [[0.0]])
    np.testing.assert_allclose(impulse_ss(A, B, C, D, 20), impulse_arx([0.4, -0.2], (1,), [1.7], 20),
                               atol=1e-12)


def test_state_space_geometric():
    m = LpvIoModel(1, (1,), [[-0.5]], [[1.0]], PolyBasis(1))
    h = impulse_ss(*to_state_space(m, 3.0), 8)
    np.testing.assert_allclose(h, [0, 1, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625], atol=1e-15)
    A, *_ = to_state_space(m, 3.0)
    np.testing.assert_allclose(np.linalg.eigvals(A), [0.5])


def test_state_space_zero_model_is_shift():
    m = LpvIoModel.zeros(3, (2,), PolyBasis(3))
    A, B, C, D = to_state_space(m, 1.0)
    np.testing.assert_array_equal(np.linalg.matrix_power(A, 3), np.zeros((3, 3)))
    assert np.all(impulse_ss(A, B, C, D, 10) == 0)


def test_state_space_feedthrough_and_static_gain():
    m = LpvIoModel(1, (0, 1), [[0.2]], [[0.5], [1.0]], PolyBasis(1))
    assert to_state_space(m, 0.0)[3][0, 0] == 0.5
    m = LpvIoModel(1, (1,), [[0.2]], [[1.0]], PolyBasis(1))
    assert to_state_space(m, 0.0)[3][0, 0] == 0.0
    static = LpvIoModel(0, (0,), np.zeros((0, 1)), [[3.0]], PolyBasis(1))
    A, B, C, D = to_state_space(static, 0.0)
    assert A.shape == (0, 0) and D[0, 0] == 3.0


def test_realization_equivalence_random():
    rng = np.random.default_rng(6)
    for _ in range(50):
        na = int(rng.integers(1, 5))
        lags = tuple(sorted(rng.choice(6, size=int(rng.integers(1, 4)), replace=False).tolist()))
        m = random_model(rng, na, lags, 2, scale=0.25)
        p = rng.uniform(-1, 1)
        a, b = frozen_lti(m, p)
        h_ss = impulse_ss(*to_state_space(m, p), 50)
        h_arx = impulse_arx(a, lags, b, 50)
        np.testing.assert_allclose(h_ss, h_arx, atol=1e-9, rtol=1e-9)


def test_spectral_radius_examples():
    m = LpvIoModel(1, (), [[-0.5]], np.zeros((0, 1)), PolyBasis(1))
    assert frozen_spectral_radius(m, 2.0) == pytest.approx(0.5, abs=1e-15)
    z = LpvIoModel.zeros(3, (1,), PolyBasis(2))
    assert frozen_spectral_radius(z, 1.0) == 0.0


def test_spectral_radius_polyroots_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        poles = [rng.uniform(-0.9, 0.9)]
        r, ang = rng.uniform(0.1, 0.95), rng.uniform(0, np.pi)
        poles += [r * np.exp(1j * ang), r * np.exp(-1j * ang)]
        a = np.real(np.poly(poles))[1:]
        m = LpvIoModel(3, (1,), a.reshape(3, 1), [[1.0]], PolyBasis(1))
        roots = mpmath.polyroots([1.0, *a], maxsteps=200, extraprec=60)
        expected = max(abs(complex(z)) for z in roots)
        assert frozen_spectral_radius(m, 0.0) == pytest.approx(expected, abs=1e-9)


# -- basis rebasing ----------------------------------------------------------------

def test_rebase_identity():
    m = random_model(np.random.default_rng(8), 3, (2,), 3)
    r = rebase_basis(m, 0.0, 1.0)
    np.testing.assert_allclose(r.theta, m.theta, rtol=0, atol=0)


def test_rebase_constant_functions_unchanged():
    m = LpvIoModel(2, (1,), [[0.3, 0, 0], [0.1, 0, 0]], [[2.0, 0, 0]], PolyBasis(3))
    r = rebase_basis(m, 4.0, -2.5)
    np.testing.assert_array_equal(r.a, m.a)
    np.testing.assert_array_equal(r.b, m.b)


def test_rebase_quadratic_pointwise():
    m = LpvIoModel(1, (), [[0.7, -0.4, 0.05]], np.zeros((0, 3)), PolyBasis(3))
    r = rebase_basis(m, 6.5, 6.5)
    for p in (0.0, 6.5, 13.0):
        want = 0.7 - 0.4 * p + 0.05 * p * p
        got = eval_coeff(r.a_funcs[0], r.basis, p)
        assert got == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_rebase_rejects_zero_half_range():
    m = LpvIoModel.zeros(1, (1,), PolyBasis(2))
    with pytest.raises(ValueError):
        rebase_basis(m, 1.0, 0.0)


def test_rebase_preserves_simulation():
    rng = np.random.default_rng(9)
    for _ in range(20):
        m = random_model(rng, 3, (2,), 3, offset=6.5, half_range=6.5, scale=0.1)
        u = rng.standard_normal(150)
        p = rng.uniform(0, 13, 150)
        y0 = rng.standard_normal(3)
        r = rebase_basis(m, rng.uniform(-2, 8), rng.uniform(0.5, 10))
        y1 = simulate_free_run(m, u, p, y0)
        y2 = simulate_free_run(r, u, p, y0)
        np.testing.assert_allclose(y2, y1, rtol=1e-8, atol=1e-8 * max(1.0, np.abs(y1).max()))


@settings(max_examples=50)
@given(c=st.lists(st.floats(-5, 5), min_size=1, max_size=5), off=st.floats(-10, 10),
       half=st.floats(0.5, 10), p=st.floats(0, 13))
def test_rebase_pointwise_property(c, off, half, p):
    m = LpvIoModel(1, (), [c], np.zeros((0, len(c))), PolyBasis(len(c)))
    r = rebase_basis(m, off, half)
    want = poly_value(c, p)
    got = eval_coeff(r.a_funcs[0], r.basis, p)
    assert got == pytest.approx(want, rel=1e-9, abs=1e-9 * (1 + max(abs(x) for x in c)) * (1 + p) ** len(c))


# -- serialization -----------------------------------------------------------------

def test_model_json_round_trip(tmp_path):
    m = random_model(np.random.default_rng(10), 3, (0, 2), 3, offset=6.5, half_range=6.5)
    m.save(tmp_path / "m.json")
    back = LpvIoModel.load(tmp_path / "m.json")
    assert back == m
    doc = m.to_dict()
    assert set(doc) == {"na", "input_lags", "basis", "a_funcs", "b_funcs"}
    assert set(doc["basis"]) == {"n", "offset", "half_range"}


def test_model_from_malformed_dict():
    with pytest.raises(StructuralError):
        LpvIoModel.from_dict({"na": 1})


def test_timeseries_csv_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    s = TimeSeries.from_arrays(rng.standard_normal(50), rng.standard_normal(50), rng.uniform(0, 13, 50),
                               0.11408)
    s.write_csv(tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "t,u,y,p"
    back = TimeSeries.read_csv(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.u, s.u)
    np.testing.assert_array_equal(back.y, s.y)
    np.testing.assert_array_equal(back.p, s.p)
    np.testing.assert_array_equal(back.t, s.t)
    assert back.period == pytest.approx(0.11408, rel=1e-12)


def test_timeseries_invariants():
    with pytest.raises(StructuralError):
        TimeSeries.from_arrays([1, 2], [1, 2, 3], [0, 0], 0.1)
    with pytest.raises(StructuralError):
        TimeSeries.from_arrays([1, 2], [1, 2], [0, 0], 0.0)
    with pytest.raises(StructuralError):
        TimeSeries([0.0, 0.1, 0.3], [0, 0, 0], [0, 0, 0], [0, 0, 0], 0.1)


def test_values_are_immutable():
    m = LpvIoModel.zeros(2, (1,), PolyBasis(2))
    with pytest.raises(ValueError):
        m.a[0, 0] = 1.0
    assert math.isfinite(frozen_spectral_radius(m, 0.0))
