import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from netobs.dynamics import (ChemParams, ContinuousModel, LinearModel, NoiseSpec, chem_derivatives, chem_jacobian,
                             chem_model, format_trajectory_csv, measure, rk4_step, selection_matrix,
                             simulate_continuous, step_linear, write_trajectory_csv)
from netobs.errors import DivergenceError, ParameterError
from netobs.scenarios import EXAMPLE1_A

K1 = ChemParams()


def test_step_linear_identity(rng):
    x = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(step_linear(np.eye(3), x, np.zeros((3, 3)), rng), x)


def test_step_linear_example1_column_sums():
    out = step_linear(EXAMPLE1_A, np.ones(7), np.zeros((7, 7)), None)
    assert np.allclose(out, [1.2, 1.0, -0.3, 0.9, -0.5, 0.4, 1.7], atol=1e-15)


def test_step_linear_noise_covariance(rng):
    sigma2 = 0.3
    A = rng.normal(size=(3, 3))
    x = rng.normal(size=3)
    draws = np.array([step_linear(A, x, sigma2 * np.eye(3), rng) for _ in range(10_000)]) - A.T @ x
    cov = np.cov(draws.T)
    assert np.allclose(np.diag(cov), sigma2, rtol=0.05)
    assert np.max(np.abs(cov - np.diag(np.diag(cov)))) < 0.05 * sigma2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_step_linear_diverges():
    with pytest.raises(DivergenceError):
        step_linear(np.array([[1e308]]), np.array([1e308]), np.zeros((1, 1)), None)


def test_noise_free_linear_matches_matrix_power(rng):
    A = rng.normal(size=(4, 4)) * 0.5
    x = rng.normal(size=4)
    y = x.copy()
    for _ in range(15):
        y = step_linear(A, y, np.zeros((4, 4)), rng)
    assert np.allclose(y, np.linalg.matrix_power(A.T, 15) @ x, rtol=1e-12, atol=1e-14)


def test_measure_selection():
    x = np.array([5.0, 6.0, 7.0])
    assert np.array_equal(measure(x, (3,), np.zeros((1, 1)), None), [7.0])
    assert np.array_equal(measure(x, (3, 1), np.zeros((2, 2)), None), [5.0, 7.0])


def test_measure_noise_variance(rng):
    x = np.array([1.0, 2.0])
    z = np.array([measure(x, (2,), np.array([[0.2]]), rng)[0] for _ in range(10_000)])
    assert z.var(ddof=1) == pytest.approx(0.2, rel=0.05)


def test_measure_errors():
    with pytest.raises(ParameterError):
        measure(np.ones(3), (), np.zeros((0, 0)), None)
    with pytest.raises(ParameterError):
        selection_matrix((4,), 3)


def test_noise_spec_validation():
    with pytest.raises(ParameterError):
        NoiseSpec(np.array([[1.0, 0.5], [0.0, 1.0]]), 1.0)
    with pytest.raises(ParameterError):
        NoiseSpec(-np.eye(2), 1.0)
    with pytest.raises(ParameterError):
        NoiseSpec(np.eye(2), 0.0)
    assert np.array_equal(NoiseSpec(np.eye(3), 0.5).R((1, 3)), 0.5 * np.eye(2))


def test_chem_derivatives_unit_point():
    expected = [-1, -1, -1, 1, 0, 1, 1, 1, 0, 0, -1]
    assert np.array_equal(chem_derivatives(np.ones(11), K1), expected)


def test_chem_derivatives_zero_state():
    assert np.array_equal(chem_derivatives(np.zeros(11), K1), np.zeros(11))


@given(arrays(float, 11, elements=st.floats(-3, 3)))
def test_chem_conservation(x):
    d = chem_derivatives(x, ChemParams(k=(0.7, 1.3, 0.4, 2.0, 0.9, 1.1)))
    assert d[0] - d[1] == 0 and d[0] - d[2] == 0
    assert d[0] + d[3] + d[4] == pytest.approx(0, abs=1e-12)


def test_chem_jacobian_finite_differences():
    rng = np.random.default_rng(7)
    params = ChemParams(k=tuple(rng.uniform(0.5, 2.0, 6)))
    h = 1e-6
    for _ in range(100):
        x = rng.uniform(0, 2, 11)
        J = chem_jacobian(x, params)
        fd = np.empty((11, 11))
        for j in range(11):
            e = np.zeros(11)
            e[j] = h
            fd[:, j] = (chem_derivatives(x + e, params) - chem_derivatives(x - e, params)) / (2 * h)
        scale = np.maximum(np.abs(J), 1.0)
        assert np.max(np.abs(J - fd) / scale) < 1e-5


def test_chem_jacobian_structure():
    J = chem_jacobian(np.random.default_rng(0).uniform(0, 2, 11), K1)
    assert np.all(J[:, 5] == 0)
    J0 = chem_jacobian(np.zeros(11), K1)
    nz = {(int(i), int(j)) for i, j in zip(*np.nonzero(J0))}
    assert nz == {(3, 3), (3, 4), (4, 3), (4, 4), (6, 6), (7, 6), (8, 6)}


def test_rk4_constant_and_exponential():
    x = np.array([1.0, 2.0])
    assert np.array_equal(rk4_step(lambda v: np.zeros_like(v), x, 0.1), x)
    assert rk4_step(lambda v: -v, np.array([1.0]), 0.1)[0] == pytest.approx(0.904837418, abs=1e-7)


def test_rk4_order_four():
    def global_error(dt):
        x = np.array([1.0])
        for _ in range(int(round(1 / dt))):
            x = rk4_step(lambda v: -v, x, dt)
        return abs(x[0] - np.exp(-1.0))

    ratio = global_error(0.1) / global_error(0.05)
    assert 14.0 < ratio < 18.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_rk4_rejects_bad_step():
    with pytest.raises(ParameterError):
        rk4_step(lambda v: v, np.ones(1), 0.0)
    with pytest.raises(DivergenceError):
        rk4_step(lambda v: v * 1e308, np.ones(1) * 1e10, 1.0)


def _zero_model(n=2, q=0.0, dt=0.05, span=0.25):
    return ContinuousModel(lambda x: np.zeros_like(x), lambda x: np.zeros((n, n)),
                           NoiseSpec(q * np.eye(n), 1.0), dt, span)


def test_simulate_constant(rng):
    out = simulate_continuous(_zero_model(), np.array([1.0, 2.0]), 2.0, 4.0, rng)
    assert all(np.array_equal(x, [1.0, 2.0]) for _, x in out)


def test_simulate_sample_count(rng):
    out = simulate_continuous(_zero_model(), np.zeros(2), 20.0, 4.0, rng)
    assert len(out) == 80
    assert out[0][0] == 0.25 and out[-1][0] == 20.0


def test_simulate_requires_divisible_step():
    with pytest.raises(ParameterError):
        _zero_model(dt=0.03, span=0.25)


def test_continuous_noise_is_q_dt(rng):
    m = _zero_model(n=1, q=0.4, dt=0.05, span=0.25)
    draws = np.array([m.transition(np.zeros(1), rng)[0] for _ in range(10_000)])
    assert draws.var(ddof=1) == pytest.approx(0.4 * 0.25, rel=0.05)


def test_chemistry_noise_free_monotone_and_invariants():
    m = chem_model(dt=0.025, span=0.25, uncertainty=0.01)
    quiet = ContinuousModel(m.f, m.jac, NoiseSpec(np.zeros((11, 11)), 1.0), m.dt, m.span)
    out = simulate_continuous(quiet, np.ones(11), 20.0, 4.0, None)
    xs = np.array([np.ones(11)] + [x for _, x in out])
    assert np.all(np.diff(xs[:, 0]) < 0)
    assert np.all(np.diff(xs[:, 5]) > 0)
    invariants = [
        xs[:, 0] - xs[:, 1],
        xs[:, 0] - xs[:, 2],
        xs[:, 0] + xs[:, 3] + xs[:, 4],
        xs[:, 0] + xs[:, 5],
        xs[:, 0] + xs[:, 9] - xs[:, 10],
        xs[:, 6] + xs[:, 8] + xs[:, 10],
        xs[:, 7] - xs[:, 8] + xs[:, 10],
    ]
    for inv in invariants:
        assert np.max(np.abs(inv - inv[0])) < 1e-6


def test_chem_model_noise_levels():
    m = chem_model(ChemParams(x0=(2.0,) * 11), uncertainty=0.01)
    assert np.allclose(np.diag(m.noise.Q), 4e-4)
    assert np.allclose(m.noise.meas_var, 4e-4)


def test_chem_params_validation():
    with pytest.raises(ParameterError):
        ChemParams(k=(1, 1, 1, 1, 1, 0))
    with pytest.raises(ParameterError):
        ChemParams(x0=(1.0,) * 10)


def test_sampled_linear_model():
    M = np.array([[-0.5, 0.2], [0.1, -0.3]])
    m = LinearModel.sampled(M, 0.1, NoiseSpec(np.zeros((2, 2)), 1.0))
    assert np.allclose(m.transition(np.array([1.0, 1.0]), None), expm(M.T * 0.1) @ [1.0, 1.0])


def test_linear_model_stacked_predict(rng):
    A = rng.normal(size=(3, 3))
    m = LinearModel(A, NoiseSpec(0.1 * np.eye(3), 1.0))
    P = np.stack([np.eye(3), 2 * np.eye(3)])
    _, out = m.predict(np.zeros(3), P)
    for i in range(2):
        assert np.allclose(out[i], A.T @ P[i] @ A + 0.1 * np.eye(3))


def test_continuous_stacked_predict_matches_single():
    m = chem_model()
    rng = np.random.default_rng(3)
    B = rng.normal(size=(11, 11)) * 0.01
    P1, P2 = B @ B.T + 1e-4 * np.eye(11), 1e-4 * np.eye(11)
    mean = np.ones(11)
    _, stacked = m.predict(mean, np.stack([P1, P2]))
    assert np.allclose(stacked[0], m.predict(mean, P1)[1], rtol=1e-12, atol=1e-18)
    assert np.allclose(stacked[1], m.predict(mean, P2)[1], rtol=1e-12, atol=1e-18)


def test_trajectory_csv(tmp_path):
    samples = [(0.25, np.array([1.0, 1 / 3])), (0.5, np.array([2.0, 0.1]))]
    text = format_trajectory_csv(samples)
    lines = text.split("\n")
    assert lines[0] == "t,x1,x2"
    assert lines[1] == "0.25,1,0.33333333333333331"
    assert "\r" not in text
    path = tmp_path / "traj.csv"
    write_trajectory_csv(samples, path)
    assert path.read_bytes() == text.encode()


def test_transition_deterministic():
    m = chem_model()
    a = m.transition(np.ones(11), np.random.default_rng(5))
    b = m.transition(np.ones(11), np.random.default_rng(5))
    assert np.array_equal(a, b)
