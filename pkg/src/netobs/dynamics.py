"""Ground-truth network dynamics and the monitor (measurement) process.

Three model kinds share one small interface used by the filter and planner:

* ``transition(x, rng)``   true state one sampling interval ahead (noisy)
* ``predict(mean, cov)``   filter time update; ``cov`` may be stacked ``(..., n, n)``
* ``linearize(mean)``      ``(next_mean, Phi, Qd)`` so that ``cov -> Phi cov Phi^T + Qd``
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DivergenceError, ParameterError

__all__ = [
    "NoiseSpec",
    "noise_factor",
    "LinearModel",
    "NonlinearModel",
    "ContinuousModel",
    "ChemParams",
    "step_linear",
    "selection_matrix",
    "measure",
    "chem_derivatives",
    "chem_jacobian",
    "chem_model",
    "rk4_step",
    "simulate_continuous",
    "format_trajectory_csv",
    "write_trajectory_csv",
]


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        raise DivergenceError(f"{what} became non-finite")
    return x


def _sym(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def noise_factor(cov) -> np.ndarray:
    """``L`` with ``L L^T = cov``; falls back to a symmetric square root for singular PSD input."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(cov)
        return V * np.sqrt(np.clip(w, 0.0, None))


def _draw(rng, factor):
    return factor @ rng.standard_normal(factor.shape[1])


@dataclass(frozen=True)
class NoiseSpec:
    """Process covariance ``Q`` (n x n) and per-node monitor noise variances.

    For continuous models ``Q`` is a noise intensity per unit time.
    ``R`` for a monitor set is ``diag(meas_var[nodes])``.
    """

    Q: np.ndarray
    meas_var: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        r = np.atleast_1d(np.asarray(self.meas_var, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise ParameterError("Q must be square")
        if r.shape == (1,) and Q.shape[0] > 1:
            r = np.full(Q.shape[0], r[0])
        if r.shape != (Q.shape[0],):
            raise ParameterError("meas_var must have one entry per node")
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12:
            raise ParameterError("Q must be symmetric")
        if Q.size and np.min(np.linalg.eigvalsh(Q)) < -1e-12:
            raise ParameterError("Q must be positive semidefinite")
        if np.any(r <= 0):
            raise ParameterError("monitor noise variances must be positive")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "meas_var", r)
        object.__setattr__(self, "q_factor", noise_factor(Q) if Q.size else Q)

    @property
    def n(self):
        return self.Q.shape[0]

    def R(self, nodes) -> np.ndarray:
        return np.diag(self.meas_var[np.asarray(nodes, dtype=int) - 1])


def step_linear(A, x, Q, rng) -> np.ndarray:
    """``A^T x + v`` with ``v ~ N(0, Q)``."""
    A = np.asarray(A, dtype=float)
    out = A.T @ np.asarray(x, dtype=float)
    if rng is not None and np.any(Q):
        out = out + _draw(rng, noise_factor(Q))
    return _check_finite(out, "network state")


def selection_matrix(nodes, n) -> np.ndarray:
    nodes = sorted(int(v) for v in nodes)
    if not nodes:
        raise ParameterError("monitor set is empty")
    if nodes[0] < 1 or nodes[-1] > n:
        raise ParameterError(f"monitor nodes {nodes} outside 1..{n}")
    C = np.zeros((len(nodes), n))
    C[np.arange(len(nodes)), np.asarray(nodes) - 1] = 1.0
    return C


def measure(x, nodes, R, rng) -> np.ndarray:
    """``z = C x + w`` for the monitor set ``nodes`` (1-based, rows ascending)."""
    x = np.asarray(x, dtype=float)
    C = selection_matrix(nodes, len(x))
    z = C @ x
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if rng is not None and np.any(R):
        z = z + _draw(rng, noise_factor(R))
    return z


@dataclass(frozen=True)
class LinearModel:
    """Discrete linear network ``x_{k+1} = A^T x_k + v_k``."""

    A: np.ndarray
    noise: NoiseSpec
    kind: str = field(default="linear", init=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape != self.noise.Q.shape:
            raise ParameterError(f"A shape {A.shape} does not match Q {self.noise.Q.shape}")
        object.__setattr__(self, "A", A)

    @property
    def n(self):
        return self.A.shape[0]

    @classmethod
    def sampled(cls, A, dt, noise) -> "LinearModel":
        """Zero-order sampling of ``xdot = A^T x`` at interval ``dt``.

        The result is again of the form ``x_{k+1} = Ad^T x_k`` with ``Ad = expm(A dt)``.
        """
        from scipy.linalg import expm

        return cls(expm(np.asarray(A, dtype=float) * dt), noise)

    def transition(self, x, rng):
        out = self.A.T @ np.asarray(x, dtype=float)
        if rng is not None and np.any(self.noise.Q):
            out = out + _draw(rng, self.noise.q_factor)
        return _check_finite(out, "network state")

    def predict(self, mean, cov):
        F = self.A.T
        return F @ mean, _sym(F @ cov @ self.A + self.noise.Q)

    def linearize(self, mean):
        F = self.A.T
        return F @ mean, F, self.noise.Q


@dataclass(frozen=True)
class NonlinearModel:
    """Discrete nonlinear network ``x_{k+1} = f(x_k) + v_k`` with an analytic Jacobian."""

    f: Callable
    jac: Callable
    noise: NoiseSpec
    kind: str = field(default="nonlinear", init=False)

    @property
    def n(self):
        return self.noise.n

    def transition(self, x, rng):
        out = np.asarray(self.f(x), dtype=float)
        if rng is not None and np.any(self.noise.Q):
            out = out + _draw(rng, self.noise.q_factor)
        return _check_finite(out, "network state")

    def predict(self, mean, cov):
        F = self.jac(mean)
        return np.asarray(self.f(mean), dtype=float), _sym(F @ cov @ F.T + self.noise.Q)

    def linearize(self, mean):
        return np.asarray(self.f(mean), dtype=float), self.jac(mean), self.noise.Q


def rk4_step(deriv, x, dt) -> np.ndarray:
    if dt <= 0:
        raise ParameterError("dt must be positive")
    k1 = deriv(x)
    k2 = deriv(x + 0.5 * dt * k1)
    k3 = deriv(x + 0.5 * dt * k2)
    k4 = deriv(x + dt * k3)
    return _check_finite(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), "integrated state")


@dataclass(frozen=True)
class ContinuousModel:
    """Continuous-time network ``xdot = f(x) + noise`` sampled every ``span`` seconds.

    The drift is integrated with RK4 at step ``dt``; process noise enters as
    ``N(0, Q dt)`` increments after every step.
    """

    f: Callable
    jac: Callable
    noise: NoiseSpec
    dt: float
    span: float
    kind: str = field(default="continuous", init=False)

    def __post_init__(self):
        if self.dt <= 0 or self.span <= 0:
            raise ParameterError("dt and span must be positive")
        steps = self.span / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ParameterError(f"dt={self.dt} does not divide the sampling interval {self.span}")

    @property
    def n(self):
        return self.noise.n

    @property
    def steps(self) -> int:
        return int(round(self.span / self.dt))

    def transition(self, x, rng):
        factor = None
        if rng is not None and np.any(self.noise.Q):
            factor = self.noise.q_factor * np.sqrt(self.dt)
        x = np.asarray(x, dtype=float)
        for _ in range(self.steps):
            x = rk4_step(self.f, x, self.dt)
            if factor is not None:
                x = x + _draw(rng, factor)
        return _check_finite(x, "network state")

    def _riccati(self, x, P):
        F = self.jac(x)
        FP = F @ P
        return FP + np.swapaxes(FP, -1, -2) + self.noise.Q

    def predict(self, mean, cov):
        """Hybrid EKF time update: RK4 on the mean and on ``Pdot = F P + P F^T + Q`` jointly."""
        x = np.asarray(mean, dtype=float)
        P = np.asarray(cov, dtype=float)
        h = self.dt
        for _ in range(self.steps):
            k1x, k1p = self.f(x), self._riccati(x, P)
            x2, P2 = x + 0.5 * h * k1x, P + 0.5 * h * k1p
            k2x, k2p = self.f(x2), self._riccati(x2, P2)
            x3, P3 = x + 0.5 * h * k2x, P + 0.5 * h * k2p
            k3x, k3p = self.f(x3), self._riccati(x3, P3)
            x4, P4 = x + h * k3x, P + h * k3p
            k4x, k4p = self.f(x4), self._riccati(x4, P4)
            x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            P = _sym(P + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p))
        return x, P

    def linearize(self, mean):
        """Transition matrix and accumulated noise of the linearization over one span."""
        n = self.n
        x = np.asarray(mean, dtype=float)
        Phi = np.eye(n)
        Qd = np.zeros((n, n))
        h = self.dt
        Q = self.noise.Q

        def d(x, Phi, Qd):
            F = self.jac(x)
            FQ = F @ Qd
            return self.f(x), F @ Phi, FQ + FQ.T + Q

        for _ in range(self.steps):
            a = d(x, Phi, Qd)
            b = d(x + 0.5 * h * a[0], Phi + 0.5 * h * a[1], Qd + 0.5 * h * a[2])
            c = d(x + 0.5 * h * b[0], Phi + 0.5 * h * b[1], Qd + 0.5 * h * b[2])
            e = d(x + h * c[0], Phi + h * c[1], Qd + h * c[2])
            x = x + h / 6.0 * (a[0] + 2 * b[0] + 2 * c[0] + e[0])
            Phi = Phi + h / 6.0 * (a[1] + 2 * b[1] + 2 * c[1] + e[1])
            Qd = Qd + h / 6.0 * (a[2] + 2 * b[2] + 2 * c[2] + e[2])
        return x, Phi, _sym(Qd)


def simulate_continuous(model: ContinuousModel, x0, t_end, sample_rate, rng):
    """States at every sampling instant after ``t=0``: ``[(t, x), ...]``."""
    if sample_rate <= 0:
        raise ParameterError("sample_rate must be positive")
    interval = 1.0 / sample_rate
    if abs(interval - model.span) > 1e-12:
        model = ContinuousModel(model.f, model.jac, model.noise, model.dt, interval)
    count = int(round(t_end * sample_rate))
    x = np.asarray(x0, dtype=float)
    out = []
    for k in range(1, count + 1):
        x = model.transition(x, rng)
        out.append((k * interval, x))
    return out


# --- chemical reaction benchmark -------------------------------------------------

@dataclass(frozen=True)
class ChemParams:
    k: tuple = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    x0: tuple = (1.0,) * 11

    def __post_init__(self):
        k = tuple(float(v) for v in self.k)
        x0 = tuple(float(v) for v in self.x0)
        if len(k) != 6 or min(k) <= 0:
            raise ParameterError("need six positive rate constants")
        if len(x0) != 11 or min(x0) < 0:
            raise ParameterError("need eleven nonnegative initial concentrations")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "x0", x0)


def chem_derivatives(x, k: ChemParams) -> np.ndarray:
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10, x11 = x
    k1, k2, k3, k4, k5, k6 = k.k
    r1 = k1 * x1 * x2 * x3
    r4 = k4 * x8 * x9
    r6 = k6 * x10 * x11
    return np.array([
        -r1,
        -r1,
        -r1,
        r1 - k2 * x4 + k3 * x5,
        k2 * x4 - k3 * x5,
        r1,
        r4 - k5 * x7 + r6,
        -r4 + k5 * x7 + r6,
        -r4 + k5 * x7,
        r1 - r6,
        -r6,
    ])


def chem_jacobian(x, k: ChemParams) -> np.ndarray:
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10, x11 = x
    k1, k2, k3, k4, k5, k6 = k.k
    d1 = np.array([k1 * x2 * x3, k1 * x1 * x3, k1 * x1 * x2])  # d r1 / d(x1, x2, x3)
    d4 = np.array([k4 * x9, k4 * x8])                          # d r4 / d(x8, x9)
    d6 = np.array([k6 * x11, k6 * x10])                        # d r6 / d(x10, x11)
    J = np.zeros((11, 11))
    J[0, 0:3] = -d1
    J[1, 0:3] = -d1
    J[2, 0:3] = -d1
    J[3, 0:3] = d1
    J[3, 3], J[3, 4] = -k2, k3
    J[4, 3], J[4, 4] = k2, -k3
    J[5, 0:3] = d1
    J[6, 6] = -k5
    J[6, 7:9] = d4
    J[6, 9:11] = d6
    J[7, 6] = k5
    J[7, 7:9] = -d4
    J[7, 9:11] = d6
    J[8, 6] = k5
    J[8, 7:9] = -d4
    J[9, 0:3] = d1
    J[9, 9:11] = -d6
    J[10, 9:11] = -d6
    return J


def chem_model(params: ChemParams | None = None, dt=0.025, span=0.25, uncertainty=0.01) -> ContinuousModel:
    """The 11-species mass-action benchmark with relative process and monitor noise."""
    params = params or ChemParams()
    x0 = np.asarray(params.x0)
    scale = (uncertainty * x0) ** 2
    # Zero initial concentrations would give zero noise; keep a floor so R stays PD.
    scale = np.where(scale > 0, scale, uncertainty ** 2)
    noise = NoiseSpec(np.diag(scale), scale)
    return ContinuousModel(
        lambda x: chem_derivatives(x, params),
        lambda x: chem_jacobian(x, params),
        noise,
        dt,
        span,
    )


def format_trajectory_csv(samples) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n = len(samples[0][1]) if samples else 0
    writer.writerow(["t"] + [f"x{i}" for i in range(1, n + 1)])
    for t, x in samples:
        writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in x])
    return buf.getvalue()


def write_trajectory_csv(samples, path) -> None:
    Path(path).write_text(format_trajectory_csv(samples), newline="\n")
