"""Bayesian state reconstruction and the entropic state fed back to the controller."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import selection_matrix
from .errors import DivergenceError, NumericalError, ParameterError

__all__ = [
    "GaussianBelief",
    "EntropicState",
    "kf_predict",
    "kf_update",
    "ekf_update",
    "hekf_predict",
    "model_predict",
    "entropic_state",
    "logdet",
    "mutual_information",
    "divergence_check",
    "CRASH_TRACE",
]

CRASH_TRACE = 1e12


def _sym(m):
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray
    cycle: int = 0

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (len(mean), len(mean)):
            raise ParameterError(f"covariance shape {cov.shape} does not match mean length {len(mean)}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n(self):
        return len(self.mean)


@dataclass(frozen=True)
class EntropicState:
    value: float
    mode: str
    singular: bool = False


def _checked(mean, cov, cycle, threshold=CRASH_TRACE):
    b = GaussianBelief(mean, _sym(cov), cycle)
    if divergence_check(b, threshold):
        raise DivergenceError(f"error covariance overflow at cycle {cycle} (trace {np.trace(cov):.3e})")
    return b


def kf_predict(b: GaussianBelief, A, Q) -> GaussianBelief:
    """Time update for ``x_{k+1} = A^T x_k + v_k``."""
    A = np.asarray(A, dtype=float)
    F = A.T
    return _checked(F @ b.mean, F @ b.cov @ A + Q, b.cycle + 1)


def model_predict(b: GaussianBelief, model) -> GaussianBelief:
    mean, cov = model.predict(b.mean, b.cov)
    return _checked(mean, cov, b.cycle + 1)


def hekf_predict(b: GaussianBelief, model, dt_span=None) -> GaussianBelief:
    """Hybrid EKF time update over one sampling interval (or ``dt_span`` if given)."""
    if dt_span is not None and abs(dt_span - model.span) > 1e-12:
        model = type(model)(model.f, model.jac, model.noise, model.dt, dt_span)
    return model_predict(b, model)


def kf_update(b: GaussianBelief, nodes, R, z) -> GaussianBelief:
    """Measurement update with selection rows for ``nodes``; Joseph-form covariance."""
    n = b.n
    C = selection_matrix(nodes, n)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if z.shape != (C.shape[0],):
        raise ParameterError(f"measurement has {z.size} entries, monitor set has {C.shape[0]}")
    P = b.cov
    PCt = P @ C.T
    S = _sym(C @ PCt + R)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise NumericalError("innovation covariance is not positive definite", np.linalg.cond(S)) from None
    # K = P C^T S^-1 via two triangular solves
    K = np.linalg.solve(L.T, np.linalg.solve(L, PCt.T)).T
    innov = z - C @ b.mean
    mean = b.mean + K @ innov
    IKC = np.eye(n) - K @ C
    cov = IKC @ P @ IKC.T + K @ R @ K.T
    return GaussianBelief(mean, _sym(cov), b.cycle)


ekf_update = kf_update  # the monitor map is a linear selection, so no relinearization is needed


def logdet(P) -> float:
    """Log-determinant via Cholesky; ``-inf`` for singular PSD input."""
    P = np.asarray(P, dtype=float)
    try:
        L = np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        sign, val = np.linalg.slogdet(P)
        if sign <= 0:
            return float("-inf")
        return float(val)
    diag = np.diag(L)
    if np.any(diag == 0):
        return float("-inf")
    return float(2.0 * np.sum(np.log(diag)))


def entropic_state(b, mode: str = "trace") -> EntropicState:
    """``trace(P)``, or Gaussian differential entropy ``0.5 log det(2 pi e P)``."""
    P = b.cov if isinstance(b, GaussianBelief) else np.asarray(b, dtype=float)
    if mode == "trace":
        return EntropicState(float(np.trace(P)), mode)
    if mode == "logdet":
        n = P.shape[0]
        ld = logdet(P)
        if ld == float("-inf"):
            return EntropicState(ld, mode, singular=True)
        return EntropicState(0.5 * (n * np.log(2 * np.pi * np.e) + ld), mode)
    raise ParameterError(f"unknown entropic-state mode {mode!r}")


def mutual_information(prior_cov, post_cov) -> float:
    """Gaussian information gain ``H(prior) - H(posterior)``."""
    vals = []
    for name, P in (("prior", prior_cov), ("posterior", post_cov)):
        P = np.asarray(P, dtype=float)
        try:
            L = np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            raise NumericalError(f"{name} covariance is not positive definite", np.linalg.cond(P)) from None
        vals.append(2.0 * np.sum(np.log(np.diag(L))))
    return 0.5 * (vals[0] - vals[1])


def divergence_check(b, threshold: float = CRASH_TRACE) -> bool:
    P = b.cov if isinstance(b, GaussianBelief) else np.asarray(b)
    if not np.all(np.isfinite(P)):
        return True
    return bool(np.trace(P) > threshold)
