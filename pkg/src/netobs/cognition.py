"""Cognitive controller: action library, value-to-go learning, planning and selection."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .perception import GaussianBelief, entropic_state

__all__ = [
    "MonitorAction",
    "ValueTable",
    "PlanSpec",
    "build_action_library",
    "entropic_reward",
    "learn_update",
    "hypothesized_entropies",
    "plan",
    "select_action",
]


@dataclass(frozen=True)
class MonitorAction:
    id: int
    nodes: tuple[int, ...]


@dataclass
class ValueTable:
    values: np.ndarray
    learn_rate: float = 0.2
    discount: float = 0.8
    explore: float = 0.05
    explore_decay: float = 0.99

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if not 0.0 <= self.learn_rate <= 1.0:
            raise ParameterError("learn_rate must lie in [0, 1]")
        if not 0.0 <= self.discount < 1.0:
            raise ParameterError("discount must lie in [0, 1)")
        if not 0.0 <= self.explore <= 1.0:
            raise ParameterError("explore must lie in [0, 1]")
        if not 0.0 < self.explore_decay <= 1.0:
            raise ParameterError("explore_decay must lie in (0, 1]")

    @classmethod
    def zeros(cls, size: int, **params) -> "ValueTable":
        return cls(np.zeros(size), **params)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class PlanSpec:
    num_hypothesized: int = 30
    depth: int = 2

    def __post_init__(self):
        if self.num_hypothesized < 1:
            raise ParameterError("num_hypothesized must be >= 1")
        if self.depth < 1:
            raise ParameterError("depth must be >= 1")


def build_action_library(accessible, mode: str, cardinality: int) -> list[MonitorAction]:
    """All monitor sets of the configured size, in lexicographic order, with ids from 1.

    ``mode="select"`` keeps ``cardinality`` nodes; ``mode="dismiss"`` drops
    ``cardinality`` nodes from the accessible set.
    """
    nodes = sorted(set(int(v) for v in accessible))
    m = len(nodes)
    if cardinality < 1 or cardinality > m:
        raise ParameterError(f"cardinality {cardinality} outside 1..{m}")
    if mode == "select":
        size = cardinality
    elif mode == "dismiss":
        size = m - cardinality
        if size < 1:
            raise ParameterError("cannot dismiss every accessible node")
    else:
        raise ParameterError(f"unknown action mode {mode!r}")
    return [MonitorAction(i, combo) for i, combo in enumerate(itertools.combinations(nodes, size), start=1)]


def entropic_reward(h_prev: float, h_cur: float, form: str = "relative") -> float:
    """Relative entropy reduction ``(h_prev - h_cur) / h_prev``.

    ``form="difference"`` gives ``h_prev - h_cur``, for entropies that may be
    nonpositive (log-determinant mode).
    """
    if form == "difference":
        return float(h_prev - h_cur)
    if h_prev <= 0:
        raise ParameterError(f"relative reward needs a positive previous entropic state, got {h_prev}")
    return float((h_prev - h_cur) / h_prev)


def learn_update(vt: ValueTable, action, reward: float) -> ValueTable:
    a = (action.id if isinstance(action, MonitorAction) else int(action)) - 1
    if not 0 <= a < len(vt.values):
        raise ParameterError(f"action id {a + 1} outside 1..{len(vt.values)}")
    target = reward + vt.discount * float(np.max(vt.values))
    vt.values[a] = (1.0 - vt.learn_rate) * vt.values[a] + vt.learn_rate * target
    return vt


def hypothesized_entropies(belief: GaussianBelief, model, actions, meas_var, depth, mode="trace"):
    """Entropic states after ``depth`` measurement-free predict/update cycles, per action.

    Every hypothesized posterior covariance is kept as ``B - U U^T`` where ``B``
    is the shared measurement-free propagation and ``U`` collects the gain
    columns of that action's updates; this costs one shared ``n^3`` propagation
    per depth level instead of one per action. Returns an array ``(K, depth)``.
    """
    idx = np.asarray([a.nodes for a in actions], dtype=int) - 1
    K, q = idx.shape
    meas_var = np.asarray(meas_var, dtype=float)
    mean, B = model.predict(belief.mean, belief.cov)
    n = len(mean)
    rows = np.arange(K)[:, None]
    Rdiag = meas_var[idx]
    U = np.zeros((K, n, 0))
    out = np.empty((K, depth))
    for d in range(depth):
        if d:
            mean, Phi, Qd = model.linearize(mean)
            B = Phi @ B @ Phi.T + Qd
            B = 0.5 * (B + B.T)
            U = Phi @ U
        PCt = np.moveaxis(B[:, idx], 0, 1)                 # (K, n, q)
        if U.shape[2]:
            PCt = PCt - U @ np.swapaxes(U[rows, idx, :], 1, 2)
        S = PCt[rows, idx, :]                               # (K, q, q)
        S = 0.5 * (S + np.swapaxes(S, 1, 2))
        S[:, np.arange(q), np.arange(q)] += Rdiag
        L = np.linalg.cholesky(S)
        G = np.swapaxes(np.linalg.solve(L, np.swapaxes(PCt, 1, 2)), 1, 2)
        U = np.concatenate([U, G], axis=2)
        if mode == "trace":
            out[:, d] = np.trace(B) - np.einsum("kij,kij->k", U, U)
        elif mode == "logdet":
            P = B[None] - U @ np.swapaxes(U, 1, 2)
            sign, ld = np.linalg.slogdet(P)
            ld = np.where(sign > 0, ld, -np.inf)
            out[:, d] = 0.5 * (n * np.log(2 * np.pi * np.e) + ld)
        else:
            raise ParameterError(f"unknown entropic-state mode {mode!r}")
    return out


def plan(belief, vt: ValueTable, library, spec: PlanSpec, model, meas_var, rng,
         mode="trace", current=None, reward_form="relative") -> ValueTable:
    """Update value-to-go of sampled hypothesized actions from predicted entropy reductions.

    ``current`` (an action id) is always among the hypothesized actions.
    The belief passed in is never modified.
    """
    size = len(library)
    if spec.num_hypothesized > size:
        raise ParameterError(f"num_hypothesized={spec.num_hypothesized} exceeds library size {size}")
    k = spec.num_hypothesized
    if k == size:
        chosen = np.arange(size)
    elif current is None:
        chosen = np.sort(rng.choice(size, size=k, replace=False))
    else:
        others = np.delete(np.arange(size), current - 1)
        chosen = np.sort(np.append(rng.choice(others, size=k - 1, replace=False), current - 1))
    actions = [library[i] for i in chosen]
    H = hypothesized_entropies(belief, model, actions, meas_var, spec.depth, mode)
    h0 = entropic_state(belief, mode).value
    prev = np.concatenate([np.full((len(actions), 1), h0), H[:, :-1]], axis=1)
    if reward_form == "difference":
        rewards = prev - H
    else:
        if np.any(prev <= 0):
            raise ParameterError("relative reward needs positive entropic states")
        rewards = (prev - H) / prev
    weights = vt.discount ** np.arange(spec.depth)
    ret = rewards @ weights
    vt.values[chosen] = (1.0 - vt.learn_rate) * vt.values[chosen] + vt.learn_rate * ret
    return vt


def select_action(vt: ValueTable, rng) -> int:
    """Epsilon-greedy choice of an action id (1-based); ties go to the lowest id. Decays epsilon."""
    if len(vt.values) == 0:
        raise ParameterError("empty action library")
    explore = rng.random() < vt.explore
    if explore:
        a = int(rng.integers(len(vt.values)))
    else:
        a = int(np.argmax(vt.values))
    vt.explore *= vt.explore_decay
    return a + 1
