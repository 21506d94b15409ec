"""Seeded random digraph generators (Erdos-Renyi and directed scale-free)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .graph import Digraph, incident_matrix, matrix_to_digraph, scc

__all__ = ["GenSpec", "gen_er", "gen_scalefree", "assign_weights", "stabilize", "spectral_radius", "generate"]


@dataclass(frozen=True)
class GenSpec:
    topology: str = "er"
    n: int = 100
    p: float = 0.021
    alpha: float = 0.41
    beta: float = 0.54
    gamma: float = 0.05
    delta_in: float = 1.0
    delta_out: float = 1.0
    weight_low: float = -1.0
    weight_high: float = 1.0
    spectral_target: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.topology not in ("er", "scalefree"):
            raise ParameterError(f"unknown topology {self.topology!r}")
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")
        _check_probs(self.alpha, self.beta, self.gamma)
        if self.delta_in < 0 or self.delta_out < 0:
            raise ParameterError("attachment offsets must be nonnegative")
        if not self.weight_low < self.weight_high:
            raise ParameterError("weight_low must be below weight_high")
        if self.spectral_target < 0:
            raise ParameterError("spectral_target must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")


def _check_probs(alpha, beta, gamma):
    if min(alpha, beta, gamma) < 0 or abs(alpha + beta + gamma - 1.0) > 1e-9:
        raise ParameterError(f"alpha+beta+gamma must be 1, got {alpha + beta + gamma}")


def gen_er(n: int, p: float, rng: np.random.Generator) -> Digraph:
    """Each ordered pair ``(i, j)``, ``i != j``, gets an edge with probability ``p``."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    rows, cols = np.nonzero(mask)
    return Digraph(n, tuple((int(i) + 1, int(j) + 1, 1.0) for i, j in zip(rows, cols)))


def gen_scalefree(n, alpha, beta, gamma, rng, delta_in=1.0, delta_out=1.0, max_redraw=100) -> Digraph:
    """Three-event preferential-attachment growth, seeded with a 2-node cycle.

    alpha: new node -> existing node picked by in-degree + delta_in.
    beta: existing -> existing, source by out-degree + delta_out, target by in-degree + delta_in.
    gamma: existing node picked by out-degree + delta_out -> new node.
    """
    _check_probs(alpha, beta, gamma)
    if n < 2:
        raise ParameterError("scale-free growth needs n >= 2")
    indeg = np.zeros(n)
    outdeg = np.zeros(n)
    indeg[:2] = outdeg[:2] = 1
    size = 2
    edges = {(0, 1), (1, 0)}

    def pick(deg, delta):
        cum = np.cumsum(deg[:size] + delta)
        if cum[-1] <= 0:
            return int(rng.integers(size))
        return min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), size - 1)

    while size < n:
        u = rng.random()
        if u < alpha:
            target = pick(indeg, delta_in)
            edges.add((size, target))
            outdeg[size] += 1
            indeg[target] += 1
            size += 1
        elif u < alpha + beta:
            for _ in range(max_redraw):
                src = pick(outdeg, delta_out)
                dst = pick(indeg, delta_in)
                if src != dst and (src, dst) not in edges:
                    edges.add((src, dst))
                    outdeg[src] += 1
                    indeg[dst] += 1
                    break
        else:
            source = pick(outdeg, delta_out)
            edges.add((source, size))
            outdeg[source] += 1
            indeg[size] += 1
            size += 1
    return Digraph(n, tuple((i + 1, j + 1, 1.0) for i, j in sorted(edges)))


def assign_weights(g: Digraph, weight_low: float, weight_high: float, rng) -> Digraph:
    if not weight_low < weight_high:
        raise ParameterError("weight_low must be below weight_high")
    weights = []
    for _ in g.edges:
        w = rng.uniform(weight_low, weight_high)
        while abs(w) < 1e-6:
            w = rng.uniform(weight_low, weight_high)
        weights.append(w)
    return g.with_weights(weights)


def spectral_radius(m) -> float:
    """Spectral radius of a square matrix.

    Computed block-wise over the strongly connected components of the matrix's
    sparsity pattern: the matrix is permutation-similar to a block triangular
    one, so the spectrum is the union of the diagonal blocks' spectra. Acyclic
    parts therefore give exactly 0 instead of round-off sized eigenvalues.
    """
    m = np.asarray(m, dtype=float)
    if m.size == 0 or not np.any(m):
        return 0.0
    rho = 0.0
    for comp in scc(matrix_to_digraph(m)).components:
        idx = np.asarray(comp) - 1
        block = m[np.ix_(idx, idx)]
        if len(idx) == 1:
            rho = max(rho, abs(block[0, 0]))
        else:
            rho = max(rho, float(np.max(np.abs(np.linalg.eigvals(block)))))
    return rho


def stabilize(g: Digraph, spectral_target: float) -> Digraph:
    """Scale all weights so the transition matrix has spectral radius ``spectral_target``."""
    if spectral_target <= 0:
        raise ParameterError("spectral_target must be > 0")
    rho = spectral_radius(incident_matrix(g).T)
    if rho == 0.0:
        return g
    scale = spectral_target / rho
    return g.with_weights(w * scale for _, _, w in g.edges)


def generate(spec: GenSpec) -> Digraph:
    rng = np.random.default_rng(spec.seed)
    if spec.topology == "er":
        g = gen_er(spec.n, spec.p, rng)
    else:
        g = gen_scalefree(spec.n, spec.alpha, spec.beta, spec.gamma, rng,
                          delta_in=spec.delta_in, delta_out=spec.delta_out)
    g = assign_weights(g, spec.weight_low, spec.weight_high, rng)
    if spec.spectral_target > 0:
        g = stabilize(g, spec.spectral_target)
    return g
