"""Built-in benchmark networks."""
from __future__ import annotations

import numpy as np

from .dynamics import ChemParams, chem_jacobian
from .graph import Digraph, matrix_to_digraph

# Seven-node linear network; A[i, j] is the dependency weight of node j+1 on node i+1.
EXAMPLE1_A = np.array([
    [0.0, 0.0, -0.3, 0.9, 0.0, 0.4, 0.0],
    [1.2, 1.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, -0.5, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, -0.6, 0.0, 0.0, 0.0, 0.0, 1.7],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
])

EXAMPLE1_Q = 1e-6
EXAMPLE1_MEAS_VAR = 0.005

# Benchmark density grid. Scale-free rows keyed by average edge count: (alpha, beta, gamma).
# Row 600 repeats the 210 parameters exactly as tabulated.
TABLE1_SCALEFREE = {
    210: (0.41, 0.54, 0.05),
    370: (0.21, 0.74, 0.05),
    600: (0.41, 0.54, 0.05),
    1620: (0.05, 0.94, 0.01),
}
TABLE1_ER = {210: 0.021, 370: 0.037, 600: 0.060, 1620: 0.162}


def example1_graph() -> Digraph:
    return matrix_to_digraph(EXAMPLE1_A)


def chem_graph(params: ChemParams | None = None) -> Digraph:
    """Dependency digraph of the reaction network: edge i -> j iff x_i appears in xdot_j.

    Weights are the Jacobian entries at unit concentrations (every structural
    entry is nonzero there), so the incident matrix is the transposed Jacobian.
    """
    params = params or ChemParams()
    J = chem_jacobian(np.ones(11), params)
    return matrix_to_digraph(J.T)
