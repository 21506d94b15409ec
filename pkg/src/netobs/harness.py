"""Experiment orchestration: seeded realizations, Monte Carlo batches, aggregation and CSV output."""
from __future__ import annotations

import dataclasses
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .cognition import (PlanSpec, ValueTable, build_action_library, entropic_reward, learn_update, plan,
                        select_action)
from .dynamics import ChemParams, LinearModel, NoiseSpec, chem_model, measure
from .errors import AggregationError, DivergenceError, NumericalError, ParameterError
from .graph import incident_matrix, lsb_monitor_sets, read_edge_list
from .netgen import GenSpec, gen_er, gen_scalefree, generate
from .perception import GaussianBelief, divergence_check, entropic_state, kf_update, model_predict
from .scenarios import EXAMPLE1_A, EXAMPLE1_MEAS_VAR, EXAMPLE1_Q, TABLE1_ER, TABLE1_SCALEFREE

log = logging.getLogger(__name__)

MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(state: int) -> int:
    z = (state + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def realization_seed(master_seed: int, run_index: int) -> int:
    """Seed for run ``run_index``: the ``run_index``-th output of SplitMix64 started at ``master_seed``."""
    return splitmix64((master_seed + (run_index - 1) * 0x9E3779B97F4A7C15) & MASK64)


@dataclass
class ExperimentConfig:
    # network source: example1 | example3 | generated | graph
    model: str = "example1"
    graph_file: str | None = None
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
    # linear networks: discrete x' = A^T x, or xdot = A^T x sampled at obs_rate
    time_model: str = "discrete"
    orientation: str = "transpose"
    process_var: float = 1e-6
    meas_var: float = 0.005
    # continuous chemistry
    rate_constants: list = field(default_factory=lambda: [1.0] * 6)
    uncertainty: float = 0.01
    integration_dt: float = 0.025
    # initial conditions; init_mean None means "start at x0"
    x0: float | list = 1.0
    init_mean: float | list | None = 0.0
    init_cov: float | list = 1.0
    # controller
    accessible: list | None = None
    action_mode: str = "select"
    cardinality: int = 1
    controller: bool = True
    fixed_nodes: list | None = None
    baseline_rerandomize: str = "run"
    num_hypothesized: int = 30
    depth: int = 2
    learn_rate: float = 0.2
    discount: float = 0.8
    explore: float = 0.05
    explore_decay: float = 0.99
    entropic_mode: str = "trace"
    crash_threshold: float = 1e12
    # run
    duration: float = 10.0
    obs_rate: float = 10.0
    realizations: int = 1
    master_seed: int = 0
    output_dir: str = "out"
    workers: int = 1

    def __post_init__(self):
        if self.duration <= 0 or self.obs_rate <= 0:
            raise ParameterError("duration and obs_rate must be positive")
        if self.realizations < 1:
            raise ParameterError("realizations must be >= 1")
        choices = {
            "model": ("example1", "example3", "generated", "graph"),
            "time_model": ("discrete", "sampled"),
            "orientation": ("transpose", "direct"),
            "action_mode": ("select", "dismiss"),
            "baseline_rerandomize": ("run", "cycle"),
            "entropic_mode": ("trace", "logdet"),
        }
        for key, allowed in choices.items():
            if getattr(self, key) not in allowed:
                raise ParameterError(f"{key} must be one of {allowed}, got {getattr(self, key)!r}")
        if self.model == "graph" and not self.graph_file:
            raise ParameterError("model 'graph' needs graph_file")
        if not 0 <= self.master_seed < 2**64:
            raise ParameterError("master_seed must be a 64-bit unsigned integer")

    @property
    def cycles(self) -> int:
        return int(round(self.duration * self.obs_rate))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        types = {f.name: str(f.type) for f in dataclasses.fields(cls)}
        clean = {}
        for key, value in data.items():
            # YAML 1.1 reads exponent literals such as 1e-06 as strings
            if isinstance(value, str) and types[key].startswith(("float", "int")):
                try:
                    value = int(value) if types[key].startswith("int") else float(value)
                except ValueError:
                    raise ParameterError(f"{key}: expected a number, got {value!r}") from None
            clean[key] = value
        return cls(**clean)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise ParameterError("config file must hold a flat key/value mapping")
        return cls.from_mapping(data)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# --- built-in experiment presets ---------------------------------------------------

def example1_config(q: int = 1, controller: bool = True, **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig(
        model="example1", time_model="sampled", process_var=EXAMPLE1_Q, meas_var=EXAMPLE1_MEAS_VAR,
        x0=1.0, init_mean=0.0, init_cov=1.0, cardinality=q, controller=controller,
        num_hypothesized=30, depth=2, duration=10.0, obs_rate=10.0, realizations=50,
    )
    return cfg.replace(**overrides)


def example2_config(topology: str, density: float, **overrides) -> ExperimentConfig:
    """``density`` is the edge probability for ER, or the benchmark edge count for scale-free."""
    cfg = ExperimentConfig(
        model="generated", topology=topology, n=100, time_model="discrete",
        process_var=EXAMPLE1_Q, meas_var=EXAMPLE1_MEAS_VAR, x0=1.0, init_mean=0.0, init_cov=1.0,
        cardinality=1, num_hypothesized=150, depth=2, duration=10.0, obs_rate=10.0, realizations=50,
    )
    if topology == "er":
        cfg = cfg.replace(p=float(density))
    elif topology == "scalefree":
        key = int(round(density))
        if key not in TABLE1_SCALEFREE:
            raise ParameterError(f"scale-free density must be one of {sorted(TABLE1_SCALEFREE)}")
        a, b, g = TABLE1_SCALEFREE[key]
        cfg = cfg.replace(alpha=a, beta=b, gamma=g)
    else:
        raise ParameterError(f"unknown topology {topology!r}")
    return cfg.replace(**overrides)


def example3_config(dismiss: int = 1, fixed_lsb: bool = False, **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig(
        model="example3", uncertainty=0.01, integration_dt=0.025, x0=1.0, init_mean=None,
        init_cov=1e-4, action_mode="dismiss", cardinality=dismiss, num_hypothesized=20, depth=1,
        duration=20.0, obs_rate=4.0, realizations=200,
    )
    if fixed_lsb:
        cfg = cfg.replace(controller=False, fixed_nodes=[4, 6, 7], realizations=100)
    return cfg.replace(**overrides)


# --- realization ------------------------------------------------------------------

@dataclass
class RunRecord:
    run_index: int
    seed: int
    library: tuple
    cycle: np.ndarray
    t: np.ndarray
    H: np.ndarray
    sq_err: np.ndarray
    reward: np.ndarray
    action: np.ndarray
    status: str = "completed"
    crash_cycle: int | None = None
    crash_reason: str = ""

    @property
    def crashed(self) -> bool:
        return self.status == "crashed"

    def nodes(self, i) -> tuple:
        return self.library[int(self.action[i]) - 1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("cycle,t,H,sq_err,reward,action_id,nodes\n")
        for i in range(len(self.cycle)):
            nodes = " ".join(str(v) for v in self.nodes(i))
            buf.write(f"{self.cycle[i]},{self.t[i]:.17g},{self.H[i]:.17g},{self.sq_err[i]:.17g},"
                      f"{self.reward[i]:.17g},{self.action[i]},{nodes}\n")
        return buf.getvalue()


def _vector(value, n):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ParameterError(f"expected {n} values, got {arr.shape}")
    return arr


def _cov(value, n):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(n)
    if arr.ndim == 1:
        return np.diag(_vector(arr, n))
    return arr


def build_network(cfg: ExperimentConfig, rng):
    """Model and digraph for one realization (generated graphs draw from ``rng``)."""
    if cfg.model == "example3":
        n = 11
        params = ChemParams(tuple(cfg.rate_constants), tuple(_vector(cfg.x0, n)))
        model = chem_model(params, dt=cfg.integration_dt, span=1.0 / cfg.obs_rate, uncertainty=cfg.uncertainty)
        from .scenarios import chem_graph
        return model, chem_graph(params)
    if cfg.model == "example1":
        from .graph import matrix_to_digraph
        g = matrix_to_digraph(EXAMPLE1_A)
    elif cfg.model == "graph":
        g = read_edge_list(cfg.graph_file)
    else:
        spec = GenSpec(cfg.topology, cfg.n, cfg.p, cfg.alpha, cfg.beta, cfg.gamma, cfg.delta_in, cfg.delta_out,
                       cfg.weight_low, cfg.weight_high, cfg.spectral_target, int(rng.integers(2**63)))
        g = generate(spec)
    A = incident_matrix(g)
    if cfg.orientation == "direct":
        A = A.T
    noise = NoiseSpec(cfg.process_var * np.eye(g.n), cfg.meas_var)
    if cfg.time_model == "sampled":
        model = LinearModel.sampled(A, 1.0 / cfg.obs_rate, noise)
    else:
        model = LinearModel(A, noise)
    return model, g


def make_library(cfg: ExperimentConfig, n: int):
    if cfg.fixed_nodes:
        from .cognition import MonitorAction
        return [MonitorAction(1, tuple(sorted(int(v) for v in cfg.fixed_nodes)))]
    accessible = cfg.accessible if cfg.accessible else range(1, n + 1)
    return build_action_library(accessible, cfg.action_mode, cfg.cardinality)


def run_realization(cfg: ExperimentConfig, run_index: int) -> RunRecord:
    """One seeded perception-action run; divergence ends the run with status ``crashed``."""
    seed = realization_seed(cfg.master_seed, run_index)
    rng = np.random.default_rng(seed)
    model, g = build_network(cfg, rng)
    n = model.n
    x = _vector(cfg.x0, n)
    init_mean = x.copy() if cfg.init_mean is None else _vector(cfg.init_mean, n)
    belief = GaussianBelief(init_mean, _cov(cfg.init_cov, n))
    library = make_library(cfg, n)
    use_controller = cfg.controller and not cfg.fixed_nodes
    vt = ValueTable.zeros(len(library), learn_rate=cfg.learn_rate, discount=cfg.discount,
                          explore=cfg.explore, explore_decay=cfg.explore_decay)
    spec = PlanSpec(min(cfg.num_hypothesized, len(library)), cfg.depth)
    reward_form = "difference" if cfg.entropic_mode == "logdet" else "relative"
    meas_var = model.noise.meas_var

    action = int(rng.integers(len(library))) + 1
    h_prev = entropic_state(belief, cfg.entropic_mode).value
    cols = {k: [] for k in ("cycle", "t", "H", "sq_err", "reward", "action")}
    status, crash_cycle, reason = "completed", None, ""
    for k in range(1, cfg.cycles + 1):
        nodes = library[action - 1].nodes
        try:
            x = model.transition(x, rng)
            R = model.noise.R(nodes)
            z = measure(x, nodes, R, rng)
            belief = kf_update(model_predict(belief, model), nodes, R, z)
            if divergence_check(belief, cfg.crash_threshold):
                raise DivergenceError(f"error covariance overflow (trace {np.trace(belief.cov):.3e})")
        except (DivergenceError, NumericalError) as exc:
            status, crash_cycle, reason = "crashed", k, str(exc)
            break
        h = entropic_state(belief, cfg.entropic_mode).value
        r = entropic_reward(h_prev, h, reward_form)
        cols["cycle"].append(k)
        cols["t"].append(k / cfg.obs_rate)
        cols["H"].append(h)
        cols["sq_err"].append(float(np.sum((x - belief.mean) ** 2)))
        cols["reward"].append(r)
        cols["action"].append(action)
        if use_controller:
            learn_update(vt, action, r)
            try:
                plan(belief, vt, library, spec, model, meas_var, rng, cfg.entropic_mode,
                     current=action, reward_form=reward_form)
            except (DivergenceError, NumericalError, np.linalg.LinAlgError) as exc:
                status, crash_cycle, reason = "crashed", k, f"planning: {exc}"
                break
            action = select_action(vt, rng)
        elif cfg.baseline_rerandomize == "cycle":
            action = int(rng.integers(len(library))) + 1
        h_prev = h
    return RunRecord(
        run_index, seed, tuple(a.nodes for a in library),
        np.asarray(cols["cycle"], dtype=int), np.asarray(cols["t"]), np.asarray(cols["H"]),
        np.asarray(cols["sq_err"]), np.asarray(cols["reward"]), np.asarray(cols["action"], dtype=int),
        status, crash_cycle, reason,
    )


def _run_one(args):
    cfg, idx = args
    return run_realization(cfg, idx)


def run_monte_carlo(cfg: ExperimentConfig, indices=None) -> list[RunRecord]:
    """Realizations ``1..cfg.realizations`` (or ``indices``), returned in run-index order."""
    indices = list(range(1, cfg.realizations + 1)) if indices is None else list(indices)
    if cfg.workers > 1 and len(indices) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_one, [(cfg, i) for i in indices]))
    else:
        records = [run_realization(cfg, i) for i in indices]
    crashed = sum(r.crashed for r in records)
    if crashed:
        log.info("%d of %d realizations crashed", crashed, len(records))
    return sorted(records, key=lambda r: r.run_index)


# --- aggregation ------------------------------------------------------------------

def aggregate_histogram(records) -> list[dict]:
    """Executed-action counts over every cycle of every run (crashed runs up to the crash)."""
    if not records:
        raise AggregationError("no records to aggregate")
    library = records[0].library
    if any(r.library != library for r in records):
        raise ParameterError("records were produced with different action libraries")
    counts = np.zeros(len(library), dtype=int)
    for r in records:
        counts += np.bincount(r.action - 1, minlength=len(library))
    total = counts.sum()
    return [
        {"action_id": i + 1, "nodes": library[i], "count": int(c), "frequency": float(c / total) if total else 0.0}
        for i, c in enumerate(counts)
    ]


def node_frequency(records, accessible=None, dismissed=False) -> dict[int, float]:
    """Per-node share of cycles in which the node was monitored (or left out, with ``dismissed``)."""
    hist = aggregate_histogram(records)
    nodes = sorted(set(accessible) if accessible else {v for h in hist for v in h["nodes"]})
    if dismissed and not accessible:
        nodes = list(range(1, max(nodes) + 1))
    total = sum(h["count"] for h in hist)
    freq = {v: 0.0 for v in nodes}
    for h in hist:
        members = set(nodes) - set(h["nodes"]) if dismissed else h["nodes"]
        for v in members:
            freq[v] += h["count"] / total
    return freq


def aggregate_curves(records) -> dict:
    """Per-cycle means across completed runs plus a 95% half-width on the entropic state."""
    completed = [r for r in records if not r.crashed]
    excluded = len(records) - len(completed)
    if not completed:
        raise AggregationError(f"all {len(records)} realizations crashed; nothing to average")
    length = len(completed[0].cycle)
    if any(len(r.cycle) != length for r in completed):
        raise AggregationError("completed records differ in length")
    H = np.vstack([r.H for r in completed])
    err = np.vstack([r.sq_err for r in completed])
    runs = len(completed)
    sd = H.std(axis=0, ddof=1) if runs > 1 else np.zeros(length)
    return {
        "cycle": completed[0].cycle.copy(),
        "t": completed[0].t.copy(),
        "mean_H": H.mean(axis=0),
        "mean_mse": err.mean(axis=0),
        "ci_half": 1.96 * sd / math.sqrt(runs),
        "runs": runs,
        "excluded": excluded,
    }


def lsb_density_study(n: int, grid, realizations: int, rng) -> list[dict]:
    """Average LSB monitor counts over random graphs.

    ``grid`` items are ``("er", p)`` or ``("scalefree", (alpha, beta, gamma))``.
    """
    rows = []
    for topology, param in grid:
        monitors = []
        edges = []
        for _ in range(realizations):
            if topology == "er":
                g = gen_er(n, param, rng)
            else:
                g = gen_scalefree(n, *param, rng)
            monitors.append(len(lsb_monitor_sets(g)))
            edges.append(g.num_edges)
        mean = float(np.mean(monitors))
        rows.append({
            "topology": topology,
            "param": param,
            "mean_edges": float(np.mean(edges)),
            "mean_monitors": mean,
            "monitors": int(math.ceil(mean - 1e-12)),
        })
    return rows


def table1_grid():
    grid = [("scalefree", TABLE1_SCALEFREE[e]) for e in sorted(TABLE1_SCALEFREE)]
    grid += [("er", TABLE1_ER[e]) for e in sorted(TABLE1_ER)]
    return grid


# --- output -----------------------------------------------------------------------

def _g(v) -> str:
    return f"{v:.17g}"


def histogram_csv(records) -> str:
    lines = ["action_id,nodes,count,frequency"]
    for h in aggregate_histogram(records):
        lines.append(f"{h['action_id']},{' '.join(map(str, h['nodes']))},{h['count']},{_g(h['frequency'])}")
    return "\n".join(lines) + "\n"


def curves_csv(curves) -> str:
    lines = ["cycle,t,mean_H,mean_mse,ci_half"]
    for i in range(len(curves["cycle"])):
        lines.append(f"{curves['cycle'][i]},{_g(curves['t'][i])},{_g(curves['mean_H'][i])},"
                     f"{_g(curves['mean_mse'][i])},{_g(curves['ci_half'][i])}")
    return "\n".join(lines) + "\n"


def manifest(cfg: ExperimentConfig, records) -> str:
    doc = {
        "config": cfg.to_dict(),
        "master_seed": cfg.master_seed,
        "realizations": len(records),
        "crash_count": sum(r.crashed for r in records),
        "runs": [
            {"run_index": r.run_index, "seed": r.seed, "status": r.status,
             "crash_cycle": r.crash_cycle, "crash_reason": r.crash_reason}
            for r in records
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_outputs(cfg: ExperimentConfig, records, output_dir=None) -> Path:
    out = Path(output_dir or cfg.output_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    for r in records:
        (out / "runs" / f"{r.run_index}.csv").write_text(r.to_csv(), newline="\n")
    (out / "histogram.csv").write_text(histogram_csv(records), newline="\n")
    try:
        curves = aggregate_curves(records)
    except AggregationError as exc:
        log.warning("curves.csv not written: %s", exc)
    else:
        (out / "curves.csv").write_text(curves_csv(curves), newline="\n")
    (out / "manifest").write_text(manifest(cfg, records), newline="\n")
    return out
