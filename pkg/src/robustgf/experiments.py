"""Experiment protocols: error-vs-perturbation sweeps, noise sweeps, and the
gamma trade-off, with deterministic seeding and CSV emission.

Per trial, a percentage of the graph's edges is perturbed: an uncertain edge
set of that size is drawn uniformly among sets that keep the fully perturbed
graph connected. The activation probability fed to the designers defaults to
1, matching a deterministically perturbed trial; probabilities below 1 switch
every expectation to enumeration or Monte-Carlo automatically.

Trials map onto a process pool when threads > 1; per-trial RNG streams are
spawned from the master seed and results are reduced in trial order, so the
output is bit-identical regardless of the worker count.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .config import ConfigError, graph_from_spec, signal_from_spec
from .errors import DegenerateSpectrum, GenerationFailed
from .estimators import Enumeration, MonteCarlo
from .fir import averaged_fir_error, design_robust_fir, fir_filter_matrix, fit_taps_to_mask, realization_fir_error
from .graph import Graph, eigendecompose, laplacian
from .noisy import (
    NoisyDesignProblem,
    design_noisy_robust_fir,
    output_error,
    realization_output_error,
)
from .oracle import exact_perturbed_eigs
from .perturbation import (
    ENUMERATION_CAP,
    GAP_TOLERANCE,
    FirstOrderCorrections,
    PerturbationModel,
    PerturbedEdge,
    Realization,
    first_order_eigen,
    full_realization,
)
from .spectral import (
    averaged_mask_error,
    build_ideal_mask,
    filter_matrix,
    optimal_robust_mask,
    realization_mask_error,
)

EXPERIMENTS = ("perturbation-sweep", "noise-sweep", "gamma-tradeoff")
MC_EVAL_SAMPLES = 200


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    graph: dict
    trials: int = 100
    seed: int = 0
    mask: dict = field(default_factory=lambda: {"type": "heat", "tau": 1.0})
    fir_order: int = 5
    fractions: tuple = (0.01, 0.05, 0.10, 0.15, 0.20)
    edge_probability: float = 1.0
    sign_policy: str = "mixed"
    noise_variances: tuple = (0.01, 0.05, 0.1, 0.5, 1.0)
    gammas: tuple = (1e-3, 1e-1, 1.0, 1e1, 1e3)
    gamma: float = 1.0
    noise_variance: float = 0.1
    signal: dict = field(default_factory=lambda: {"type": "lowfreq"})
    threads: int = 1
    correction_bound: float | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}, expected one of {EXPERIMENTS}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for f in self.fractions:
            if not 0.0 <= f < 1.0:
                raise ConfigError(f"perturbed-edge fraction {f} outside [0, 1)")
        if not 0.0 <= self.edge_probability <= 1.0:
            raise ConfigError("edge_probability must be in [0, 1]")
        if self.sign_policy not in ("mixed", "remove", "add"):
            raise ConfigError(f"unknown sign policy {self.sign_policy!r}")
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        object.__setattr__(self, "noise_variances", tuple(float(s) for s in self.noise_variances))
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data or "graph" not in data:
            raise ConfigError("config must define 'experiment' and 'graph'")
        data = dict(data)
        for key in ("fractions", "noise_variances", "gammas"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass
class ExperimentResult:
    header: list
    rows: list
    cells: np.ndarray  # raw per-trial values, trials on the first axis


def config_hash(cfg: ExperimentConfig) -> str:
    canon = json.dumps(asdict(cfg), sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def write_csv(fh, result: ExperimentResult, cfg: ExperimentConfig) -> None:
    fh.write(f"#config-hash={config_hash(cfg)}\n")
    fh.write(f"#seed={cfg.seed}\n")
    fh.write(f"#version={__version__}\n")
    fh.write(",".join(result.header) + "\r\n")
    for row in result.rows:
        fh.write(",".join(repr(float(v)) for v in row) + "\r\n")


# --- perturbation set selection ---------------------------------------------

def select_perturbation_set(graph: Graph, fraction: float, sign_policy: str,
                            prob: float, rng: np.random.Generator,
                            max_attempts: int = 200) -> PerturbationModel:
    """Uniformly draw an uncertain edge set of the given size whose full
    application keeps the graph connected.

    Removals come from existing edges, additions from absent pairs; 'mixed'
    assigns each slot to removal or addition with equal probability.
    """
    count = round(fraction * graph.num_edges)
    if fraction > 0.0:
        count = max(1, count)
    present = list(graph.edges)
    edge_set = set(graph.edges)
    absent = [(i, j) for i in range(1, graph.num_nodes + 1)
              for j in range(i + 1, graph.num_nodes + 1) if (i, j) not in edge_set]
    for _ in range(max_attempts):
        if sign_policy == "remove":
            n_remove = count
        elif sign_policy == "add":
            n_remove = 0
        else:
            n_remove = int(np.sum(rng.random(count) < 0.5))
        n_remove = min(n_remove, len(present))
        n_add = min(count - n_remove, len(absent))
        chosen: list[PerturbedEdge] = []
        if n_remove:
            for idx in rng.choice(len(present), size=n_remove, replace=False):
                chosen.append(PerturbedEdge(present[idx], -1, prob))
        if n_add:
            for idx in rng.choice(len(absent), size=n_add, replace=False):
                chosen.append(PerturbedEdge(absent[idx], +1, prob))
        model = PerturbationModel(graph, tuple(chosen))
        toggled = set(graph.edges)
        for pe in chosen:
            if pe.sigma == 1:
                toggled.add(pe.edge)
            else:
                toggled.discard(pe.edge)
        if Graph(graph.num_nodes, tuple(sorted(toggled))).is_connected:
            return model
    raise GenerationFailed(
        f"no connectivity-preserving perturbation set of size {count} in {max_attempts} attempts")


def select_nested_perturbation_sets(graph: Graph, fractions, sign_policy: str,
                                    prob: float, rng: np.random.Generator,
                                    max_attempts: int = 200) -> list[PerturbationModel]:
    """One model per fraction, nested as prefixes of a single ordered draw.

    Coupling the levels this way keeps each set marginally uniform for its
    size while making per-trial error curves comparable across percentages,
    which is what lets ensemble means inherit the monotone trend instead of
    being dominated by whichever level a heavy-tailed trial lands on. Every
    tested prefix must keep the fully perturbed graph connected.
    """
    counts = [max(1, round(f * graph.num_edges)) if f > 0 else 0 for f in fractions]
    total = max(counts)
    present = list(graph.edges)
    edge_set = set(graph.edges)
    absent = [(i, j) for i in range(1, graph.num_nodes + 1)
              for j in range(i + 1, graph.num_nodes + 1) if (i, j) not in edge_set]
    for _ in range(max_attempts):
        rem_pool = list(rng.permutation(len(present)))
        add_pool = list(rng.permutation(len(absent)))
        sequence: list[PerturbedEdge] = []
        for _slot in range(total):
            if sign_policy == "remove":
                removal = True
            elif sign_policy == "add":
                removal = False
            else:
                removal = bool(rng.random() < 0.5)
            if removal and not rem_pool:
                removal = False
            if not removal and not add_pool:
                removal = True
                if not rem_pool:
                    break
            if removal:
                sequence.append(PerturbedEdge(present[rem_pool.pop()], -1, prob))
            else:
                sequence.append(PerturbedEdge(absent[add_pool.pop()], +1, prob))
        if len(sequence) < total:
            raise GenerationFailed("graph too small for the requested perturbation sizes")
        ok = True
        for count in sorted(set(counts)):
            if count == 0:
                continue
            toggled = set(graph.edges)
            for pe in sequence[:count]:
                if pe.sigma == 1:
                    toggled.add(pe.edge)
                else:
                    toggled.discard(pe.edge)
            if not Graph(graph.num_nodes, tuple(sorted(toggled))).is_connected:
                ok = False
                break
        if ok:
            return [PerturbationModel(graph, tuple(sequence[:count])) for count in counts]
    raise GenerationFailed(
        f"no connectivity-preserving nested perturbation sets in {max_attempts} attempts")


def _trial_graph(cfg: ExperimentConfig, rng: np.random.Generator):
    """Generate the trial graph, retrying on a (near-)degenerate spectrum."""
    graph_seed = int(rng.integers(0, 2**31 - 1))
    for bump in range(5):
        graph = graph_from_spec(cfg.graph, graph_seed + 1000003 * bump)
        eig = eigendecompose(laplacian(graph))
        if eig.spectral_gap_min >= GAP_TOLERANCE:
            return graph, eig
        if cfg.graph.get("type") == "file":
            break
    raise DegenerateSpectrum("could not obtain a graph with a simple spectrum")


# --- estimator dispatch for arbitrary activation probabilities ---------------

def _degenerate_pattern(probs: np.ndarray) -> Realization | None:
    if np.all((probs == 0.0) | (probs == 1.0)):
        return Realization(probs == 1.0)
    return None


def _mask_error_any(eig, corr, target, mask, seed: int) -> float:
    point = _degenerate_pattern(corr.probs)
    if point is not None:
        return realization_mask_error(eig, corr, target, mask, point)
    if corr.num_edges <= ENUMERATION_CAP:
        return averaged_mask_error(eig, corr, target, mask, Enumeration())
    return averaged_mask_error(eig, corr, target, mask, MonteCarlo(MC_EVAL_SAMPLES, seed))


def _fir_error_any(eig, corr, taps, nominal_taps, seed: int) -> float:
    point = _degenerate_pattern(corr.probs)
    if point is not None:
        return realization_fir_error(eig, corr, taps, nominal_taps, point)
    if corr.num_edges <= ENUMERATION_CAP:
        return averaged_fir_error(eig, corr, taps, nominal_taps, Enumeration())
    return averaged_fir_error(eig, corr, taps, nominal_taps, MonteCarlo(MC_EVAL_SAMPLES, seed))


def _output_error_any(problem, eig, corr, taps, seed: int) -> float:
    point = _degenerate_pattern(corr.probs)
    if point is not None:
        return realization_output_error(problem, eig, corr, taps, point)
    if corr.num_edges <= ENUMERATION_CAP:
        return output_error(problem, eig, corr, taps, Enumeration())
    return output_error(problem, eig, corr, taps, MonteCarlo(MC_EVAL_SAMPLES, seed))


def _design_estimator(corr, seed: int):
    """Estimator for the noisy design's activation expectations.

    Degenerate probabilities make every sample identical, so a single draw is
    already exact; otherwise enumerate when tractable, sample when not.
    """
    if _degenerate_pattern(corr.probs) is not None:
        return MonteCarlo(1, seed)
    if corr.num_edges <= ENUMERATION_CAP:
        return Enumeration()
    return MonteCarlo(MC_EVAL_SAMPLES, seed)


# --- trial workers -----------------------------------------------------------

def _prefix_corrections(corr, m: int):
    """Corrections for the length-m prefix of a nested uncertain edge set."""
    return FirstOrderCorrections(
        q=corr.q[:, :m],
        delta_u=corr.delta_u[:m],
        delta_lambda=corr.q[:, :m] @ corr.sigma[:m],
        sigma=corr.sigma[:m],
        probs=corr.probs[:m],
    )


def _correction_magnitude(corr) -> float:
    """Largest eigenvector-correction norm under the full activation pattern."""
    if corr.num_edges == 0:
        return 0.0
    shift = np.einsum("m,mni->ni", corr.sigma, corr.delta_u)
    return float(np.max(np.linalg.norm(shift, axis=0)))


def _draw_nested_models(cfg: ExperimentConfig, graph, eig, rng):
    """Nested models plus per-level corrections, redrawn while the first-order
    corrections exceed the configured magnitude bound."""
    attempts = 40 if cfg.correction_bound is not None else 1
    best = None
    for _ in range(attempts):
        models = select_nested_perturbation_sets(graph, cfg.fractions, cfg.sign_policy,
                                                 cfg.edge_probability, rng)
        largest = max(models, key=lambda m: m.num_edges)
        full_corr = first_order_eigen(eig, largest)
        corrs = [_prefix_corrections(full_corr, m.num_edges) for m in models]
        worst = max(_correction_magnitude(c) for c in corrs)
        if best is None or worst < best[0]:
            best = (worst, models, corrs)
        if cfg.correction_bound is None or worst <= cfg.correction_bound:
            return models, corrs
    return best[1], best[2]


def _perturbation_sweep_trial(cfg: ExperimentConfig, trial: int, trial_seed: int) -> np.ndarray:
    rng = np.random.default_rng(trial_seed)
    graph, eig = _trial_graph(cfg, rng)
    mask = build_ideal_mask(eig, cfg.mask)
    target = filter_matrix(eig, mask)
    h_nom = fit_taps_to_mask(eig.eigenvalues, mask, cfg.fir_order)
    models, corrs = _draw_nested_models(cfg, graph, eig, rng)
    out = np.zeros((len(cfg.fractions), 4))
    for fi, frac in enumerate(cfg.fractions):
        if frac == 0.0:
            continue
        model = models[fi]
        corr = corrs[fi]
        eval_seed = int(rng.integers(0, 2**31 - 1))

        d_star = optimal_robust_mask(eig, corr, target)
        f_opt = _mask_error_any(eig, corr, target, d_star, eval_seed)

        exact = exact_perturbed_eigs(graph, model, full_realization(model))
        nof_mask = build_ideal_mask(exact, cfg.mask)
        f_nof = _mask_error_any(eig, corr, target, nof_mask, eval_seed)

        design = design_robust_fir(eig, corr, h_nom, cfg.fir_order)
        g_opt = _fir_error_any(eig, corr, design.taps, h_nom, eval_seed)

        h_nof = fit_taps_to_mask(exact.eigenvalues, nof_mask, cfg.fir_order)
        g_nof = _fir_error_any(eig, corr, h_nof, h_nom, eval_seed)

        out[fi] = (f_opt, f_nof, g_opt, g_nof)
    return out


def _noise_sweep_trial(cfg: ExperimentConfig, trial: int, trial_seed: int) -> np.ndarray:
    rng = np.random.default_rng(trial_seed)
    graph, eig = _trial_graph(cfg, rng)
    mask = build_ideal_mask(eig, cfg.mask)
    h_nom = fit_taps_to_mask(eig.eigenvalues, mask, cfg.fir_order)
    x = signal_from_spec(cfg.signal, eig)
    out_ref = fir_filter_matrix(eig, h_nom) @ x
    out_energy = float(np.sum(out_ref * out_ref))
    out = np.zeros((len(cfg.fractions), len(cfg.noise_variances)))
    for fi, frac in enumerate(cfg.fractions):
        model = select_perturbation_set(graph, frac, cfg.sign_policy, cfg.edge_probability, rng)
        corr = first_order_eigen(eig, model)
        eval_seed = int(rng.integers(0, 2**31 - 1))
        for si, sigma2 in enumerate(cfg.noise_variances):
            problem = NoisyDesignProblem(x, sigma2, cfg.gamma, h_nom, model)
            design = design_noisy_robust_fir(problem, eig, corr,
                                             estimator=_design_estimator(corr, eval_seed))
            d_xy = _output_error_any(problem, eig, corr, design.taps, eval_seed)
            out[fi, si] = d_xy / out_energy
    return out


def _gamma_tradeoff_trial(cfg: ExperimentConfig, trial: int, trial_seed: int) -> np.ndarray:
    rng = np.random.default_rng(trial_seed)
    graph, eig = _trial_graph(cfg, rng)
    mask = build_ideal_mask(eig, cfg.mask)
    h_nom = fit_taps_to_mask(eig.eigenvalues, mask, cfg.fir_order)
    x = signal_from_spec(cfg.signal, eig)
    target = fir_filter_matrix(eig, h_nom)
    target_energy = float(np.sum(target * target))
    out_ref = target @ x
    out_energy = float(np.sum(out_ref * out_ref))
    out = np.zeros((len(cfg.fractions), len(cfg.gammas), 2))
    for fi, frac in enumerate(cfg.fractions):
        model = select_perturbation_set(graph, frac, cfg.sign_policy, cfg.edge_probability, rng)
        corr = first_order_eigen(eig, model)
        eval_seed = int(rng.integers(0, 2**31 - 1))
        for gi, gamma in enumerate(cfg.gammas):
            problem = NoisyDesignProblem(x, cfg.noise_variance, gamma, h_nom, model)
            design = design_noisy_robust_fir(problem, eig, corr,
                                             estimator=_design_estimator(corr, eval_seed))
            d_filter = _fir_error_any(eig, corr, design.taps, h_nom, eval_seed) / target_energy
            d_xy = _output_error_any(problem, eig, corr, design.taps, eval_seed) / out_energy
            out[fi, gi] = (d_filter, d_xy)
    return out


# --- runners -----------------------------------------------------------------

def _trial_seeds(cfg: ExperimentConfig) -> list[int]:
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _map_trials(worker, cfg: ExperimentConfig) -> np.ndarray:
    seeds = _trial_seeds(cfg)
    indices = list(range(cfg.trials))
    if cfg.threads <= 1:
        results = [worker(cfg, i, s) for i, s in zip(indices, seeds)]
    else:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(worker, [cfg] * cfg.trials, indices, seeds))
    return np.stack(results)


def run_perturbation_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    cells = _map_trials(_perturbation_sweep_trial, cfg)  # (trials, fractions, 4)
    means = cells.mean(axis=0)
    rows = [[frac] + list(means[fi]) for fi, frac in enumerate(cfg.fractions)]
    header = ["pct", "f_optimal", "f_nof", "g_optimal", "g_nof"]
    return ExperimentResult(header=header, rows=rows, cells=cells)


def run_noise_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    cells = _map_trials(_noise_sweep_trial, cfg)  # (trials, fractions, sigmas)
    means = cells.mean(axis=0)
    stderr = cells.std(axis=0, ddof=1) / np.sqrt(cfg.trials) if cfg.trials > 1 else np.zeros_like(means)
    rows = []
    for si, sigma2 in enumerate(cfg.noise_variances):
        for fi, frac in enumerate(cfg.fractions):
            rows.append([sigma2, frac, means[fi, si], stderr[fi, si]])
    header = ["noise_variance", "pct", "d_xy", "d_xy_stderr"]
    return ExperimentResult(header=header, rows=rows, cells=cells)


def run_gamma_tradeoff(cfg: ExperimentConfig) -> ExperimentResult:
    cells = _map_trials(_gamma_tradeoff_trial, cfg)  # (trials, fractions, gammas, 2)
    means = cells.mean(axis=0)
    stderr = cells.std(axis=0, ddof=1) / np.sqrt(cfg.trials) if cfg.trials > 1 else np.zeros_like(means)
    rows = []
    for gi, gamma in enumerate(cfg.gammas):
        for fi, frac in enumerate(cfg.fractions):
            rows.append([gamma, frac, means[fi, gi, 0], stderr[fi, gi, 0],
                         means[fi, gi, 1], stderr[fi, gi, 1]])
    header = ["gamma", "pct", "d_filter", "d_filter_stderr", "d_xy", "d_xy_stderr"]
    return ExperimentResult(header=header, rows=rows, cells=cells)


RUNNERS = {
    "perturbation-sweep": run_perturbation_sweep,
    "noise-sweep": run_noise_sweep,
    "gamma-tradeoff": run_gamma_tradeoff,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg)
