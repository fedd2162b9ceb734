"""
Experiment harness: configuration, seeding, replicated runs, aggregation and output files.

Every algorithm in a replica sees the same true parameter and the same context
stream (regenerated from one seed and checked by hash). Choice noise cannot be
shared because choices depend on the offered sets, so each algorithm gets its
own choice stream derived from (seed, replica, algorithm id).
"""

import csv
import json
import platform
from dataclasses import asdict, dataclass, field, fields
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy
from dotenv import dotenv_values
from tqdm import tqdm

from agent import (
    BaseAgent,
    GreedyMnlAgent,
    OfuMleMnlAgent,
    OfuMnlPlusAgent,
    OfuMnlPlusPlusAgent,
    PLANNING,
    TsMnlAgent,
    UcbMnlAgent,
)
from config import settings
from environment import ChoiceSimulator, EnvironmentConfig, UnitBallContexts, draw_true_parameter
from estimation.online import update_condition_alpha
from exceptions import ConfigurationError, MnlBanditError
from logging_config import get_experiment_logger, log_error, log_experiment_event
from regret_tracker import regret_and_diagnostics
from run_history import RoundRecord, RunHistory
from validation import ValidationError, experiment_validator

logger = get_experiment_logger()

CSV_HEADER = ["algo", "t", "mean_cum_regret", "band2sd", "mean_round_ms", "warmup_frac"]

# Stable ids keep each algorithm's random substreams fixed when the algorithm list changes
ALGORITHM_IDS = {
    "ofu-mnl++": 0,
    "ofu-mle-mnl": 1,
    "ucb-mnl": 2,
    "ts-mnl": 3,
    "ofu-mnl+": 4,
    "greedy": 5,
}

# Stream tags of the per-replica seed sequences
CONTEXT_STREAM = 0
CHOICE_STREAM = 1
PARAMETER_STREAM = 2
AGENT_STREAM = 3


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_algorithms(value: str) -> Tuple[str, ...]:
    return tuple(name.strip() for name in value.split(",") if name.strip())


def _parse_optional_float(value: str) -> Optional[float]:
    return None if value.strip().lower() in ("", "none") else float(value)


# config-file key -> (ExperimentConfig field, parser)
CONFIG_KEYS = {
    "ALGORITHMS": ("algorithms", _parse_algorithms),
    "N": ("N", int),
    "K": ("K", int),
    "D": ("d", int),
    "B": ("B", float),
    "T": ("T", int),
    "DELTA": ("delta", float),
    "RUNS": ("runs", int),
    "SEED": ("seed", int),
    "TAU_MULT": ("tau_multiplier", float),
    "TAU": ("tau_override", _parse_optional_float),
    "RADIUS_MULT": ("radius_multiplier", float),
    "REG_MULT": ("regularizer_multiplier", float),
    "BASELINE_ALPHA_SCALE": ("baseline_alpha_scale", float),
    "BASELINE_LAMBDA": ("baseline_lambda", float),
    "WORKERS": ("workers", int),
    "RECORD_TIMING": ("record_timing", _parse_bool),
    "OUT": ("out", str),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment parameters."""

    algorithms: Tuple[str, ...] = ("ofu-mnl++", "ofu-mle-mnl", "ucb-mnl", "ts-mnl")
    N: int = 50
    K: int = 5
    d: int = 5
    B: float = 1.0
    T: int = 3000
    delta: float = 0.1
    runs: int = 20
    seed: int = settings.DEFAULT_SEED
    tau_multiplier: float = 1.0
    tau_override: Optional[float] = None
    radius_multiplier: float = 1.0
    regularizer_multiplier: float = 1.0
    baseline_alpha_scale: float = 1.0
    baseline_lambda: float = 1.0
    workers: int = settings.WORKERS
    record_timing: bool = True
    out: str = settings.DEFAULT_OUTPUT

    @classmethod
    def from_sources(cls, config_path: Optional[str] = None,
                     overrides: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        """Defaults, then KEY=value file entries, then non-None overrides (CLI flags)."""
        values: Dict[str, Any] = {}
        errors: List[ValidationError] = []

        if config_path is not None:
            if not Path(config_path).is_file():
                raise ConfigurationError(f"Config file not found: {config_path}", [
                    ValidationError(field="config", message=f"No such file: {config_path}", code="MISSING_FILE")
                ])
            for key, raw in dotenv_values(config_path).items():
                entry = CONFIG_KEYS.get(key.upper())
                if entry is None:
                    errors.append(ValidationError(field=key, message=f"Unknown config key '{key}'", code="UNKNOWN_KEY"))
                    continue
                name, parser = entry
                try:
                    values[name] = parser(raw if raw is not None else "")
                except ValueError as e:
                    errors.append(ValidationError(field=key, message=f"Cannot parse '{raw}': {e}", code="INVALID_DATA_TYPE"))

        if errors:
            raise ConfigurationError(f"Invalid config file {config_path}", errors)

        known = {f.name for f in fields(cls)}
        for name, value in (overrides or {}).items():
            if name not in known:
                raise ConfigurationError(f"Unknown override '{name}'")
            if value is not None:
                values[name] = tuple(value) if name == "algorithms" else value

        config = cls(**values)
        config.validate()
        return config

    def validate(self) -> None:
        is_valid, errors = experiment_validator.validate_experiment(self, list(ALGORITHM_IDS))
        if not is_valid:
            raise ConfigurationError("Experiment configuration failed validation", errors)

    @property
    def environment(self) -> EnvironmentConfig:
        return EnvironmentConfig(N=self.N, K=self.K, d=self.d, B=self.B, T=self.T, seed=self.seed)


def replica_seed(cfg: ExperimentConfig, replica: int, stream: int, algorithm: Optional[str] = None) -> np.random.SeedSequence:
    entropy = [cfg.seed, replica, stream]
    if algorithm is not None:
        entropy.append(ALGORITHM_IDS[algorithm])
    return np.random.SeedSequence(entropy)


def build_agent(name: str, cfg: ExperimentConfig, replica: int) -> BaseAgent:
    agent_id = f"{name}-r{replica}"
    if name == "ofu-mnl++":
        return OfuMnlPlusPlusAgent(
            agent_id, cfg.N, cfg.K, cfg.d, cfg.B, cfg.delta,
            tau_multiplier=cfg.tau_multiplier,
            tau_override=cfg.tau_override,
            radius_multiplier=cfg.radius_multiplier,
            regularizer_multiplier=cfg.regularizer_multiplier,
        )
    if name == "ofu-mnl+":
        return OfuMnlPlusAgent(
            agent_id, cfg.N, cfg.K, cfg.d, cfg.B, cfg.delta,
            radius_multiplier=cfg.radius_multiplier,
            regularizer_multiplier=cfg.regularizer_multiplier,
        )
    if name == "ofu-mle-mnl":
        return OfuMleMnlAgent(agent_id, cfg.N, cfg.K, cfg.d, cfg.B, cfg.delta)
    if name == "ucb-mnl":
        return UcbMnlAgent(agent_id, cfg.N, cfg.K, cfg.d, cfg.B, cfg.baseline_alpha_scale, cfg.baseline_lambda)
    if name == "ts-mnl":
        rng = np.random.default_rng(replica_seed(cfg, replica, AGENT_STREAM, name))
        return TsMnlAgent(agent_id, cfg.N, cfg.K, cfg.d, cfg.B, cfg.baseline_alpha_scale, cfg.baseline_lambda, rng)
    if name == "greedy":
        return GreedyMnlAgent(agent_id, cfg.N, cfg.K, cfg.d, cfg.B, cfg.baseline_lambda)
    raise ConfigurationError(f"Unknown algorithm '{name}'")


def run_algorithm(cfg: ExperimentConfig, name: str, replica: int, w_star: np.ndarray,
                  agent: Optional[BaseAgent] = None) -> RunHistory:
    """Play one algorithm for T rounds on the replica's context stream."""
    env = cfg.environment
    contexts = UnitBallContexts(env, w_star, np.random.default_rng(replica_seed(cfg, replica, CONTEXT_STREAM)))
    simulator = ChoiceSimulator(w_star, np.random.default_rng(replica_seed(cfg, replica, CHOICE_STREAM, name)))
    agent = agent if agent is not None else build_agent(name, cfg, replica)
    history = RunHistory(name, replica)

    for t in range(1, cfg.T + 1):
        ctx = contexts.next_context(t)
        try:
            S, outcome, elapsed = agent.play_round(ctx, t, simulator.responder(ctx))
        except MnlBanditError as e:
            log_error("ROUND_FAILED", f"{agent} replica={replica} t={t}", e)
            raise
        diagnostics = regret_and_diagnostics(ctx, S, w_star, cfg.K, cfg.B)
        alpha_hat = None
        if agent.last_phase == PLANNING and agent.search_space is not None:
            alpha_hat = update_condition_alpha(ctx, S, agent.search_space, w_star)
        history.add_record(RoundRecord(
            t=t,
            phase=agent.last_phase,
            items=S.items,
            position=outcome.position,
            inst_regret=diagnostics.inst_regret,
            sigma_sq=diagnostics.sigma_sq,
            kappa_star=diagnostics.kappa_star,
            elapsed=elapsed,
            kappa_floor=diagnostics.kappa_floor,
            alpha_hat=alpha_hat,
        ))

    history.stream_hash = contexts.stream_hash
    return history


@dataclass
class AlgorithmTrace:
    """Per-round series of one algorithm in one replica."""

    cum_regret: np.ndarray
    round_ms: np.ndarray
    warmup: np.ndarray
    statistics: Dict[str, Any]


@dataclass
class ReplicaResult:
    replica: int
    traces: Dict[str, AlgorithmTrace]
    stream_hashes: Dict[str, str]


def run_replica(job: Tuple[ExperimentConfig, int]) -> ReplicaResult:
    cfg, replica = job
    w_star = draw_true_parameter(np.random.default_rng(replica_seed(cfg, replica, PARAMETER_STREAM)), cfg.d, cfg.B)
    traces: Dict[str, AlgorithmTrace] = {}
    hashes: Dict[str, str] = {}

    for name in cfg.algorithms:
        history = run_algorithm(cfg, name, replica, w_star)
        traces[name] = AlgorithmTrace(
            cum_regret=history.cumulative_regret(),
            round_ms=history.elapsed_ms(),
            warmup=history.warmup_flags(),
            statistics=history.get_statistics(),
        )
        hashes[name] = history.stream_hash
        log_experiment_event("ALGORITHM_DONE", f"replica={replica} algo={name} "
                             f"regret={traces[name].cum_regret[-1]:.4f} stream={history.stream_hash[:16]}")
    return ReplicaResult(replica=replica, traces=traces, stream_hashes=hashes)


@dataclass
class AggregateResult:
    """Across-replica means of the per-round series."""

    algorithms: Tuple[str, ...]
    T: int
    runs: int
    mean_cum_regret: Dict[str, np.ndarray]
    band: Dict[str, np.ndarray]
    mean_round_ms: Dict[str, np.ndarray]
    warmup_frac: Dict[str, np.ndarray]
    stream_hashes: List[str] = field(default_factory=list)
    replica_statistics: List[Dict[str, Any]] = field(default_factory=list)

    def final_regret(self, algorithm: str) -> float:
        return float(self.mean_cum_regret[algorithm][-1])

    def window_slope(self, algorithm: str, start: int, end: int) -> float:
        """Mean per-round regret increment over rounds start..end (1-based, inclusive)."""
        series = self.mean_cum_regret[algorithm]
        return float((series[end - 1] - series[start - 1]) / (end - start))

    def window_ms(self, algorithm: str, start: int, end: int) -> float:
        return float(self.mean_round_ms[algorithm][start - 1:end].mean())


def aggregate(cfg: ExperimentConfig, results: Sequence[ReplicaResult]) -> AggregateResult:
    """Deterministic reduction in replica order."""
    results = sorted(results, key=lambda r: r.replica)
    ddof = 1 if len(results) > 1 else 0
    mean, band, ms, warm = {}, {}, {}, {}
    for name in cfg.algorithms:
        regret = np.vstack([r.traces[name].cum_regret for r in results])
        mean[name] = regret.mean(axis=0)
        band[name] = 2.0 * regret.std(axis=0, ddof=ddof)
        ms[name] = np.vstack([r.traces[name].round_ms for r in results]).mean(axis=0)
        warm[name] = np.vstack([r.traces[name].warmup for r in results]).mean(axis=0)
    return AggregateResult(
        algorithms=tuple(cfg.algorithms),
        T=cfg.T,
        runs=len(results),
        mean_cum_regret=mean,
        band=band,
        mean_round_ms=ms,
        warmup_frac=warm,
        stream_hashes=[next(iter(r.stream_hashes.values())) for r in results],
        replica_statistics=[t.statistics for r in results for t in r.traces.values()],
    )


def _check_common_streams(result: ReplicaResult) -> None:
    if len(set(result.stream_hashes.values())) > 1:
        message = f"replica {result.replica} context streams differ across algorithms: {result.stream_hashes}"
        log_error("COMMON_RANDOM_NUMBERS", message)
        raise MnlBanditError(message)


def run_experiment(cfg: ExperimentConfig, progress: bool = True) -> AggregateResult:
    cfg.validate()
    log_experiment_event("START", f"algorithms={','.join(cfg.algorithms)} N={cfg.N} K={cfg.K} d={cfg.d} "
                         f"B={cfg.B} T={cfg.T} runs={cfg.runs} seed={cfg.seed}")
    jobs = [(cfg, replica) for replica in range(cfg.runs)]

    if cfg.workers > 1 and cfg.runs > 1:
        with Pool(processes=min(cfg.workers, cfg.runs)) as pool:
            # imap keeps replica order regardless of completion order
            results = list(tqdm(pool.imap(run_replica, jobs), total=len(jobs), desc="replicas", disable=not progress))
    else:
        results = [run_replica(job) for job in tqdm(jobs, desc="replicas", disable=not progress)]

    for result in results:
        _check_common_streams(result)
    aggregated = aggregate(cfg, results)
    log_experiment_event("FINISHED", " ".join(
        f"{name}={aggregated.final_regret(name):.4f}" for name in cfg.algorithms
    ))
    return aggregated


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def emit_csv(result: AggregateResult, path: str, record_timing: bool = True) -> None:
    """One row per (algorithm, round) with 12 significant digits."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for name in result.algorithms:
            for t in range(result.T):
                writer.writerow([
                    name,
                    t + 1,
                    _fmt(result.mean_cum_regret[name][t]),
                    _fmt(result.band[name][t]),
                    _fmt(result.mean_round_ms[name][t] if record_timing else 0.0),
                    _fmt(result.warmup_frac[name][t]),
                ])
    logger.info(f"Wrote {len(result.algorithms) * result.T} rows to {target}")


def manifest_path(csv_path: str) -> Path:
    return Path(csv_path).with_suffix(".manifest.json")


def write_manifest(cfg: ExperimentConfig, result: AggregateResult, path: Optional[str] = None) -> Path:
    """Resolved parameters, derived seeds, stream hashes and library versions."""
    target = Path(path) if path is not None else manifest_path(cfg.out)
    target.parent.mkdir(parents=True, exist_ok=True)
    seeds = {
        "contexts": [[cfg.seed, r, CONTEXT_STREAM] for r in range(cfg.runs)],
        "true_parameter": [[cfg.seed, r, PARAMETER_STREAM] for r in range(cfg.runs)],
        "choices": {name: [[cfg.seed, r, CHOICE_STREAM, ALGORITHM_IDS[name]] for r in range(cfg.runs)]
                    for name in cfg.algorithms},
        "agents": {name: [[cfg.seed, r, AGENT_STREAM, ALGORITHM_IDS[name]] for r in range(cfg.runs)]
                   for name in cfg.algorithms},
    }
    manifest = {
        "config": {**asdict(cfg), "algorithms": list(cfg.algorithms)},
        "seed_sequences": seeds,
        "stream_hashes": result.stream_hashes,
        "replicas": result.replica_statistics,
        "versions": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
    }
    with open(target, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
    return target
