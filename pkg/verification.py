"""
Oracle and property suites behind `mnlbandit verify`.

The quick suite checks the assortment optimizer, loss derivatives,
self-concordance, projections and CSV determinism. The full suite adds the
Monte Carlo coverage checks of the online and MLE confidence sets. The
regret suite runs one experiment file and checks the shape of its curves:
warm-up share falling over the run, regret ordering, per-round timing and
sublinear growth.
"""

import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from agent import GreedyMnlAgent, OfuMnlPlusPlusAgent, PLANNING
from environment import ChoiceSimulator, EnvironmentConfig, UnitBallContexts, draw_true_parameter
from estimation.mle import history_loss
from estimation.online import confidence_ellipsoid
from estimation.radii import beta_radius, mle_radius_sq
from exceptions import InvalidInputError
from harness import (
    PARAMETER_STREAM,
    AggregateResult,
    ExperimentConfig,
    emit_csv,
    replica_seed,
    run_algorithm,
    run_experiment,
)
from logging_config import log_experiment_event
from mnl.assortment import best_assortment, brute_force_best
from mnl.linalg import (
    Ellipsoid,
    PsdMatrix,
    project_metric_ball,
    project_metric_ellipsoid,
    project_metric_ellipsoid_pgd,
    sample_unit_ball,
)
from mnl.model import (
    SELF_CONCORDANCE_CONSTANT,
    Assortment,
    ChoiceOutcome,
    RoundContext,
    check_self_concordance,
    hessian_sandwich_bounds,
    loss,
    loss_gradient,
    loss_hessian,
    second_order_gap,
)

REGRET_CONFIG = Path(__file__).resolve().parent / "configs" / "regret_b1.env"


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass
class VerificationReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def summary(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<28} {c.detail} ({c.seconds:.1f}s)" for c in self.checks]
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


def random_spd(rng: np.random.Generator, d: int, low: float = 0.1, high: float = 10.0) -> PsdMatrix:
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return PsdMatrix(Q @ np.diag(rng.uniform(low, high, size=d)) @ Q.T)


def random_context(rng: np.random.Generator, N: int, d: int) -> RoundContext:
    return RoundContext(features=sample_unit_ball(rng, N, d), rewards=rng.uniform(size=N))


def check_assortment_oracle(rng: np.random.Generator, instances: int = 1000) -> Tuple[bool, str]:
    worst_gap, mismatches = 0.0, 0
    for _ in range(instances):
        N = int(rng.integers(1, 13))
        K = int(rng.integers(1, 5))
        utilities = rng.normal(0.0, 1.5, size=N)
        rewards = rng.uniform(size=N)
        fast_set, fast_value = best_assortment(utilities, rewards, K)
        exact_set, exact_value = brute_force_best(utilities, rewards, K)
        worst_gap = max(worst_gap, abs(fast_value - exact_value))
        mismatches += fast_set != exact_set
    return worst_gap <= 1e-9 and mismatches == 0, f"max gap {worst_gap:.2e}, set mismatches {mismatches}"


def _relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    return float(np.max(np.abs(approx - exact)) / max(1.0, float(np.max(np.abs(exact)))))


def check_calculus(rng: np.random.Generator, instances: int = 100, step: float = 1e-5) -> Tuple[bool, str]:
    worst_grad, worst_hess = 0.0, 0.0
    for _ in range(instances):
        d = int(rng.integers(1, 7))
        size = int(rng.integers(1, 6))
        ctx = random_context(rng, size, d)
        S = Assortment(tuple(range(size)))
        y = ChoiceOutcome(position=int(rng.integers(0, size + 1)), size=size)
        w = 2.0 * sample_unit_ball(rng, 1, d)[0]
        basis = np.eye(d)
        fd_grad = np.array([
            (loss(ctx, S, y, w + step * e) - loss(ctx, S, y, w - step * e)) / (2 * step) for e in basis
        ])
        fd_hess = np.array([
            (loss_gradient(ctx, S, y, w + step * e) - loss_gradient(ctx, S, y, w - step * e)) / (2 * step)
            for e in basis
        ])
        worst_grad = max(worst_grad, _relative_error(fd_grad, loss_gradient(ctx, S, y, w)))
        worst_hess = max(worst_hess, _relative_error(fd_hess, loss_hessian(ctx, S, w).entries))
    return worst_grad <= 1e-6 and worst_hess <= 1e-5, f"gradient {worst_grad:.2e}, Hessian {worst_hess:.2e}"


def check_self_concordance_suite(rng: np.random.Generator, lines: int = 200, samples: int = 5,
                                 sandwiches: int = 200) -> Tuple[bool, str]:
    worst_ratio = 0.0
    for _ in range(lines):
        d = int(rng.integers(1, 6))
        size = int(rng.integers(1, 6))
        ctx = random_context(rng, size, d)
        report = check_self_concordance(
            ctx, Assortment(tuple(range(size))),
            a=2.0 * sample_unit_ball(rng, 1, d)[0],
            b=rng.normal(size=d),
            samples=samples, rng=rng,
        )
        worst_ratio = max(worst_ratio, report.max_ratio)

    sandwich_failures, gap_failures = 0, 0
    for _ in range(sandwiches):
        size = int(rng.integers(1, 6))
        z1 = rng.uniform(-2.0, 2.0, size=size)
        z2 = z1 + rng.uniform(-1.0, 1.0, size=size)
        sandwich_failures += not hessian_sandwich_bounds(z1, z2).holds(1e-6)

        d = int(rng.integers(1, 6))
        ctx = random_context(rng, size, d)
        w_prime = sample_unit_ball(rng, 1, d)[0]
        y = ChoiceOutcome(position=int(rng.integers(0, size + 1)), size=size)
        gap, bound, _ = second_order_gap(ctx, Assortment(tuple(range(size))), y, w_prime + rng.normal(size=d), w_prime)
        gap_failures += gap < bound - 1e-10

    passed = worst_ratio <= SELF_CONCORDANCE_CONSTANT + 1e-3 and sandwich_failures == 0 and gap_failures == 0
    return passed, (f"max ratio {worst_ratio:.4f}, sandwich failures {sandwich_failures}, "
                    f"second-order gap failures {gap_failures}")


def check_projections(rng: np.random.Generator, count: int = 500, feasible_samples: int = 20,
                      oracle_count: int = 20) -> Tuple[bool, str]:
    worst_vi, worst_idem = -np.inf, 0.0
    for kind in ("ball", "ellipsoid"):
        for _ in range(count):
            d = int(rng.integers(1, 7))
            metric = random_spd(rng, d)
            v = 3.0 * rng.normal(size=d)
            if kind == "ball":
                B = float(rng.uniform(0.5, 2.0))
                p = project_metric_ball(v, metric, B)
                again = project_metric_ball(p, metric, B)
                feasible = B * sample_unit_ball(rng, feasible_samples, d)
            else:
                E = Ellipsoid(center=rng.normal(size=d), metric=random_spd(rng, d), radius=float(rng.uniform(0.2, 2.0)))
                p = project_metric_ellipsoid(v, metric, E)
                again = project_metric_ellipsoid(p, metric, E)
                feasible = E.sample(rng, feasible_samples)
            pull = metric.entries @ (v - p)
            worst_vi = max(worst_vi, float(np.max((feasible - p) @ pull)))
            worst_idem = max(worst_idem, float(np.linalg.norm(again - p)))

    worst_gap = 0.0
    for _ in range(oracle_count):
        d = int(rng.integers(1, 4))
        metric = random_spd(rng, d, 1.0, 10.0)
        E = Ellipsoid(center=rng.normal(size=d), metric=random_spd(rng, d, 1.0, 10.0),
                      radius=float(rng.uniform(0.2, 2.0)))
        v = E.center + 4.0 * rng.normal(size=d)
        ours = project_metric_ellipsoid(v, metric, E) - v
        reference = project_metric_ellipsoid_pgd(v, metric, E) - v
        ours_obj, reference_obj = float(ours @ metric.entries @ ours), float(reference @ metric.entries @ reference)
        worst_gap = max(worst_gap, (ours_obj - reference_obj) / max(1.0, reference_obj))

    passed = worst_vi <= 1e-8 and worst_idem <= 1e-10 and worst_gap <= 1e-9
    return passed, (f"max VI residual {worst_vi:.2e}, idempotence {worst_idem:.2e}, "
                    f"gradient-oracle gap {worst_gap:.2e}")


def check_determinism(seed: int = 0) -> Tuple[bool, str]:
    cfg = ExperimentConfig(algorithms=("ofu-mnl++", "greedy"), N=8, K=3, d=3, T=25, runs=2,
                           seed=seed, workers=1, record_timing=False)
    with tempfile.TemporaryDirectory() as tmp:
        paths = [Path(tmp) / f"run{i}.csv" for i in range(2)]
        for path in paths:
            emit_csv(run_experiment(cfg, progress=False), str(path), record_timing=False)
        identical = paths[0].read_bytes() == paths[1].read_bytes()
    return identical, "byte-identical CSV" if identical else "CSV outputs differ"


def check_online_coverage(seed: int = 0, replicas: int = 200, T: int = 500, N: int = 10, K: int = 4,
                          d: int = 3, B: float = 1.0, delta: float = 0.1) -> Tuple[bool, str]:
    """Fraction of replicas whose planning and warm-up ellipsoids always contain w*."""
    env = EnvironmentConfig(N=N, K=K, d=d, B=B, T=T, seed=seed)
    planning_ok, warmup_ok = 0, 0
    for replica in range(replicas):
        streams = np.random.SeedSequence([seed, replica]).spawn(3)
        w_star = draw_true_parameter(np.random.default_rng(streams[0]), d, B)
        contexts = UnitBallContexts(env, w_star, np.random.default_rng(streams[1]))
        simulator = ChoiceSimulator(w_star, np.random.default_rng(streams[2]))
        agent = OfuMnlPlusPlusAgent(f"coverage-r{replica}", N, K, d, B, delta)
        planning_in, warmup_in = True, True
        for t in range(1, T + 1):
            ctx = contexts.next_context(t)
            S = agent.select(ctx, t)
            if agent.last_phase == PLANNING:
                planning_in &= confidence_ellipsoid(agent.state, beta_radius(t, agent.hp)).contains(w_star)
            agent.learn(ctx, S, simulator.responder(ctx)(S), t)
            if agent.warmup_set is not None:
                warmup_in &= agent.warmup_set.contains(w_star)
        planning_ok += planning_in
        warmup_ok += warmup_in
    threshold = (1.0 - delta) * replicas
    return (planning_ok >= threshold and warmup_ok >= threshold,
            f"planning {planning_ok}/{replicas}, warm-up {warmup_ok}/{replicas}")


def check_mle_coverage(seed: int = 0, replicas: int = 200, T: int = 300, N: int = 10, K: int = 4,
                       d: int = 3, B: float = 1.0, delta: float = 0.1) -> Tuple[bool, str]:
    """Fraction of replicas with L_t(w*) - L_t(w_hat) <= gamma^2 at every round."""
    env = EnvironmentConfig(N=N, K=K, d=d, B=B, T=T, seed=seed)
    covered = 0
    for replica in range(replicas):
        streams = np.random.SeedSequence([seed, replica, 1]).spawn(3)
        w_star = draw_true_parameter(np.random.default_rng(streams[0]), d, B)
        contexts = UnitBallContexts(env, w_star, np.random.default_rng(streams[1]))
        simulator = ChoiceSimulator(w_star, np.random.default_rng(streams[2]))
        agent = GreedyMnlAgent(f"mle-coverage-r{replica}", N, K, d, B)
        inside = True
        for t in range(1, T + 1):
            ctx = contexts.next_context(t)
            agent.play_round(ctx, t, simulator.responder(ctx))
            state = agent.state
            excess = history_loss(state.history, w_star) - state.loss_at_mle
            inside &= excess <= mle_radius_sq(t + 1, B, d, delta)
        covered += inside
    return covered >= (1.0 - delta) * replicas, f"covered {covered}/{replicas}"


def warmup_share_windows(cfg: ExperimentConfig, window: int = 500, replica: int = 0) -> Tuple[float, float]:
    """OFU-MNL++ warm-up share over the first and the last `window` rounds of one replica."""
    if cfg.T < 2 * window:
        raise InvalidInputError(f"horizon {cfg.T} is shorter than two windows of {window} rounds")
    w_star = draw_true_parameter(np.random.default_rng(replica_seed(cfg, replica, PARAMETER_STREAM)), cfg.d, cfg.B)
    flags = run_algorithm(cfg, "ofu-mnl++", replica, w_star).warmup_flags()
    return float(flags[:window].mean()), float(flags[-window:].mean())


def check_warmup_decline(cfg: ExperimentConfig, window: int = 500, replica: int = 0) -> Tuple[bool, str]:
    first, last = warmup_share_windows(cfg, window, replica)
    return last < first, f"warm-up share {first:.3f} over the first {window} rounds, {last:.3f} over the last {window}"


def _require_curves(result: AggregateResult, names: Sequence[str]) -> None:
    missing = [name for name in names if name not in result.algorithms]
    if missing:
        raise InvalidInputError(f"experiment has no curves for {', '.join(missing)}")


def check_regret_ordering(result: AggregateResult, online: str = "ofu-mnl++", mle: str = "ofu-mle-mnl",
                          baselines: Sequence[str] = ("ucb-mnl", "ts-mnl"), window: int = 500) -> Tuple[bool, str]:
    """OFU-MLE-MNL ends below every baseline and OFU-MNL++ ends no steeper than any of them."""
    _require_curves(result, (online, mle, *baselines))
    if result.T <= window:
        raise InvalidInputError(f"horizon {result.T} does not exceed the slope window {window}")
    start = result.T - window
    final = {name: result.final_regret(name) for name in (mle, *baselines)}
    slopes = {name: result.window_slope(name, start, result.T) for name in (online, *baselines)}
    passed = (all(final[mle] < final[b] for b in baselines)
              and all(slopes[online] <= slopes[b] for b in baselines))
    detail = (f"final {mle} {final[mle]:.2f} vs " + ", ".join(f"{b} {final[b]:.2f}" for b in baselines)
              + f"; slope over [{start}, {result.T}] {online} {slopes[online]:.4f} vs "
              + ", ".join(f"{b} {slopes[b]:.4f}" for b in baselines))
    return passed, detail


def check_runtime_shape(result: AggregateResult, online: str = "ofu-mnl++", mle: str = "ofu-mle-mnl",
                        early: Tuple[int, int] = (100, 200), late_window: int = 100,
                        online_max_growth: float = 2.0, mle_min_growth: float = 3.0) -> Tuple[bool, str]:
    """OFU-MNL++ per-round time stays flat while OFU-MLE-MNL grows with its history."""
    _require_curves(result, (online, mle))
    late = (result.T - late_window, result.T)
    if late[0] <= early[1]:
        raise InvalidInputError(f"late window {late} overlaps the early window {early}")
    growth = {name: result.window_ms(name, *late) / max(result.window_ms(name, *early), 1e-12)
              for name in (online, mle)}
    passed = growth[online] <= online_max_growth and growth[mle] >= mle_min_growth
    return passed, (f"ms per round over {late} vs {early}: {online} x{growth[online]:.2f}, "
                    f"{mle} x{growth[mle]:.2f}")


def check_sublinear_regret(result: AggregateResult, online: str = "ofu-mnl++", early_round: int = 300,
                           max_ratio: float = 0.5) -> Tuple[bool, str]:
    _require_curves(result, (online,))
    if result.T <= early_round:
        raise InvalidInputError(f"horizon {result.T} does not exceed round {early_round}")
    early = float(result.mean_cum_regret[online][early_round - 1]) / early_round
    late = result.final_regret(online) / result.T
    return late < max_ratio * early, f"{online} regret per round {early:.4f} at t={early_round}, {late:.4f} at t={result.T}"


def _timed(name: str, check: Callable[[], Tuple[bool, str]]) -> CheckResult:
    start = time.perf_counter()
    try:
        passed, detail = check()
    except InvalidInputError as e:
        passed, detail = False, str(e)
    result = CheckResult(name=name, passed=passed, detail=detail, seconds=time.perf_counter() - start)
    log_experiment_event("VERIFY", f"{name} {'PASS' if passed else 'FAIL'} - {detail}")
    return result


def run_verification(full: bool = False, seed: int = 0, regret: bool = False,
                     regret_config: Optional[str] = None) -> VerificationReport:
    cfg = ExperimentConfig.from_sources(regret_config or str(REGRET_CONFIG)) if regret else None
    rng = np.random.default_rng(seed)
    report = VerificationReport()
    report.checks.append(_timed("assortment oracle", lambda: check_assortment_oracle(rng)))
    report.checks.append(_timed("loss derivatives", lambda: check_calculus(rng)))
    report.checks.append(_timed("self-concordance", lambda: check_self_concordance_suite(rng)))
    report.checks.append(_timed("projections", lambda: check_projections(rng)))
    report.checks.append(_timed("determinism", lambda: check_determinism(seed)))
    if full:
        report.checks.append(_timed("online coverage", lambda: check_online_coverage(seed)))
        report.checks.append(_timed("MLE coverage", lambda: check_mle_coverage(seed)))
    if cfg is not None:
        report.checks.append(_timed("warm-up decline", lambda: check_warmup_decline(cfg)))
        result = run_experiment(cfg, progress=False)
        report.checks.append(_timed("regret ordering", lambda: check_regret_ordering(result)))
        report.checks.append(_timed("runtime shape", lambda: check_runtime_shape(result)))
        report.checks.append(_timed("sublinear regret", lambda: check_sublinear_regret(result)))
    return report
