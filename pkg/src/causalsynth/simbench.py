"""Simulation benchmark.

Generates the four synthetic scenarios, fits the agent roster and the
synthesis model in every replicate, scores each method against the true
effect and aggregates the scores into an EvalReport.

Covariates: X1..X3 and X6..Xp are standard normal, X4 is Bernoulli(1/2) and
X5 is uniform on {1, 2, 3}. The surfaces use X5 as a number; fitted models
see it one-hot encoded.

    mu (A) = -7 + 6|X3| - 3 X5        mu (B) = 2 + 2 sin(3 X3)
    tau (A) = 1 + 2 X2 X5              tau (B) = 1 + 2 X2 X5 + X3^2 / 2

Example:
    cfg = bundled_scenario("scenario1_desk")
    report = run_replications(cfg)
    write_report(report, Path("out"))
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from scipy import stats

from causalsynth.config import resolve_workers
from causalsynth.constants import (
    CSV_FLOAT_FORMAT,
    INTERVAL_LEVEL,
    METHOD_BCS,
    REPLICATES_FILE,
    REPORT_CSV_FILE,
    REPORT_JSON_FILE,
)
from causalsynth.core import CausalSynthesis
from causalsynth.data import apply_encoding, encode_covariates
from causalsynth.exceptions import CausalSynthError, DataValidationError
from causalsynth.logging import LogContext, get_logger, setup_logging
from causalsynth.models import (
    CausalSynthConfig,
    EncodingReport,
    EvalReport,
    EvalRow,
    MethodSummary,
    ObservedData,
    ReplicateResult,
    ScenarioConfig,
)
from causalsynth.predict import predict_points
from causalsynth.sampler import sample_chain
from causalsynth.utils import child_seed, spawn_rng, summarize_draws

logger = get_logger(__name__)

Form = Literal["A", "B"]

_Z = float(stats.norm.ppf(0.5 + INTERVAL_LEVEL / 2.0))


# =============================================================================
# DATA GENERATION
# =============================================================================


def prognostic(x3: np.ndarray, x5: np.ndarray, form: Form) -> np.ndarray:
    """mu(X) of form A or B."""
    if form == "A":
        return np.asarray(-7.0 + 6.0 * np.abs(x3) - 3.0 * x5)
    return np.asarray(2.0 + 2.0 * np.sin(3.0 * x3))


def effect(x2: np.ndarray, x3: np.ndarray, x5: np.ndarray, form: Form) -> np.ndarray:
    """tau(X) of form A or B."""
    tau = 1.0 + 2.0 * x2 * x5
    if form == "B":
        tau = tau + x3**2 / 2.0
    return np.asarray(tau)


def draw_covariates(rng: np.random.Generator, n: int, p: int) -> pd.DataFrame:
    """Raw covariate table x1..xp (x5 holds the levels 1, 2, 3)."""
    columns: dict[str, np.ndarray] = {}
    for k in range(1, p + 1):
        if k == 4:
            columns["x4"] = rng.binomial(1, 0.5, n)
        elif k == 5:
            columns["x5"] = rng.integers(1, 4, n)
        else:
            columns[f"x{k}"] = rng.standard_normal(n)
    return pd.DataFrame(columns)


@dataclass(frozen=True, eq=False)
class ScenarioSample:
    """One replicate's training data, truth and optional test set."""

    data: ObservedData
    tau: np.ndarray
    mu: np.ndarray
    encoding: EncodingReport
    covariates: pd.DataFrame
    test_x: np.ndarray | None = None
    test_tau: np.ndarray | None = None

    def evaluation_truth(self, mode: Literal["in_sample", "test"]) -> np.ndarray:
        if mode == "test":
            if self.test_tau is None:
                raise DataValidationError("No test set generated", ["n_test is not set"])
            return self.test_tau
        return self.tau


def _surfaces(table: pd.DataFrame, cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    x2 = table["x2"].to_numpy(dtype=np.float64)
    x3 = table["x3"].to_numpy(dtype=np.float64)
    x5 = table["x5"].to_numpy(dtype=np.float64)
    return prognostic(x3, x5, cfg.mu_form), effect(x2, x3, x5, cfg.tau_form)


def generate_scenario(cfg: ScenarioConfig, replicate: int) -> ScenarioSample:
    """Draw replicate ``replicate`` of the scenario.

    The draw depends only on ``(cfg.seed, replicate)``. Treatments are
    redrawn until both arms are present.

    Raises:
        EncodingError: If a test covariate level never occurs in training.
    """
    rng = spawn_rng(cfg.seed, replicate)
    table = draw_covariates(rng, cfg.n, cfg.p)
    mu, tau = _surfaces(table, cfg)
    t = rng.binomial(1, 0.5, cfg.n)
    while t.min() == t.max():
        t = rng.binomial(1, 0.5, cfg.n)
    y = mu + tau * t + math.sqrt(cfg.sigma2) * rng.standard_normal(cfg.n)

    x, encoding = encode_covariates(table, {"x4": "binary", "x5": "categorical"})
    data = ObservedData(
        y=y,
        t=t,
        x=x,
        pi=np.full(cfg.n, 0.5) if cfg.known_propensity else None,
        covariate_names=encoding.encoded_names,
    )

    test_x = test_tau = None
    if cfg.n_test is not None:
        test_table = draw_covariates(rng, cfg.n_test, cfg.p)
        _, test_tau = _surfaces(test_table, cfg)
        test_x = apply_encoding(test_table, encoding)
    return ScenarioSample(
        data=data,
        tau=tau,
        mu=mu,
        encoding=encoding,
        covariates=table,
        test_x=test_x,
        test_tau=test_tau,
    )


# =============================================================================
# METRICS
# =============================================================================


def evaluate(
    tau_hat: np.ndarray,
    tau_true: np.ndarray,
    intervals: tuple[np.ndarray, np.ndarray] | None = None,
    *,
    method: str = "",
) -> EvalRow:
    """MSE, and coverage (%) and average length of the intervals if given.

    Raises:
        DataValidationError: If the vectors are not aligned or empty.
    """
    tau_hat = np.asarray(tau_hat, dtype=np.float64)
    tau_true = np.asarray(tau_true, dtype=np.float64)
    bounds = None
    if intervals is not None:
        bounds = (
            np.asarray(intervals[0], dtype=np.float64),
            np.asarray(intervals[1], dtype=np.float64),
        )
    errors: list[str] = []
    if tau_hat.shape != tau_true.shape:
        errors.append(f"estimates have {tau_hat.size} values, truth has {tau_true.size}")
    if bounds is not None and not (bounds[0].shape == bounds[1].shape == tau_true.shape):
        errors.append("interval bounds are not aligned with the truth")
    if tau_true.size == 0:
        errors.append("nothing to evaluate")
    if errors:
        raise DataValidationError("Cannot evaluate estimates", errors)

    mse = float(np.mean((tau_hat - tau_true) ** 2))
    cp = al = None
    if bounds is not None:
        lo, hi = bounds
        cp = float(100.0 * np.mean((lo <= tau_true) & (tau_true <= hi)))
        al = float(np.mean(hi - lo))
    return EvalRow(method=method, mse=mse, cp=cp, al=al, n=int(tau_true.size))


def aggregate(cfg: ScenarioConfig, results: list[ReplicateResult], seconds: float) -> EvalReport:
    """Average the metric rows of completed replicates per method."""
    completed = [r for r in results if r.error is None]
    by_method: dict[str, list[EvalRow]] = {}
    for result in completed:
        for row in result.rows:
            by_method.setdefault(row.method, []).append(row)

    methods = []
    for name, rows in by_method.items():
        pooled = sum(row.mse * row.n for row in rows) / sum(row.n for row in rows)
        cps = [row.cp for row in rows if row.cp is not None]
        als = [row.al for row in rows if row.al is not None]
        methods.append(
            MethodSummary(
                method=name,
                mse=float(np.mean([row.mse for row in rows])),
                rmse=math.sqrt(pooled),
                cp=float(np.mean(cps)) if cps else None,
                al=float(np.mean(als)) if als else None,
                replications=len(rows),
            )
        )
    return EvalReport(
        name=cfg.name,
        methods=methods,
        replications=cfg.replications,
        completed=len(completed),
        failures=[r for r in results if r.error is not None],
        replicates=results,
        wall_clock_seconds=seconds,
    )


# =============================================================================
# REPLICATION
# =============================================================================


def run_replicate(cfg: ScenarioConfig, replicate: int) -> ReplicateResult:
    """Generate, fit, synthesize and evaluate one replicate.

    Failures are recorded in the result instead of raised.
    """
    with LogContext(logger, replicate=replicate, scenario=cfg.name):
        try:
            return ReplicateResult(replicate=replicate, rows=_replicate_rows(cfg, replicate))
        except (CausalSynthError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
            logger.warning("Replicate failed", extra={"error": str(e)})
            return ReplicateResult(replicate=replicate, error=f"{type(e).__name__}: {e}")


def _replicate_rows(cfg: ScenarioConfig, replicate: int) -> list[EvalRow]:
    sample = generate_scenario(cfg, replicate)
    truth = sample.evaluation_truth(cfg.evaluation)
    synth = CausalSynthesis(
        CausalSynthConfig(sampler=cfg.sampler, priors=cfg.priors, agents=cfg.agents)
    )
    agent_seed = child_seed(spawn_rng(cfg.seed, replicate, 1))
    chain_seed = child_seed(spawn_rng(cfg.seed, replicate, 2))

    posteriors, fitted = synth.fit_agents(
        sample.data, cfg.roster, seed=agent_seed, truth=sample.tau
    )
    if cfg.evaluation == "test":
        assert sample.test_x is not None
        outputs = [
            fitted[name].estimate(sample.test_x, truth=sample.test_tau) for name in cfg.roster
        ]
        estimates = [(fit.tau_hat, fit.se) for fit in outputs]
    else:
        estimates = [(agent.tau_hat, agent.se) for agent in posteriors]

    rows: list[EvalRow] = []
    if cfg.include_bcs:
        settings = cfg.sampler.model_copy(update={"seed": chain_seed})
        chain = sample_chain(sample.data, posteriors, cfg.priors, settings)
        if cfg.evaluation == "test":
            assert sample.test_x is not None
            frame = predict_points(
                chain,
                sample.test_x,
                np.column_stack([tau_hat for tau_hat, _ in estimates]),
                np.column_stack([se for _, se in estimates]),
                seed=chain_seed,
                agent_names=list(cfg.roster),
            )
        else:
            frame = summarize_draws(chain.draws.tau)
        rows.append(
            evaluate(
                frame["mean"].to_numpy(),
                truth,
                (frame["lo95"].to_numpy(), frame["hi95"].to_numpy()),
                method=METHOD_BCS,
            )
        )

    for name, (tau_hat, se) in zip(cfg.roster, estimates, strict=True):
        rows.append(evaluate(tau_hat, truth, (tau_hat - _Z * se, tau_hat + _Z * se), method=name))
    return rows


def _init_worker(level: int) -> None:
    setup_logging(level)


def run_replications(cfg: ScenarioConfig, *, workers: int | None = None) -> EvalReport:
    """Run every replicate of ``cfg`` and aggregate the scores.

    Replicates run in worker processes when more than one worker is
    configured (argument, then ``cfg.workers``, then CAUSALSYNTH_WORKERS).
    Results are identical for any worker count.
    """
    n_workers = resolve_workers(workers if workers is not None else cfg.workers)
    indices = list(range(cfg.replications))
    start = time.monotonic()
    logger.info(
        "Starting replications",
        extra={"scenario": cfg.name, "replications": cfg.replications, "workers": n_workers},
    )
    if n_workers == 1 or cfg.replications == 1:
        results = [run_replicate(cfg, r) for r in indices]
    else:
        level = logger.getEffectiveLevel()
        with ProcessPoolExecutor(
            max_workers=n_workers, initializer=_init_worker, initargs=(level,)
        ) as pool:
            results = list(pool.map(run_replicate, [cfg] * len(indices), indices))

    report = aggregate(cfg, results, time.monotonic() - start)
    logger.info(
        "Replications finished",
        extra={"completed": report.completed, "failed": len(report.failures)},
    )
    return report


# =============================================================================
# REPORTS
# =============================================================================


def write_report(report: EvalReport, out: Path) -> list[Path]:
    """Write report.csv, report.json and replicates.csv under ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    summary = pd.DataFrame(
        [m.model_dump() for m in report.methods],
        columns=["method", "mse", "rmse", "cp", "al", "replications"],
    )
    csv_path = out / REPORT_CSV_FILE
    summary.to_csv(csv_path, index=False, float_format=CSV_FLOAT_FORMAT)

    json_path = out / REPORT_JSON_FILE
    json_path.write_text(json.dumps(report.model_dump(mode="json"), indent=2) + "\n")

    per_rep = pd.DataFrame(
        [
            {
                "replicate": r.replicate,
                "method": row.method,
                "mse": row.mse,
                "cp": row.cp,
                "al": row.al,
            }
            for r in report.replicates
            for row in r.rows
        ],
        columns=["replicate", "method", "mse", "cp", "al"],
    )
    rep_path = out / REPLICATES_FILE
    per_rep.to_csv(rep_path, index=False, float_format=CSV_FLOAT_FORMAT)
    return [csv_path, json_path, rep_path]
