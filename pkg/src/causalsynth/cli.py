"""CLI entry point for causalsynth.

Commands:
    synthesize: Fit or load agents, run the synthesis chain, write summaries
    predict: Posterior treatment effects at new points from a saved chain
    simulate: Run a simulation scenario and write the evaluation report
    validate: Run the correctness checks
    agents: Fit built-in agents and write them in the plug-in CSV format

Results go to files and short status lines to stdout. Failures print one
JSON line on stderr and exit with the error's code (2 configuration,
3 encoding, 1 otherwise).

Example:
    causalsynth synthesize --data study.csv --fit-agents lm,am,knn --out results
    causalsynth predict --chain results/chain --points new.csv
    causalsynth simulate --scenario scenario1_desk --out bench
"""

from __future__ import annotations

import json
import logging
import sys
from collections.abc import Callable
from functools import wraps
from pathlib import Path
from typing import Any, NoReturn, TypeVar

import click

from causalsynth import __version__
from causalsynth.constants import GEWEKE_DRAWS, PREDICTIONS_FILE
from causalsynth.exceptions import CausalSynthError
from causalsynth.logging import setup_logging

F = TypeVar("F", bound=Callable[..., Any])

_INPUT_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)


def _success(msg: str) -> str:
    """Format success message with green checkmark."""
    return click.style("✓", fg="green") + " " + msg


def _error(msg: str) -> str:
    """Format error message with red X."""
    return click.style("✗", fg="red") + " " + msg


def _info(msg: str) -> str:
    """Format info message with blue arrow."""
    return click.style("→", fg="blue") + " " + msg


def _fail(error: CausalSynthError) -> NoReturn:
    click.echo(error.to_json(), err=True)
    sys.exit(error.exit_code)


def reports_errors(command: F) -> F:
    """Turn CausalSynthError into a JSON line on stderr and its exit code."""

    @wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except CausalSynthError as e:
            _fail(e)

    return wrapper  # type: ignore[return-value]


def _roster(value: str | None) -> list[str]:
    if not value:
        return []
    return [name.strip() for name in value.split(",") if name.strip()]


@click.group()
@click.version_option(version=__version__, prog_name="causalsynth")
@click.option("--verbose", "-v", is_flag=True, help="Show debug logs on stderr")
@click.pass_context
def cli(ctx: click.Context, verbose: bool) -> None:
    """causalsynth - Bayesian synthesis of treatment effect estimators.

    Combines pointwise effect estimates and standard errors from several
    agents into one posterior for the heterogeneous treatment effect.
    """
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    setup_logging(logging.DEBUG if verbose else logging.WARNING, include_timestamp=verbose)


# =============================================================================
# SYNTHESIZE
# =============================================================================


@cli.command()
@click.option("--data", "data_path", required=True, type=_INPUT_FILE)
@click.option("--agents", "agents_path", type=_INPUT_FILE, help="Plug-in agent CSV")
@click.option("--fit-agents", "fit_agents", default=None, help="Built-in agents, e.g. lm,am,knn")
@click.option("--pi-column", default=None, help="Column holding known propensity scores")
@click.option("--categorical", multiple=True, help="Covariate to treat as categorical")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
@click.option("--seed", type=int, default=None, help="Override the sampler seed")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("causalsynth-out"))
@reports_errors
def synthesize(
    data_path: Path,
    agents_path: Path | None,
    fit_agents: str | None,
    pi_column: str | None,
    categorical: tuple[str, ...],
    config_path: Path | None,
    seed: int | None,
    out_dir: Path,
) -> None:
    """Run the synthesis model on a dataset.

    \b
    Writes to --out:
        tau_summary.csv         mean, sd, lo95, hi95, width per row
        coefficients.csv        posterior mean and bounds of every beta_j
        chain_diagnostics.json  acceptance rates, ESS, log joint trace
        agents.csv              the agent estimates that were combined
        chain/                  saved draws for `causalsynth predict`
    """
    from causalsynth.config import load_config
    from causalsynth.core import CausalSynthesis, write_synthesis_outputs
    from causalsynth.data import read_agent_csv, read_data_csv

    roster = _roster(fit_agents)
    if agents_path is None and not roster:
        raise click.UsageError("Provide --agents <csv> or --fit-agents <names>")

    config = load_config(config_path)
    data, encoding = read_data_csv(
        data_path,
        categorical=[*config.data.categorical, *categorical],
        pi_column=pi_column or config.data.pi_column,
    )
    external = read_agent_csv(agents_path) if agents_path is not None else []

    result = CausalSynthesis(config).synthesize(
        data, roster=roster, external=external, encoding=encoding, seed=seed
    )
    written = write_synthesis_outputs(result, out_dir, encoding=encoding)

    click.echo(_success(f"Synthesized {len(result.agents)} agent(s) over {data.n} rows"))
    for path in written:
        click.echo("  " + _info(str(path)))


# =============================================================================
# PREDICT
# =============================================================================


@cli.command()
@click.option("--chain", "chain_dir", required=True, type=click.Path(path_type=Path))
@click.option("--points", "points_path", required=True, type=_INPUT_FILE)
@click.option("--seed", type=int, default=None, help="Seed for the conditional draws")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=Path(PREDICTIONS_FILE))
@reports_errors
def predict(chain_dir: Path, points_path: Path, seed: int | None, out_path: Path) -> None:
    """Predict treatment effects at new points.

    --points holds the training covariate columns plus tau_hat_j, se_j for
    every agent of the chain. The output has mean, sd, lo95, hi95, width
    per point.
    """
    from causalsynth.constants import CSV_FLOAT_FORMAT
    from causalsynth.predict import predict_points, read_prediction_csv
    from causalsynth.storage import ChainStore

    stored = ChainStore(chain_dir).load()
    x, tau_hat, se = read_prediction_csv(points_path, stored.encoding, stored.agent_names)
    frame = predict_points(
        stored.chain,
        x,
        tau_hat,
        se,
        seed=stored.settings.seed if seed is None else seed,
        agent_names=stored.agent_names,
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out_path, index=False, float_format=CSV_FLOAT_FORMAT)
    click.echo(_success(f"Predicted {len(frame)} point(s) -> {out_path}"))


# =============================================================================
# SIMULATE
# =============================================================================


@cli.command()
@click.option("--scenario", required=True, help="Scenario file or bundled scenario name")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("causalsynth-sim"))
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Worker processes")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
@reports_errors
def simulate(
    scenario: str, out_dir: Path, workers: int | None, config_path: Path | None
) -> None:
    """Run a simulation study and write report.csv, report.json, replicates.csv.

    Worker count: --workers, then the scenario, then runtime.workers of the
    project config, then CAUSALSYNTH_WORKERS. Exits 1 after writing the
    report when a replicate failed.
    """
    from causalsynth.config import (
        bundled_scenario,
        list_bundled_scenarios,
        load_config,
        load_scenario,
    )
    from causalsynth.simbench import run_replications, write_report

    path = Path(scenario)
    if path.exists() or scenario not in list_bundled_scenarios():
        cfg = load_scenario(path)
    else:
        cfg = bundled_scenario(scenario)

    if workers is None and cfg.workers is None:
        workers = load_config(config_path).runtime.workers
    report = run_replications(cfg, workers=workers)
    write_report(report, out_dir)

    click.echo(click.style(f"{report.name}: {report.completed}/{report.replications}", bold=True))
    for m in report.methods:
        cp = "-" if m.cp is None else f"{m.cp:.1f}"
        al = "-" if m.al is None else f"{m.al:.3f}"
        click.echo(f"  {m.method:<8} mse={m.mse:.4f} rmse={m.rmse:.4f} cp={cp} al={al}")
    click.echo(_info(f"Report written to {out_dir}"))

    if not report.complete:
        for failure in report.failures:
            click.echo(_error(f"replicate {failure.replicate}: {failure.error}"), err=True)
        click.echo(
            json.dumps(
                {
                    "error": "IncompleteReport",
                    "message": "Some replicates failed",
                    "details": {"failed": [f.replicate for f in report.failures]},
                },
                separators=(",", ":"),
            ),
            err=True,
        )
        sys.exit(1)


# =============================================================================
# VALIDATE
# =============================================================================


@cli.command()
@click.option(
    "--geweke-draws",
    type=click.IntRange(min=1),
    default=GEWEKE_DRAWS,
    show_default=True,
    help="Draws per simulator in the joint-distribution test",
)
@click.option("--seed", type=int, default=0, show_default=True)
@reports_errors
def validate(geweke_draws: int, seed: int) -> None:
    """Run the correctness checks; exit 0 only if all pass."""
    from causalsynth.oracles import run_oracle_suite

    results = run_oracle_suite(seed=seed, geweke_draws=geweke_draws)
    for result in results:
        line = f"{result.name}: {result.statistic:.3g} (threshold {result.threshold:.3g})"
        if result.detail:
            line += f" {result.detail}"
        click.echo(_success(line) if result.passed else _error(line))

    failed = [r for r in results if not r.passed]
    if failed:
        click.echo(
            json.dumps(
                {
                    "error": "ValidationFailed",
                    "message": "Correctness checks failed",
                    "details": {
                        r.name: {"statistic": r.statistic, "detail": r.detail} for r in failed
                    },
                },
                separators=(",", ":"),
                default=str,
            ),
            err=True,
        )
        sys.exit(1)


# =============================================================================
# AGENTS
# =============================================================================


@cli.command("agents")
@click.option("--data", "data_path", required=True, type=_INPUT_FILE)
@click.option("--fit-agents", "fit_agents", required=True, help="Built-in agents, e.g. lm,am,knn")
@click.option("--pi-column", default=None, help="Column holding known propensity scores")
@click.option("--categorical", multiple=True, help="Covariate to treat as categorical")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
@click.option("--seed", type=int, default=None, help="Override the configured seed")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=Path("agents.csv"))
@reports_errors
def agents_command(
    data_path: Path,
    fit_agents: str,
    pi_column: str | None,
    categorical: tuple[str, ...],
    config_path: Path | None,
    seed: int | None,
    out_path: Path,
) -> None:
    """Fit built-in agents and write them in the plug-in CSV format."""
    from causalsynth.config import load_config
    from causalsynth.core import CausalSynthesis
    from causalsynth.data import read_data_csv, write_agent_csv

    config = load_config(config_path)
    data, _ = read_data_csv(
        data_path,
        categorical=[*config.data.categorical, *categorical],
        pi_column=pi_column or config.data.pi_column,
    )
    synth = CausalSynthesis(config)
    posteriors, _ = synth.fit_agents(
        data, _roster(fit_agents), seed=config.sampler.seed if seed is None else seed
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_agent_csv(out_path, posteriors)
    click.echo(_success(f"Wrote {len(posteriors)} agent(s) -> {out_path}"))


def main() -> None:
    """Main entry point for the CLI."""
    cli()


if __name__ == "__main__":
    main()
