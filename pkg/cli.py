# cli.py
import sys
import logging

import click

from utils.log import dump_record, error_record, setup_logging

logger = logging.getLogger(__name__)


def _common_options(func):
    func = click.option("--engine", "engine", default=None, help="Restrict evaluation to one engine.")(func)
    func = click.option("--seed", "seed", type=int, default=None, help="Monte Carlo seed override.")(func)
    func = click.option("--out", "out", default=None, help="Output path ('-' for stdout).")(func)
    func = click.option(
        "--config", "config_path", required=True, help="Scenario JSON file or bundled name (fig1..fig6)."
    )(func)
    return func


def _run(command: str, config_path: str, out, seed, engine):
    """Loads the scenario, runs one command, and turns failures into a stderr record and exit 1."""
    from pricing.scenario import load_scenario
    from scripts import figures

    try:
        scenario = load_scenario(config_path).with_overrides(seed=seed, engine=engine, out=out)
        if command == "smile":
            figures.cmd_smile(scenario)
        elif command == "error-surface":
            figures.cmd_error_surface(scenario)
        elif command == "vasicek-term":
            figures.cmd_vasicek_term(scenario)
        else:
            record = figures.cmd_price(scenario)
            payload = dump_record(record)
            if scenario.output and scenario.output != "-":
                with open(scenario.output, "wb") as f:
                    f.write(payload + b"\n")
            else:
                click.echo(payload.decode("utf-8"))
    except Exception as e:
        logger.error(f"Command {command} failed: {e}", exc_info=not hasattr(e, "code"))
        sys.stderr.write(dump_record(error_record(e)).decode("utf-8") + "\n")
        sys.exit(1)


@click.group()
@click.option("--log-level", default=None, help="Overrides LOG_LEVEL.")
def cli(log_level):
    """Bond-option implied volatilities for affine short-rate models."""
    if log_level:
        from config import config

        config.LOG_LEVEL = log_level.upper()
    setup_logging()


@cli.command("smile")
@_common_options
def smile(config_path, out, seed, engine):
    """Exact and approximate implied vols over the strike grid."""
    _run("smile", config_path, out, seed, engine)


@cli.command("error-surface")
@_common_options
def error_surface(config_path, out, seed, engine):
    """Relative error of the second-order approximation over (k - x, T)."""
    _run("error-surface", config_path, out, seed, engine)


@cli.command("vasicek-term")
@_common_options
def vasicek_term(config_path, out, seed, engine):
    """Vasicek implied volatility as a function of t."""
    _run("vasicek-term", config_path, out, seed, engine)


@cli.command("price")
@_common_options
def price(config_path, out, seed, engine):
    """One forward call price through one engine."""
    _run("price", config_path, out, seed, engine)


def main():
    cli()


if __name__ == "__main__":
    main()
