"""
Command line entry point: one subcommand per section runner

    python cli.py <subcommand> --config PATH [--out DIR] [--seed N]
                  [--threads N] [--mu-sweep A:B] [--log-level LEVEL]

Exit codes: 0 success, 1 unexpected error, 2 config error, 3 hypothesis failure.
"""
import logging
import sys
from dataclasses import replace
from pathlib import Path

import click

from constants import (
    EXIT_OK,
    EXIT_UNEXPECTED,
    EXIT_CONFIG_ERROR,
    EXIT_HYPOTHESIS_FAILURE,
    SERVICE_NAME,
    SERVICE_VERSION,
    ErrorCodes,
)
from reports import RUNNERS
from utils import config_hash, write_csv, write_json
from validation import ValidationError, HypothesisError, load_config, validate_int, validate_mu_sweep

logger = logging.getLogger(__name__)

MU_SWEEP_SECTIONS = {"certify", "simulate", "hall"}


def apply_overrides(config, section_name, seed=None, out=None, mu_sweep=None):
    """
    Fold command-line overrides into the resolved config before hashing

    Raises:
        ValidationError: If --mu-sweep is given for a section without couplings
    """
    changes = {}
    if seed is not None:
        changes["seed"] = validate_int(seed, "--seed", 0)
    if out is not None:
        changes["output_dir"] = str(out)
    if mu_sweep is not None:
        if section_name not in MU_SWEEP_SECTIONS:
            raise ValidationError(f"--mu-sweep does not apply to '{section_name}'", ErrorCodes.INVALID_CONFIG)
        section = dict(config.sections.get(section_name, {}))
        section["mu_list"] = validate_mu_sweep(mu_sweep, section.get("points_per_decade", 1))
        if section_name == "certify":
            section.pop("mu", None)
        sections = dict(config.sections)
        sections[section_name] = section
        changes["sections"] = sections
    return replace(config, **changes) if changes else config


def write_report(report, config, out_dir):
    """Write the report's tables and its JSON summary, echoing the resolved config."""
    out_dir = Path(out_dir)
    resolved = config.resolved()
    digest = config_hash(resolved)
    for name, (header, rows) in report.tables.items():
        write_csv(out_dir / name, header, rows)
    summary = {
        "service": SERVICE_NAME,
        "version": SERVICE_VERSION,
        "subcommand": report.name,
        "success": report.ok,
        "config_hash": digest,
        "config": resolved,
        "results": report.payload,
    }
    if report.failure:
        summary["failure"] = report.failure
    write_json(out_dir / report.summary_file, summary)
    return digest


def _write_failure(name, config, out_dir, error):
    resolved = config.resolved()
    payload = {
        "service": SERVICE_NAME,
        "version": SERVICE_VERSION,
        "subcommand": name,
        "success": False,
        "config_hash": config_hash(resolved),
        "config": resolved,
        "failure": {"code": error.code, "message": error.message},
    }
    write_json(Path(out_dir) / RUNNER_SUMMARIES[name], payload)


RUNNER_SUMMARIES = {
    "validate-algebra": "algebra_report.json",
    "pair-cocycle": "cocycle_report.json",
    "model-spectrum": "model_summary.json",
    "gap-certify": "certificate.json",
    "simulate": "simulate_summary.json",
    "hall": "hall_summary.json",
}


def execute(name, config_path, out=None, seed=None, threads=None, mu_sweep=None):
    """
    Load, run and write one subcommand

    Returns:
        int: Exit code
    """
    section_name, runner = RUNNERS[name]
    config = None
    try:
        config = apply_overrides(load_config(config_path), section_name, seed, out, mu_sweep)
        kwargs = {}
        if name in ("simulate", "hall"):
            kwargs["threads"] = validate_int(threads, "--threads", 1) if threads is not None else None
        report = runner(config, **kwargs)
        digest = write_report(report, config, config.output_dir)
        if not report.ok:
            click.echo(f"{name}: {report.failure['message']} ({report.failure['code']})", err=True)
            return EXIT_HYPOTHESIS_FAILURE
        click.echo(f"{name}: ok, config {digest[:12]}, outputs in {config.output_dir}")
        return EXIT_OK
    except HypothesisError as e:
        logger.info("Hypothesis failure in %s: %s", name, e.message)
        if config is not None:
            _write_failure(name, config, config.output_dir, e)
        click.echo(f"{name}: {e.message} ({e.code})", err=True)
        return EXIT_HYPOTHESIS_FAILURE
    except ValidationError as e:
        click.echo(f"{name}: invalid configuration: {e.message} ({e.code})", err=True)
        return EXIT_CONFIG_ERROR
    except Exception:
        logger.exception("Unexpected error in %s", name)
        click.echo(f"{name}: an unexpected error occurred", err=True)
        return EXIT_UNEXPECTED


@click.group()
@click.option("--log-level", default="WARNING", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def main(log_level):
    """Semiclassical spectral gaps: algebra, cocycles, model spectra, certificates, lattices."""
    logging.basicConfig(level=getattr(logging, log_level.upper()),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _command(name, with_threads=False, with_sweep=False):
    @click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
                  help="JSON run configuration")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory")
    @click.option("--seed", type=int, default=None, help="Override the config seed")
    @click.pass_context
    def command(ctx, config_path, out, seed, threads=None, mu_sweep=None):
        ctx.exit(execute(name, config_path, out, seed, threads, mu_sweep))

    if with_threads:
        command = click.option("--threads", type=int, default=None, help="Worker threads for k-points")(command)
    if with_sweep:
        command = click.option("--mu-sweep", default=None, help="Log-spaced couplings A:B")(command)
    return main.command(name, help=RUNNERS[name][1].__doc__)(command)


_command("validate-algebra")
_command("pair-cocycle")
_command("model-spectrum")
_command("gap-certify", with_sweep=True)
_command("simulate", with_threads=True, with_sweep=True)
_command("hall", with_threads=True, with_sweep=True)


def run(argv=None):
    """
    Run the command line with explicit arguments

    Args:
        argv: Argument list without the program name

    Returns:
        int: Exit code
    """
    try:
        code = main.main(args=list(argv) if argv is not None else None, standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_CONFIG_ERROR
    except click.Abort:
        return EXIT_UNEXPECTED
    return int(code or EXIT_OK)


if __name__ == "__main__":
    sys.exit(run())
