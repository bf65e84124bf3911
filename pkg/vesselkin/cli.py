import json
import logging
import os
from typing import Optional, Tuple

import click

from vesselkin import Config, ConfigException, ReportEncoder, SimulationException
from vesselkin.diagnostics import DEFAULT_GATES
from vesselkin.io import (
    FIELD_SELECTORS,
    export_csv,
    export_series,
    load_config,
    read_diagnostics,
    read_snapshot,
    record_failure,
)
from vesselkin.io import check as check_config
from vesselkin.io import run as run_config

log = logging.getLogger(__name__)

THREADS_ENV = 'VESSELKIN_THREADS'


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Log at debug level.')
def main(verbose: bool) -> None:
    """Kinetic tip density and TAF simulator."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )


@main.command()
@click.argument('config_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', '-o', 'out_dir', type=click.Path(file_okay=False),
              help='Run directory, defaults to runs/<config name>.')
@click.option('--resume', type=click.Path(exists=True, dir_okay=False),
              help='Checkpoint to continue a direct run from.')
@click.pass_context
def run(ctx: click.Context, config_path: str, out_dir: Optional[str], resume: Optional[str]):
    """Run the configured mode and write snapshots, diagnostics and a summary."""
    if out_dir is None:
        stem = os.path.splitext(os.path.basename(config_path))[0]
        out_dir = os.path.join('runs', stem)
    threads = os.environ.get(THREADS_ENV)
    try:
        config = load_config(config_path)
    except ConfigException as e:
        click.echo(f'error: {e.message}', err=True)
        ctx.exit(record_failure(out_dir, e))
    code = run_config(config, out_dir, resume=resume, threads=threads)
    click.echo(f'{out_dir}: exit {code}')
    ctx.exit(code)


@main.command()
@click.argument('config_path', type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def check(ctx: click.Context, config_path: str):
    """Validate a config and evaluate admissibility without running."""
    try:
        result = check_config(load_config(config_path))
    except SimulationException as e:
        click.echo(f'error: {e.message}', err=True)
        ctx.exit(e.exit_code)
    click.echo(json.dumps(result, cls=ReportEncoder, indent=2))


def _run_params(snapshot_path: str, config_path: Optional[str]):
    if config_path is None:
        candidate = os.path.join(os.path.dirname(snapshot_path), os.pardir, 'config.json')
        if not os.path.exists(candidate):
            return None
        config_path = candidate
    return load_config(config_path).params


@main.command()
@click.argument('path', type=click.Path(exists=True))
@click.option('--field', 'selector', type=click.Choice(FIELD_SELECTORS),
              help='Field of a snapshot file.')
@click.option('--series', 'series_name', help='Dotted diagnostic name, e.g. norms.inf.')
@click.option('--cell', nargs=2, type=int, default=(0, 0), show_default=True,
              help='Spatial cell (i, j) of a velocity slice.')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
              help='Run config, needed for the tip flux unless the run directory has one.')
@click.pass_context
def export(
    ctx: click.Context,
    path: str,
    selector: Optional[str],
    series_name: Optional[str],
    cell: Tuple[int, int],
    config_path: Optional[str],
):
    """Export a snapshot field or a diagnostic time series as CSV."""
    if (selector is None) == (series_name is None):
        raise click.UsageError('give exactly one of --field and --series')
    try:
        if series_name is not None:
            if os.path.isdir(path):
                path = os.path.join(path, 'diagnostics.jsonl')
            with open(path, encoding='utf-8') as f:
                _, records = read_diagnostics(f)
            click.echo(export_series(records, series_name), nl=False)
            return
        snapshot = read_snapshot(path)
        params = _run_params(path, config_path) if selector == 'j' else None
        click.echo(export_csv(snapshot, selector, params=params, cell=cell), nl=False)
    except SimulationException as e:
        click.echo(f'error: {e.message}', err=True)
        ctx.exit(e.exit_code)
    except ValueError as e:
        click.echo(f'error: {e}', err=True)
        ctx.exit(Config.EXIT_CONFIG)


@main.command()
@click.argument('run_dir', type=click.Path(exists=True, file_okay=False))
@click.pass_context
def diag(ctx: click.Context, run_dir: str):
    """Print the gate table of a finished run; exit 5 if an enabled gate failed."""
    with open(os.path.join(run_dir, 'diagnostics.jsonl'), encoding='utf-8') as f:
        header, records = read_diagnostics(f)
    enabled = list(DEFAULT_GATES)
    summary_path = os.path.join(run_dir, 'summary.json')
    if os.path.exists(summary_path):
        with open(summary_path, encoding='utf-8') as f:
            enabled = json.load(f).get('enabled_gates', enabled)

    gates = dict(header.get('gates', {}))
    for record in records:
        for name, ok in record.get('gates', {}).items():
            gates[name] = gates.get(name, True) and ok
    click.echo(f'{"gate":<16}{"enabled":<10}result')
    for name, ok in gates.items():
        click.echo(f'{name:<16}{"yes" if name in enabled else "no":<10}{"pass" if ok else "FAIL"}')
    click.echo(f'{len(records)} snapshots')
    if any(not ok for name, ok in gates.items() if name in enabled):
        ctx.exit(Config.EXIT_GATE)
