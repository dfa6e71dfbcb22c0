import asyncio
import logging
import sys
from typing import Any

import click

from dnls_lab.config import ExperimentConfig
from dnls_lab.experiments.experiment_manager import ExperimentManager
from dnls_lab.runner import EXIT_CONFIG, _format_result, exit_code_for, run_experiment

EVOLUTION_KEYS = ("dt", "t_final", "flow", "scheme", "orientation", "save_every")


def _parse_xi(ctx: click.Context, param: click.Parameter, value: tuple[str, ...]) -> list[tuple[float, float]] | None:
    pairs = []
    for item in value:
        try:
            xi1, xi2 = (float(x) for x in item.split(","))
        except ValueError:
            raise click.BadParameter(f"expected 'xi1,xi2', got {item!r}")
        pairs.append((xi1, xi2))
    return pairs or None


def _grid_options(func):
    func = click.option("--stencil-order", type=int, help="Use the centred stencil of order 2n instead of the three-point Laplacian")(func)
    func = click.option("--L", "length", type=float, help="Period of the lattice box")(func)
    func = click.option("--h", "h", type=float, multiple=True, help="Lattice step (repeatable)")(func)
    func = click.option("--xi", callback=_parse_xi, multiple=True, help="Wave parameters 'xi1,xi2' (repeatable)")(func)
    return func


def _evolution_options(func):
    func = click.option("--max-wall-seconds", type=float, help="Truncate each run once this wall-clock budget is spent")(func)
    func = click.option("--gate/--no-gate", default=None, help="Fail with exit code 4 when the acceptance threshold is missed")(func)
    func = click.option("--initial", type=click.Choice(["eta", "psi"]), help="Start from the discrete wave or the sampled continuous soliton")(func)
    func = click.option("--perturbation", type=float, help="H^1 size of the seeded random perturbation")(func)
    func = click.option("--orientation", type=click.Choice(["forward", "printed"]), help="Time orientation of the lattice equation")(func)
    func = click.option("--scheme", type=click.Choice(["strang", "rk4"]), help="Time stepper")(func)
    func = click.option("--flow", type=click.Choice(["dnls", "dealiased", "dst"]), help="Evolution equation")(func)
    func = click.option("--save-every", type=int, help="Steps between saved frames")(func)
    func = click.option("--dt", type=float, help="Time step (default min(0.01, h^2/2))")(func)
    func = click.option("--t-final", type=float, help="Final time")(func)
    return func


def _run(ctx: click.Context, experiment: str, options: dict[str, Any]) -> None:
    overrides = {k: v for k, v in {**ctx.obj["overrides"], **options}.items() if v not in (None, ())}
    evolution = {k: overrides.pop(k) for k in EVOLUTION_KEYS if k in overrides}
    if evolution:
        overrides["evolution"] = evolution
    overrides["experiment"] = experiment
    try:
        config = ExperimentConfig.resolve(ctx.obj["config_path"], overrides)
    except ValueError as e:
        click.echo(f"Configuration error: {e}", err=True)
        sys.exit(EXIT_CONFIG)

    try:
        result = asyncio.run(run_experiment(config))
    except Exception as e:
        code = exit_code_for(e)
        if code == 1:
            raise
        click.echo(f"{'Configuration error' if code == EXIT_CONFIG else 'Experiment failed'}: {e}", err=True)
        sys.exit(code)
    click.echo(_format_result(result))


@click.group()
@click.option("-v", "--verbose", count=True, help="Increase verbosity")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML configuration file or a previous run's manifest.json")
@click.option("--out", "output_dir", help="Output directory")
@click.option("--seed", type=int, help="Seed for random perturbations")
@click.option("--threads", type=int, help="Sweep points evaluated concurrently")
@click.pass_context
def main(ctx: click.Context, verbose: int, config_path: str | None = None, output_dir: str | None = None, seed: int | None = None, threads: int | None = None) -> None:
    """Pseudospectral laboratory for discrete traveling waves of the cubic DNLS"""
    logging_level = logging.WARN
    if verbose == 1:
        logging_level = logging.INFO
    elif verbose >= 2:
        logging_level = logging.DEBUG

    logging.basicConfig(level=logging_level, stream=sys.stderr)
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["overrides"] = {"output_dir": output_dir, "seed": seed, "threads": threads}


@main.command()
@_grid_options
@click.option("--diagnostics/--no-diagnostics", default=None, help="Compute the coercivity spectrum and spectral decay fit")
@click.pass_context
def solve(ctx: click.Context, **options: Any) -> None:
    """Solve for discrete traveling waves."""
    _run(ctx, "solve", options)


@main.command()
@_grid_options
@click.option("--gate/--no-gate", default=None, help="Fail with exit code 4 when the fitted order misses")
@click.pass_context
def consistency(ctx: click.Context, **options: Any) -> None:
    """Fit the order of ||eta - psi||_H1 against h."""
    _run(ctx, "consistency", options)


@main.command()
@_grid_options
@_evolution_options
@click.option("--delta-gate", type=float, help="Largest admissible orbit distance")
@click.pass_context
def stability(ctx: click.Context, **options: Any) -> None:
    """Evolve a perturbed wave and track its orbit."""
    _run(ctx, "stability", options)


@main.command("sobolev-growth")
@_grid_options
@_evolution_options
@click.pass_context
def sobolev_growth(ctx: click.Context, **options: Any) -> None:
    """Growth exponent of the discrete Sobolev norms."""
    _run(ctx, "sobolev-growth", options)


@main.command()
@_grid_options
@_evolution_options
@click.pass_context
def peierls(ctx: click.Context, **options: Any) -> None:
    """Speed of a moving wave on a coarse lattice."""
    _run(ctx, "peierls", options)


@main.command("stencil-info")
@click.option("--max-order", "stencil_order", type=int, help="Largest stencil half width n (default 4)")
@click.pass_context
def stencil_info(ctx: click.Context, **options: Any) -> None:
    """Coefficients, consistency order and stability constant of the centred stencils."""
    _run(ctx, "stencil-info", options)


@main.command("experiments")
@click.pass_context
def list_experiments(ctx: click.Context) -> None:
    """List the available experiments."""
    manager = ExperimentManager(ExperimentConfig())
    for entry in manager.list_experiments():
        click.echo(f"{entry['name']}: {entry['description']}")


if __name__ == "__main__":
    main()
