import logging

import click

from modules.lattice.controller import build_lattice, envelope_deviation, envelope_table, validate_tree_params
from schemas.cli import Command
from utils.config import get_defaults_config
from utils.options import build_params, build_run_config, market_options, output_options
from utils.output import emit_rows

logger = logging.getLogger(__name__)
defaults = get_defaults_config()

ENVELOPE_COLUMNS = ["tau", "tree_upper", "tree_lower", "ode_upper", "ode_lower"]


@click.command("envelope", help="格点最上/最下支与包络方程闭式解的对比")
@market_options
@click.option("--steps", type=int, default=defaults['steps'], show_default=True, help="时间步数N")
@output_options()
def envelope_command(s0, sigma, beta, r, q, maturity, steps, output_format, out):
    params = build_params(s0, sigma, beta, r, q)
    config = build_run_config(
        Command.ENVELOPE,
        params=params,
        maturity=maturity,
        steps=[steps],
        output_format=output_format,
        out=out,
    )
    validate_tree_params(params)

    lattice = build_lattice(params, config.maturity, steps)
    logger.info(f"包络最大相对偏差: {envelope_deviation(lattice, params):.6g}")
    emit_rows(envelope_table(lattice, params), config.output_format.value, config.out, columns=ENVELOPE_COLUMNS)
