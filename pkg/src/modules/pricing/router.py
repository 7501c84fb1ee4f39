import json
import logging

import click

from modules.analytic.controller import european_price_cev, lognormal_pdf
from modules.lattice.controller import build_lattice, validate_tree_params
from modules.pricing.controller import (
    bump_greeks,
    price_option,
    terminal_density,
    terminal_distribution,
)
from schemas.cli import Command
from schemas.pricing import ExerciseStyle
from utils.config import get_defaults_config
from utils.options import (
    build_params,
    build_payoff,
    build_run_config,
    contract_options,
    market_options,
    mode_option,
    output_options,
    parse_steps,
)
from utils.output import emit_object, emit_rows

logger = logging.getLogger(__name__)
defaults = get_defaults_config()


@click.command("price", help="格点定价，输出一个 PricingResult")
@market_options
@contract_options
@click.option("--steps", type=int, default=defaults['steps'], show_default=True, help="时间步数N")
@click.option("--style", type=click.Choice(["european", "american"]), default="european", show_default=True,
              help="行权方式")
@mode_option()
@output_options(default_format="json")
@click.option("--dump-lattice", "dump_lattice", type=click.Path(dir_okay=False, writable=True), default=None,
              help="把格点以JSON写入该文件")
@click.option("--greeks", is_flag=True, default=False, help="扰动重定价计算 delta/gamma/vega")
def price_command(s0, sigma, beta, r, q, maturity, kind, strike, steps, style, mode, output_format, out,
                  dump_lattice, greeks):
    params = build_params(s0, sigma, beta, r, q)
    config = build_run_config(
        Command.PRICE,
        params=params,
        payoff=build_payoff(kind, strike),
        style=style,
        mode=mode,
        maturity=maturity,
        steps=[steps],
        output_format=output_format,
        out=out,
    )
    validate_tree_params(params)

    lattice = build_lattice(params, config.maturity, steps)
    if dump_lattice:
        with open(dump_lattice, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(lattice.to_dump(), handle)
        logger.info(f"格点已导出: {dump_lattice}")

    result = price_option(lattice, config.payoff, config.style, params, config.mode)
    if greeks:
        result.greeks = bump_greeks(
            params, config.payoff, config.style, config.maturity, steps, config.mode, base_price=result.price
        )
    emit_object(result.to_output(), config.output_format.value, config.out)


@click.command("converge", help="欧式期权格点价格随步数的收敛")
@market_options
@contract_options
@click.option("--steps", "steps_text", type=str, default="182,365,730,1460", show_default=True,
              help="逗号分隔的升序步数列表")
@mode_option()
@output_options()
def converge_command(s0, sigma, beta, r, q, maturity, kind, strike, steps_text, mode, output_format, out):
    params = build_params(s0, sigma, beta, r, q)
    config = build_run_config(
        Command.CONVERGE,
        params=params,
        payoff=build_payoff(kind, strike),
        mode=mode,
        maturity=maturity,
        steps=parse_steps(steps_text),
        output_format=output_format,
        out=out,
    )
    validate_tree_params(params)

    analytic = european_price_cev(params, strike, config.maturity, config.payoff.kind)
    rows = []
    for n_steps in config.steps:
        lattice = build_lattice(params, config.maturity, n_steps)
        tree = price_option(lattice, config.payoff, ExerciseStyle.EUROPEAN, params, config.mode).price
        rows.append({
            "n_steps": n_steps,
            "tree_price": tree,
            "analytic_price": analytic,
            "abs_error": abs(tree - analytic),
        })
    emit_rows(rows, config.output_format.value, config.out,
              columns=["n_steps", "tree_price", "analytic_price", "abs_error"])


@click.command("density", help="格点隐含的到期概率密度")
@market_options
@click.option("--steps", type=int, default=defaults['steps'], show_default=True, help="时间步数N")
@mode_option()
@output_options()
def density_command(s0, sigma, beta, r, q, maturity, steps, mode, output_format, out):
    params = build_params(s0, sigma, beta, r, q)
    config = build_run_config(
        Command.DENSITY,
        params=params,
        mode=mode,
        maturity=maturity,
        steps=[steps],
        output_format=output_format,
        out=out,
    )
    validate_tree_params(params)

    lattice = build_lattice(params, config.maturity, steps)
    distribution = terminal_distribution(lattice, params, config.mode)
    with_lognormal = params.beta == 2

    columns = ["price", "tree_mass", "tree_density"]
    if with_lognormal:
        columns.append("lognormal_density")
    rows = []
    for price, mass, density in terminal_density(distribution, lattice.eps_floor):
        row = {"price": price, "tree_mass": mass, "tree_density": density}
        if with_lognormal:
            row["lognormal_density"] = lognormal_pdf(price, params.s0, params.r, params.sigma, config.maturity)
        rows.append(row)
    emit_rows(rows, config.output_format.value, config.out, columns=columns)

