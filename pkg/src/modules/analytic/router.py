import logging

import click

from modules.analytic.controller import check_table1, load_table1, reproduce_table1
from schemas.cli import Command
from schemas.pricing import WeightsMode
from utils.config import get_defaults_config, get_fixture_path
from utils.exceptions import GoldenMismatchException
from utils.options import build_params, build_run_config, mode_option, output_options
from utils.output import emit_rows

logger = logging.getLogger(__name__)
defaults = get_defaults_config()

TABLE1_OUTPUT_COLUMNS = [
    "beta", "S", "E", "T",
    "analytic", "tree365", "tree730",
    "fixture_analytic", "fixture_tree365", "fixture_tree730",
    "delta_analytic", "delta_tree365", "delta_tree730",
    "delta", "within",
]


@click.command("table1", help="重算表1（欧式看跌，σ=0.2，r=0.05）并与金标准比对")
@mode_option(default=WeightsMode.APPROX_P.value)
@click.option("--maturity", "maturities", type=float, multiple=True,
              help="只比对这些到期时间，可重复；缺省为全部")
@click.option("--tree-tol", type=float, default=0.001, show_default=True, help="格点价格容差")
@click.option("--analytic-tol", type=float, default=0.0005, show_default=True, help="解析解容差")
@click.option("--fixture", type=click.Path(dir_okay=False), default=None, help="金标准CSV，缺省取配置")
@output_options()
def table1_command(mode, maturities, tree_tol, analytic_tol, fixture, output_format, out):
    params = build_params(defaults['s0'], defaults['sigma'], defaults['beta'], defaults['r'], 0.0)
    config = build_run_config(
        Command.TABLE1,
        params=params,
        mode=mode,
        maturity=defaults['maturity'],
        steps=[365, 730],
        output_format=output_format,
        out=out,
    )
    fixture_rows = load_table1(fixture or get_fixture_path())
    results = reproduce_table1(
        fixture_rows,
        mode=config.mode,
        maturities=list(maturities) or None,
        sigma=params.sigma,
        r=params.r,
    )
    try:
        check_table1(results, tree_tol=tree_tol, analytic_tol=analytic_tol)
    except GoldenMismatchException:
        emit_rows(results, config.output_format.value, config.out, columns=TABLE1_OUTPUT_COLUMNS)
        raise
    emit_rows(results, config.output_format.value, config.out, columns=TABLE1_OUTPUT_COLUMNS)
