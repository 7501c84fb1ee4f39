import logging

import click
from pydantic import ValidationError

from modules.analytic.controller import european_price_cev
from modules.mc_oracle.controller import mc_european_price
from schemas.cli import Command
from schemas.mc import McConfig
from utils.config import get_mc_config
from utils.options import (
    build_params,
    build_run_config,
    contract_options,
    market_options,
    output_options,
    translate_validation_error,
)
from utils.output import emit_object

logger = logging.getLogger(__name__)
mc_config = get_mc_config()


@click.command("mc", help="Euler 蒙特卡洛欧式期权价格，并与闭式解比较")
@market_options
@contract_options
@click.option("--paths", "n_paths", type=int, default=mc_config['n_paths'], show_default=True, help="路径数")
@click.option("--time-steps", "n_time_steps", type=int, default=mc_config['n_time_steps'], show_default=True,
              help="每条路径的时间步数")
@click.option("--seed", type=int, default=mc_config['seed'], show_default=True, help="64位随机种子")
@click.option("--antithetic/--no-antithetic", default=False, show_default=True, help="是否使用对偶变量")
@output_options(default_format="json")
def mc_command(s0, sigma, beta, r, q, maturity, kind, strike, n_paths, n_time_steps, seed, antithetic,
               output_format, out):
    params = build_params(s0, sigma, beta, r, q)
    try:
        cfg = McConfig(
            n_paths=n_paths,
            n_time_steps=n_time_steps,
            seed=seed,
            antithetic=antithetic,
            block_size=mc_config['block_size'],
        )
    except ValidationError as e:
        raise translate_validation_error(e)
    config = build_run_config(
        Command.MC,
        params=params,
        maturity=maturity,
        steps=[cfg.n_time_steps],
        output_format=output_format,
        out=out,
    )

    price, std_error = mc_european_price(params, strike, config.maturity, kind, cfg)
    analytic = european_price_cev(params, strike, config.maturity, kind)
    z_score = (price - analytic) / std_error if std_error > 0 else 0.0
    emit_object({
        "price": price,
        "std_error": std_error,
        "analytic": analytic,
        "z_score": z_score,
        "n_paths": cfg.n_paths,
        "n_time_steps": cfg.n_time_steps,
        "seed": cfg.seed,
        "antithetic": cfg.antithetic,
    }, config.output_format.value, config.out)
