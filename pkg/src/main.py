import os
import sys
import logging
import traceback
from datetime import datetime

parent_path = os.path.dirname(os.path.abspath(__file__))
if parent_path not in sys.path:
    sys.path.append(parent_path)

import click

from utils.config import get_logging_config
from utils.exceptions import BaseCevException, ExitCode, format_error_response

# 配置日志（输出到stderr，stdout只留给CSV/JSON结果）
logging.basicConfig(
    level=getattr(logging, get_logging_config()['level'], logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger(__name__)


class CevGroup(click.Group):
    """统一把异常转换为退出码，并记录每条命令的耗时"""

    def invoke(self, ctx: click.Context):
        start_time = datetime.now()
        try:
            result = super().invoke(ctx)
            process_time = (datetime.now() - start_time).total_seconds()
            logger.info(f"Command | {ctx.invoked_subcommand} | Time: {process_time:.3f}s")
            return result
        except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
            raise
        except BaseCevException as exc:
            process_time = (datetime.now() - start_time).total_seconds()
            logger.warning(
                f"Command Failed | "
                f"Command: {ctx.invoked_subcommand} | "
                f"Time: {process_time:.3f}s | "
                f"Exit: {exc.exit_code} | "
                f"Error Code: {exc.error_code} | "
                f"Detail: {exc.detail}"
            )
            response = format_error_response(exc)
            message = f"Error [{response['error_code']}]: {response['message']}"
            if "context" in response:
                message += f" {response['context']}"
            click.echo(message, err=True)
            ctx.exit(exc.exit_code)
        except Exception as exc:
            error_id = datetime.now().strftime("%Y%m%d%H%M%S")
            logger.error(
                f"Error ID: {error_id} | "
                f"Command: {ctx.invoked_subcommand} | "
                f"Error: {str(exc)} | "
                f"Traceback: {traceback.format_exc()}"
            )
            click.echo(f"Error [INTERNAL_ERROR]: {exc} (error id {error_id})", err=True)
            ctx.exit(ExitCode.INTERNAL)


@click.group(cls=CevGroup, help="CEV 精确重组二叉树定价工具")
def cli():
    pass


from modules.pricing.router import price_command, converge_command, density_command
from modules.lattice.router import envelope_command
from modules.analytic.router import table1_command
from modules.mc_oracle.router import mc_command
cli.add_command(price_command)
cli.add_command(table1_command)
cli.add_command(converge_command)
cli.add_command(envelope_command)
cli.add_command(density_command)
cli.add_command(mc_command)


if __name__ == "__main__":
    cli()
