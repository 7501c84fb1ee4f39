import configparser
import logging
import os


logger = logging.getLogger(__name__)

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
config = configparser.ConfigParser()

# 尝试多个可能的配置文件路径
config_paths = [
    os.path.join(BASE_DIR, "..", "config.ini"),  # 打包环境中的路径
    os.path.join(BASE_DIR, "..", "..", "config.ini"),  # 仓库根目录
    "config.ini"  # 当前工作目录
]

CONFIG_FILE = None
for config_path in config_paths:
    if os.path.exists(config_path):
        config.read(config_path)
        CONFIG_FILE = os.path.abspath(config_path)
        logger.debug(f"配置文件已加载: {CONFIG_FILE}")
        break

if CONFIG_FILE is None:
    logger.debug("未找到config.ini文件，将使用环境变量或默认值")


def get_defaults_config() -> dict:
    """获取命令行默认参数（与 table1 的市场参数一致）"""
    return {
        's0': config.getfloat('defaults', 's0', fallback=1.0),
        'strike': config.getfloat('defaults', 'strike', fallback=1.0),
        'sigma': config.getfloat('defaults', 'sigma', fallback=0.2),
        'beta': config.getfloat('defaults', 'beta', fallback=1.0),
        'r': config.getfloat('defaults', 'r', fallback=0.05),
        'q': config.getfloat('defaults', 'q', fallback=0.0),
        'maturity': config.getfloat('defaults', 'maturity', fallback=1.0),
        'steps': config.getint('defaults', 'steps', fallback=365),
        'mode': config.get('defaults', 'mode', fallback='exact-h'),
    }


def get_lattice_config() -> dict:
    """获取格点构建相关的数值容差"""
    return {
        'eps_floor_ratio': config.getfloat('lattice', 'eps_floor_ratio', fallback=1e-8),
        'recombination_rtol': config.getfloat('lattice', 'recombination_rtol', fallback=1e-9),
        'weight_sum_tol': config.getfloat('lattice', 'weight_sum_tol', fallback=1e-10),
        'spacing_rtol': config.getfloat('lattice', 'spacing_rtol', fallback=1e-14),
    }


def get_mc_config() -> dict:
    """获取蒙特卡洛默认配置"""
    return {
        'block_size': config.getint('mc', 'block_size', fallback=4096),
        'seed': config.getint('mc', 'seed', fallback=20240101),
        'n_paths': config.getint('mc', 'n_paths', fallback=100000),
        'n_time_steps': config.getint('mc', 'n_time_steps', fallback=365),
    }


def get_runtime_config() -> dict:
    """获取并行度配置，优先从环境变量获取"""
    threads = os.getenv('CEV_THREADS')
    if threads is None or threads.strip() == '':
        threads = config.get('runtime', 'threads', fallback='0')
    try:
        threads = int(threads)
    except ValueError:
        logger.warning(f"CEV_THREADS 取值无效: {threads!r}，按自动处理")
        threads = 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return {
        'threads': threads
    }


def get_logging_config() -> dict:
    """获取日志配置，优先从环境变量获取"""
    level = os.getenv('CEV_LOG_LEVEL') or config.get('logging', 'level', fallback='INFO')
    return {
        'level': level.upper()
    }


def get_fixture_path() -> str:
    """获取表1金标准文件路径，相对路径按仓库根目录解析"""
    path = os.getenv('CEV_TABLE1_FIXTURE') or config.get(
        'fixtures', 'table1', fallback='fixtures/table1.csv'
    )
    if os.path.isabs(path):
        return path
    root = os.path.dirname(CONFIG_FILE) if CONFIG_FILE else os.path.join(BASE_DIR, "..", "..")
    return os.path.abspath(os.path.join(root, path))
