import csv
import io
import json
import os
import sys

import pytest
from click.testing import CliRunner

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from main import cli
from test_utils import invoke_with_format

runner = CliRunner()

MARKET = ["--s0", "1", "--strike", "1", "--sigma", "0.2", "--beta", "1", "--r", "0.05", "--t", "1"]


class TestPriceCommand:
    """price 子命令"""

    def test_price_published_tree(self):
        result = invoke_with_format(
            runner, ["price", *MARKET, "--steps", "365", "--style", "european", "--mode", "approx-p"],
            "欧式看跌格点价格（approx-p）", app=cli
        )
        assert result["is_passed"]
        body = result["output_params"]["body"]
        assert body["price"] == pytest.approx(0.0520, abs=0.001)
        assert body["style"] == "european"
        assert body["mode"] == "approx-p"
        assert body["n_steps"] == 365
        assert body["exercise_boundary"] is None

    def test_price_american_boundary(self):
        result = invoke_with_format(
            runner, ["price", *MARKET, "--steps", "100", "--style", "american"],
            "美式看跌与行权边界", app=cli
        )
        assert result["is_passed"]
        body = result["output_params"]["body"]
        assert body["mode"] == "exact-h"
        assert len(body["exercise_boundary"]) > 0
        assert all(len(point) == 2 for point in body["exercise_boundary"])

    def test_price_csv(self):
        result = invoke_with_format(
            runner, ["price", *MARKET, "--steps", "50", "--format", "csv"], "CSV 输出", app=cli
        )
        assert result["is_passed"]
        header, row = result["stdout"].strip().split("\n")
        assert header == "price,style,mode,n_steps,exercise_boundary"
        assert row.split(",")[1:] == ["european", "exact-h", "50", ""]

    def test_price_csv_header_stable_across_styles(self):
        """美式与欧式的 CSV 表头一致，行权边界写成JSON文本"""
        european = invoke_with_format(
            runner, ["price", *MARKET, "--steps", "50", "--format", "csv"], "欧式 CSV", app=cli
        )
        american = invoke_with_format(
            runner, ["price", *MARKET, "--steps", "50", "--style", "american", "--format", "csv"], "美式 CSV", app=cli
        )
        assert european["is_passed"] and american["is_passed"]
        european_rows = list(csv.reader(io.StringIO(european["stdout"])))
        american_rows = list(csv.reader(io.StringIO(american["stdout"])))
        assert american_rows[0] == european_rows[0]
        boundary = json.loads(american_rows[1][american_rows[0].index("exercise_boundary")])
        assert len(boundary) > 0
        assert all(len(point) == 2 for point in boundary)

    def test_price_greeks(self):
        result = invoke_with_format(
            runner, ["price", *MARKET, "--steps", "100", "--greeks"], "扰动重定价希腊字母", app=cli
        )
        assert result["is_passed"]
        greeks = result["output_params"]["body"]["greeks"]
        assert set(greeks) == {"delta", "gamma", "vega"}
        assert greeks["delta"] < 0

    def test_dump_lattice(self, tmp_path):
        dump_path = tmp_path / "lattice.json"
        result = invoke_with_format(
            runner, ["price", *MARKET, "--steps", "5", "--dump-lattice", str(dump_path)], "导出格点", app=cli
        )
        assert result["is_passed"]
        dump = json.loads(dump_path.read_text(encoding="utf-8"))
        assert len(dump["levels"]) == 6
        assert dump["levels"][0] == [1.0]

    def test_output_file_matches_stdout(self, tmp_path):
        out_path = tmp_path / "price.json"
        to_stdout = invoke_with_format(runner, ["price", *MARKET, "--steps", "30"], "输出到标准输出", app=cli)
        to_file = invoke_with_format(
            runner, ["price", *MARKET, "--steps", "30", "--out", str(out_path)], "输出到文件", app=cli
        )
        assert to_stdout["is_passed"] and to_file["is_passed"]
        assert to_file["stdout"] == ""
        assert out_path.read_text(encoding="utf-8") == to_stdout["stdout"]

    def test_byte_identical_reruns(self):
        first = invoke_with_format(runner, ["price", *MARKET, "--steps", "200"], "重复运行一", app=cli)
        second = invoke_with_format(runner, ["price", *MARKET, "--steps", "200"], "重复运行二", app=cli)
        assert first["stdout"] == second["stdout"]

    def test_zero_steps_rejected(self):
        result = invoke_with_format(
            runner, ["price", *MARKET, "--steps", "0"], "步数为0", expected_exit=2, app=cli
        )
        assert result["is_passed"]
        assert "steps must be ≥ 1" in result["output_params"]["stderr"]
        assert result["stdout"] == ""

    def test_beta_above_two_rejected(self):
        args = ["price", "--s0", "1", "--beta", "2.5", "--steps", "10"]
        result = invoke_with_format(runner, args, "β>2 使用格点", expected_exit=2, app=cli)
        assert result["is_passed"]
        assert "analytic" in result["output_params"]["stderr"]

    def test_nonpositive_sigma_rejected(self):
        result = invoke_with_format(
            runner, ["price", "--sigma", "0", "--steps", "10"], "σ 非正", expected_exit=2, app=cli
        )
        assert result["is_passed"]
        assert "--sigma" in result["output_params"]["stderr"]

    def test_unknown_mode_rejected(self):
        result = invoke_with_format(
            runner, ["price", "--mode", "exact", "--steps", "10"], "未知权重模式", expected_exit=2, app=cli
        )
        assert result["is_passed"]

    def test_inadmissible_weights_exit_code(self):
        args = ["price", "--beta", "2", "--r", "0.5", "--steps", "1"]
        result = invoke_with_format(runner, args, "权重越界", expected_exit=3, app=cli)
        assert result["is_passed"]
        assert "INADMISSIBLE_WEIGHTS" in result["output_params"]["stderr"]


class TestTableCommands:
    """converge / envelope / density 子命令"""

    def test_converge(self):
        result = invoke_with_format(
            runner, ["converge", *MARKET, "--steps", "50,100,200"], "收敛表", app=cli
        )
        assert result["is_passed"]
        lines = result["stdout"].strip().split("\n")
        assert lines[0] == "n_steps,tree_price,analytic_price,abs_error"
        assert [line.split(",")[0] for line in lines[1:]] == ["50", "100", "200"]

    def test_converge_rejects_unordered_steps(self):
        result = invoke_with_format(
            runner, ["converge", *MARKET, "--steps", "200,100"], "步数非升序", expected_exit=2, app=cli
        )
        assert result["is_passed"]
        assert "ascending" in result["output_params"]["stderr"]

    def test_converge_rejects_empty_steps(self):
        result = invoke_with_format(
            runner, ["converge", *MARKET, "--steps", ""], "步数为空", expected_exit=2, app=cli
        )
        assert result["is_passed"]
        assert "must not be empty" in result["output_params"]["stderr"]

    def test_envelope(self):
        result = invoke_with_format(
            runner, ["envelope", "--s0", "3", "--beta", "2", "--steps", "20", "--format", "json"],
            "包络对比", app=cli
        )
        assert result["is_passed"]
        rows = result["output_params"]["body"]
        assert len(rows) == 21
        assert set(rows[0]) == {"tau", "tree_upper", "tree_lower", "ode_upper", "ode_lower"}
        assert rows[0]["tau"] == 0.0
        assert rows[0]["tree_upper"] == rows[0]["tree_lower"] == 3.0

    def test_density_columns(self):
        cev = invoke_with_format(runner, ["density", "--beta", "1", "--steps", "50"], "CEV 隐含密度", app=cli)
        gbm = invoke_with_format(runner, ["density", "--beta", "2", "--steps", "50"], "对数正态对照", app=cli)
        assert cev["is_passed"] and gbm["is_passed"]
        assert cev["stdout"].split("\n")[0] == "price,tree_mass,tree_density"
        assert gbm["stdout"].split("\n")[0] == "price,tree_mass,tree_density,lognormal_density"
        assert len(gbm["stdout"].strip().split("\n")) == 52


class TestTable1Command:
    """table1 子命令"""

    def test_short_maturity_matches(self):
        result = invoke_with_format(
            runner, ["table1", "--maturity", "0.25", "--format", "json"], "表1（T=1/4）", app=cli
        )
        assert result["is_passed"]
        rows = result["output_params"]["body"]
        assert len(rows) == 9
        assert all(row["within"] for row in rows)

    def test_long_maturity_mismatch(self):
        result = invoke_with_format(
            runner, ["table1", "--maturity", "1"], "表1（T=1）闭式解列不一致", expected_exit=1, app=cli
        )
        assert result["is_passed"]
        assert "worst cell" in result["output_params"]["stderr"]
        assert "column=analytic" in result["output_params"]["stderr"]
        assert len(result["stdout"].strip().split("\n")) == 10

    def test_maturity_filter_matches_nothing(self):
        result = invoke_with_format(
            runner, ["table1", "--maturity", "0.3"], "表1（无匹配到期时间）", expected_exit=2, app=cli
        )
        assert result["is_passed"]
        assert "--maturity 0.3" in result["output_params"]["stderr"]
        assert result["stdout"] == ""

    def test_missing_fixture(self, tmp_path):
        result = invoke_with_format(
            runner, ["table1", "--fixture", str(tmp_path / "absent.csv")], "金标准缺失", expected_exit=2, app=cli
        )
        assert result["is_passed"]
        assert "FIXTURE_NOT_FOUND" in result["output_params"]["stderr"]


class TestMcCommand:
    """mc 子命令"""

    def test_mc_json(self):
        args = ["mc", *MARKET, "--paths", "2000", "--time-steps", "20", "--seed", "7"]
        first = invoke_with_format(runner, args, "蒙特卡洛", app=cli)
        second = invoke_with_format(runner, args, "蒙特卡洛重复", app=cli)
        assert first["is_passed"]
        body = first["output_params"]["body"]
        assert set(body) == {
            "price", "std_error", "analytic", "z_score", "n_paths", "n_time_steps", "seed", "antithetic"
        }
        assert body["n_paths"] == 2000
        assert body["std_error"] > 0
        assert first["stdout"] == second["stdout"]

    def test_mc_odd_antithetic_rejected(self):
        args = ["mc", *MARKET, "--paths", "2001", "--time-steps", "5", "--antithetic"]
        result = invoke_with_format(runner, args, "对偶变量路径数为奇数", expected_exit=2, app=cli)
        assert result["is_passed"]

    def test_mc_accepts_beta_above_two(self):
        args = ["mc", "--beta", "2.5", "--paths", "1000", "--time-steps", "10"]
        result = invoke_with_format(runner, args, "β>2 蒙特卡洛", app=cli)
        assert result["is_passed"]
        assert result["output_params"]["body"]["analytic"] > 0


ENV_OVERRIDES = ("CEV_THREADS", "CEV_TABLE1_FIXTURE")


class TestEnvironmentOverrides:
    """环境变量覆盖 config.ini"""

    def setup_method(self):
        """每个测试方法执行前清理环境变量"""
        for name in ENV_OVERRIDES:
            os.environ.pop(name, None)

    def teardown_method(self):
        for name in ENV_OVERRIDES:
            os.environ.pop(name, None)

    def test_fixture_path_from_env(self, tmp_path):
        os.environ["CEV_TABLE1_FIXTURE"] = str(tmp_path / "absent.csv")
        result = invoke_with_format(runner, ["table1"], "环境变量指定金标准", expected_exit=2, app=cli)
        assert result["is_passed"]
        assert "FIXTURE_NOT_FOUND" in result["output_params"]["stderr"]

    def test_thread_count_does_not_change_output(self):
        args = ["mc", *MARKET, "--paths", "20000", "--time-steps", "10", "--seed", "11"]
        os.environ["CEV_THREADS"] = "1"
        single = invoke_with_format(runner, args, "单线程", app=cli)
        os.environ["CEV_THREADS"] = "3"
        pooled = invoke_with_format(runner, args, "三线程", app=cli)
        assert single["is_passed"] and pooled["is_passed"]
        assert single["stdout"] == pooled["stdout"]

    def test_invalid_thread_count_falls_back(self):
        os.environ["CEV_THREADS"] = "many"
        args = ["mc", *MARKET, "--paths", "1000", "--time-steps", "5"]
        result = invoke_with_format(runner, args, "线程数无效", app=cli)
        assert result["is_passed"]


if __name__ == "__main__":
    pytest.main(["-v", __file__])
