import json

import pytest
from click.testing import CliRunner

from src.cli import cli, execute

COIN12 = {"items": [{"support": [{"value": "1", "prob": "1/2"}, {"value": "2", "prob": "1/2"}]}] * 2}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def run(runner, tmp_path):
    """Invoke a command quietly and return (exit code, report or None)."""
    def invoke(*args, name="report.json"):
        output = tmp_path / name
        result = runner.invoke(cli, [*args, "--quiet", "--output", str(output)])
        report = json.loads(output.read_text(encoding="utf-8")) if output.exists() else None
        return result.exit_code, report
    return invoke


def test_solve_iid2_report(run):
    code, report = run("solve-iid2", "--n", "2", "--a", "1", "--b", "2", "--p", "1/2")
    assert code == 0
    assert report["schema_version"] == 1
    assert report["command"] == "solve-iid2"
    assert report["result"]["k"] == 1
    assert report["result"]["revenue"] == "9/4"
    assert report["decimal"]["revenue"] == "2.25"


def test_report_on_stdout(runner):
    result = runner.invoke(cli, ["solve-iid2", "--n", "1", "--a", "0", "--b", "5", "--p", "1/3", "--quiet"])
    assert result.exit_code == 0
    assert json.loads(result.output)["result"]["revenue"] == "5/3"


def test_empty_menu_earns_nothing(run, write_json):
    instance = write_json("coin12.json", COIN12)
    menu = write_json("menu.json", {"entries": []})
    code, report = run("eval-menu", "--instance", str(instance), "--menu", str(menu))
    assert code == 0
    assert report["result"]["revenue"] == "0"


def test_invalid_distribution_is_a_parse_error(run, write_json):
    bad = write_json("bad.json", {"items": [{"support": [
        {"value": "1", "prob": "1/2"}, {"value": "2", "prob": "5/8"},
    ]}]})
    code, report = run("verify", "--instance", str(bad))
    assert code == 2
    assert report is None


def test_missing_file_is_a_parse_error(run, tmp_path):
    code, _ = run("srev", "--instance", str(tmp_path / "missing.json"))
    assert code == 2


def test_verify_valid_inputs(run, write_json):
    instance = write_json("coin12.json", COIN12)
    comp = write_json("comp.json", {"B": [1, 2], "W": [2], "t": 1})
    code, report = run("verify", "--instance", str(instance), "--comp", str(comp))
    assert code == 0
    assert report["result"]["valid"] is True
    assert report["result"]["comp"]["compstar"] is True


def test_baseline_commands(run, write_json):
    instance = write_json("coin12.json", COIN12)
    code, srev = run("srev", "--instance", str(instance), name="srev.json")
    assert code == 0 and srev["result"]["revenue"] == "2"
    code, brev = run("brev", "--instance", str(instance), name="brev.json")
    assert code == 0 and brev["result"]["revenue"] == "9/4"
    assert brev["result"]["menu"] == {"entries": [{"bundle": [1, 2], "price": "3"}]}


def test_drev_witness_round_trip(run, write_json):
    instance = write_json("coin12.json", COIN12)
    code, drev = run("drev-exact", "--instance", str(instance), name="drev.json")
    assert code == 0
    assert drev["result"]["revenue"] == "9/4"

    menu = write_json("witness.json", drev["result"]["menu"])
    code, evaluated = run("eval-menu", "--instance", str(instance), "--menu", str(menu), name="eval.json")
    assert code == 0
    assert evaluated["result"]["revenue"] == drev["result"]["revenue"]


def test_allocation_budget_exit_code(run, write_json):
    instance = write_json("coin12.json", COIN12)
    code, _ = run("drev-exact", "--instance", str(instance), "--budget-allocations", "10")
    assert code == 3


def test_lp_budget_exit_code(run, write_json):
    instance = write_json("coin12.json", COIN12)
    code, _ = run("rev-lp", "--instance", str(instance), "--budget-lp", "5")
    assert code == 3


def test_rev_lp_both_forms(run, write_json):
    instance = write_json("coin12.json", COIN12)
    code, standard = run("rev-lp", "--instance", str(instance), name="standard.json")
    assert code == 0 and standard["result"]["value"] == "9/4"
    code, symmetric = run("rev-lp", "--n", "2", "--b", "4", "--a", "2", "--p", "1/2", name="symmetric.json")
    assert code == 0 and symmetric["result"]["value"] == "9/2"
    code, _ = run("rev-lp", "--n", "2", name="incomplete.json")
    assert code == 2


def test_invalid_probability_is_a_parse_error(run):
    code, _ = run("solve-iid2", "--n", "2", "--a", "1", "--b", "2", "--p", "3/2")
    assert code == 2


def test_constk_with_candidates(runner, tmp_path, write_json):
    instance = write_json("coin12.json", COIN12)
    config = write_json("config.json", {"output": {"output_dir": str(tmp_path / "out")}})
    output = tmp_path / "constk.json"
    result = runner.invoke(cli, [
        "solve-constk", "--instance", str(instance), "--emit-candidates",
        "--config", str(config), "--quiet", "--output", str(output),
    ])
    assert result.exit_code == 0
    report = json.loads(output.read_text(encoding="utf-8"))
    assert report["result"]["revenue"] == "9/4"
    csv_path = tmp_path / "out" / "coin12_candidates.csv"
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "index,p1,p2,p3,revenue,revenue_decimal"
    assert len(lines) == 1 + len(report["result"]["candidates"])


def test_max_items_exit_code(run, write_json):
    instance = write_json("coin12.json", COIN12)
    code, _ = run("solve-constk", "--instance", str(instance), "--max-items", "1")
    assert code == 3


def test_missing_explicit_config(run, tmp_path):
    code, _ = run("solve-iid2", "--n", "1", "--a", "1", "--b", "2", "--p", "1/2",
                  "--config", str(tmp_path / "nope.json"))
    assert code == 2


def test_reduce_comp(run, write_json):
    comp = write_json("comp.json", {"B": [1, 2], "W": [2], "t": 1})
    code, report = run("reduce-comp", "--input", str(comp))
    assert code == 0
    assert report["result"]["t_prime"] == 36
    assert report["result"]["compstar"]["B"] == [0, 0, 17, 18, 64, 64, 64, 256]
    assert report["result"]["yes_instance"] is True


def test_hard_instance_pipeline(run, write_json):
    comp = write_json("compstar.json", {"B": [1, 2], "W": [2], "t": 1})
    code, built = run("build-hard-instance", "--input", str(comp), name="hard.json")
    assert code == 0
    assert built["result"]["sigma"] == "1156"

    hard_path = write_json("hard_bare.json", built["result"])
    code, compared = run("compare-solutions", "--instance", str(hard_path), name="compare.json")
    assert code == 0
    assert compared["result"]["rev1"] == "1158"
    assert compared["result"]["winner"] == "solution2"
    assert compared["result"]["direct_checked"] is True


def test_compare_reads_build_report(run, runner, write_json, tmp_path):
    comp = write_json("compstar.json", {"B": [1, 2], "W": [2], "t": 2})
    code, _ = run("build-hard-instance", "--input", str(comp), name="hard.json")
    assert code == 0
    code, compared = run("compare-solutions", "--instance", str(tmp_path / "hard.json"), name="compare.json")
    assert code == 0
    assert compared["result"]["winner"] == "solution1"


def test_non_compstar_input(run, write_json):
    comp = write_json("comp.json", {"B": [1, 2], "W": [1], "t": 1})
    code, _ = run("build-hard-instance", "--input", str(comp))
    assert code == 2


def test_residual_scan(run):
    code, report = run("residual-scan", "--max-n", "4", "--samples", "2", "--seed", "7")
    assert code == 0
    assert report["result"]["threshold"] is not None
    assert len(report["result"]["rows"]) == 8


def test_output_is_deterministic(run, write_json, tmp_path):
    instance = write_json("coin12.json", COIN12)
    run("solve-constk", "--instance", str(instance), name="a.json")
    run("solve-constk", "--instance", str(instance), name="b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_show(run, runner, write_json, tmp_path):
    instance = write_json("coin12.json", COIN12)
    run("drev-exact", "--instance", str(instance), name="drev.json")
    result = runner.invoke(cli, ["show", str(tmp_path / "drev.json")])
    assert result.exit_code == 0
    assert "Witness Menu" in result.output

    result = runner.invoke(cli, ["show", str(instance)])
    assert result.exit_code == 2


def test_internal_value_error_exits_generic(tmp_path, monkeypatch):
    def body(cfg, progress):
        raise ValueError("precondition broken")

    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exited:
        execute("srev", {"quiet": True}, {}, body)
    assert exited.value.code == 1


def test_out_of_range_inputs_are_parse_errors(run, write_json):
    code, _ = run("rev-lp", "--n", "2", "--b", "2", "--p", "1", name="lp.json")
    assert code == 2
    comp = write_json("compstar.json", {"B": [1, 2], "W": [2], "t": 1})
    code, _ = run("build-hard-instance", "--input", str(comp), "--t", "99", name="hard.json")
    assert code == 2


def test_float_menu_index_is_a_parse_error(run, write_json):
    instance = write_json("coin12.json", COIN12)
    menu = write_json("menu.json", {"entries": [{"bundle": [1.5], "price": "1"}]})
    code, _ = run("eval-menu", "--instance", str(instance), "--menu", str(menu))
    assert code == 2
