import json

import pytest

from hypkernel.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, RunConfig, main, parse_grid

SMALL_GRID = "0.01:30:12,0.01:50:12"


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_json(capsys):
    code, out, _ = run(capsys, "eval", "--n", "2", "--r", "1", "--t", "1")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["schema"] == 1 and doc["kind"] == "eval"
    assert doc["DM"] == pytest.approx(0.2107984491237287, rel=1e-14)


def test_eval_missing_argument(capsys):
    code, _, err = run(capsys, "eval", "--n", "2")
    assert code == EXIT_USAGE and "--r" in err


@pytest.mark.parametrize("args", [("bogus",), ("eval", "--n", "x"), ("eval", "--n", "2", "--r", "-1", "--t", "1"),
                                  ("verify-dm", "--n", "2", "--grid", "1:2"),
                                  ("verify-regions", "--regions", "4,63,4,256")])
def test_usage_errors(capsys, args):
    assert run(capsys, *args)[0] == EXIT_USAGE


def test_riesz_range_output(capsys):
    code, out, _ = run(capsys, "riesz-range", "--n", "4", "--lambda", "1")
    assert code == EXIT_OK and out.strip() == "(4/3, 4)"
    assert run(capsys, "riesz-range", "--n", "4", "--lambda", "5")[0] == EXIT_USAGE


def test_verify_regions_pass_and_fail(capsys):
    assert run(capsys, "verify-regions")[0] == EXIT_OK
    code, out, _ = run(capsys, "verify-regions", "--regions", "4,256,1,1")
    assert code == EXIT_FAIL and json.loads(out)["uncovered_count"] > 0


def test_verify_dm_writes_csv(tmp_path, capsys):
    path = tmp_path / "nodes.csv"
    code, out, _ = run(capsys, "verify-dm", "--n", "2", "--grid", SMALL_GRID, "--format", "csv",
                       "--out", str(path))
    assert code == EXIT_OK and out == ""
    lines = path.read_text().splitlines()
    assert lines[0] == "# hypkernel csv v1" and len(lines) == 2 + 144


def test_verify_dm_refinement_tolerance(capsys):
    code, out, _ = run(capsys, "verify-dm", "--n", "2", "--grid", SMALL_GRID, "--tol", "0.5")
    assert code == EXIT_OK and "refinement_change" in json.loads(out)


def test_positivity_li_yau_fexp_grad_norm(capsys):
    assert run(capsys, "verify-positivity", "--n", "2")[0] == EXIT_OK
    assert run(capsys, "li-yau", "--n", "2", "--grid", SMALL_GRID)[0] == EXIT_OK
    code, out, _ = run(capsys, "fexp")
    assert code == EXIT_OK and json.loads(out)["constant_mismatch"] is True
    assert run(capsys, "grad-norm", "--n", "2", "--q", "4/3")[0] == EXIT_OK


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# evaluation point\nn = 2\nr = 5.0\nt = 1.0\n")
    code, out, _ = run(capsys, "eval", "--config", str(cfg), "--r", "1")
    assert code == EXIT_OK and json.loads(out)["r"] == 1.0


def test_config_file_errors(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run(capsys, "eval", "--config", str(cfg))[0] == EXIT_USAGE
    assert run(capsys, "eval", "--config", str(tmp_path / "missing.cfg"))[0] == EXIT_USAGE


def test_config_round_trip():
    cfg = RunConfig("verify-dm", n=4, r=0.1, grid=SMALL_GRID, threads=3, tol=1e-3, lam="1/2")
    assert RunConfig.from_text(cfg.to_text()) == cfg


def test_grid_parsing():
    g = parse_grid("0.1:10:5,0.2:20:7")
    assert (g.r_min, g.r_max, g.r_points, g.t_min, g.t_max, g.t_points) == (0.1, 10, 5, 0.2, 20, 7)
