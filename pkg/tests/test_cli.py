import json

import pytest

from kprophet.cli import (
    EXIT_OK,
    EXIT_TOLERANCE,
    EXIT_USAGE,
    main,
    parse_dist,
    parse_k_range,
)


class TestParsers:
    def test_k_range(self):
        assert parse_k_range("1..10") == (1, 10)
        assert parse_k_range("3") == (3, 3)

    def test_dist_positional(self):
        assert parse_dist("exponential:1") == {"name": "exponential", "params": {"rate": 1.0}}
        assert parse_dist("bounded-pareto:2,100") == {
            "name": "bounded-pareto", "params": {"shape": 2.0, "cap": 100.0}}
        assert parse_dist("uniform01") == {"name": "uniform01", "params": {}}

    def test_dist_named(self):
        assert parse_dist("exponential:rate=0.5") == {"name": "exponential", "params": {"rate": 0.5}}

    def test_dist_errors(self):
        assert main(["simulate", "--k", "1", "--n", "10", "--dist", "cauchy",
                     "--trials", "100"]) == EXIT_USAGE
        assert main(["simulate", "--k", "1", "--n", "10", "--dist", "exponential:a",
                     "--trials", "100"]) == EXIT_USAGE


class TestBoundsCommand:
    def test_json_output(self, capsys):
        code = main(["bounds", "--k", "1", "--model", "infinite"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        body = json.loads(out)
        assert body["rows"][0]["v"] == pytest.approx(0.607927, abs=1e-5)

    def test_csv_output(self, capsys):
        code = main(["bounds", "--k", "1..3", "--model", "infinite", "--format", "csv"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0].startswith("# manifest: ")
        assert lines[1] == "k,v,y1,y2"
        assert lines[2].startswith("1,0.60792")

    def test_csv_and_json_values_identical(self, capsys):
        main(["bounds", "--k", "2", "--model", "infinite", "--format", "csv"])
        csv_out = capsys.readouterr().out
        main(["bounds", "--k", "2", "--model", "infinite"])
        json_out = capsys.readouterr().out
        v_csv = csv_out.strip().splitlines()[2].split(",")[1]
        v_json = repr(json.loads(json_out)["rows"][0]["v"])
        assert v_csv == v_json

    def test_finite_requires_n(self):
        assert main(["bounds", "--k", "1", "--model", "finite"]) == EXIT_USAGE

    def test_out_file(self, tmp_path, capsys):
        target = tmp_path / "rows.json"
        code = main(["bounds", "--k", "1", "--model", "infinite", "--out", str(target)])
        assert code == EXIT_OK
        assert capsys.readouterr().out == ""
        assert json.loads(target.read_text())["rows"][0]["k"] == 1


class TestSimulateCommand:
    def test_runs_and_exits_zero(self, capsys):
        code = main(["simulate", "--k", "1", "--n", "50", "--dist", "uniform01",
                     "--trials", "2000", "--seed", "7"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        body = json.loads(out)
        assert body["trials"] == 2000
        assert body["meets_guarantee"] is True

    def test_byte_identical_reruns(self, capsys):
        args = ["simulate", "--k", "2", "--n", "100", "--dist", "exponential:1",
                "--trials", "500", "--seed", "7"]
        main(args)
        first = capsys.readouterr().out
        main(args)
        second = capsys.readouterr().out
        assert first == second

    def test_env_seed(self, capsys, monkeypatch):
        monkeypatch.setenv("KPROPHET_SEED", "99")
        main(["simulate", "--k", "1", "--n", "10", "--dist", "uniform01", "--trials", "100"])
        assert json.loads(capsys.readouterr().out)["seed"] == 99


class TestVerifyCommand:
    def test_pass_suite(self, capsys):
        code = main(["verify", "beta-bar"])
        captured = capsys.readouterr()
        assert code == EXIT_OK
        assert json.loads(captured.out)["passed"] is True
        assert "[pass] beta-bar/beta_bar" in captured.err

    def test_duality_with_params(self, capsys):
        code = main(["verify", "duality", "--n", "60", "--k", "2"])
        assert code == EXIT_OK
        assert json.loads(capsys.readouterr().out)["suite"] == "duality"

    def test_unknown_suite_usage_error(self):
        assert main(["verify", "nonsense"]) == EXIT_USAGE
