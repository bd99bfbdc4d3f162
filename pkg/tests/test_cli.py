import importlib.util
from pathlib import Path

import numpy as np
import pytest

from paw1d.cli import RunConfig, build_parser, load_config, main, read_records_csv
from paw1d.exceptions import ConfigError
from paw1d.study import CSV_COLUMNS


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("a=0.3\nZ0=12\n# comment\nmethod=vpaw\neta_grid=0.1,0.05\nN_grid=1,2\nplot=yes\n")
    return path


def test_invalid_model_exits_with_config_code(capsys):
    assert main(["exact", "--a", "1.5"]) == 2
    assert "a must lie in (0,1)" in capsys.readouterr().err


def test_exact_report(capsys):
    assert main(["exact", "--count", "3"]) == 0
    out = capsys.readouterr().out
    assert "E0 = " in out and "E1 = " in out
    assert "symmetric: |psi0(x)| = |psi0(a-x)|: True" in out


def test_exact_report_without_symmetry_check(capsys):
    assert main(["exact", "--Za", "12", "--count", "1"]) == 0
    assert "symmetric" not in capsys.readouterr().out


def test_exact_csv(tmp_path):
    output = tmp_path / "exact.csv"
    assert main(["exact", "--count", "3", "--output", str(output)]) == 0
    lines = output.read_text().splitlines()
    assert lines[0].startswith("branch,k,omega,energy")
    assert len(lines) == 1 + 2 + 3
    assert lines[1].startswith("negative,0,")
    assert lines[-1].startswith("positive,4,")


def test_config_file_parsing(config_file):
    config = RunConfig.from_file(config_file)
    assert config.a == 0.3
    assert config.Z0 == 12.0
    assert config.Za == 10.0
    assert config.method == "vpaw"
    assert config.eta_grid == (0.1, 0.05)
    assert config.N_grid == (1, 2)
    assert config.plot is True
    assert config.epsilon is None


def test_unknown_and_malformed_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match="Unknown configuration key"):
        RunConfig.from_values({"alpha": "1"})
    with pytest.raises(ConfigError, match="Invalid value for M"):
        RunConfig.from_values({"M": "many"})
    with pytest.raises(ConfigError, match="does not exist"):
        RunConfig.from_file(tmp_path / "missing.env")


def test_flags_override_config_file(config_file):
    args = build_parser().parse_args(["solve", "--config", str(config_file), "--M", "8", "--epsilon", "0.05"])
    config = load_config(args)
    assert config.M == 8
    assert config.a == 0.3
    assert config.epsilon == 0.05
    assert config.setup().epsilon == 0.05
    assert config.setup(eta=0.07).epsilon == 0.07


def test_bad_config_file_exits_with_config_code(tmp_path, capsys):
    path = tmp_path / "bad.env"
    path.write_text("colour=blue\n")
    assert main(["exact", "--config", str(path)]) == 2
    assert "colour" in capsys.readouterr().err


def test_solve_direct_writes_eigenvector(tmp_path, capsys):
    output = tmp_path / "vector.csv"
    assert main(["solve", "--method", "direct", "--M", "16", "--output", str(output)]) == 0
    assert "direct" in capsys.readouterr().out
    rows = np.loadtxt(output, delimiter=",", skiprows=1)
    assert rows.shape == (33, 3)
    np.testing.assert_array_equal(rows[:, 0], np.arange(-16, 17))
    assert np.sum(rows[:, 1] ** 2 + rows[:, 2] ** 2) == pytest.approx(1.0, rel=1e-12)


def test_solve_vpaw_dumps_system(tmp_path):
    dump = tmp_path / "system.npz"
    assert main(["solve", "--method", "vpaw", "--M", "16", "--dump", str(dump)]) == 0
    with np.load(dump) as data:
        assert data["A"].shape == (33, 33)
        assert str(data["method"]) == "vpaw"


def test_sweep_csv_and_plot_script(tmp_path):
    output = tmp_path / "sweep.csv"
    argv = ["sweep", "--method", "vpaw", "--N-grid", "1", "--d", "4", "--eta-grid", "0.1,0.05,0.025",
            "--M", "32", "--output", str(output), "--plot"]
    assert main(argv) == 0
    assert output.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    records = read_records_csv(output)
    assert [r.eta for r in records] == [0.025, 0.05, 0.1]
    assert all(r.method == "vpaw" and r.N == 1 and r.M == 32 for r in records)
    assert all(r.eigenvalue - r.E0 == pytest.approx(r.error, abs=1e-12) for r in records)
    script = (tmp_path / "sweep.gp").read_text()
    assert "set logscale xy" in script
    assert "'sweep.csv'" in script


def test_direct_sweep_runs_over_cutoffs(tmp_path, capsys):
    output = tmp_path / "direct.csv"
    assert main(["sweep", "--method", "direct", "--M-grid", "8,16,32", "--output", str(output)]) == 0
    assert "direct: slope" in capsys.readouterr().out
    assert [r.M for r in read_records_csv(output)] == [8, 16, 32]
    assert not (tmp_path / "direct.gp").exists()


def test_compare_writes_all_methods(tmp_path):
    output = tmp_path / "compare.csv"
    argv = ["compare", "--compare-methods", "direct,vpaw", "--compare-etas", "0.1", "--M-grid", "8,16",
            "--output", str(output)]
    assert main(argv) == 0
    methods = [r.method for r in read_records_csv(output)]
    assert methods == ["direct", "direct", "vpaw", "vpaw"]


def test_numerical_failure_exits_with_numeric_code(capsys):
    assert main(["solve", "--method", "paw_pseudo", "--M", "8", "--cond-limit", "1.5"]) == 3
    assert "SingularMatching" in capsys.readouterr().err


@pytest.mark.parametrize("argv, message", [
    (["solve", "--eta", "0.3"], "overlap"),
    (["solve", "--method", "magic"], "method must be one of"),
    (["sweep", "--method", "paw_trunc", "--eta-grid", "0.1,0.25"], "overlap"),
    (["compare", "--compare-methods", "direct,fast"], "method must be one of"),
    (["exact", "--count", "0"], "count"),
])
def test_invalid_runs_exit_with_config_code(argv, message, capsys):
    assert main(argv) == 2
    assert message in capsys.readouterr().err


def _reproduce_figures_script():
    path = Path(__file__).resolve().parent.parent / "console_reproduce_figures.py"
    spec = importlib.util.spec_from_file_location("console_reproduce_figures", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_reproduce_figures_exits_with_config_code_on_unknown_key(tmp_path, monkeypatch):
    path = tmp_path / "bad.env"
    path.write_text("colour=blue\n")
    script = _reproduce_figures_script()
    monkeypatch.setattr("sys.argv", ["console_reproduce_figures.py", str(path)])
    with pytest.raises(SystemExit) as exit_info:
        script.main()
    assert exit_info.value.code == 2
