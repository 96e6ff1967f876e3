import csv
import json
from fractions import Fraction

import pytest

from normlab import __version__
from normlab import cli
from normlab.config import SCHEMA, ExperimentConfig, backend_from_env, load_config, parse_config
from normlab.errors import ConfigError
from normlab.report import ReportBundle


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(tmp_path, command, text, *extra):
    out = tmp_path / "out"
    code = cli.main([command, "--config", write_cfg(tmp_path, text), "--out", str(out), *extra])
    return code, out


# -- config parsing --------------------------------------------------------------------

def test_parse_types_lists_and_comments():
    cfg = parse_config("# header\ncommand = reproduce  # trailing\ntarget = t21\nn = 1, 2\ninv_eps = 2\n"
                       "p = 3/2\nseed = 7\n")
    assert cfg.command == "reproduce" and cfg.get("target") == "t21"
    assert cfg.get("n") == [1, 2] and cfg.get("inv_eps") == 2
    assert cfg.get("p") == Fraction(3, 2) and cfg.seed == 7
    assert cfg.get_list("inv_eps", []) == [2] and cfg.get_list("N", [4]) == [4]
    with pytest.raises(ConfigError):
        cfg.get_one("n")


def test_canonical_round_trip_and_hash():
    a = parse_config("command = nikolskii\nfamily = l1\np = 1\nn = 2\ninv_eps = 2\n")
    b = parse_config("inv_eps=2\nn=2\n\n# same settings, other order\np = 1\nfamily = l1\ncommand = nikolskii\n")
    assert a.canonical() == b.canonical()
    assert a.hash(__version__) == b.hash(__version__)
    assert a.hash("0.0.0") != a.hash(__version__)
    assert parse_config(a.canonical()).canonical() == a.canonical()
    assert a.with_overrides(seed=3).hash(__version__) != a.hash(__version__)


@pytest.mark.parametrize("text,line", [
    ("command = nikolskii\nbogus = 1\n", 2),
    ("command = nikolskii\n\nn = -1\n", 3),
    ("command = nikolskii\nfamily = l1\nfamily = l1\n", 3),
    ("command = nikolskii\nno equals sign\n", 2),
    ("command = teleport\n", 1),
    ("command = nikolskii\np = 1/0\n", 2),
    ("command = nikolskii\nbackend = quad\n", 2),
])
def test_config_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line and f"line {line}" in str(exc.value)


def test_config_requires_command_and_target(tmp_path):
    with pytest.raises(ConfigError):
        parse_config("family = l1\n")
    with pytest.raises(ConfigError):
        parse_config("command = reproduce\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_backend_env_override(monkeypatch):
    cfg = parse_config("command = nikolskii\n")
    monkeypatch.setenv("NORMLAB_BACKEND", "float64")
    assert backend_from_env(cfg).backend == "float64"
    monkeypatch.setenv("NORMLAB_BACKEND", "double")
    with pytest.raises(ConfigError):
        backend_from_env(cfg)
    monkeypatch.delenv("NORMLAB_BACKEND")
    assert backend_from_env(cfg).backend == "exact"


def test_schema_keys_documented():
    for key in ("command", "family", "n", "inv_eps", "N", "p", "K", "strategy", "M", "seed", "budget", "out",
                "backend"):
        assert key in SCHEMA


# -- exit codes -----------------------------------------------------------------------

def test_exit_pass_and_bundle_files(tmp_path):
    code, out = run(tmp_path, "nikolskii", "command = nikolskii\nfamily = l1\nn = 2\ninv_eps = 2\np = 1\n")
    assert code == 0
    for name in ("results.json", "summary.txt", "manifest.json", "nikolskii.csv"):
        assert (out / name).is_file()
    rows = list(csv.DictReader((out / "nikolskii.csv").open()))
    assert rows == [{"family": "l1", "N": "18", "p": "1", "value": "18", "kind": "exact", "bound": "36"}]
    res = json.loads((out / "results.json").read_text())
    assert res["passed"] is True
    # every CSV cell appears in the JSON table
    table = res["tables"]["nikolskii"]
    assert table["columns"] == list(rows[0])
    flat = [c["value"] if isinstance(c, dict) else c for c in table["rows"][0]]
    assert [str(v) for v in flat] == list(rows[0].values())
    man = json.loads((out / "manifest.json").read_text())
    cfg = load_config(tmp_path / "run.cfg")
    assert man["config_hash"] == cfg.hash(__version__)
    assert "timestamp" in man and "timestamp" not in res
    assert set(man["files"]) >= {"results.json", "summary.txt", "nikolskii.csv"}


def test_exit_config_error(tmp_path, capsys):
    code, _ = run(tmp_path, "nikolskii", "command = nikolskii\nfamily = l1\nn = 2\nwhat = 3\n")
    assert code == 2
    assert "line 4" in capsys.readouterr().err
    code, _ = run(tmp_path, "nikolskii", "command = frames\n")
    assert code == 2
    code, _ = run(tmp_path, "nikolskii", "command = nikolskii\nfamily = l1\n")
    assert code == 2
    assert cli.main(["nikolskii", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_exit_resource_bound(tmp_path):
    code, _ = run(tmp_path, "construct", "command = construct\nfamily = l1\nn = 4\ninv_eps = 4\n")
    assert code == 3


def test_exit_check_failure(tmp_path, monkeypatch):
    def failing(cfg):
        b = ReportBundle("forced", cfg)
        b.check("forced", "a claim that does not hold", False)
        return b
    monkeypatch.setitem(cli.HANDLERS, "frames", failing)
    code, out = run(tmp_path, "frames", "command = frames\nfamily = mercedes\n")
    assert code == 1
    assert "FAIL" in (out / "summary.txt").read_text()


def test_seed_override_recorded(tmp_path):
    code, out = run(tmp_path, "reproduce", "command = reproduce\ntarget = s5\n", "--seed", "42", "--no-plots")
    assert code == 0
    res = json.loads((out / "results.json").read_text())
    assert res["config"]["seed"] == "42"
    assert cli.main(["reproduce", "--config", write_cfg(tmp_path, "command = reproduce\ntarget = s5\n", "b.cfg"),
                     "--seed", "-1", "--out", str(tmp_path / "o2")]) == 2


# -- commands -------------------------------------------------------------------------

@pytest.mark.parametrize("command,text", [
    ("construct", "family = l1\nn = 1\ninv_eps = 2\n"),
    ("construct", "family = infinite\nK = 4\np = 1\nA_p_param = 1/2\n"),
    ("construct", "family = rademacher\nN = 3\np = 1\n"),
    ("discretize", "family = l1\nn = 1\ninv_eps = 2\nstrategy = uniform\nM = 6\np = 1\n"),
    ("discretize", "family = rademacher_system\nN = 2\nstrategy = uniform\nM = 4\np = 2\n"),
    ("nikolskii", "family = rademacher\nN = 4\np = 1\n"),
    ("witness", "family = l1\nn = 2\ninv_eps = 2\ntrials = 3\n"),
    ("witness", "family = rademacher\nN = 4\np = 1\ntrials = 3\n"),
    ("frames", "family = mercedes\n"),
    ("frames", "family = random_frame\nN = 3\nM = 7\nseed = 1\n"),
    ("phase", "target = t47\nprobes = 100\nseed = 7\n"),
])
def test_commands_run(tmp_path, command, text):
    code, out = run(tmp_path, command, f"command = {command}\n{text}", "--no-plots")
    assert code == 0, (out / "summary.txt").read_text() if (out / "summary.txt").exists() else ""
    res = json.loads((out / "results.json").read_text())
    assert res["name"] and (res["checks"] or res["tables"])


def test_reproduce_writes_plots_and_dat(tmp_path):
    code, out = run(tmp_path, "reproduce", "command = reproduce\ntarget = s5\n")
    assert code == 0
    dat = (out / "plotdata" / "s5_block_norms.dat").read_text().split("\n")
    first = [line for line in dat if line and not line.startswith("#")][0].split()
    assert len(first) == 2 and float(first[0]) == 1
    png = out / "plots" / "s5_block_norms.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_float_backend_tags_results(tmp_path, monkeypatch):
    text = "command = nikolskii\nfamily = l1\nn = 1\ninv_eps = 2\np = 1\n"
    code, out = run(tmp_path, "nikolskii", text, "--no-plots")
    exact = json.loads((out / "results.json").read_text())
    monkeypatch.setenv("NORMLAB_BACKEND", "float64")
    out2 = tmp_path / "out_float"
    assert cli.main(["nikolskii", "--config", str(tmp_path / "run.cfg"), "--out", str(out2), "--no-plots"]) == 0
    flt = json.loads((out2 / "results.json").read_text())
    assert flt["config"]["backend"] == "float64"
    e_val = exact["tables"]["nikolskii"]["rows"][0][3]
    f_val = flt["tables"]["nikolskii"]["rows"][0][3]
    assert e_val["backend"] == "exact" and f_val["backend"] == "float64"
    assert abs(float(Fraction(e_val["value"])) - f_val["value"]) <= 1e-9


def test_experiment_config_json():
    cfg = ExperimentConfig({"command": "reproduce", "target": "t21", "n": [1, 2]})
    assert cfg.to_json() == {"command": "reproduce", "n": "1,2", "target": "t21"}
