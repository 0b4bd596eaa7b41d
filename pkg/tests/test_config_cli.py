import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from dlab import config as cfgmod
from dlab.cli import main, resolve_threads, run_config
from dlab.errors import ConfigInvalid, IoFailure
from dlab.reports import Report, emit_report, verdict

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def strichartz_cfg(**kw):
    cfg = {"schema": "dlab-config/1", "command": "strichartz",
           "phase": {"kind": "quadratic", "alphas": [1]}, "p": 4,
           "interval": [0, 6.283185307179586], "N_list": [4, 8, 16, 32],
           "families": ["flat_annulus", "random_phase"], "seed": 0}
    cfg.update(kw)
    return cfg


def test_all_shipped_configs_validate():
    files = sorted(CONFIGS.glob("*.json"))
    assert len(files) >= 10
    for f in files:
        cfg = cfgmod.load(f)
        assert cfg["schema"] == "dlab-config/1"


def test_p_below_two_rejected(tmp_path):
    p = write(tmp_path, strichartz_cfg(p=1))
    with pytest.raises(ConfigInvalid, match="'p'"):
        cfgmod.load(p)
    assert main(["strichartz", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_unknown_key_named(tmp_path):
    with pytest.raises(ConfigInvalid, match="unknown key 'bogus'"):
        cfgmod.validate(strichartz_cfg(bogus=1))
    cfg = strichartz_cfg()
    cfg["phase"]["extra"] = 2
    with pytest.raises(ConfigInvalid, match="phase"):
        cfgmod.validate(cfg)


def test_missing_schema_and_keys():
    cfg = strichartz_cfg()
    del cfg["schema"]
    with pytest.raises(ConfigInvalid, match="schema"):
        cfgmod.validate(cfg)
    cfg = strichartz_cfg()
    del cfg["p"]
    with pytest.raises(ConfigInvalid, match="missing key 'p'"):
        cfgmod.validate(cfg)
    with pytest.raises(ConfigInvalid, match="schema"):
        cfgmod.validate(strichartz_cfg(schema="dlab-config/2"))


@pytest.mark.parametrize("bad", [{"N_list": [4, 8, 8, 16]}, {"N_list": [4, 8, 12, 16]},
                                 {"interval": [1, 0]}, {"N_list": [4, 8, 16]}])
def test_semantic_rejections(bad):
    with pytest.raises(ConfigInvalid):
        cfgmod.validate(strichartz_cfg(**bad))


def test_bilinear_needs_K():
    cfg = {"schema": "dlab-config/1", "command": "bilinear",
           "phase": {"kind": "quadratic", "alphas": [1]}, "N_list": [16]}
    with pytest.raises(ConfigInvalid, match="K"):
        cfgmod.validate(cfg)


def test_unreadable_and_malformed(tmp_path):
    with pytest.raises(IoFailure):
        cfgmod.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        cfgmod.load(bad)
    assert main(["strichartz", "--config", str(tmp_path / "missing.json")]) == 2


def test_config_id_is_canonical():
    a = strichartz_cfg()
    b = dict(reversed(list(a.items())))
    assert cfgmod.config_id(a) == cfgmod.config_id(b)
    assert cfgmod.config_id(a) != cfgmod.config_id(strichartz_cfg(seed=1))


def test_command_mismatch(tmp_path):
    p = write(tmp_path, strichartz_cfg())
    with pytest.raises(ConfigInvalid, match="command"):
        run_config(p, tmp_path / "o", command="bilinear")
    assert main(["bilinear", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_strichartz_csv_rows_and_rerun_identical(tmp_path):
    p = write(tmp_path, strichartz_cfg())
    assert main(["strichartz", "--config", str(p), "--out", str(tmp_path / "a")]) == 0
    assert main(["strichartz", "--config", str(p), "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    rows = list(csv.DictReader((tmp_path / "a" / "data.csv").open()))
    assert len(rows) == 4 * 2
    assert {r["family"] for r in rows} == {"flat_annulus", "random_phase"}
    for f in ("report.json", "data.csv", "plotdata.tsv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["verdict"] == "PASS"


def test_plotdata_optional(tmp_path):
    p = write(tmp_path, strichartz_cfg(plotdata=False, N_list=[2, 4, 8, 16]))
    run_config(p, tmp_path / "o")
    assert not (tmp_path / "o" / "plotdata.tsv").exists()


def test_seed_override_changes_id(tmp_path):
    p = write(tmp_path, strichartz_cfg(N_list=[2, 4, 8, 16]))
    _, r0 = run_config(p, tmp_path / "a")
    _, r1 = run_config(p, tmp_path / "b", seed=5)
    assert r0.summary["config_id"] != r1.summary["config_id"]


def test_analyze_phase_report(tmp_path):
    status, rep = run_config(CONFIGS / "analyze_fractional.json", tmp_path)
    assert status == 0
    out = json.loads((tmp_path / "report.json").read_text())
    assert abs(out["psi"]["beta"] + 0.5) <= 0.05
    assert out["psi"]["verdict"] == "PASS" and out["verdict"] == "PASS"


def test_counterexample_csv(tmp_path):
    status, _ = run_config(CONFIGS / "counterexample_2d.json", tmp_path)
    assert status == 0
    rows = list(csv.DictReader((tmp_path / "data.csv").open()))
    assert len(rows) == 4
    assert list(rows[0]) == ["variant", "N", "s", "hs_norm", "cubic_hs_norm", "ratio", "fitted_exponent"]


def test_fail_verdict_exit_code(tmp_path):
    cfg = {"schema": "dlab-config/1", "command": "counterexample", "variant": "hyperbolic_4d",
           "s": 0, "N_list": [2, 4, 8]}
    assert main(["counterexample", "--config", str(write(tmp_path, cfg)),
                 "--out", str(tmp_path / "o")]) == 1


def test_empty_results_raise(tmp_path):
    rep = Report({"command": "x", "config_id": "0", "verdict": "PASS"}, ("a",), [])
    with pytest.raises(IoFailure):
        emit_report(rep, tmp_path)


def test_verdict_bands():
    assert verdict(0.55, 0.5, 0.1) == "PASS"
    assert verdict(0.65, 0.5, 0.1) == "INCONCLUSIVE"
    assert verdict(0.75, 0.5, 0.1) == "FAIL"
    assert verdict(float("nan"), 0.5, 0.1) == "INCONCLUSIVE"


def test_thread_resolution(monkeypatch):
    monkeypatch.setenv("DLAB_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv("DLAB_THREADS", "many")
    with pytest.raises(ConfigInvalid):
        resolve_threads()
    monkeypatch.delenv("DLAB_THREADS")
    assert resolve_threads() >= 1
    with pytest.raises(ConfigInvalid):
        resolve_threads(-1)


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "dlab.cli", "counterexample", "--config",
                          str(CONFIGS / "counterexample_4d.json"), "--out", str(tmp_path)],
                         capture_output=True, text=True, env={"DLAB_THREADS": "2", "PATH": ""})
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip().endswith("PASS")
