import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from waveforge import cli, repro
from waveforge.params import FilterBank
from waveforge.signal import Filter

DATA = Path(__file__).parent / "data"
R2 = math.sqrt(2.0)
SPLINE = {"taps": [R2 / 4, R2 / 2, R2 / 4], "offset": 0}


def run_config(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return cli.main(["run", str(path)])


def report(tmp_path, out="out"):
    return json.loads((tmp_path / out / "report.json").read_text())


@pytest.mark.parametrize("obj, field", [
    ({"outputs": "o"}, "mode"),
    ({"mode": "train", "outputs": "o", "params": {"kind": "orthogonal", "l": 8}, "train": {}}, "train.seed"),
    ({"mode": "train", "outputs": "o", "train": {"seed": 1}}, "params"),
    ({"mode": "fly", "outputs": "o"}, "mode"),
    ({"mode": "validate", "outputs": "o", "colour": 3}, "colour"),
    ({"mode": "oracle-compare", "outputs": "o", "filters": {}}, "reference"),
    ({"mode": "validate", "outputs": "o", "reference": "sym8"}, "reference"),
    ({"mode": "concentration", "outputs": "o"}, "concentration.seed"),
    ({"mode": "cascade", "outputs": "o", "reference": "db2", "levels": 0}, "levels"),
])
def test_schema_errors_name_the_field(tmp_path, capsys, obj, field):
    assert run_config(tmp_path, obj) == cli.EXIT_CONFIG
    assert field in capsys.readouterr().err


def test_bad_params_and_train_fields(tmp_path, capsys):
    base = {"mode": "train", "outputs": "o", "train": {"seed": 0}}
    assert run_config(tmp_path, {**base, "params": {"l": 8}}) == cli.EXIT_CONFIG
    assert "params.kind" in capsys.readouterr().err
    obj = {**base, "params": {"kind": "orthogonal", "l": 8}, "train": {"seed": 0, "speed": 2}}
    assert run_config(tmp_path, obj) == cli.EXIT_CONFIG
    assert "train" in capsys.readouterr().err


def test_unreadable_config(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG
    (tmp_path / "broken.json").write_text("{")
    assert cli.main(["run", str(tmp_path / "broken.json")]) == cli.EXIT_CONFIG


def test_train_db4_class(tmp_path):
    obj = {"mode": "train", "outputs": "out",
           "params": {"kind": "orthogonal", "l": 8, "p": 4},
           "train": {"seed": 7, "epsilon": 1e-30, "eta0": 1e-2, "delta": 1e-7}}
    assert run_config(tmp_path, obj) == cli.EXIT_OK
    rep = report(tmp_path)
    assert rep["srer_db"] == "inf" or rep["srer_db"] > 200
    assert rep["stable"] and rep["cmf_residual"] < 1e-10
    out = tmp_path / "out"
    for name in ("filters.json", "history.csv", "params.json", "samples_phi.csv", "samples_psi.csv",
                 "samples_phi_dual.csv", "samples_psi_dual.csv"):
        assert (out / name).exists(), name
    assert (out / "history.csv").read_text().startswith("iter,loss,eta,lambda\n")


def test_train_not_converged_exit(tmp_path):
    obj = {"mode": "train", "outputs": "out", "params": {"kind": "orthogonal", "l": 8, "p": 2},
           "train": {"seed": 0, "max_iters": 20}, "mra": False}
    assert run_config(tmp_path, obj) == cli.EXIT_NOT_CONVERGED
    assert (tmp_path / "out" / "filters.json").exists()


def test_oracle_compare_trained_spline(tmp_path, capsys):
    obj = {"mode": "oracle-compare", "outputs": "out", "reference": "cdf53",
           "params": {"kind": "biorthogonal", "l": 5, "p": 2, "p_dual": 2, "fixed_synthesis": SPLINE},
           "train": {"seed": 0, "epsilon": 1e-30}}
    assert run_config(tmp_path, obj) == cli.EXIT_OK
    assert report(tmp_path)["oracle_gap"] < 1e-4
    assert "max filter gap to cdf53" in capsys.readouterr().out


def test_oracle_compare_gap_above_tolerance(tmp_path):
    obj = {"mode": "oracle-compare", "outputs": "out", "reference": "db2",
           "filters": json.loads(json.dumps(_bank_json("haar")))}
    assert run_config(tmp_path, obj) == cli.EXIT_INVALID
    assert report(tmp_path)["oracle_gap"] == "inf"


def _bank_json(name):
    from waveforge.oracle import family
    return family(name).to_json()


def test_validate_unstable_bank(tmp_path):
    shutil.copy(DATA / "unstable_biorthogonal_bank.json", tmp_path / "bank.json")
    obj = {"mode": "validate", "outputs": "out", "filters": "bank.json"}
    assert run_config(tmp_path, obj) == cli.EXIT_INVALID
    rep = report(tmp_path)
    assert rep["stable"] is False
    assert rep["srer_db"] == "inf" or rep["srer_db"] > 200


def test_validate_reference(tmp_path):
    assert run_config(tmp_path, {"mode": "validate", "outputs": "out", "reference": "db4"}) == cli.EXIT_OK
    rep = report(tmp_path)
    assert rep["stable"] and rep["vm_count"] == 4
    assert rep["lawton_h"]["matrix_size"] == 15


def test_cascade_mode(tmp_path):
    assert run_config(tmp_path, {"mode": "cascade", "outputs": "out", "reference": "haar", "levels": 4}) == 0
    rows = (tmp_path / "out" / "samples_phi.csv").read_text().splitlines()
    assert rows[0] == "t,value" and len(rows) == 2**4 + 2
    assert report(tmp_path) == {"diverged": {"phi": False, "phi_dual": False}}


def test_cascade_mode_flags_divergence(tmp_path):
    h = Filter([-0.25 * R2, 0.75 * R2, 0.75 * R2, -0.25 * R2])
    fb = FilterBank(h, h, h, h).to_json()
    obj = {"mode": "cascade", "outputs": "out", "filters": fb, "levels": 10}
    assert run_config(tmp_path, obj) == cli.EXIT_INVALID


def test_concentration_mode(tmp_path):
    obj = {"mode": "concentration", "outputs": "out", "concentration": {"seed": 3, "s": 16, "trials": 500}}
    assert run_config(tmp_path, obj) == cli.EXIT_OK
    lines = (tmp_path / "out" / "concentration.csv").read_text().splitlines()
    assert lines[0] == "k,empirical,bound"
    rep = report(tmp_path)
    assert rep["within_bound"] and rep["mean_ok"]


def test_artifacts_byte_identical(tmp_path):
    obj = {"mode": "train", "params": {"kind": "biorthogonal", "l": 6, "p": 1, "p_dual": 1},
           "train": {"seed": 5, "max_iters": 300}, "mra": False}
    for out in ("a", "b"):
        run_config(tmp_path, {**obj, "outputs": out}, f"{out}.json")
    for name in ("filters.json", "history.csv", "params.json", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_filters_json_round_trip(tmp_path):
    run_config(tmp_path, {"mode": "validate", "outputs": "out", "reference": "cdf97"})
    obj = json.loads((tmp_path / "out" / "filters.json").read_text())
    back = FilterBank.from_json(obj)
    assert back.to_json() == obj


def test_oracle_command(tmp_path, capsys):
    assert cli.main(["oracle", "--family", "db2", "--out", str(tmp_path)]) == 0
    obj = json.loads((tmp_path / "db2.json").read_text())
    assert obj["family"] == "db2" and len(obj["h"]["taps"]) == 4
    assert cli.main(["oracle", "--list"]) == 0
    assert capsys.readouterr().out.split()[-5:] == ["haar", "db2", "db4", "cdf53", "cdf97"]
    with pytest.raises(SystemExit):
        cli.main(["oracle", "--family", "sym4"])


def test_repro_only(tmp_path, capsys):
    assert cli.main(["repro", "--only=cascade", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[PASS] 11 cascade" in out
    assert (tmp_path / "cascade.json").exists() and (tmp_path / "summary.md").exists()
    assert cli.main(["repro", "--only", "nope"]) == cli.EXIT_CONFIG


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("WAVEFORGE_THREADS", "1")
    assert repro.worker_count() == 1
    monkeypatch.setenv("WAVEFORGE_THREADS", "many")
    with pytest.raises(ValueError):
        repro.worker_count()


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "waveforge.cli", "oracle", "--list"],
                          capture_output=True, text=True, check=True)
    assert "cdf97" in proc.stdout
