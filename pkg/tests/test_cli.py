import csv
import hashlib
import json

import numpy as np
import pytest

from ottospin import cli, experiments, lindblad
from ottospin.experiments import PRESETS, TRAJECTORY_COLUMNS

ALL_PRESETS = ["qubit-cycle", "qubit-limit-cycle", "collective-cycle", "power-vs-tth", "power-vs-j",
               "tT-vs-j", "meanfield-vs-numeric", "lmg-cycles", "tstar-dip-vs-j", "work-vs-tu",
               "work-vs-gammabar"]


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def manifest_entries(out):
    lines = (out / cli.MANIFEST_NAME).read_text().splitlines()
    start = lines.index("files:") + 1
    return {ln.split()[2]: ln.split()[0] for ln in lines[start:]}


def test_list_presets(capsys):
    assert cli.main(["list-presets"]) == 0
    printed = capsys.readouterr().out
    for name in ALL_PRESETS:
        assert name in printed
    assert sorted(PRESETS) == sorted(ALL_PRESETS)


def test_unknown_preset_writes_nothing(tmp_path):
    out = tmp_path / "nope"
    assert cli.main(["run", "no-such-preset", "--out", str(out)]) == 1
    assert not out.exists()


@pytest.mark.parametrize("args", [["--T_h", "hot"], ["--unitary_steps", "2.5"], ["--trace_thermal", "maybe"],
                                  ["--T_h", "0.5"], ["--j", "0.3"], ["--T_h", "nan"], ["--lambda_i", "1,2"]])
def test_bad_overrides_are_validation_errors(tmp_path, args):
    out = tmp_path / "o"
    assert cli.main(["run", "qubit-cycle", "--out", str(out), *args]) == 1
    assert not out.exists()


def test_missing_required_arguments_is_validation_error():
    assert cli.main(["run", "qubit-cycle"]) == 1


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"temperature": 3}))
    assert cli.main(["run", "qubit-cycle", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_run_qubit_cycle_outputs(tmp_path):
    out = tmp_path / "q"
    assert cli.main(["run", "qubit-cycle", "--out", str(out)]) == 0
    files = {p.name for p in out.iterdir()}
    assert files == {"trajectory.csv", "analytic.csv", "summary.json", "schema.json", "manifest.txt"}
    header, rows = read_csv(out / "trajectory.csv")
    assert tuple(header) == TRAJECTORY_COLUMNS
    assert {r[0] for r in rows} == {"12", "23", "34", "41"}
    summary = json.loads((out / "summary.json").read_text())
    res = summary["results"]
    assert res["W_prime"] == pytest.approx(0.276783957351870240970198508619, abs=1e-10)
    assert res["max_analytic_deviation"] < 1e-6
    assert summary["config"]["T_h"] == 8.0
    schema = json.loads((out / "schema.json").read_text())
    assert schema["files"]["trajectory.csv"]["columns"] == list(TRAJECTORY_COLUMNS)


def test_csv_branches_match_analytics(tmp_path):
    out = tmp_path / "q"
    cli.main(["run", "qubit-cycle", "--out", str(out)])
    _, traj = read_csv(out / "trajectory.csv")
    _, ana = read_csv(out / "analytic.csv")
    sim = np.array([float(r[3]) for r in traj])
    ref = np.array([float(r[2]) for r in ana])
    assert np.max(np.abs(sim - ref)) < 1e-6


def test_manifest_lists_every_file(tmp_path):
    out = tmp_path / "q"
    cli.main(["run", "qubit-cycle", "--out", str(out)])
    entries = manifest_entries(out)
    on_disk = {p.name for p in out.iterdir()} - {cli.MANIFEST_NAME}
    assert set(entries) == on_disk
    for name, digest in entries.items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest


def test_runs_are_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["run", "qubit-limit-cycle", "--out", str(a)])
    cli.main(["run", "qubit-limit-cycle", "--out", str(b)])
    for p in a.iterdir():
        if p.suffix in (".csv", ".json"):
            assert p.read_bytes() == (b / p.name).read_bytes(), p.name


def test_shortest_round_trip_floats(tmp_path):
    out = tmp_path / "q"
    cli.main(["run", "qubit-cycle", "--out", str(out)])
    _, rows = read_csv(out / "trajectory.csv")
    for r in rows[:50]:
        for cell in r[1:]:
            assert repr(float(cell)) == cell


def test_config_file_then_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"T_h": 6.0, "lambda_f": 2.0}))
    out = tmp_path / "o"
    assert cli.main(["run", "qubit-cycle", "--config", str(cfg), "--T-h", "7", "--out", str(out)]) == 0
    conf = json.loads((out / "summary.json").read_text())["config"]
    assert conf["T_h"] == 7.0 and conf["lambda_f"] == 2.0


def test_axis_override(tmp_path):
    out = tmp_path / "t"
    assert cli.main(["run", "tT-vs-j", "--j", "5,10,20,40", "--out", str(out)]) == 0
    _, rows = read_csv(out / "tT_vs_j.csv")
    assert [float(r[0]) for r in rows] == [5, 10, 20, 40]
    assert all(r[2] == "ok" for r in rows)


def test_non_axis_list_rejected(tmp_path):
    assert cli.main(["run", "qubit-cycle", "--T_c", "1,2", "--out", str(tmp_path / "o")]) == 1


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise lindblad.IntegratorError("trace drift")
    monkeypatch.setattr(experiments.otto, "run_cycle", boom)
    out = tmp_path / "o"
    assert cli.main(["run", "qubit-cycle", "--out", str(out)]) == 2
    assert not out.exists()


def write_grid(tmp_path, grid):
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(grid))
    return path


def test_sweep_sorted_and_fit(tmp_path):
    grid = write_grid(tmp_path, {"j": [40, 5, 20, 10]})
    out = tmp_path / "s"
    assert cli.main(["sweep", "tT-vs-j", "--grid", str(grid), "--out", str(out)]) == 0
    header, rows = read_csv(out / "sweep.csv")
    assert header == ["j", "t_T", "status"]
    js = [float(r[0]) for r in rows]
    assert js == sorted(js)
    t = [float(r[1]) for r in rows]
    assert all(a > b for a, b in zip(t, t[1:]))


def test_sweep_power_decreases_with_t_th(tmp_path):
    grid = write_grid(tmp_path, {"j": [5], "t_th": [10, 0.05, 0.1, 0.3, 1, 3]})
    out = tmp_path / "s"
    assert cli.main(["sweep", "power-vs-tth", "--grid", str(grid), "--out", str(out)]) == 0
    header, rows = read_csv(out / "sweep.csv")
    assert header[:3] == ["j", "t_th", "power"]
    p = [float(r[2]) for r in rows]
    assert all(a >= b for a, b in zip(p, p[1:]))


def test_singleton_grid_matches_run(tmp_path):
    cli.main(["run", "qubit-cycle", "--out", str(tmp_path / "r")])
    grid = write_grid(tmp_path, {"T_h": [8.0]})
    cli.main(["sweep", "qubit-cycle", "--grid", str(grid), "--out", str(tmp_path / "s")])
    run_w = json.loads((tmp_path / "r" / "summary.json").read_text())["results"]["W_prime"]
    _, rows = read_csv(tmp_path / "s" / "sweep.csv")
    assert float(rows[0][1]) == pytest.approx(run_w, abs=1e-14)


def test_sweep_records_failures_without_aborting(tmp_path):
    grid = write_grid(tmp_path, {"T_h": [0.5, 8.0]})
    out = tmp_path / "s"
    assert cli.main(["sweep", "qubit-cycle", "--grid", str(grid), "--out", str(out)]) == 0
    _, rows = read_csv(out / "sweep.csv")
    assert rows[0][-1].startswith("invalid") and rows[0][1] == ""
    assert rows[1][-1] == "ok"
    assert json.loads((out / "summary.json").read_text())["n_failed"] == 1


def test_sweep_all_failed_is_numerical_failure(tmp_path):
    grid = write_grid(tmp_path, {"T_h": [0.5]})
    assert cli.main(["sweep", "qubit-cycle", "--grid", str(grid), "--out", str(tmp_path / "s")]) == 2


@pytest.mark.parametrize("grid", [{}, {"j": []}])
def test_empty_grid(tmp_path, grid):
    path = write_grid(tmp_path, grid)
    out = tmp_path / "s"
    assert cli.main(["sweep", "tT-vs-j", "--grid", str(path), "--out", str(out)]) == 1
    assert not out.exists()


def test_workers_do_not_change_bytes(tmp_path):
    grid = write_grid(tmp_path, {"j": [5, 10]})
    cli.main(["sweep", "tT-vs-j", "--grid", str(grid), "--out", str(tmp_path / "a")])
    cli.main(["sweep", "tT-vs-j", "--grid", str(grid), "--out", str(tmp_path / "b"), "--workers", "2"])
    for name in ("sweep.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_work_drops_past_critical_coupling(tmp_path):
    out = tmp_path / "w"
    assert cli.main(["run", "work-vs-gammabar", "--j", "20", "--gamma_bar", "0,1.5,3", "--out", str(out)]) == 0
    _, rows = read_csv(out / "work_vs_gammabar.csv")
    w = {float(r[1]): float(r[2]) for r in rows}
    assert w[3.0] < w[1.5] <= w[0.0] + 1e-12


def test_coerce_types():
    assert cli.coerce("j", "1/2") == 0.5
    assert cli.coerce("t_th", "full") == "full"
    assert cli.coerce("unitary_steps", "400") == 400
    assert cli.coerce("trace_thermal", "false") is False
    with pytest.raises(cli.ValidationError):
        cli.coerce("nope", 1)
