import json

import numpy as np
import pytest

from sswme.cli import RunManifest, main, read_csv, write_csv


def run(*argv):
    return main([str(a) for a in argv])


def test_basis_export(tmp_path, capsys):
    assert run("basis", "L3", "--out", tmp_path) == 0
    export = json.loads((tmp_path / "basis.json").read_text())
    assert export["N"] == 3 and export["breakpoints"] == ["0", "1/3", "2/3", "1"]
    header, data = read_csv(tmp_path / "samples.csv")
    assert header == ["zeta", "phi_1", "phi_2", "phi_3"]
    assert data.shape == (201, 4)
    assert RunManifest.read(tmp_path).subcommand == "basis"


def test_basis_q3_breakpoints(tmp_path):
    assert run("basis", "Q3", "--out", tmp_path) == 0
    assert json.loads((tmp_path / "basis.json").read_text())["breakpoints"] == ["0", "1/2", "1"]


def test_unknown_basis_is_one_line_error(tmp_path, capsys):
    assert run("basis", "Z9", "--out", tmp_path) == 1
    err = capsys.readouterr().err
    assert err.startswith("sswme basis: error:") and err.count("\n") == 1


def test_tensors_dump(tmp_path):
    assert run("tensors", "L1", "--out", tmp_path) == 0
    assert "M 1 1 4/3" in (tmp_path / "tensors.txt").read_text()


def test_catalogue(tmp_path):
    assert run("catalogue", "--max-n", 3, "--n-dirs", 200, "--out", tmp_path) == 0
    lines = (tmp_path / "catalogue.csv").read_text().splitlines()
    assert lines[0].startswith("basis,degree,N")
    assert [l.split(",")[0] for l in lines[1:]] == ["L1", "L2", "L3", "Q2", "Q3"]


def test_hyperbolicity_scan(tmp_path):
    assert run("hyperbolicity-scan", "L2", "--resolution", 11, "--out", tmp_path) == 0
    header, data = read_csv(tmp_path / "scan.csv")
    assert header[-3:] == ["max_imag", "hyperbolic", "on_line"]
    assert data.shape[0] == 121
    assert np.all(data[:, -2] == 1)  # |s| <= 0.1 is hyperbolic
    assert run("hyperbolicity-scan", "L3", "--resolution", 5, "--out", tmp_path / "l3") == 0


def test_simulate_and_profiles(tmp_path):
    out = tmp_path / "sim"
    assert run("simulate", "--basis", "Q2", "--nx", 20, "--t-end", 0.1, "--outputs", "0.05", "--out", out) == 0
    files = sorted(p.name for p in out.glob("fields_t*.csv"))
    assert files == ["fields_t0.050000.csv", "fields_t0.100000.csv"]
    header, data = read_csv(out / files[-1])
    assert header == ["x", "h", "u_m", "alpha_1", "alpha_2", "s_1", "s_2"]
    assert data.shape == (20, 7)
    man = RunManifest.read(out)
    assert man.basis == "Q2" and man.grid["nx"] == 20
    assert run("profiles", "--run", out, "--x=-0.105,0.025") == 0
    header, prof = read_csv(out / "profiles" / "profiles.csv")
    assert prof.shape == (101, 3)
    assert run("profiles", "--run", out, "--x", "5") == 1


def test_profiles_of_constant_state(tmp_path):
    out = tmp_path / "rest"
    RunManifest("simulate", "L2", grid={"x_min": -1.0, "x_max": 1.0, "t_end": 1.0}).write(out)
    x = np.linspace(-0.9, 0.9, 10)
    cols = np.column_stack([x, np.ones(10), np.full(10, 0.3), np.zeros(10), np.zeros(10), np.zeros(10), np.zeros(10)])
    write_csv(out / "fields_t1.000000.csv", ["x", "h", "u_m", "alpha_1", "alpha_2", "s_1", "s_2"], cols)
    assert run("profiles", "--run", out, "--x", "0") == 0
    _, prof = read_csv(out / "profiles" / "profiles.csv")
    assert np.allclose(prof[:, 1], 0.3)


def test_reference_run_and_profiles(tmp_path):
    out = tmp_path / "ref"
    assert run("reference", "--nx", 20, "--nzeta", 8, "--t-end", 0.05, "--out", out) == 0
    header, data = read_csv(out / "fields_t0.050000.csv")
    assert header[:5] == ["x", "h", "u_m", "alpha_1", "alpha_2"] and header[-1] == "u_7"
    assert run("profiles", "--run", out, "--x", "0.1", "--samples", 11) == 0


def test_errors_table(tmp_path):
    assert run("errors", "--bases", "L1,Q2", "--nx", 20, "--nzeta", 10, "--t-end", 0.05, "--out", tmp_path) == 0
    lines = (tmp_path / "errors.csv").read_text().splitlines()
    assert lines[0] == "basis,N,err_h,err_um,err_alpha1,err_alpha2"
    assert [l.split(",")[0] for l in lines[1:]] == ["L1", "Q2"]


def test_errors_empty_list(tmp_path):
    assert run("errors", "--bases", "", "--out", tmp_path) == 0
    assert (tmp_path / "errors.csv").read_text().splitlines() == ["basis,N,err_h,err_um,err_alpha1,err_alpha2"]


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("simulate", "--basis", "L2", "--regularized", "--nx", 16, "--t-end", 0.05, "--out", out) == 0
    for p in a.iterdir():
        assert p.read_bytes() == (b / p.name).read_bytes()


def test_manifest_roundtrip(tmp_path):
    m = RunManifest("simulate", "Q3", True, {"g": 1.0}, {"nx": 4}, {"experiment": "fast"})
    assert RunManifest.from_json(m.to_json()) == m
    m.write(tmp_path)
    assert RunManifest.read(tmp_path) == m


def test_csv_roundtrip_is_lossless(tmp_path):
    data = np.array([[0.1, 1 / 3], [np.pi, -2e-17]])
    write_csv(tmp_path / "t.csv", ["a", "b"], data)
    header, back = read_csv(tmp_path / "t.csv")
    assert header == ["a", "b"] and np.array_equal(back, data)


def test_bad_config_is_reported(tmp_path, capsys):
    assert run("simulate", "--basis", "L1", "--nx", 2, "--out", tmp_path) == 1
    assert "error" in capsys.readouterr().err


def test_argparse_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
