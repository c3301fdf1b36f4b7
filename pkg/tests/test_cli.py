import json
import subprocess
import sys

import pytest

from qusa.cli import EXIT_CAP, EXIT_OK, EXIT_UNSAT, EXIT_USAGE, main

TOY = "triodes 2\nwire 0.x 1.x\nwire 0.y 1.y\nwire 0.z 1.z\n"
FAST = "[schedule]\ndt = 0.25\nprojection_interval = 1.0\ntotal_time = 6.0\n"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def config(tmp_path, run="", extra="", net_text=TOY):
    write(tmp_path, "net.txt", net_text)
    return write(tmp_path, "run.ini", f"[run]\nnetwork = net.txt\n{run}\n{extra}")


def lines(path):
    return path.read_text().splitlines()


def test_solve_triode_and_equ(tmp_path, capsys):
    cfg = config(tmp_path, "model = TRIODE")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "a"), "-q"]) == EXIT_OK
    assert lines(tmp_path / "a" / "solutions.txt") == ["XX", "YY", "ZZ"]
    assert "count 3" in capsys.readouterr().out
    assert main(["solve", "--config", str(cfg), "--set", "run.model=EQU", "--out", str(tmp_path / "b"), "-q"]) == 0
    assert lines(tmp_path / "b" / "solutions.txt") == ["XX", "YY", "ZZ", "SingSing"]


def test_solve_empty_network(tmp_path):
    cfg = config(tmp_path, net_text="triodes 0\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o"), "-q"]) == EXIT_OK
    assert (tmp_path / "o" / "solutions.txt").read_text() == "\n"


def test_solve_unsatisfiable_inline_exact_cover(tmp_path):
    cfg = write(
        tmp_path,
        "run.ini",
        "[run]\nmodel = TRIODE\nexact_cover = vars 4; clause 0 1 2; clause 0 1 3; clause 0 2 3; clause 1 2 3\n",
    )
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o"), "-q"]) == EXIT_UNSAT


def test_parse_error_exit(tmp_path, caplog):
    cfg = config(tmp_path, net_text="triodes 2\nwire 0.x 1.q\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    assert "line 2" in caplog.text


@pytest.mark.parametrize(
    "body",
    ["[run]\nbogus = 1\n", "[nonsense]\na = 1\n", "[hamiltonian]\ng = abc\n", "[run]\nnetwork = missing.txt\n"],
)
def test_config_errors_exit_2(tmp_path, body):
    cfg = write(tmp_path, "bad.ini", body)
    assert main(["solve", "--config", str(cfg), "-q"]) == EXIT_USAGE


def test_usage_errors(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.ini"), "-q"]) == EXIT_USAGE
    assert main(["frobnicate", "--config", "x"]) == EXIT_USAGE


def test_cap_exit(tmp_path):
    cfg = config(tmp_path, "model = EQU", net_text="triodes 11\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o"), "-q"]) == EXIT_CAP
    cfg = config(tmp_path, "", FAST, net_text="triodes 8\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "s"), "-q"]) == EXIT_CAP


def test_simulate_manifest_rerun_is_byte_identical(tmp_path):
    cfg = config(tmp_path, "seed = 3\nsnapshots = 0,2\ndump_fields = true", FAST + "[noise]\nb0 = 0.3\ntau_c = 2.0\n")
    a = tmp_path / "a"
    assert main(["simulate", "--config", str(cfg), "--out", str(a), "-q"]) == EXIT_OK
    for name in ("trajectory.csv", "ledger.json", "fields.csv", "state_t0.txt", "state_t2.txt", "manifest.json"):
        assert (a / name).exists(), name
    b = tmp_path / "b"
    assert main(["run", "--config", str(a / "manifest.json"), "--out", str(b), "-q"]) == EXIT_OK
    for name in ("trajectory.csv", "fields.csv", "state_t2.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    man = json.loads((a / "manifest.json").read_text())
    assert man["config"]["run"]["seed"] == 3 and man["command"] == "simulate"


def test_seed_flag_changes_output(tmp_path):
    cfg = config(tmp_path, "", FAST + "[noise]\nb0 = 0.3\ntau_c = 2.0\n")
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "1", "-q"])
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "2", "-q"])
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() != (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_simulate_symmetrized_p_v_zero(tmp_path):
    cfg = config(tmp_path, "kind = simulate-symmetrized", FAST + "[noise]\nb0 = 0.3\ntau_c = 2.0\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "-q"]) == EXIT_OK
    rows = lines(tmp_path / "o" / "trajectory.csv")
    assert rows[0] == "t,p_S,p_F,p_V,energy,removed_norm"
    assert all(float(r.split(",")[3]) == 0.0 for r in rows[1:])


def test_simulate_projected_defaults_populate_removed(tmp_path):
    cfg = config(tmp_path, "kind = simulate-projected", "[schedule]\ntotal_time = 10\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "-q"]) == EXIT_OK
    rows = [r.split(",") for r in lines(tmp_path / "o" / "trajectory.csv")[1:]]
    filled = [float(r[0]) for r in rows if r[5]]
    assert filled == [2.0, 4.0, 6.0, 8.0, 10.0]


def test_anneal_and_ensemble(tmp_path):
    cfg = config(
        tmp_path,
        "n = 3",
        FAST + "[noise]\nb0 = 0.3\ntau_c = 2.0\n[anneal]\nsteps = 50\n[hamiltonian]\ntrap_free = true\ng_prime = 100\n",
    )
    assert main(["anneal", "--config", str(cfg), "--out", str(tmp_path / "a"), "-q"]) == EXIT_OK
    assert len(lines(tmp_path / "a" / "anneal.csv")) == 52
    assert main(["ensemble", "--config", str(cfg), "--out", str(tmp_path / "e"), "-q"]) == EXIT_OK
    assert lines(tmp_path / "e" / "ensemble.csv")[0].startswith("t,p_S_mean,p_S_se")
    assert json.loads((tmp_path / "e" / "manifest.json").read_text())["seeds"] == [0, 1, 2]


def test_zeno_sweep(tmp_path):
    cfg = config(tmp_path, "kind = zeno-sweep\n[hamiltonian]\ng = 1.0")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "z"), "-q"]) == EXIT_OK
    rep = json.loads((tmp_path / "z" / "sweep.json").read_text())
    assert rep["exponent"] >= 0.9
    assert len(lines(tmp_path / "z" / "zeno_points.csv")) == 6


def test_sweep_with_two_points_fails(tmp_path):
    cfg = config(tmp_path, "kind = zeno-sweep", "[sweep]\ndivisions = 8,16\n")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "z"), "-q"]) == EXIT_USAGE
    cfg = config(tmp_path, "kind = leak-sweep", "[sweep]\nintervals = 1,2\n")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "l"), "-q"]) == EXIT_USAGE


def test_leak_sweep_outputs_and_rerun(tmp_path):
    cfg = config(
        tmp_path,
        "kind = leak-sweep",
        "[schedule]\ntotal_time = 4\n[noise]\nb0 = 0.3\ntau_c = 2.0\n[sweep]\nintervals = 0.25,0.5,1\nn = 2\n",
    )
    a = tmp_path / "a"
    assert main(["sweep", "--config", str(cfg), "--out", str(a), "-q"]) == EXIT_OK
    for iv in ("0.25", "0.5", "1"):
        assert (a / f"leak_dt_{iv}.csv").exists()
    rep = json.loads((a / "sweep.json").read_text())
    assert rep["sweep"] == "leak" and len(rep["points"]) == 3
    b = tmp_path / "b"
    assert main(["run", "--config", str(a / "manifest.json"), "--out", str(b), "-q"]) == EXIT_OK
    for iv in ("0.25", "0.5", "1"):
        assert (a / f"leak_dt_{iv}.csv").read_bytes() == (b / f"leak_dt_{iv}.csv").read_bytes()


def test_module_entry_point(tmp_path):
    cfg = config(tmp_path, "model = TRIODE")
    proc = subprocess.run(
        [sys.executable, "-m", "qusa.cli", "solve", "--config", str(cfg), "--out", str(tmp_path / "o"), "-q"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "count 3"
