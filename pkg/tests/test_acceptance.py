"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` to see the lines as
they are produced; they are also collected in the terminal summary.
Pilot manifests for the stochastic criteria live in ``tests/pilots``.
"""
import itertools
import json
import time
from pathlib import Path

import numpy as np
import pytest

from qusa.analysis import amplification_ledger
from qusa.cli import main
from qusa.dynamics import ScheduleParams, run_projected
from qusa.hamiltonian import (
    FieldSample,
    HamiltonianParams,
    NoiseParams,
    dense,
    verify_symmetrization,
    wire_hamiltonian,
)
from qusa.network import (
    Assignment,
    Axis,
    ExactCoverInstance,
    Label,
    Model,
    QubitRef,
    TriodeNetwork,
    Wire,
    brute_force_exact_cover,
    build_nor_gadget,
    build_not_gadget,
    encode_exact_cover,
    enumerate_solutions,
    toy_network,
    total_error,
    verify_gadget,
)
from qusa.statespace import (
    PAULI,
    Space,
    exchange_operator,
    qubit_observable,
    symmetrizer_matrix,
    to_pair_frame,
    total_spin_squared,
)

PILOTS = Path(__file__).parent / "pilots"

# truth tables as printed for the triode and the EQU gate, rows (q_x, q_y, q_z)
TRIODE_ROWS = {(0, 0, 1), (0, 1, 0), (1, 0, 0)}
EQU_ROWS = TRIODE_ROWS | {(1, 1, 1)}


def all_networks(T, max_wires):
    refs = [QubitRef(t, a) for t in range(T) for a in Axis]
    pairs = [Wire(a, b) for i, a in enumerate(refs) for b in refs[i + 1 :]]
    for k in range(max_wires + 1):
        for combo in itertools.combinations(pairs, k):
            yield TriodeNetwork(T, combo)


def run_cli(*args):
    return main([*map(str, args), "-q"])


# 1 ---------------------------------------------------------------------------

def test_criterion_01_truth_tables(acceptance):
    t0 = time.perf_counter()
    qs = [qubit_observable(a) for a in Axis]
    # joint spectrum by simultaneous diagonalization in the product basis
    w, V = np.linalg.eigh(qs[0] + 2 * qs[1] + 4 * qs[2])
    s2 = total_spin_squared()
    triples, triplet_triples, worst = set(), set(), 0.0
    for k in range(4):
        v = V[:, k]
        vals = [float(np.vdot(v, q @ v).real) for q in qs]
        row = tuple(int(round(x)) for x in vals)
        worst = max(worst, max(abs(x - r) for x, r in zip(vals, row)))
        worst = max(worst, max(np.linalg.norm(q @ v - x * v) for q, x in zip(qs, row)))
        triples.add(row)
        if abs(np.vdot(v, s2 @ v).real - 2) < 1e-12:
            triplet_triples.add(row)
    # and the canonical frame is exactly diagonal with those rows
    frame = np.stack([np.diag(to_pair_frame(q)).real for q in qs], axis=1)
    offdiag = max(np.abs(to_pair_frame(q) - np.diag(np.diag(to_pair_frame(q)))).max() for q in qs)
    frame_rows = {tuple(int(round(x)) for x in r) for r in frame}
    ok = (
        triplet_triples == TRIODE_ROWS
        and triples == EQU_ROWS
        and frame_rows == EQU_ROWS
        and worst <= 1e-12
        and offdiag <= 1e-12
        and time.perf_counter() - t0 < 1
    )
    assert acceptance(1, "truth tables", ok, f"triplet rows {sorted(triplet_triples)}, all rows {sorted(triples)}")


# 2 ---------------------------------------------------------------------------

def test_criterion_02_algebraic_identities(acceptance):
    t0 = time.perf_counter()
    qs = [to_pair_frame(qubit_observable(a)) for a in Axis]
    I = np.eye(4)
    total = sum(qs)
    checks = {}
    checks["sum"] = np.abs(total - np.diag([1, 1, 1, 3])).max()
    checks["spin"] = np.abs(to_pair_frame(total_spin_squared()) - np.diag([1 * 2, 1 * 2, 1 * 2, 0 * 1])).max()
    # q = 1 - s_theta^2 with s = (sigma1 + sigma2) / 2
    s_theta = [0.5 * (np.kron(p, np.eye(2)) + np.kron(np.eye(2), p)) for p in PAULI]
    checks["q=1-s^2"] = max(np.abs(I - s @ s - qubit_observable(a)).max() for s, a in zip(s_theta, Axis))
    d = [np.diag(q).real for q in qs]
    checks["mod2"] = np.abs(np.mod(d[0] - d[1] - d[2] - 1, 2)).max()
    worst_p, worst_c = 0.0, 0.0
    rng = np.random.default_rng(0)
    for T in (1, 2, 3):
        P = symmetrizer_matrix(T)
        worst_p = max(worst_p, np.abs(P @ P - P).max())
        nets = [TriodeNetwork(T)] + ([toy_network()] if T == 2 else [])
        if T == 3:
            nets.append(TriodeNetwork(3, (Wire(QubitRef(0, Axis.X), QubitRef(2, Axis.Y)),)))
        for net in nets:
            hw = dense(wire_hamiltonian(net, HamiltonianParams(g=float(rng.uniform(0.5, 2)))))
            worst_c = max(worst_c, np.abs(hw @ P - P @ hw).max())
    checks["P^2=P"] = worst_p
    checks["[Hw,P]"] = worst_c
    checks["[X12,q]"] = max(np.abs(exchange_operator() @ q - q @ exchange_operator()).max()
                            for q in map(qubit_observable, Axis))
    ok = all(v <= 1e-12 for v in checks.values()) and time.perf_counter() - t0 < 1
    assert acceptance(2, "algebraic identities", ok, ", ".join(f"{k} {v:.1e}" for k, v in checks.items()))


# 3 ---------------------------------------------------------------------------

def test_criterion_03_symmetrization(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    good, bad = [], []
    for T, net in ((1, TriodeNetwork(1)), (2, toy_network())):
        for _ in range(10):
            s = FieldSample(rng.standard_normal((T, 2, 3)))
            good.append(verify_symmetrization(net, s))
            bad.append(verify_symmetrization(net, s, pairing="first"))
    ok = max(good) <= 1e-12 and min(bad) > 1e-3 and time.perf_counter() - t0 < 5
    assert acceptance(3, "symmetrization", ok, f"max residual {max(good):.1e}, min control residual {min(bad):.2f}")


# 4 ---------------------------------------------------------------------------

def test_criterion_04_trap_free(acceptance):
    t0 = time.perf_counter()
    g, gp = 1.0, 0.375
    plain = HamiltonianParams(g=g)
    tf = HamiltonianParams(g=g, g_prime=gp, trap_free=True)
    mismatch = ground_diff = 0
    count = 0
    for T in (1, 2, 3):
        nets = list(all_networks(T, 2 if T < 3 else 1))
        for net in nets:
            e_tf = wire_hamiltonian(net, tf, Space.PHYSICAL).diagonal.real
            for i, combo in enumerate(itertools.product([Label.X, Label.Y, Label.Z], repeat=T)):
                eps = total_error(Assignment(combo), net)
                mismatch += e_tf[i] != (g + 2 * T * gp) * eps
            a = wire_hamiltonian(net, plain, Space.COMPARISON).diagonal
            b = wire_hamiltonian(net, tf, Space.COMPARISON).diagonal
            ground_diff += int(np.any((a == 0) != (b == 0)))
            count += 1
    ok = mismatch == 0 and ground_diff == 0 and time.perf_counter() - t0 < 1
    assert acceptance(4, "trap-free equivalence", ok, f"{count} networks, {mismatch} energy mismatches, "
                      f"{ground_diff} ground-set differences")


# 5 ---------------------------------------------------------------------------

def test_criterion_05_zeno(acceptance, tmp_path):
    t0 = time.perf_counter()
    rc = run_cli("run", "--config", PILOTS / "zeno" / "manifest.json", "--out", tmp_path)
    rep = json.loads((tmp_path / "sweep.json").read_text())
    finest = min(rep["points"])[1]
    ratio = rep["total_time"] * rep["generator_norm"]
    ok = (
        rc == 0
        and rep["exponent"] >= 0.9
        and finest <= 1e-2
        and abs(ratio - 5) < 1e-9
        and len(rep["points"]) == 5
        and time.perf_counter() - t0 < 30
    )
    assert acceptance(5, "Zeno equivalence", ok, f"order {rep['exponent']:.3f}, finest error {finest:.2e}")


# 6 ---------------------------------------------------------------------------

def test_criterion_06_renormalization_identity(acceptance):
    worst_event = worst_ledger = 0.0
    n_events = 0
    cases = [
        (HamiltonianParams(), NoiseParams(), ScheduleParams(total_time=20.0)),
        (HamiltonianParams(g=1.0, gamma=0.05), NoiseParams(b0=0.3, tau_c=2.0),
         ScheduleParams(dt=0.25, projection_interval=1.0, total_time=10.0)),
        (HamiltonianParams(g=1.0), NoiseParams(b0=0.3, tau_c=2.0),
         ScheduleParams(dt=0.25, projection_interval=1.0, total_time=10.0, renormalize=False)),
    ]
    for hp, npar, sched in cases:
        for seed in range(5):
            tr = run_projected(toy_network(), hp, npar, sched, seed)
            for e in tr.events:
                worst_event = max(worst_event, abs(e.p_s_post - e.p_s_pre / (1 - e.removed)))
                worst_event = max(worst_event, abs(e.p_f_post - e.p_f_pre / (1 - e.removed)))
                n_events += 1
            worst_ledger = max(worst_ledger, abs(amplification_ledger(tr).residual))
    ok = worst_event <= 1e-10 and worst_ledger <= 1e-8
    assert acceptance(6, "renormalization identity", ok,
                      f"{n_events} events, max event error {worst_event:.1e}, max ledger residual {worst_ledger:.1e}")


# 7 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_07_takeoff_law(acceptance, tmp_path):
    t0 = time.perf_counter()
    manifest = PILOTS / "takeoff" / "manifest.json"
    cfg = json.loads(manifest.read_text())["config"]
    rc = run_cli("run", "--config", manifest, "--out", tmp_path)
    fit = json.loads((tmp_path / "takeoff.json").read_text())
    gap = abs(fit["k_fit"] - fit["k_removed"]) / fit["k_removed"]
    ok = (
        rc == 0
        and cfg["run"]["n"] == 200
        and gap <= 0.25
        and fit["r_squared"] >= 0.9
        and time.perf_counter() - t0 < 300
    )
    assert acceptance(7, "take-off law", ok, f"k_fit {fit['k_fit']:.4f}, k_removed {fit['k_removed']:.4f}, "
                      f"relative gap {gap:.3f}, r2 {fit['r_squared']:.4f}, window {fit['window']}")


# 8 ---------------------------------------------------------------------------

def test_criterion_08_boolean_oracles(acceptance):
    t0 = time.perf_counter()
    toy = toy_network()
    n_tri = len(enumerate_solutions(toy, Model.TRIODE))
    n_equ = len(enumerate_solutions(toy, Model.EQU))
    rng = np.random.default_rng(8)
    agree = 0
    for _ in range(20):
        n = int(rng.integers(3, 10))
        m = int(rng.integers(1, 6))
        inst = ExactCoverInstance(n, tuple(tuple(int(v) for v in rng.choice(n, 3, replace=False)) for _ in range(m)))
        net, _ = encode_exact_cover(inst)
        agree += bool(brute_force_exact_cover(inst)) == bool(enumerate_solutions(net, Model.TRIODE))
    # an instance with no exact cover must map to an unsatisfiable network
    unsat = ExactCoverInstance(4, ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)))
    unsat_ok = not brute_force_exact_cover(unsat) and not enumerate_solutions(encode_exact_cover(unsat)[0])
    not_ok = verify_gadget(build_not_gadget(), {(0, 1), (1, 0)})
    nor_ok = verify_gadget(build_nor_gadget(), {(0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 0)})
    ok = (n_tri, n_equ) == (3, 4) and agree == 20 and unsat_ok and not_ok and nor_ok and time.perf_counter() - t0 < 10
    assert acceptance(8, "Boolean oracles", ok, f"toy {n_tri}/{n_equ} solutions, encoder agreement {agree}/20, "
                      f"NOT {not_ok}, NOR {nor_ok}")


# 9 ---------------------------------------------------------------------------

def test_criterion_09_determinism(acceptance, tmp_path):
    ini = tmp_path / "sim.ini"
    ini.write_text("[run]\nkind = simulate-projected\nseed = 17\ndump_fields = true\n[schedule]\ntotal_time = 20\n")
    a, b = tmp_path / "a", tmp_path / "b"
    rc = [run_cli("run", "--config", ini, "--out", a), run_cli("run", "--config", a / "manifest.json", "--out", b)]
    same = [(a / f).read_bytes() == (b / f).read_bytes() for f in ("trajectory.csv", "fields.csv")]
    za, zb = tmp_path / "za", tmp_path / "zb"
    rc += [
        run_cli("run", "--config", PILOTS / "zeno" / "manifest.json", "--out", za),
        run_cli("run", "--config", za / "manifest.json", "--out", zb),
    ]
    same.append((za / "zeno_points.csv").read_bytes() == (zb / "zeno_points.csv").read_bytes())
    ok = rc == [0, 0, 0, 0] and all(same)
    assert acceptance(9, "determinism", ok, f"{sum(same)}/{len(same)} CSV files byte-identical on manifest rerun")


# 10 --------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_10_leak_scaling(acceptance, tmp_path):
    rc = run_cli("run", "--config", PILOTS / "leak" / "manifest.json", "--out", tmp_path)
    rep = json.loads((tmp_path / "sweep.json").read_text())
    csvs = sorted(p.name for p in tmp_path.glob("leak_dt_*.csv"))
    ok = rc == 0 and rep["exponent"] is not None and rep["r_squared"] >= 0.9 and len(csvs) == len(rep["points"])
    lo, hi = rep["ci95"]
    assert acceptance(10, "leak-scaling sweep", ok, f"exponent {rep['exponent']:.3f} (95% CI {lo:.2f}..{hi:.2f}, "
                      f"reported only), r2 {rep['r_squared']:.4f}")
