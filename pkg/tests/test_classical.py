import numpy as np
import pytest

from qusa.classical import AnnealParams, AnnealSchedule, assignment_energy, classical_anneal
from qusa.network import Assignment, Label, Model, TriodeNetwork, enumerate_solutions, total_error


def test_trap_free_energy_on_triode_labels(toy):
    p = AnnealParams(g=1.0, g_prime=0.7, trap_free=True)
    for a in enumerate_solutions(TriodeNetwork(2), Model.TRIODE):
        eps = total_error(a, toy)
        assert assignment_energy(a.labels, toy, p) == pytest.approx((1.0 + 2 * 2 * 0.7) * eps, abs=0)


@pytest.mark.parametrize("seed", range(8))
def test_trap_free_equ_hits_ground(toy, seed):
    traj = classical_anneal(
        toy, Model.EQU, AnnealParams(1.0, 100.0, True), AnnealSchedule(steps=400, t0=50.0, t1=0.1), seed
    )
    assert traj.first_hit is not None
    assert traj.energies[traj.first_hit] == 0


def test_zero_temperature_ground_is_fixed(toy):
    traj = classical_anneal(
        toy,
        Model.EQU,
        AnnealParams(),
        AnnealSchedule(steps=200, t0=0.0, t1=0.0, profile="constant"),
        seed=3,
        initial=Assignment((Label.Y, Label.Y)),
    )
    assert np.all(traj.energies == 0)
    assert traj.first_hit == 0


def test_determinism(toy):
    a = classical_anneal(toy, Model.TRIODE, AnnealParams(), AnnealSchedule(steps=300), seed=11)
    b = classical_anneal(toy, Model.TRIODE, AnnealParams(), AnnealSchedule(steps=300), seed=11)
    assert np.array_equal(a.energies, b.energies)
    assert a.final == b.final


def test_schedule_profiles():
    s = AnnealSchedule(steps=11, t0=1.0, t1=0.01, profile="exponential")
    assert s.temperature(0) == pytest.approx(1.0)
    assert s.temperature(10) == pytest.approx(0.01)
    assert AnnealSchedule(steps=11, t0=1.0, t1=0.0, profile="linear").temperature(5) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        AnnealSchedule(profile="cubic").temperature(1)
