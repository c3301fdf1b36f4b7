"""Metropolis annealing over label assignments, the classical comparator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .network import DEFAULT_CAPS, TRIPLES, Assignment, CapExceeded, Model, TriodeNetwork

__all__ = ["AnnealParams", "AnnealSchedule", "ClassicalTrajectory", "assignment_energy", "classical_anneal"]


@dataclass(frozen=True)
class AnnealParams:
    g: float = 1.0
    g_prime: float = 0.0
    trap_free: bool = False

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("g must be positive")
        if self.g_prime < 0:
            raise ValueError("g_prime must be nonnegative")


@dataclass(frozen=True)
class AnnealSchedule:
    """Temperature profile over ``steps`` sweeps-worth of single-label moves.

    ``profile`` is one of ``constant``, ``linear`` (t0 -> t1) or
    ``exponential`` (geometric t0 -> t1).
    """

    steps: int = 1000
    t0: float = 1.0
    t1: float = 0.01
    profile: str = "exponential"

    def temperature(self, k: int) -> float:
        if self.profile == "constant" or self.steps <= 1:
            return self.t0
        frac = k / (self.steps - 1)
        if self.profile == "linear":
            return self.t0 + (self.t1 - self.t0) * frac
        if self.profile == "exponential":
            if self.t0 <= 0 or self.t1 <= 0:
                return self.t0 + (self.t1 - self.t0) * frac
            return self.t0 * (self.t1 / self.t0) ** frac
        raise ValueError(f"unknown temperature profile {self.profile!r}")


@dataclass
class ClassicalTrajectory:
    energies: np.ndarray
    first_hit: int | None
    final: Assignment
    seed: int
    accepted: int = 0
    ground_energy: float = field(default=0.0)


def _triode_weights(labels: np.ndarray) -> np.ndarray:
    # sum over axes of (1 - q)^2: 2 for a triplet label, 0 for Sing
    return 3 - TRIPLES[labels].sum(axis=-1)


def assignment_energy(labels, network: TriodeNetwork, params: AnnealParams) -> float:
    labels = np.asarray([int(l) for l in labels], dtype=np.intp)
    eps = 0
    for w in network.wires:
        eps += int(TRIPLES[labels[w.a.triode], w.a.axis] != TRIPLES[labels[w.b.triode], w.b.axis])
    if not params.trap_free:
        return params.g * eps
    return params.g * eps + params.g_prime * eps * float(_triode_weights(labels).sum())


def classical_anneal(
    network: TriodeNetwork,
    model: Model,
    params: AnnealParams,
    schedule: AnnealSchedule,
    seed: int,
    initial: Assignment | None = None,
) -> ClassicalTrajectory:
    """Single-label Metropolis walk; records energy per step and first ground hit.

    Ground assignments are those with zero wire error, i.e. energy 0 in
    both the plain and trap-free forms.
    """
    model = Model(model)
    cap = DEFAULT_CAPS[model]
    if network.triode_count > cap:
        raise CapExceeded("classical anneal (triodes)", network.triode_count, cap)
    rng = np.random.default_rng(seed)
    allowed = np.array([int(l) for l in model.labels], dtype=np.intp)
    T = network.triode_count
    if initial is None:
        labels = rng.choice(allowed, size=T)
    else:
        if len(initial) != T:
            raise ValueError("initial assignment length does not match network")
        labels = np.array([int(l) for l in initial.labels], dtype=np.intp)
    energy = assignment_energy(labels, network, params)
    energies = np.empty(schedule.steps + 1)
    energies[0] = energy
    first_hit = 0 if energy == 0 else None
    accepted = 0
    for k in range(schedule.steps):
        if T > 0 and len(allowed) > 1:
            tau = int(rng.integers(T))
            choices = allowed[allowed != labels[tau]]
            new = int(rng.choice(choices))
            old = labels[tau]
            labels[tau] = new
            trial = assignment_energy(labels, network, params)
            delta = trial - energy
            temp = schedule.temperature(k)
            u = rng.random()
            if delta <= 0 or (temp > 0 and u < math.exp(-delta / temp)):
                energy = trial
                accepted += 1
            else:
                labels[tau] = old
        energies[k + 1] = energy
        if first_hit is None and energy == 0:
            first_hit = k + 1
    return ClassicalTrajectory(
        energies=energies,
        first_hit=first_hit,
        final=Assignment(tuple(labels)),
        seed=seed,
        accepted=accepted,
    )
