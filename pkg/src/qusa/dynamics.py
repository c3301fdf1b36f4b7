"""Time evolution: steppers, comparison / projected / symmetrized runs, ensembles.

All three run kinds share one loop.  The field noise is frozen over each
inner step ``dt`` (sampled at the step start) and advanced afterwards.
The projected run zeroes every Sing-containing amplitude once per
projection interval, records the removed weight, then renormalizes.
"""
from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import (
    FieldSample,
    HamiltonianParams,
    NoiseParams,
    NoiseProcess,
    OperatorHandle,
    actual_coupling,
    comparison_coupling,
    effective_generator,
    wire_hamiltonian,
)
from .network import CapExceeded, TriodeNetwork
from .statespace import Space, StateVector, class_masks, embed, initial_state, project

__all__ = [
    "Stepper",
    "RunKind",
    "ScheduleParams",
    "ProjectionEvent",
    "Trajectory",
    "EnsembleResult",
    "DEFAULT_CAP",
    "step",
    "run_comparison",
    "run_projected",
    "run_symmetrized",
    "run_trajectory",
    "run_ensemble",
    "trajectory_seeds",
    "zeno_convergence_study",
    "frozen_leak",
    "field_path",
    "fields_csv",
]

DEFAULT_CAP = 7


class Stepper(enum.Enum):
    EULER = "EULER"
    EXPM = "EXPM"


class RunKind(enum.Enum):
    COMPARISON = "comparison"
    PROJECTED = "projected"
    SYMMETRIZED = "symmetrized"


def _multiple(big: float, small: float, what: str) -> int:
    n = big / small
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise ValueError(f"{what} must be a positive integer multiple ({big} / {small} = {n})")
    return k


@dataclass(frozen=True)
class ScheduleParams:
    dt: float = 0.25
    projection_interval: float = 2.0
    total_time: float = 60.0
    renormalize: bool = True
    stepper: Stepper = Stepper.EXPM
    record_interval: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "stepper", Stepper(self.stepper))
        _multiple(self.projection_interval, self.dt, "projection_interval")
        _multiple(self.total_time, self.projection_interval, "total_time")
        if self.record_interval is not None:
            _multiple(self.record_interval, self.dt, "record_interval")

    @property
    def steps_per_projection(self) -> int:
        return _multiple(self.projection_interval, self.dt, "projection_interval")

    @property
    def n_steps(self) -> int:
        return _multiple(self.total_time, self.dt, "total_time")

    @property
    def steps_per_record(self) -> int:
        if self.record_interval is None:
            return 1
        return _multiple(self.record_interval, self.dt, "record_interval")


@dataclass(frozen=True)
class ProjectionEvent:
    """Normalized class weights just before and after one projection."""

    t: float
    removed: float
    p_s_pre: float
    p_f_pre: float
    p_v_pre: float
    p_s_post: float
    p_f_post: float
    norm2_pre: float


@dataclass
class Trajectory:
    """Sampled series of one run.

    ``p_s``, ``p_f``, ``p_v`` are class weights of the current vector (they
    sum to ``norm2``, which is 1 when renormalizing).  ``removed`` holds
    the removed weight fraction at projection samples and NaN elsewhere.
    """

    kind: RunKind
    seed: int
    times: np.ndarray
    p_s: np.ndarray
    p_f: np.ndarray
    p_v: np.ndarray
    energy: np.ndarray
    norm2: np.ndarray
    removed: np.ndarray
    events: list[ProjectionEvent] = field(default_factory=list)
    final_state: StateVector | None = None
    snapshots: dict = field(default_factory=dict, repr=False)

    def to_csv(self) -> str:
        lines = ["t,p_S,p_F,p_V,energy,removed_norm"]
        for i in range(len(self.times)):
            r = "" if np.isnan(self.removed[i]) else repr(float(self.removed[i]))
            vals = (self.times[i], self.p_s[i], self.p_f[i], self.p_v[i], self.energy[i])
            lines.append(",".join(repr(float(v)) for v in vals) + "," + r)
        return "\n".join(lines) + "\n"

    @property
    def removed_series(self) -> np.ndarray:
        return np.array([e.removed for e in self.events])

    @property
    def event_times(self) -> np.ndarray:
        return np.array([e.t for e in self.events])


@dataclass
class EnsembleResult:
    kind: RunKind
    seeds: list[int]
    times: np.ndarray
    p_s_mean: np.ndarray
    p_s_se: np.ndarray
    p_f_mean: np.ndarray
    p_f_se: np.ndarray
    p_v_mean: np.ndarray
    p_v_se: np.ndarray
    energy_mean: np.ndarray
    event_times: np.ndarray
    removed_mean: np.ndarray
    removed_se: np.ndarray
    trajectories: list[Trajectory] = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return len(self.seeds)

    def to_csv(self) -> str:
        cols = ["t", "p_S_mean", "p_S_se", "p_F_mean", "p_F_se", "p_V_mean", "p_V_se", "energy_mean", "removed_mean"]
        removed = np.full(len(self.times), np.nan)
        if len(self.event_times):
            idx = np.minimum(np.searchsorted(self.times, self.event_times - 1e-12), len(self.times) - 1)
            hit = np.abs(self.times[idx] - self.event_times) < 1e-9
            removed[idx[hit]] = self.removed_mean[hit]
        lines = [",".join(cols)]
        for i, t in enumerate(self.times):
            vals = [t, self.p_s_mean[i], self.p_s_se[i], self.p_f_mean[i], self.p_f_se[i],
                    self.p_v_mean[i], self.p_v_se[i], self.energy_mean[i]]
            row = ",".join(repr(float(v)) for v in vals)
            row += "," + ("" if np.isnan(removed[i]) else repr(float(removed[i])))
            lines.append(row)
        return "\n".join(lines) + "\n"


def step(psi: np.ndarray, generator: OperatorHandle, dt: float, stepper: Stepper = Stepper.EXPM) -> np.ndarray:
    """One step of length dt under a frozen generator; no normalization."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if isinstance(psi, StateVector):
        return StateVector(psi.space, psi.triode_count, step(psi.amplitudes, generator, dt, stepper))
    if Stepper(stepper) is Stepper.EULER:
        return psi - 1j * dt * generator.apply(psi)
    return generator.propagate(psi, dt)


def _seed_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    state_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(state_ss), np.random.default_rng(noise_ss)


def _check_cap(network: TriodeNetwork, cap: int) -> None:
    if network.triode_count > cap:
        raise CapExceeded("state-vector simulation (triodes)", network.triode_count, cap)


def run_trajectory(
    kind: RunKind,
    network: TriodeNetwork,
    hparams: HamiltonianParams,
    nparams: NoiseParams,
    schedule: ScheduleParams,
    seed: int,
    cap: int = DEFAULT_CAP,
    initial: StateVector | None = None,
    check_dt: bool = True,
    snapshot_times=(),
) -> Trajectory:
    kind = RunKind(kind)
    _check_cap(network, cap)
    if check_dt and schedule.dt > nparams.tau_c / 5 + 1e-12:
        raise ValueError(f"dt={schedule.dt} exceeds tau_c/5={nparams.tau_c / 5}; pass check_dt=False to override")
    T = network.triode_count
    state_rng, noise_rng = _seed_streams(seed)
    psi0 = initial if initial is not None else initial_state(network, rng=state_rng)
    space = Space.PHYSICAL if kind is RunKind.SYMMETRIZED else Space.COMPARISON
    if psi0.space is Space.PHYSICAL and space is Space.COMPARISON:
        psi0 = embed(psi0)
    if psi0.space is not space:
        raise ValueError(f"initial state must be PHYSICAL or {space.name}")
    psi = psi0.amplitudes.copy()

    h_w = wire_hamiltonian(network, hparams, space)
    energies = h_w.diagonal.real
    s_mask, f_mask, v_mask = class_masks(network, space)
    noise = NoiseProcess(T, nparams, noise_rng)

    n_steps = schedule.n_steps
    per_proj = schedule.steps_per_projection
    per_rec = schedule.steps_per_record
    n_rec = n_steps // per_rec + 1
    times = np.empty(n_rec)
    ps, pf, pv, en, n2s = (np.empty(n_rec) for _ in range(5))
    removed = np.full(n_rec, np.nan)
    events: list[ProjectionEvent] = []
    snap_steps = {int(round(ts / schedule.dt)): ts for ts in snapshot_times}
    snapshots: dict[float, StateVector] = {}
    if 0 in snap_steps:
        snapshots[snap_steps[0]] = StateVector(space, T, psi.copy())

    def record(j: int, t: float) -> None:
        w = np.abs(psi) ** 2
        n2 = float(w.sum())
        times[j] = t
        ps[j] = w[s_mask].sum()
        pf[j] = w[f_mask].sum()
        pv[j] = w[v_mask].sum()
        n2s[j] = n2
        en[j] = float(w @ energies) / n2 if n2 > 0 else 0.0

    record(0, 0.0)
    rec = 1
    for k in range(1, n_steps + 1):
        sample = noise.sample
        if kind is RunKind.SYMMETRIZED:
            h_r = actual_coupling(sample, hparams.g, Space.PHYSICAL)
        else:
            h_r = comparison_coupling(sample, hparams.g)
        gen = effective_generator(h_w, h_r, hparams)
        psi = step(psi, gen, schedule.dt, schedule.stepper)
        noise.advance(schedule.dt)
        t = k * schedule.dt
        delta = None
        if kind is RunKind.PROJECTED and k % per_proj == 0:
            w = np.abs(psi) ** 2
            n2 = float(w.sum())
            pre = (w[s_mask].sum() / n2, w[f_mask].sum() / n2, w[v_mask].sum() / n2)
            gone = project(psi, T)
            delta = gone / n2
            w = np.abs(psi) ** 2
            n2_post = float(w.sum())
            events.append(
                ProjectionEvent(
                    t=t,
                    removed=delta,
                    p_s_pre=pre[0],
                    p_f_pre=pre[1],
                    p_v_pre=pre[2],
                    p_s_post=w[s_mask].sum() / n2_post,
                    p_f_post=w[f_mask].sum() / n2_post,
                    norm2_pre=n2,
                )
            )
        if schedule.renormalize:
            nrm = np.linalg.norm(psi)
            if nrm == 0:
                raise FloatingPointError("state annihilated; nothing left to renormalize")
            psi /= nrm
        if k in snap_steps:
            snapshots[snap_steps[k]] = StateVector(space, T, psi.copy())
        if k % per_rec == 0:
            record(rec, t)
            if delta is not None:
                removed[rec] = delta
            rec += 1

    return Trajectory(
        kind=kind,
        seed=seed,
        times=times,
        p_s=ps,
        p_f=pf,
        p_v=pv,
        energy=en,
        norm2=n2s,
        removed=removed,
        events=events,
        final_state=StateVector(space, T, psi),
        snapshots=snapshots,
    )


def run_comparison(network, hparams, nparams, schedule, seed, **kw) -> Trajectory:
    """Comparison-network evolution; never projects."""
    return run_trajectory(RunKind.COMPARISON, network, hparams, nparams, schedule, seed, **kw)


def run_projected(network, hparams, nparams, schedule, seed, **kw) -> Trajectory:
    """Comparison evolution, projected onto the triplet space every interval."""
    return run_trajectory(RunKind.PROJECTED, network, hparams, nparams, schedule, seed, **kw)


def run_symmetrized(network, hparams, nparams, schedule, seed, **kw) -> Trajectory:
    """PHYSICAL-space evolution under pair-averaged fields."""
    return run_trajectory(RunKind.SYMMETRIZED, network, hparams, nparams, schedule, seed, **kw)


def field_path(
    triode_count: int, nparams: NoiseParams, schedule: ScheduleParams, seed: int
) -> list[FieldSample]:
    """The field samples a trajectory with this seed sees, one per inner step."""
    _, noise_rng = _seed_streams(seed)
    noise = NoiseProcess(triode_count, nparams, noise_rng)
    path = [noise.sample]
    for _ in range(schedule.n_steps):
        path.append(noise.advance(schedule.dt))
    return path


def fields_csv(path: list[FieldSample]) -> str:
    lines = ["t,tau,beta,Bx,By,Bz"]
    for s in path:
        for tau in range(s.triode_count):
            for beta in range(2):
                bx, by, bz = (repr(float(v)) for v in s.fields[tau, beta])
                lines.append(f"{float(s.t)!r},{tau},{beta + 1},{bx},{by},{bz}")
    return "\n".join(lines) + "\n"


def trajectory_seeds(base_seed: int, n: int) -> list[int]:
    return [base_seed + i for i in range(n)]


def _run_one(args):
    kind, network, hparams, nparams, schedule, seed, cap = args
    traj = run_trajectory(kind, network, hparams, nparams, schedule, seed, cap=cap)
    traj.final_state = None
    return traj


def _mean_se(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = stack.mean(axis=0)
    if stack.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])


def run_ensemble(
    kind: RunKind,
    n: int,
    base_seed: int,
    network: TriodeNetwork,
    hparams: HamiltonianParams,
    nparams: NoiseParams,
    schedule: ScheduleParams,
    cap: int = DEFAULT_CAP,
    workers: int | None = None,
    keep: bool = False,
) -> EnsembleResult:
    """``n`` trajectories with seeds base_seed + i, reduced in index order."""
    if n < 1:
        raise ValueError("ensemble size must be at least 1")
    kind = RunKind(kind)
    _check_cap(network, cap)
    seeds = trajectory_seeds(base_seed, n)
    jobs = [(kind, network, hparams, nparams, schedule, s, cap) for s in seeds]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(_run_one, jobs))
    else:
        trajs = [_run_one(j) for j in jobs]

    def stack(attr):
        return np.stack([getattr(t, attr) / t.norm2 for t in trajs])

    ps_m, ps_se = _mean_se(stack("p_s"))
    pf_m, pf_se = _mean_se(stack("p_f"))
    pv_m, pv_se = _mean_se(stack("p_v"))
    en_m = np.stack([t.energy for t in trajs]).mean(axis=0)
    if kind is RunKind.PROJECTED and trajs[0].events:
        rem = np.stack([t.removed_series for t in trajs])
        rem_m, rem_se = _mean_se(rem)
        ev_t = trajs[0].event_times
    else:
        rem_m = rem_se = ev_t = np.empty(0)
    return EnsembleResult(
        kind=kind,
        seeds=seeds,
        times=trajs[0].times.copy(),
        p_s_mean=ps_m,
        p_s_se=ps_se,
        p_f_mean=pf_m,
        p_f_se=pf_se,
        p_v_mean=pv_m,
        p_v_se=pv_se,
        energy_mean=en_m,
        event_times=ev_t,
        removed_mean=rem_m,
        removed_se=rem_se,
        trajectories=trajs if keep else [],
    )


def _require_frozen(generator) -> OperatorHandle:
    if not isinstance(generator, OperatorHandle):
        raise TypeError("a frozen (time-independent) OperatorHandle generator is required")
    if generator.space is not Space.COMPARISON:
        raise ValueError("generator must act on COMPARISON space")
    if not generator.hermitian:
        raise ValueError("the projection limit is checked for Hermitian generators only")
    return generator


def zeno_convergence_study(
    generator: OperatorHandle,
    dt_list,
    total_time: float,
    initial: StateVector,
    cap: int = 3,
) -> list[tuple[float, float]]:
    """Error between projected and directly symmetrized evolution for each interval.

    The projected run applies exp(-i G' dt) then zeroes the V amplitudes
    and renormalizes, total_time / dt times.  The reference evolves under
    P G' P on PHYSICAL space for total_time.
    """
    gen = _require_frozen(generator)
    T = gen.triode_count
    if T > cap:
        raise CapExceeded("Zeno convergence study (triodes)", T, cap)
    if initial.space is Space.PHYSICAL:
        initial = embed(initial)
    psi0 = initial.normalized().amplitudes

    sym = gen.symmetrized()
    from .statespace import _embed_index

    idx = _embed_index(T)
    phys0 = psi0[idx]
    ref = sym.propagate(phys0 / np.linalg.norm(phys0), total_time)
    ref /= np.linalg.norm(ref)
    ref_full = np.zeros_like(psi0)
    ref_full[idx] = ref

    out = []
    for dt in dt_list:
        n = _multiple(total_time, dt, "total_time / interval")
        psi = psi0.copy()
        project(psi, T)
        psi /= np.linalg.norm(psi)
        for _ in range(n):
            psi = gen.propagate(psi, dt)
            project(psi, T)
            psi /= np.linalg.norm(psi)
        out.append((float(dt), float(np.linalg.norm(psi - ref_full))))
    return out


def frozen_leak(generator: OperatorHandle, dt_list, total_time: float, initial: StateVector) -> list[tuple[float, float]]:
    """Mean removed weight per projection under a frozen generator, per interval."""
    gen = _require_frozen(generator)
    T = gen.triode_count
    if initial.space is Space.PHYSICAL:
        initial = embed(initial)
    out = []
    for dt in dt_list:
        n = _multiple(total_time, dt, "total_time / interval")
        psi = initial.normalized().amplitudes.copy()
        removed = []
        for _ in range(n):
            psi = gen.propagate(psi, dt)
            n2 = float(np.vdot(psi, psi).real)
            removed.append(project(psi, T) / n2)
            psi /= np.linalg.norm(psi)
        out.append((float(dt), float(np.mean(removed))))
    return out
