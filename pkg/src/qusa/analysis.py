"""Post-processing of trajectories: take-off rates, gain ledger, scaling fits."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import (
    EnsembleResult,
    RunKind,
    ScheduleParams,
    Trajectory,
    frozen_leak,
    run_ensemble,
)

__all__ = [
    "TakeoffFit",
    "ScalingFit",
    "AmplificationLedger",
    "default_window",
    "estimate_takeoff",
    "amplification_ledger",
    "fit_power_law",
    "leak_scaling",
    "convergence_order",
    "fluctuation_diagnostic",
]


@dataclass(frozen=True)
class TakeoffFit:
    window: tuple[float, float]
    k_fit: float
    k_removed: float
    r_squared: float
    n: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


@dataclass(frozen=True)
class ScalingFit:
    """log y = exponent * log x + intercept."""

    x: tuple[float, ...]
    y: tuple[float, ...]
    exponent: float | None
    intercept: float | None
    stderr: float | None
    r_squared: float | None
    degenerate: bool = False
    ci95: tuple[float, float] | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "r_squared": self.r_squared,
            "degenerate": self.degenerate,
            "ci95": list(self.ci95) if self.ci95 else None,
            "points": [[a, b] for a, b in zip(self.x, self.y)],
            **{k: v for k, v in self.extra.items() if k != "ensembles"},
        }


def _series(source) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(times, p_S, p_F, event_times, removed) from a trajectory or ensemble."""
    if isinstance(source, EnsembleResult):
        return source.times, source.p_s_mean, source.p_f_mean, source.event_times, source.removed_mean
    if isinstance(source, Trajectory):
        n2 = source.norm2
        return source.times, source.p_s / n2, source.p_f / n2, source.event_times, source.removed_series
    raise TypeError("expected a Trajectory or EnsembleResult")


def default_window(times, p_s, p_f) -> tuple[float, float]:
    """Take-off window: p_S small but growing, p_F still dominant.

    Starts where p_S first doubles when it starts below 0.05, otherwise at
    the first sample.  Ends at the first sample with p_S >= 0.1 (when it
    started below 0.1), and never later than the last sample before p_F
    first drops under 0.5.
    """
    times = np.asarray(times)
    p_s = np.asarray(p_s)
    p_f = np.asarray(p_f)
    i_a = 0
    if p_s[0] < 0.05:
        hits = np.nonzero(p_s >= 2 * p_s[0])[0]
        i_a = int(hits[0]) if len(hits) else 0
    i_b = len(times) - 1
    if p_s[0] < 0.1:
        hits = np.nonzero(p_s[i_a:] >= 0.1)[0]
        if len(hits):
            i_b = i_a + int(hits[0])
    low = np.nonzero(p_f[i_a:] < 0.5)[0]
    if len(low):
        i_b = min(i_b, i_a + int(low[0]) - 1)
    if i_b <= i_a:
        raise ValueError("no take-off window: p_F falls below 0.5 immediately")
    return float(times[i_a]), float(times[i_b])


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """slope, intercept, slope stderr, r^2 by ordinary least squares."""
    n = len(x)
    A = np.vstack([x, np.ones(n)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res < 1e-30 else 0.0)
    sxx = float(((x - x.mean()) ** 2).sum())
    se = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 and sxx > 0 else 0.0
    return float(slope), float(intercept), se, min(max(r2, 0.0), 1.0)


def estimate_takeoff(source, window: tuple[float, float] | None = None) -> TakeoffFit:
    """Slope of log p_S over the window versus the removed-weight rate.

    ``k_removed`` sums the removed fractions of the projection events in
    (t_a, t_b] and divides by the window length; it is 0 when the source
    has no projection events.
    """
    times, p_s, p_f, ev_t, removed = _series(source)
    if window is None:
        window = default_window(times, p_s, p_f)
    t_a, t_b = window
    if not (times[0] - 1e-12 <= t_a < t_b <= times[-1] + 1e-12):
        raise ValueError(f"window {window} outside trajectory span [{times[0]}, {times[-1]}]")
    m = (times >= t_a - 1e-12) & (times <= t_b + 1e-12)
    if np.any(p_s[m] <= 0):
        raise ValueError("p_S must be positive throughout the window")
    k, _, _, r2 = _linfit(times[m], np.log(p_s[m]))
    if len(ev_t):
        em = (ev_t > t_a + 1e-12) & (ev_t <= t_b + 1e-12)
        k_rem = float(np.sum(removed[em])) / (t_b - t_a)
    else:
        k_rem = 0.0
    return TakeoffFit((float(t_a), float(t_b)), k, k_rem, r2, int(m.sum()))


@dataclass(frozen=True)
class AmplificationLedger:
    gain: float
    delta_log_ps: float
    drift: float
    residual: float
    events: int


def amplification_ledger(traj: Trajectory, window: tuple[float, float] | None = None) -> AmplificationLedger:
    """Split the change of log p_S into projection gain and between-event drift.

    gain = sum of -log(1 - delta_i) over events in (t_a, t_b]; the drift
    is accumulated piecewise from the event records (pre/post weights), so
    ``residual`` checks that sampled series and event records agree.
    """
    times = traj.times
    p_s = traj.p_s / traj.norm2
    if window is None:
        window = (float(times[0]), float(times[-1]))
    t_a, t_b = window
    i_a = int(np.argmin(np.abs(times - t_a)))
    i_b = int(np.argmin(np.abs(times - t_b)))
    if abs(times[i_a] - t_a) > 1e-9 or abs(times[i_b] - t_b) > 1e-9:
        raise ValueError("window ends must coincide with sample times")
    log_a = math.log(p_s[i_a])
    log_b = math.log(p_s[i_b])
    evs = [e for e in traj.events if t_a + 1e-12 < e.t <= t_b + 1e-12]
    gain = sum(-math.log1p(-e.removed) for e in evs)
    drift = 0.0
    level = log_a
    for e in evs:
        drift += math.log(e.p_s_pre) - level
        level = math.log(e.p_s_post)
    drift += log_b - level
    delta = log_b - log_a
    return AmplificationLedger(gain, delta, drift, delta - gain - drift, len(evs))


def fit_power_law(x, y, min_points: int = 3) -> ScalingFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < min_points:
        raise ValueError(f"need at least {min_points} points for a power-law fit, got {len(x)}")
    if np.any(x <= 0):
        raise ValueError("abscissae must be positive")
    if np.all(y == 0):
        return ScalingFit(tuple(x), tuple(y), None, None, None, None, degenerate=True)
    if np.any(y <= 0):
        raise ValueError("ordinates must be positive for a log-log fit")
    slope, icpt, se, r2 = _linfit(np.log(x), np.log(y))
    ci = (slope - 1.96 * se, slope + 1.96 * se)
    return ScalingFit(tuple(map(float, x)), tuple(map(float, y)), slope, icpt, se, r2, ci95=ci)


def convergence_order(study) -> ScalingFit:
    """Power-law order of error versus interval from ``zeno_convergence_study`` output."""
    pts = list(study)
    if len(pts) < 3:
        raise ValueError("convergence_order needs at least 3 points")
    dts, errs = zip(*pts)
    return fit_power_law(dts, errs)


def leak_scaling(
    network,
    hparams,
    nparams,
    schedule: ScheduleParams,
    intervals,
    n: int = 20,
    base_seed: int = 0,
    frozen=None,
    initial=None,
) -> ScalingFit:
    """Mean removed weight per projection versus projection interval.

    With ``frozen`` (a time-independent generator) the intervals are swept
    deterministically from ``initial``; otherwise each interval gets a
    projected ensemble of size ``n`` sharing ``schedule.dt`` and
    ``schedule.total_time``.
    """
    intervals = sorted((float(v) for v in intervals), reverse=True)
    if len(intervals) < 3:
        raise ValueError("leak_scaling needs at least 3 intervals")
    if intervals[0] / intervals[-1] < 4 - 1e-9:
        raise ValueError("intervals must span at least a factor of 4")
    if frozen is not None:
        pts = frozen_leak(frozen, intervals, schedule.total_time, initial)
        fit = fit_power_law([p[0] for p in pts], [p[1] for p in pts])
        return fit
    means, spreads, per_point = [], [], []
    for dt_proj in intervals:
        sch = ScheduleParams(
            dt=schedule.dt,
            projection_interval=dt_proj,
            total_time=schedule.total_time,
            renormalize=schedule.renormalize,
            stepper=schedule.stepper,
            record_interval=dt_proj,
        )
        ens = run_ensemble(RunKind.PROJECTED, n, base_seed, network, hparams, nparams, sch)
        means.append(float(ens.removed_mean.mean()))
        spreads.append(float(np.sqrt(np.mean(ens.removed_se**2))))
        per_point.append(ens)
    fit = fit_power_law(intervals, means)
    fit.extra["removed_se"] = spreads
    fit.extra["ensembles"] = per_point
    return fit


def fluctuation_diagnostic(traj: Trajectory, tolerance: float = 0.05) -> dict:
    """Aligned (t, <H_w>, log p_S) series plus equal-energy pair differences.

    For every pair of samples i < h whose energies agree within
    ``tolerance``, reports log p_S(t_h) - log p_S(t_i) minus the projection
    gain booked in between.  Diagnostic only.
    """
    times = traj.times
    p_s = traj.p_s / traj.norm2
    with np.errstate(divide="ignore"):
        logp = np.log(p_s)
    energy = traj.energy
    ev_t = traj.event_times
    gains = np.array([-math.log1p(-e.removed) for e in traj.events])
    cum = np.concatenate([[0.0], np.cumsum(gains)])

    def booked(t0, t1):
        lo = np.searchsorted(ev_t, t0 + 1e-12, side="right") if len(ev_t) else 0
        hi = np.searchsorted(ev_t, t1 + 1e-12, side="right") if len(ev_t) else 0
        return float(cum[hi] - cum[lo])

    pairs = []
    for i in range(len(times)):
        close = np.nonzero(np.abs(energy[i + 1 :] - energy[i]) <= tolerance)[0] + i + 1
        for h in close:
            net = float(logp[h] - logp[i]) - booked(times[i], times[h])
            pairs.append((float(times[i]), float(times[h]), net))
    return {"t": times.copy(), "energy": energy.copy(), "log_p_s": logp, "pairs": pairs}
