"""Wire Hamiltonians, random-field heat-bath couplings and their symmetrization.

Operators are kept matrix-free as an :class:`OperatorHandle`: a diagonal in
the pair-frame basis plus one d x d block per triode (d = 4 on COMPARISON
space, 3 on PHYSICAL space).  Dense matrices are only built by the
verification helpers, for T <= 3.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import kernels
from .network import TRIPLES, TriodeNetwork, error_table, label_grid
from .statespace import PAULI, Space, StateVector, symmetrizer_matrix, to_pair_frame

__all__ = [
    "HamiltonianParams",
    "NoiseParams",
    "Polarization",
    "FieldSample",
    "NoiseProcess",
    "OperatorHandle",
    "site_pauli",
    "wire_energies",
    "wire_hamiltonian",
    "advance_noise",
    "comparison_coupling",
    "actual_coupling",
    "average_fields",
    "effective_generator",
    "verify_symmetrization",
    "dense",
    "EXPLICIT_CAP",
]

EXPLICIT_CAP = 3


@dataclass(frozen=True)
class HamiltonianParams:
    g: float = 2.0
    g_prime: float = 0.0
    trap_free: bool = False
    gamma: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("g must be positive")
        if self.g_prime < 0:
            raise ValueError("g_prime must be nonnegative")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


class Polarization(enum.Enum):
    ISOTROPIC = "ISOTROPIC"
    PRINCIPAL = "PRINCIPAL"


@dataclass(frozen=True)
class NoiseParams:
    """Ornstein-Uhlenbeck field noise with a programmed amplitude B0(t).

    ``schedule`` is ``constant``, ``linear`` (b0 -> floor*b0 at
    ``decay_time``, then held) or ``exponential`` (b0 * exp(-t/decay_time),
    never below floor*b0).  ``paired`` forces both sites of a triode to see
    the same field, the exchange-symmetric limit.
    """

    b0: float = 0.035
    tau_c: float = 8.0
    schedule: str = "exponential"
    decay_time: float = 400.0
    floor: float = 0.05
    polarization: Polarization = Polarization.ISOTROPIC
    paired: bool = False

    def __post_init__(self):
        if self.b0 < 0:
            raise ValueError("b0 must be nonnegative")
        if not self.tau_c > 0:
            raise ValueError("tau_c must be positive")
        if self.schedule not in ("constant", "linear", "exponential"):
            raise ValueError(f"unknown amplitude schedule {self.schedule!r}")
        if not 0 <= self.floor <= 1:
            raise ValueError("floor must lie in [0, 1]")
        object.__setattr__(self, "polarization", Polarization(self.polarization))

    def amplitude(self, t: float) -> float:
        if self.schedule == "constant" or math.isinf(self.decay_time):
            return self.b0
        lo = self.floor * self.b0
        if self.schedule == "linear":
            return max(lo, self.b0 + (lo - self.b0) * t / self.decay_time)
        return max(lo, self.b0 * math.exp(-t / self.decay_time))


@dataclass(frozen=True, eq=False)
class FieldSample:
    """Fields B[tau, beta, :] at every proton site, at time ``t``."""

    fields: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        f = np.asarray(self.fields, dtype=float)
        if f.ndim != 3 or f.shape[1:] != (2, 3):
            raise ValueError(f"fields must have shape (T, 2, 3), got {f.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("non-finite field component")
        f = f.copy()
        f.setflags(write=False)
        object.__setattr__(self, "fields", f)

    @property
    def triode_count(self) -> int:
        return self.fields.shape[0]


_PRINCIPAL = np.ones(3) / np.sqrt(3.0)


def _draw(rng: np.random.Generator, triode_count: int, params: NoiseParams) -> np.ndarray:
    if params.polarization is Polarization.PRINCIPAL:
        xi = rng.standard_normal((triode_count, 2, 1)) * _PRINCIPAL
    else:
        xi = rng.standard_normal((triode_count, 2, 3))
    if params.paired:
        xi[:, 1] = xi[:, 0]
    return xi


def advance_noise(sample: FieldSample, dt: float, params: NoiseParams, rng: np.random.Generator) -> FieldSample:
    """One exact OU update of every site field over ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    decay = math.exp(-dt / params.tau_c)
    t_new = sample.t + dt
    kick = params.amplitude(t_new) * math.sqrt(1.0 - decay * decay)
    xi = _draw(rng, sample.triode_count, params)
    return FieldSample(sample.fields * decay + kick * xi, t_new)


class NoiseProcess:
    """A single trajectory's field stream, started from the stationary law."""

    def __init__(self, triode_count: int, params: NoiseParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng
        self.sample = FieldSample(params.amplitude(0.0) * _draw(rng, triode_count, params), 0.0)

    def advance(self, dt: float) -> FieldSample:
        self.sample = advance_noise(self.sample, dt, self.params, self.rng)
        return self.sample


def _norm_bound(diag: np.ndarray, local: np.ndarray) -> float:
    b = float(np.abs(diag).max()) if len(diag) else 0.0
    if local.shape[0]:
        b += float(np.sqrt((np.abs(local) ** 2).sum(axis=(1, 2))).sum())
    return b


@dataclass(frozen=True, eq=False)
class OperatorHandle:
    """diag (over basis labels) + sum over triodes of a local d x d block."""

    space: Space
    triode_count: int
    diagonal: np.ndarray
    local: np.ndarray = field(default=None)
    hermitian: bool = True

    def __post_init__(self):
        dim = self.space.dim(self.triode_count)
        diag = np.ascontiguousarray(self.diagonal, dtype=complex)
        if diag.shape != (dim,):
            raise ValueError(f"diagonal must have length {dim}")
        d = self.space.radix
        loc = self.local
        if loc is None:
            loc = np.zeros((0, d, d), dtype=complex)
        loc = np.ascontiguousarray(loc, dtype=complex)
        if loc.shape[0] not in (0, self.triode_count) or loc.shape[1:] != (d, d):
            raise ValueError(f"local blocks must have shape (T, {d}, {d})")
        diag.setflags(write=False)
        loc.setflags(write=False)
        object.__setattr__(self, "diagonal", diag)
        object.__setattr__(self, "local", loc)

    @property
    def dim(self) -> int:
        return self.space.dim(self.triode_count)

    @property
    def is_diagonal(self) -> bool:
        return self.local.shape[0] == 0 or not np.any(self.local)

    def norm_bound(self) -> float:
        """Upper bound on the spectral norm."""
        return _norm_bound(self.diagonal, self.local)

    def apply(self, psi):
        if isinstance(psi, StateVector):
            if psi.space is not self.space or psi.triode_count != self.triode_count:
                raise ValueError("state does not live in the operator's space")
            return StateVector(self.space, self.triode_count, self.apply(psi.amplitudes))
        return kernels.apply_generator(np.ascontiguousarray(psi, dtype=complex), self.diagonal, self.local, self.triode_count)

    def propagate(self, psi: np.ndarray, dt: float) -> np.ndarray:
        """exp(-i G dt) psi."""
        # centring the real diagonal shrinks the Taylor norm bound; the
        # shift comes back as a global phase
        diag = self.diagonal
        shift = 0.0
        if self.dim:
            re = diag.real
            shift = 0.5 * (float(re.max()) + float(re.min()))
            if shift:
                diag = diag - shift
        out = kernels.propagate(
            np.ascontiguousarray(psi, dtype=complex),
            diag,
            self.local,
            self.triode_count,
            dt,
            _norm_bound(diag, self.local),
        )
        if shift:
            out *= np.exp(-1j * shift * dt)
        return out

    def __add__(self, other: "OperatorHandle") -> "OperatorHandle":
        if other.space is not self.space or other.triode_count != self.triode_count:
            raise ValueError("cannot add operators on different spaces")
        if self.local.shape[0] and other.local.shape[0]:
            loc = self.local + other.local
        else:
            loc = self.local if self.local.shape[0] else other.local
        return OperatorHandle(
            self.space, self.triode_count, self.diagonal + other.diagonal, loc, self.hermitian and other.hermitian
        )

    def symmetrized(self) -> "OperatorHandle":
        """P G P restricted to PHYSICAL space.

        P is diagonal in the pair frame and the local blocks act on single
        triodes, so the restriction keeps the triplet diagonal entries and
        the upper-left 3 x 3 of each block.
        """
        if self.space is not Space.COMPARISON:
            raise ValueError("symmetrized() expects a COMPARISON operator")
        from .statespace import _embed_index

        diag = self.diagonal[_embed_index(self.triode_count)]
        loc = self.local[:, :3, :3] if self.local.shape[0] else None
        return OperatorHandle(Space.PHYSICAL, self.triode_count, diag, loc, self.hermitian)


@lru_cache(maxsize=None)
def _site_pauli_cached() -> np.ndarray:
    out = np.empty((2, 3, 4, 4), dtype=complex)
    I2 = np.eye(2)
    for a in range(3):
        out[0, a] = to_pair_frame(np.kron(PAULI[a], I2))
        out[1, a] = to_pair_frame(np.kron(I2, PAULI[a]))
    # entries are exactly 0, +-1, +-i; drop rounding residue so that
    # exchange-symmetric fields leave the singlet block exactly decoupled
    out = np.round(out.real) + 1j * np.round(out.imag)
    out.setflags(write=False)
    return out


def site_pauli() -> np.ndarray:
    """sigma_a on proton beta of one pair in the pair frame, shape (2, 3, 4, 4)."""
    return _site_pauli_cached()


def wire_energies(network: TriodeNetwork, params: HamiltonianParams, space: Space) -> np.ndarray:
    """Diagonal of H_w over the pair-frame basis of ``space``."""
    eps = error_table(network, space.radix).astype(float)
    if not params.trap_free:
        return params.g * eps
    labels = label_grid(network.triode_count, space.radix)
    # sum over triodes and axes of (1 - q)^2
    weight = (3 - TRIPLES[labels].sum(axis=-1)).sum(axis=-1).astype(float)
    return params.g * eps + params.g_prime * eps * weight


def wire_hamiltonian(network: TriodeNetwork, params: HamiltonianParams, space: Space = Space.COMPARISON) -> OperatorHandle:
    return OperatorHandle(space, network.triode_count, wire_energies(network, params, space))


def average_fields(sample: FieldSample) -> FieldSample:
    avg = 0.5 * (sample.fields[:, 0] + sample.fields[:, 1])
    return FieldSample(np.stack([avg, avg], axis=1), sample.t)


def _coupling_blocks(fields: np.ndarray, g: float) -> np.ndarray:
    return g * np.einsum("tba,baij->tij", fields, site_pauli())


def comparison_coupling(sample: FieldSample, g: float = 1.0) -> OperatorHandle:
    """H_r' = g sum_{tau,beta} B(tau,beta) . sigma(tau,beta) on COMPARISON space."""
    T = sample.triode_count
    return OperatorHandle(Space.COMPARISON, T, np.zeros(4**T), _coupling_blocks(sample.fields, g))


def actual_coupling(
    sample: FieldSample, g: float = 1.0, space: Space = Space.COMPARISON, pairing: str = "average"
) -> OperatorHandle:
    """H_r with both sites of a triode driven by one shared field.

    ``pairing="average"`` uses the mean of the two comparison fields; the
    ``"first"`` option takes site 1's field only and exists as a negative
    control for the symmetrization check.
    """
    if pairing == "average":
        shared = average_fields(sample)
    elif pairing == "first":
        f = sample.fields[:, 0]
        shared = FieldSample(np.stack([f, f], axis=1), sample.t)
    else:
        raise ValueError(f"unknown pairing {pairing!r}")
    blocks = _coupling_blocks(shared.fields, g)
    T = sample.triode_count
    if space is Space.PHYSICAL:
        return OperatorHandle(Space.PHYSICAL, T, np.zeros(3**T), blocks[:, :3, :3].copy())
    return OperatorHandle(Space.COMPARISON, T, np.zeros(4**T), blocks)


def effective_generator(h_w: OperatorHandle, h_r: OperatorHandle | None, params: HamiltonianParams) -> OperatorHandle:
    """G = H_w + H_r - i gamma H_w."""
    if h_r is not None and (h_r.space is not h_w.space or h_r.triode_count != h_w.triode_count):
        raise ValueError("H_w and H_r live on different spaces")
    diag = h_w.diagonal * (1.0 - 1j * params.gamma)
    local = h_r.local if h_r is not None and h_r.local.shape[0] else None
    hermitian = params.gamma == 0 and h_w.hermitian and (h_r is None or h_r.hermitian)
    return OperatorHandle(h_w.space, h_w.triode_count, diag, local, hermitian)


def dense(op: OperatorHandle) -> np.ndarray:
    """Explicit matrix of an operator, T <= 3 only."""
    if op.triode_count > EXPLICIT_CAP:
        raise ValueError(f"explicit matrices limited to T <= {EXPLICIT_CAP}")
    d = op.space.radix
    T = op.triode_count
    m = np.diag(op.diagonal).astype(complex)
    for t in range(op.local.shape[0]):
        m = m + np.kron(np.kron(np.eye(d**t), op.local[t]), np.eye(d ** (T - t - 1)))
    return m


def verify_symmetrization(
    network: TriodeNetwork,
    sample: FieldSample,
    params: HamiltonianParams | None = None,
    pairing: str = "average",
) -> float:
    """max(||P H_w P - H_w P||, ||P H_r' P - H_r P||) with explicit matrices.

    P is built independently as a tensor power of (1 + X12)/2.
    """
    from .network import CapExceeded

    params = params or HamiltonianParams()
    T = network.triode_count
    if T > EXPLICIT_CAP:
        raise CapExceeded("explicit symmetrization check (triodes)", T, EXPLICIT_CAP)
    if sample.triode_count != T:
        raise ValueError("field sample does not match network")
    P = symmetrizer_matrix(T)
    hw = dense(wire_hamiltonian(network, params, Space.COMPARISON))
    hr_c = dense(comparison_coupling(sample, params.g))
    hr = dense(actual_coupling(sample, params.g, Space.COMPARISON, pairing=pairing))
    r_w = np.linalg.norm(P @ hw @ P - hw @ P, ord=2)
    r_r = np.linalg.norm(P @ hr_c @ P - hr @ P, ord=2)
    return float(max(r_w, r_r))


def with_gamma(params: HamiltonianParams, gamma: float) -> HamiltonianParams:
    return replace(params, gamma=gamma)
