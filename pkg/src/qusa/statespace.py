"""Hilbert spaces of proton-pair triodes.

Each triode is a pair of spin-1/2 protons.  We work in the pair frame
{|X>, |Y>, |Z>, |Sing>} rather than the product spin basis, so the qubit
observables and the wire Hamiltonian are diagonal.  A COMPARISON state has
4**T amplitudes (distinguishable protons); a PHYSICAL state keeps only the
triplet labels, 3**T amplitudes.  Basis index is mixed radix with triode 0
most significant.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .network import Axis, Label, TriodeNetwork, error_table, label_grid

__all__ = [
    "Space",
    "ClassTag",
    "StateVector",
    "PAULI",
    "PAIR_FRAME",
    "SIGNATURES",
    "qubit_observable",
    "exchange_operator",
    "pair_symmetrizer",
    "symmetrizer",
    "symmetrizer_matrix",
    "to_pair_frame",
    "total_spin_squared",
    "embed",
    "restrict",
    "project",
    "classify",
    "class_masks",
    "probabilities",
    "initial_state",
    "format_state",
    "label_string",
]

SQ2 = np.sqrt(0.5)

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
I2 = np.eye(2, dtype=complex)

# columns are |X>, |Y>, |Z>, |Sing> in the product basis (uu, ud, du, dd)
PAIR_FRAME = SQ2 * np.array(
    [
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 1, -1],
        [-1, 1, 0, 0],
    ],
    dtype=complex,
)

SIGNATURES = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=np.int8)


class Space(enum.Enum):
    PHYSICAL = 3
    COMPARISON = 4

    @property
    def radix(self) -> int:
        return self.value

    def dim(self, triode_count: int) -> int:
        return self.value**triode_count


class ClassTag(enum.Enum):
    S = "S"
    F = "F"
    V = "V"


@dataclass(frozen=True, eq=False)
class StateVector:
    space: Space
    triode_count: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.dim(self.triode_count),):
            raise ValueError(
                f"{self.space.name} state for T={self.triode_count} needs "
                f"{self.space.dim(self.triode_count)} amplitudes, got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("non-finite amplitudes")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0:
            raise ZeroDivisionError("cannot normalize the zero state")
        return StateVector(self.space, self.triode_count, self.amplitudes / n)

    @classmethod
    def basis(cls, space: Space, labels) -> "StateVector":
        labels = [int(l) for l in labels]
        radix = space.radix
        if any(l >= radix for l in labels):
            raise ValueError(f"label outside {space.name} space")
        idx = 0
        for l in labels:
            idx = idx * radix + l
        amps = np.zeros(space.dim(len(labels)), dtype=complex)
        amps[idx] = 1.0
        return cls(space, len(labels), amps)


# --- single pair operators, product spin basis -----------------------------

def qubit_observable(axis: Axis) -> np.ndarray:
    """(1 - sigma1_a sigma2_a) / 2 on one pair, product spin basis."""
    s = PAULI[int(Axis(axis))]
    return 0.5 * (np.eye(4) - np.kron(s, s))


def exchange_operator() -> np.ndarray:
    """Swap of the two proton factors."""
    X = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            X[2 * j + i, 2 * i + j] = 1.0
    return X


def pair_symmetrizer() -> np.ndarray:
    return 0.5 * (np.eye(4) + exchange_operator())


def total_spin_squared() -> np.ndarray:
    """s^2 with s = (sigma1 + sigma2) / 2."""
    s2 = np.zeros((4, 4), dtype=complex)
    for p in PAULI:
        s = 0.5 * (np.kron(p, I2) + np.kron(I2, p))
        s2 += s @ s
    return s2


def to_pair_frame(op: np.ndarray) -> np.ndarray:
    """Express a 4x4 product-basis operator in the pair frame."""
    return PAIR_FRAME.conj().T @ op @ PAIR_FRAME


@lru_cache(maxsize=None)
def _sing_free_mask(triode_count: int) -> np.ndarray:
    mask = np.all(label_grid(triode_count, 4) != Label.SING, axis=1)
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=None)
def _embed_index(triode_count: int) -> np.ndarray:
    """COMPARISON index of each PHYSICAL basis label."""
    labels = label_grid(triode_count, 3).astype(np.int64)
    powers = 4 ** np.arange(triode_count - 1, -1, -1)
    idx = labels @ powers if triode_count else np.zeros(1, dtype=np.int64)
    idx.setflags(write=False)
    return idx


def symmetrizer(state: StateVector) -> StateVector:
    """Apply P = (P12)^(x T); diagonal in the pair frame."""
    if state.space is not Space.COMPARISON:
        raise ValueError("symmetrizer acts on COMPARISON states")
    amps = np.where(_sing_free_mask(state.triode_count), state.amplitudes, 0)
    return StateVector(Space.COMPARISON, state.triode_count, amps)


def symmetrizer_matrix(triode_count: int) -> np.ndarray:
    """Explicit P in the pair-frame COMPARISON basis, built as a tensor power."""
    if triode_count > 3:
        raise ValueError("explicit symmetrizer limited to T <= 3")
    p = to_pair_frame(pair_symmetrizer())
    out = np.ones((1, 1), dtype=complex)
    for _ in range(triode_count):
        out = np.kron(out, p)
    return out


def embed(state: StateVector) -> StateVector:
    if state.space is not Space.PHYSICAL:
        raise ValueError("embed expects a PHYSICAL state")
    T = state.triode_count
    amps = np.zeros(4**T, dtype=complex)
    amps[_embed_index(T)] = state.amplitudes
    return StateVector(Space.COMPARISON, T, amps)


def restrict(state: StateVector) -> tuple[StateVector, float]:
    """Drop Sing-containing amplitudes; returns (PHYSICAL state, removed norm^2). No renormalization."""
    if state.space is not Space.COMPARISON:
        raise ValueError("restrict expects a COMPARISON state")
    T = state.triode_count
    kept = state.amplitudes[_embed_index(T)]
    removed = float(np.sum(np.abs(state.amplitudes) ** 2) - np.sum(np.abs(kept) ** 2))
    return StateVector(Space.PHYSICAL, T, kept.copy()), max(removed, 0.0)


def project(amplitudes: np.ndarray, triode_count: int) -> float:
    """In-place zeroing of V amplitudes of a raw COMPARISON vector; returns removed norm^2."""
    vmask = ~_sing_free_mask(triode_count)
    removed = float(np.vdot(amplitudes[vmask], amplitudes[vmask]).real)
    amplitudes[vmask] = 0
    return removed


def classify(labels, network: TriodeNetwork) -> ClassTag:
    labels = [Label(int(l)) for l in labels]
    if len(labels) != network.triode_count:
        raise ValueError("label vector length does not match network")
    if Label.SING in labels:
        return ClassTag.V
    eps = 0
    for w in network.wires:
        eps += SIGNATURES[labels[w.a.triode], w.a.axis] != SIGNATURES[labels[w.b.triode], w.b.axis]
    return ClassTag.S if eps == 0 else ClassTag.F


@lru_cache(maxsize=64)
def class_masks(network: TriodeNetwork, space: Space) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Boolean masks (S, F, V) over the basis of ``space``."""
    T = network.triode_count
    eps = error_table(network, space.radix)
    if space is Space.COMPARISON:
        v = ~_sing_free_mask(T)
    else:
        v = np.zeros(3**T, dtype=bool)
    s = (eps == 0) & ~v
    f = (eps > 0) & ~v
    for m in (s, f, v):
        m.setflags(write=False)
    return s, f, v


def probabilities(state: StateVector, network: TriodeNetwork) -> tuple[float, float, float]:
    """Unnormalized class weights (p_S, p_F, p_V); they sum to the squared norm."""
    if state.triode_count != network.triode_count:
        raise ValueError("state and network disagree on T")
    w = np.abs(state.amplitudes) ** 2
    s, f, v = class_masks(network, state.space)
    return float(w[s].sum()), float(w[f].sum()), float(w[v].sum())


def initial_state(network: TriodeNetwork, seed=None, rng: np.random.Generator | None = None) -> StateVector:
    """Uniform magnitudes over the PHYSICAL basis with independent random phases."""
    if rng is None:
        rng = np.random.default_rng(seed)
    T = network.triode_count
    dim = 3**T
    phases = rng.uniform(0.0, 2 * np.pi, size=dim)
    return StateVector(Space.PHYSICAL, T, np.exp(1j * phases) / np.sqrt(dim))


def label_string(index: int, space: Space, triode_count: int) -> str:
    radix = space.radix
    digits = []
    for _ in range(triode_count):
        index, r = divmod(index, radix)
        digits.append(str(Label(r)))
    return "".join(reversed(digits))


def format_state(state: StateVector, threshold: float = 1e-14) -> str:
    """One line per amplitude with modulus above ``threshold``: index label re im."""
    lines = []
    for i, a in enumerate(state.amplitudes):
        if abs(a) > threshold:
            lines.append(
                f"{i} {label_string(i, state.space, state.triode_count)} {a.real:.17g} {a.imag:.17g}"
            )
    return "\n".join(lines) + ("\n" if lines else "")
