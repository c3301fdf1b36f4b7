"""Boolean-level model of triode / EQU networks.

A network has ``T`` triodes, each carrying three qubits indexed by an
:class:`Axis`, and ``W`` wires asserting equality between two qubits.
An :class:`Assignment` picks one :class:`Label` per triode; the label fixes
the triode's qubit triple.  TRIODE-model assignments use only X, Y, Z
(exactly one qubit set); EQU-model assignments may also use SING, the
all-ones triple.
"""
from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Axis",
    "Label",
    "Model",
    "QubitRef",
    "Wire",
    "TriodeNetwork",
    "Assignment",
    "GadgetSpec",
    "ExactCoverInstance",
    "NetworkError",
    "ParseError",
    "CapExceeded",
    "TRIPLES",
    "DEFAULT_CAPS",
    "qubit_value",
    "wire_error",
    "total_error",
    "error_table",
    "enumerate_solutions",
    "encode_exact_cover",
    "build_not_gadget",
    "build_nor_gadget",
    "verify_gadget",
    "parse_network",
    "format_network",
    "parse_exact_cover",
    "load_network",
    "toy_network",
]


class NetworkError(ValueError):
    """Invalid network, assignment or instance."""


class ParseError(NetworkError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)


class CapExceeded(RuntimeError):
    """Raised instead of silently truncating an exhaustive computation."""

    def __init__(self, what: str, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"{what}: size {size} exceeds cap {cap}; raise the cap to at least {size}")


class Axis(enum.IntEnum):
    X = 0
    Y = 1
    Z = 2

    @classmethod
    def parse(cls, text: str) -> "Axis":
        try:
            return cls[text.upper()]
        except KeyError:
            raise NetworkError(f"unknown axis {text!r}") from None


class Label(enum.IntEnum):
    X = 0
    Y = 1
    Z = 2
    SING = 3

    def __str__(self) -> str:
        return "Sing" if self is Label.SING else self.name


class Model(enum.Enum):
    TRIODE = "TRIODE"
    EQU = "EQU"

    @property
    def labels(self) -> tuple[Label, ...]:
        if self is Model.TRIODE:
            return (Label.X, Label.Y, Label.Z)
        return (Label.X, Label.Y, Label.Z, Label.SING)

    @classmethod
    def parse(cls, text: str) -> "Model":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise NetworkError(f"unknown model {text!r}") from None


# row = label, column = axis
TRIPLES = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=np.int8)
TRIPLES.setflags(write=False)

DEFAULT_CAPS = {Model.TRIODE: 12, Model.EQU: 10}


@dataclass(frozen=True, order=True)
class QubitRef:
    triode: int
    axis: Axis

    def __post_init__(self):
        if self.triode < 0:
            raise NetworkError(f"negative triode index {self.triode}")
        object.__setattr__(self, "axis", Axis(self.axis))

    def __str__(self) -> str:
        return f"{self.triode}.{self.axis.name.lower()}"

    @classmethod
    def parse(cls, text: str) -> "QubitRef":
        m = re.fullmatch(r"(\d+)\.([xyzXYZ])", text)
        if m is None:
            raise NetworkError(f"bad qubit reference {text!r}, expected <triode>.<x|y|z>")
        return cls(int(m.group(1)), Axis.parse(m.group(2)))


@dataclass(frozen=True, order=True)
class Wire:
    """Unordered equality constraint; stored with the smaller endpoint first."""

    a: QubitRef
    b: QubitRef

    def __post_init__(self):
        if self.a == self.b:
            raise NetworkError(f"wire joins {self.a} to itself")
        if self.b < self.a:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    def __str__(self) -> str:
        return f"wire {self.a} {self.b}"


@dataclass(frozen=True)
class TriodeNetwork:
    triode_count: int
    wires: tuple[Wire, ...] = ()

    def __post_init__(self):
        if self.triode_count < 0:
            raise NetworkError("triode count must be nonnegative")
        wires = tuple(self.wires)
        seen = set()
        for w in wires:
            for ref in (w.a, w.b):
                if ref.triode >= self.triode_count:
                    raise NetworkError(f"{ref} out of bounds for T={self.triode_count}")
            if w in seen:
                raise NetworkError(f"duplicate {w}")
            seen.add(w)
        object.__setattr__(self, "wires", wires)

    @property
    def qubit_count(self) -> int:
        return 3 * self.triode_count

    @property
    def wire_count(self) -> int:
        return len(self.wires)

    def wire_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(triode_a, axis_a, triode_b, axis_b) as int arrays of length W."""
        ta = np.array([w.a.triode for w in self.wires], dtype=np.intp)
        aa = np.array([int(w.a.axis) for w in self.wires], dtype=np.intp)
        tb = np.array([w.b.triode for w in self.wires], dtype=np.intp)
        ab = np.array([int(w.b.axis) for w in self.wires], dtype=np.intp)
        return ta, aa, tb, ab


@dataclass(frozen=True)
class Assignment:
    labels: tuple[Label, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(Label(l) for l in self.labels))

    def __len__(self) -> int:
        return len(self.labels)

    def __str__(self) -> str:
        return "".join(str(l) for l in self.labels)

    @property
    def is_triode(self) -> bool:
        return Label.SING not in self.labels

    def triples(self) -> np.ndarray:
        return TRIPLES[np.array([int(l) for l in self.labels], dtype=np.intp)].reshape(-1, 3)

    @classmethod
    def parse(cls, text: str) -> "Assignment":
        labels = []
        for tok in re.findall(r"Sing|[XYZ]|.", text):
            if tok == "Sing":
                labels.append(Label.SING)
            elif tok in "XYZ":
                labels.append(Label[tok])
            else:
                raise NetworkError(f"bad label character {tok!r} in {text!r}")
        return cls(tuple(labels))


@dataclass(frozen=True)
class GadgetSpec:
    network: TriodeNetwork
    input_refs: tuple[QubitRef, ...]
    output_refs: tuple[QubitRef, ...]

    def __post_init__(self):
        refs = tuple(self.input_refs) + tuple(self.output_refs)
        if len(set(refs)) != len(refs):
            raise NetworkError("gadget input/output refs must be distinct")
        for r in refs:
            if r.triode >= self.network.triode_count:
                raise NetworkError(f"gadget ref {r} out of bounds")
        object.__setattr__(self, "input_refs", tuple(self.input_refs))
        object.__setattr__(self, "output_refs", tuple(self.output_refs))


@dataclass(frozen=True)
class ExactCoverInstance:
    """Clauses x_i + x_j + x_k = 1 (arithmetic) over binary variables."""

    variable_count: int
    clauses: tuple[tuple[int, int, int], ...] = field(default=())

    def __post_init__(self):
        clauses = tuple(tuple(int(v) for v in c) for c in self.clauses)
        for c in clauses:
            if len(c) != 3:
                raise NetworkError(f"clause {c} must have three variables")
            if len(set(c)) != 3:
                raise NetworkError(f"clause {c} repeats a variable")
            for v in c:
                if not 0 <= v < self.variable_count:
                    raise NetworkError(f"variable {v} out of range for n={self.variable_count}")
        object.__setattr__(self, "clauses", clauses)

    def is_satisfied(self, bits: Sequence[int]) -> bool:
        return all(bits[i] + bits[j] + bits[k] == 1 for i, j, k in self.clauses)


def _check_ref(ref: QubitRef, triode_count: int) -> None:
    if not 0 <= ref.triode < triode_count:
        raise NetworkError(f"{ref} out of bounds for T={triode_count}")


def qubit_value(assignment: Assignment, ref: QubitRef) -> int:
    _check_ref(ref, len(assignment))
    return int(TRIPLES[assignment.labels[ref.triode], ref.axis])


def wire_error(assignment: Assignment, wire: Wire) -> int:
    return (qubit_value(assignment, wire.a) - qubit_value(assignment, wire.b)) ** 2


def total_error(assignment: Assignment, network: TriodeNetwork) -> int:
    """Number of frustrated wires."""
    if len(assignment) != network.triode_count:
        raise NetworkError(
            f"assignment has {len(assignment)} labels, network has {network.triode_count} triodes"
        )
    return sum(wire_error(assignment, w) for w in network.wires)


def label_grid(triode_count: int, radix: int) -> np.ndarray:
    """All mixed-radix label vectors, triode 0 most significant, shape (radix**T, T)."""
    if triode_count == 0:
        return np.zeros((1, 0), dtype=np.int8)
    idx = np.arange(radix**triode_count)
    powers = radix ** np.arange(triode_count - 1, -1, -1)
    return ((idx[:, None] // powers[None, :]) % radix).astype(np.int8)


def error_table(network: TriodeNetwork, radix: int) -> np.ndarray:
    """Wire error of every basis label (radix 3: PHYSICAL, radix 4: COMPARISON)."""
    labels = label_grid(network.triode_count, radix)
    eps = np.zeros(labels.shape[0], dtype=np.int64)
    for w in network.wires:
        qa = TRIPLES[labels[:, w.a.triode], w.a.axis]
        qb = TRIPLES[labels[:, w.b.triode], w.b.axis]
        eps += qa != qb
    return eps


def enumerate_solutions(
    network: TriodeNetwork, model: Model = Model.TRIODE, cap: int | None = None
) -> list[Assignment]:
    """All zero-error assignments over the model's labels, lexicographic order."""
    model = Model(model)
    cap = DEFAULT_CAPS[model] if cap is None else cap
    if network.triode_count > cap:
        raise CapExceeded(f"{model.value} enumeration (triodes)", network.triode_count, cap)
    radix = len(model.labels)
    eps = error_table(network, radix)
    labels = label_grid(network.triode_count, radix)
    return [Assignment(tuple(row)) for row in labels[eps == 0]]


def encode_exact_cover(instance: ExactCoverInstance) -> tuple[TriodeNetwork, dict[int, QubitRef]]:
    """One triode per clause; each variable's occurrences chained by equality wires.

    Clause slot k goes to axis k.  Returns the network and a map from each
    variable that occurs at least once to its first occurrence.
    """
    occurrences: dict[int, list[QubitRef]] = {}
    for t, clause in enumerate(instance.clauses):
        if len(set(clause)) != 3:
            raise NetworkError(f"clause {clause} repeats a variable")
        for axis, var in zip(Axis, clause):
            occurrences.setdefault(var, []).append(QubitRef(t, axis))
    wires = []
    for var in sorted(occurrences):
        refs = occurrences[var]
        wires.extend(Wire(a, b) for a, b in zip(refs, refs[1:]))
    net = TriodeNetwork(len(instance.clauses), tuple(wires))
    return net, {v: refs[0] for v, refs in sorted(occurrences.items())}


def build_not_gadget() -> GadgetSpec:
    # triode 0 holds (a, b, c); triode 1 has x=y forced to 0 and its x tied to c
    r = QubitRef
    wires = (
        Wire(r(1, Axis.X), r(1, Axis.Y)),
        Wire(r(1, Axis.X), r(0, Axis.Z)),
    )
    return GadgetSpec(TriodeNetwork(2, wires), (r(0, Axis.X),), (r(0, Axis.Y),))


def build_nor_gadget() -> GadgetSpec:
    """NOR(a, b) on three triodes; wiring found by exhaustive search over <=3 wires."""
    r = QubitRef
    wires = (
        Wire(r(0, Axis.X), r(1, Axis.X)),
        Wire(r(0, Axis.Y), r(2, Axis.X)),
        Wire(r(1, Axis.Y), r(2, Axis.Y)),
    )
    return GadgetSpec(
        TriodeNetwork(3, wires),
        (r(0, Axis.Z), r(1, Axis.Z)),
        (r(0, Axis.X),),
    )


def verify_gadget(gadget: GadgetSpec, table: Iterable[Sequence[int]], cap: int | None = None) -> bool:
    """True iff the projected TRIODE solution set equals ``table`` exactly."""
    refs = gadget.input_refs + gadget.output_refs
    table = {tuple(int(b) for b in row) for row in table}
    for row in table:
        if len(row) != len(refs):
            raise NetworkError(f"table row {row} has arity {len(row)}, expected {len(refs)}")
    sols = enumerate_solutions(gadget.network, Model.TRIODE, cap=cap)
    projected = {tuple(qubit_value(s, ref) for ref in refs) for s in sols}
    return projected == table


def toy_network() -> TriodeNetwork:
    """Two triodes joined axis-to-axis by three wires."""
    return TriodeNetwork(2, tuple(Wire(QubitRef(0, a), QubitRef(1, a)) for a in Axis))


# --- text formats -----------------------------------------------------------

def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_network(text: str) -> TriodeNetwork:
    triodes = None
    wires: list[Wire] = []
    seen: set[Wire] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        parts = line.split()
        if triodes is None:
            if len(parts) != 2 or parts[0] != "triodes" or not parts[1].isdigit():
                raise ParseError("expected 'triodes <T>'", lineno)
            triodes = int(parts[1])
            continue
        if parts[0] != "wire" or len(parts) != 3:
            raise ParseError(f"expected 'wire <t>.<axis> <t>.<axis>', got {line!r}", lineno)
        try:
            a, b = QubitRef.parse(parts[1]), QubitRef.parse(parts[2])
            _check_ref(a, triodes)
            _check_ref(b, triodes)
            w = Wire(a, b)
        except NetworkError as exc:
            raise ParseError(str(exc), lineno) from None
        if w in seen:
            raise ParseError(f"duplicate {w}", lineno)
        seen.add(w)
        wires.append(w)
    if triodes is None:
        raise ParseError("missing 'triodes <T>' header")
    return TriodeNetwork(triodes, tuple(wires))


def format_network(network: TriodeNetwork) -> str:
    lines = [f"triodes {network.triode_count}"]
    lines += [str(w) for w in network.wires]
    return "\n".join(lines) + "\n"


def parse_exact_cover(text: str) -> ExactCoverInstance:
    n = None
    clauses = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "vars" or not parts[1].isdigit():
                raise ParseError("expected 'vars <n>'", lineno)
            n = int(parts[1])
            continue
        if parts[0] != "clause" or len(parts) != 4 or not all(p.isdigit() for p in parts[1:]):
            raise ParseError(f"expected 'clause <i> <j> <k>', got {line!r}", lineno)
        clause = tuple(int(p) for p in parts[1:])
        if len(set(clause)) != 3:
            raise ParseError(f"clause {clause} repeats a variable", lineno)
        if any(v >= n for v in clause):
            raise ParseError(f"clause {clause} references variable >= {n}", lineno)
        clauses.append(clause)
    if n is None:
        raise ParseError("missing 'vars <n>' header")
    return ExactCoverInstance(n, tuple(clauses))


def load_network(text: str) -> TriodeNetwork:
    """Parse either format, dispatching on the first significant token."""
    for raw in text.splitlines():
        line = _strip(raw)
        if line:
            if line.split()[0] == "vars":
                return encode_exact_cover(parse_exact_cover(text))[0]
            break
    return parse_network(text)


def brute_force_exact_cover(instance: ExactCoverInstance) -> list[tuple[int, ...]]:
    """Satisfying bit vectors by direct enumeration over 2**n."""
    return [
        bits
        for bits in itertools.product((0, 1), repeat=instance.variable_count)
        if instance.is_satisfied(bits)
    ]
