"""qusa: projected state-vector annealing of triode/EQU Boolean networks."""
from .network import (
    Assignment,
    Axis,
    Label,
    Model,
    QubitRef,
    TriodeNetwork,
    Wire,
    enumerate_solutions,
    toy_network,
    total_error,
)
from .statespace import ClassTag, Space, StateVector

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "Axis",
    "ClassTag",
    "Label",
    "Model",
    "QubitRef",
    "Space",
    "StateVector",
    "TriodeNetwork",
    "Wire",
    "enumerate_solutions",
    "toy_network",
    "total_error",
]
