"""Robust output regulation with one or several cooperating actuators.

Submodules: :mod:`linalg` (dense linear algebra kernels), :mod:`models`
(plant, exosystem, actuators, graph), :mod:`regulator` (synthesis and the
control law), :mod:`analysis` (closed-loop assembly and certification),
:mod:`sim` (RK4 simulation and metrics), :mod:`config`/:mod:`experiments`
(configurations) and :mod:`cli`.
"""
from .analysis import certify
from .experiments import builtin
from .models import ActuatorBank, Exosystem, Graph, UncertainMatrixAffine, UncertainPlant
from .regulator import GainSet, build_internal_model, build_observer
from .sim import ClosedLoopSystem, metrics, simulate

__version__ = "0.1.0"
