"""Built-in experiment parameter sets.

``motor``: a DC motor (armature R_a = 0.1, L_a = 0.01, k_a = 0.5) driving an
uncertain shaft (J_p = 0.5, B_p = 1) that tracks a unit sinusoid under a
constant load torque of 2.

``unstable``: a third-order minimum-phase plant with eight uncertain
parameters fed by unstable first-order actuators.
"""
import numpy as np

from .config import ExperimentConfig
from .errors import UnknownExample
from .models import ActuatorBank, Exosystem, Graph, UncertainMatrixAffine as U, UncertainPlant
from .regulator import GainSet

__all__ = ["EXAMPLES", "builtin", "motor_plant", "unstable_plant"]

EXAMPLES = ("exp1-single", "exp1-multi", "exp2-single", "exp2-multi")


def motor_plant(J_p=0.5, B_p=1.0, delta=0.3):
    """Shaft angle and rate as ``xi``; ``v = (theta_r, dtheta_r, T_L)``."""
    n_w = 3
    z = np.zeros((0, 0))
    return UncertainPlant(
        n=2, r=2,
        A1=U.constant(z, n_w), A2=U.constant(np.zeros((0, 1)), n_w),
        A3=U.constant(np.zeros((1, 0)), n_w), E0=U.constant(np.zeros((0, 3)), n_w),
        Er=U.from_terms([[0.0, 0.0, -1.0 / J_p]], n_w, {2: [[0, 0, 1]]}),
        F=U.constant([[1.0, 0.0, 0.0]], n_w),
        c=U.from_terms([[0.0, -B_p / J_p]], n_w, {0: [[0, 1]]}),
        b=U.from_terms([[1.0 / J_p]], n_w, {1: [[1]]}),
        W=np.tile([-delta, delta], (n_w, 1)),
    )


def unstable_plant(delta=0.5):
    n_w = 8
    return UncertainPlant(
        n=3, r=2,
        A1=U.from_terms([[-6.0]], n_w, {0: [[1]]}),
        A2=U.from_terms([[3.0]], n_w, {1: [[1]]}),
        A3=U.from_terms([[4.0]], n_w, {2: [[1]]}),
        E0=U.from_terms([[1.0, 0.0]], n_w, {6: [[1, 0]]}),
        Er=U.from_terms([[0.0, 1.0]], n_w, {7: [[0, 1]]}),
        F=U.constant([[1.0, 0.0]], n_w),
        c=U.from_terms([[-20.0, -9.0]], n_w, {3: [[1, 0]], 4: [[0, 1]]}),
        b=U.from_terms([[2.0]], n_w, {5: [[1]]}),
        W=np.tile([-delta, delta], (n_w, 1)),
    )


def _motor(multi):
    R_a, L_a, k_a = 0.1, 0.01, 0.5
    N = 5 if multi else 1
    M = np.array([[0.0, 1, 0], [0, 0, 1], [-8, -12, -6]])
    Nv = np.array([[0.0], [0], [1]])
    gains = GainSet((1.0,), 0.4, 6.0, 14.0, 1.0, 1.0) if multi else GainSet((1.0,), 2.0, 6.0, 14.0)
    return ExperimentConfig(
        name="exp1-multi" if multi else "exp1-single",
        plant=motor_plant(),
        exo=Exosystem([[0.0, 1, 0], [-1, 0, 0], [0, 0, 0]]),
        actuator=ActuatorBank(-R_a / L_a, k_a / L_a, N),
        graph=Graph.ring(N) if multi else None,
        M1=M, N1=Nv, M2=M, N2=Nv,
        deltas=(4.0, 4.0), gains=gains,
        # theta_r = sin t, load torque 2
        v0=(0.0, 1.0, 2.0),
    )


def _unstable(multi):
    N = 5 if multi else 1
    M = np.array([[0.0, 1], [-1, -2]])
    Nv = np.array([[0.0], [1]])
    gains = GainSet((1.0,), 0.4, 3.5, 5.5, 2.0, 3.0) if multi else GainSet((1.0,), 2.0, 3.0, 5.0)
    return ExperimentConfig(
        name="exp2-multi" if multi else "exp2-single",
        plant=unstable_plant(),
        exo=Exosystem([[0.0, 1], [-1, 0]]),
        actuator=ActuatorBank(1.0, 10.0, N),
        graph=Graph.ring(N) if multi else None,
        M1=M, N1=Nv, M2=M, N2=Nv,
        deltas=(4.0, 4.0), gains=gains,
        v0=(0.0, 1.0),
    )


def builtin(name):
    """Configuration of a named built-in experiment."""
    table = {
        "exp1-single": lambda: _motor(False),
        "exp1-multi": lambda: _motor(True),
        "exp2-single": lambda: _unstable(False),
        "exp2-multi": lambda: _unstable(True),
    }
    if name not in table:
        raise UnknownExample(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    return table[name]()
