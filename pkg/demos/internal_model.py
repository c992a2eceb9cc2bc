"""
Building an internal model
==========================

The exosystem here generates a unit sinusoid and a constant load. The
internal model pair (M, N) is a Hurwitz companion with a triple pole at -2,
and T solves T Phi - M T = N Psi, where (Phi, Psi) is the minimal
observable realization of the steady-state input.
"""
import numpy as np

from coopreg import linalg
from coopreg.models import Exosystem
from coopreg.regulator import build_internal_model

S = np.array([[0.0, 1, 0], [-1, 0, 0], [0, 0, 0]])
M = np.array([[0.0, 1, 0], [0, 0, 1], [-8, -12, -6]])
N = np.array([[0.0], [0], [1]])

im = build_internal_model(Exosystem(S), M, N, M, N)

np.set_printoptions(precision=4, suppress=True)
print("minimal polynomial of S has roots", np.round(linalg.eigenvalues(im.Phi), 6))
print("T1 =\n", im.T1)
residual = im.T1 @ im.Phi - M @ im.T1 - N @ im.Psi
print("Sylvester residual", np.abs(residual).max())

# Psi T1^-1 is the feedthrough from the internal-model state to the input
print("Psi T1^-1 =", im.psiT1inv.ravel())
print("check Psi T1^-1 T1 = Psi:", np.allclose(im.psiT1inv @ im.T1, im.Psi))

# the internal model is stable, but M + N Psi T1^-1 reproduces the exosystem modes
closed = M + N @ im.psiT1inv
print("eig(M + N Psi T1^-1) =", np.round(linalg.eigenvalues(closed), 6))
