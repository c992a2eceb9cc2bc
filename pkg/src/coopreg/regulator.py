"""Controller synthesis and the runtime controller dynamics.

Covers the regulator equations, the two-observer internal model, the
high-gain error observer, gain bookkeeping and the (distributed) dynamic
output feedback law. The single-actuator law is the ``N = 1`` case of the
distributed one.
"""
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    DimensionMismatch,
    IllConditioned,
    NotControllable,
    NotHurwitz,
    UnstableObserverPolynomial,
)
from .models import realize_plant

__all__ = [
    "SteadyState",
    "InternalModel",
    "ObserverSpec",
    "GainSet",
    "ControllerState",
    "solve_regulator_equations",
    "steady_state_generators",
    "build_internal_model",
    "build_observer",
    "observer_matrices",
    "gains_from_single",
    "controller_derivatives",
]


@dataclass(frozen=True)
class SteadyState:
    """Steady-state maps: ``z = Z v``, ``xi = Pi v``, ``x = Xi v``, ``u = U v``."""

    Z: np.ndarray
    Pi: np.ndarray
    Xi: np.ndarray
    U: np.ndarray
    w: np.ndarray


def solve_regulator_equations(plant, exo, actuator, w):
    """Solve the regulator equations of ``plant`` at the uncertainty value ``w``.

    ``Z`` solves ``Z S = A1 Z + A2 F + E0``; ``Pi`` stacks ``F S^(s-1)``;
    ``Xi`` is the steady-state plant input and ``U`` the steady-state
    actuator command of a single actuator.
    """
    p = realize_plant(plant, w)
    S = exo.S
    Z = linalg.solve_sylvester(p.A1, S, p.A2 @ p.F + p.E0)
    FS = [p.F]
    for _ in range(p.r):
        FS.append(FS[-1] @ S)
    Pi = np.vstack(FS[:p.r])
    rhs = FS[p.r] - p.A3 @ Z - p.Er
    for s in range(p.r):
        rhs = rhs - p.c[s] * FS[s]
    Xi = rhs / p.b
    U = (Xi @ S - actuator.a * Xi) / actuator.b_a
    return SteadyState(Z=Z, Pi=Pi, Xi=Xi, U=U, w=np.asarray(w, dtype=float).ravel())


@dataclass(frozen=True)
class InternalModel:
    M1: np.ndarray
    N1: np.ndarray
    M2: np.ndarray
    N2: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    psiT1inv: np.ndarray
    psiT2inv: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray

    @property
    def l(self):
        return self.Phi.shape[0]


def _im_pair(Phi, Psi, M, N, name, tol, spectra):
    l = Phi.shape[0]
    M = np.atleast_2d(np.asarray(M, dtype=float))
    N = np.asarray(N, dtype=float).reshape(-1, 1)
    if M.shape != (l, l) or N.shape != (l, 1):
        raise DimensionMismatch(f"{name}: expected M {l}x{l} and N {l}x1, got {M.shape} and {N.shape}")
    eig_m = spectra.get(M.tobytes())
    if eig_m is None:
        eig_m = spectra[M.tobytes()] = linalg.eigenvalues(M, tol)
    if not np.max(eig_m.real) < 0:
        raise NotHurwitz(f"{name}: M is not Hurwitz")
    if linalg.controllability_rank(M, N) < l:
        raise NotControllable(f"{name}: (M, N) is not controllable")
    T = linalg.solve_sylvester(M, Phi, N @ Psi, tol, spectra=(eig_m, spectra["Phi"]))
    cond = np.linalg.cond(T)
    if not cond < tol.condition:
        raise IllConditioned(f"{name}: cond(T) = {cond:.3e}")
    psiTinv = np.linalg.solve(T.T, Psi.T).T
    return M, N, T, psiTinv


def build_internal_model(exo, M1, N1, M2, N2, tol=linalg.DEFAULT_TOL):
    """Solve ``T_i Phi - M_i T_i = N_i Psi`` and package the internal model."""
    Phi, Psi = exo.companion()
    # each distinct spectrum is computed once (M1 and M2 often coincide)
    spectra = {"Phi": linalg.eigenvalues(Phi, tol)}
    M1, N1, T1, p1 = _im_pair(Phi, Psi, M1, N1, "pair 1", tol, spectra)
    if np.array_equal(M1, M2) and np.array_equal(N1, np.reshape(N2, (-1, 1))):
        M2, N2, T2, p2 = M1.copy(), N1.copy(), T1.copy(), p1.copy()
    else:
        M2, N2, T2, p2 = _im_pair(Phi, Psi, M2, N2, "pair 2", tol, spectra)
    return InternalModel(M1=M1, N1=N1, M2=M2, N2=N2, T1=T1, T2=T2,
                         psiT1inv=p1, psiT2inv=p2, Phi=Phi, Psi=Psi)


def steady_state_generators(ss, im, exo, v):
    """States ``Theta_1``, ``Theta_2`` of the steady-state generators at ``v``."""
    v = np.asarray(v, dtype=float).ravel()
    l = im.l

    def stack(row):
        rows = [row]
        for _ in range(l - 1):
            rows.append(rows[-1] @ exo.S)
        return np.vstack(rows)

    return im.T1 @ stack(ss.Xi) @ v, im.T2 @ stack(ss.U) @ v


def observer_matrices(deltas, h):
    """``A0(h)``, ``B0(h)`` with first column ``-h^s delta_{r-s}``."""
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    r = deltas.size
    col = np.array([h ** s * deltas[r - s] for s in range(1, r + 1)])
    A0 = np.eye(r, k=1)
    A0[:, 0] = -col
    return A0, col.reshape(r, 1)


@dataclass(frozen=True)
class ObserverSpec:
    deltas: np.ndarray
    h: float
    A0: np.ndarray
    B0: np.ndarray

    @property
    def r(self):
        return self.deltas.size


def build_observer(deltas, h, r=None):
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    if r is not None and deltas.size != r:
        raise DimensionMismatch(f"need {r} observer coefficients, got {deltas.size}")
    if not linalg.poly_is_hurwitz(deltas):
        raise UnstableObserverPolynomial(f"g(lambda) with coefficients {deltas.tolist()} is not Hurwitz")
    if not h > 0:
        raise ValueError("observer gain h must be positive")
    A0, B0 = observer_matrices(deltas, h)
    return ObserverSpec(deltas=deltas, h=float(h), A0=A0, B0=B0)


@dataclass(frozen=True)
class GainSet:
    """Gains of one controller.

    For the distributed law the fields hold the per-agent gains
    (``k1`` is the barred gain that scales with the number of actuators).
    ``gammas`` are ``gamma_0 .. gamma_{r-2}`` (empty for relative degree 1).
    """

    gammas: tuple
    k1: float
    k2: float
    h: float
    sigma1: float = 0.0
    sigma2: float = 0.0

    def __post_init__(self):
        gammas = tuple(float(g) for g in np.atleast_1d(np.asarray(self.gammas, dtype=float)))
        object.__setattr__(self, "gammas", gammas)
        if gammas and not linalg.poly_is_hurwitz(gammas):
            raise ValueError(f"f(lambda) with coefficients {list(gammas)} is not Hurwitz")

    @property
    def r(self):
        return len(self.gammas) + 1

    @property
    def Gamma1(self):
        """Row ``[gamma_0, ..., gamma_{r-2}, 1]``."""
        return np.array([*self.gammas, 1.0]).reshape(1, -1)

    def check_positive(self):
        for name in ("k1", "k2", "h"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gain {name} must be positive")
        if min(self.sigma1, self.sigma2) < 0:
            raise ValueError("coupling gains must be nonnegative")
        return self

    def single_equivalent(self, N):
        """Single-actuator gains reproduced by the sum dynamics of N agents."""
        return GainSet(self.gammas, N * self.k1, self.k2, self.h)

    def distributed(self, N, sigma1, sigma2):
        k1, k2, h = gains_from_single(self.k1, self.k2, self.h, N)
        return GainSet(self.gammas, k1, k2, h, sigma1, sigma2)


def gains_from_single(k1, k2, h, N):
    """Default distributed gains ``(k1 / N, k2, h)``."""
    if min(k1, k2, h) <= 0 or N < 1:
        raise ValueError("gains must be positive and N >= 1")
    return k1 / N, k2, h


@dataclass
class ControllerState:
    """Stacked controller states, one row per agent."""

    eta1: np.ndarray
    eta2: np.ndarray
    varsigma: np.ndarray

    @classmethod
    def zeros(cls, N, l, r):
        return cls(np.zeros((N, l)), np.zeros((N, l)), np.zeros((N, r)))

    @property
    def N(self):
        return self.eta1.shape[0]


def controller_derivatives(state, x, e, im, obs, gains, L=None):
    """Evaluate the distributed output feedback law for all agents at once.

    Parameters
    ----------
    state : ControllerState
        ``eta1``, ``eta2`` of shape (N, l) and ``varsigma`` of shape (N, r).
    x : (N,) array_like
        Actuator states.
    e : float
        Regulated error, broadcast to every agent.
    im : InternalModel
    obs : ObserverSpec
        Built with the observer gain of ``gains``.
    gains : GainSet
    L : (N, N) array_like, optional
        Graph Laplacian; omitted means no coupling (and requires N = 1 or
        zero coupling gains to be meaningful).

    Returns
    -------
    u, d_eta1, d_eta2, d_varsigma
    """
    eta1 = np.asarray(state.eta1, dtype=float)
    eta2 = np.asarray(state.eta2, dtype=float)
    vs = np.asarray(state.varsigma, dtype=float)
    x = np.asarray(x, dtype=float).ravel()
    N, l, r = eta1.shape[0], im.l, obs.r
    if eta1.shape != (N, l) or eta2.shape != (N, l) or vs.shape != (N, r) or x.shape != (N,):
        raise DimensionMismatch(
            f"controller state shapes {eta1.shape}, {eta2.shape}, {vs.shape}, x {x.shape} "
            f"inconsistent with N={N}, l={l}, r={r}")
    if gains.r != r:
        raise DimensionMismatch(f"gains built for r={gains.r}, observer has r={r}")
    if L is None:
        L = np.zeros((N, N))
    L = np.asarray(L, dtype=float)
    if L.shape != (N, N):
        raise DimensionMismatch(f"Laplacian is {L.shape}, expected {(N, N)}")

    zeta1 = vs @ gains.Gamma1.ravel()
    u = eta2 @ im.psiT2inv.ravel() - gains.k2 * (x - eta1 @ im.psiT1inv.ravel() + gains.k1 * zeta1)
    d_eta1 = eta1 @ im.M1.T + np.outer(x, im.N1) - gains.sigma1 * (L @ eta1)
    d_eta2 = eta2 @ im.M2.T + np.outer(u, im.N2) - gains.sigma2 * (L @ eta2)
    d_vs = vs @ obs.A0.T + e * obs.B0.ravel()
    return u, d_eta1, d_eta2, d_vs
