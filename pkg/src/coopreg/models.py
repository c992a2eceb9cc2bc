"""Plant, exosystem, actuator bank and communication graph descriptions."""
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionMismatch, NonPositiveControlDirection, OutsideUncertaintyBox

__all__ = [
    "UncertainMatrixAffine",
    "UncertainPlant",
    "RealizedPlant",
    "Exosystem",
    "ActuatorBank",
    "Graph",
    "realize_plant",
    "laplacian",
    "box_vertices",
    "default_samples",
    "validate_assumptions",
    "AssumptionReport",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class UncertainMatrixAffine:
    """Matrix-valued function ``base + sum_i w_i * deltas[i]``."""

    base: np.ndarray
    deltas: tuple = ()

    def __post_init__(self):
        base = np.array(self.base, dtype=float)
        if base.ndim < 2:
            base = base.reshape(1, -1) if base.ndim == 1 else base.reshape(1, 1)
        deltas = tuple(np.array(d, dtype=float).reshape(base.shape) for d in self.deltas)
        object.__setattr__(self, "base", _frozen(base))
        object.__setattr__(self, "deltas", tuple(_frozen(d) for d in deltas))

    @classmethod
    def constant(cls, base, n_w):
        base = np.array(base, dtype=float)
        return cls(base, tuple(np.zeros_like(base) for _ in range(n_w)))

    @classmethod
    def from_terms(cls, base, n_w, terms):
        """Build from a sparse ``{w index: delta}`` mapping."""
        base = np.array(base, dtype=float)
        if base.ndim < 2:
            base = np.atleast_2d(base)
        deltas = [np.zeros_like(base) for _ in range(n_w)]
        for k, d in terms.items():
            deltas[k] = np.array(d, dtype=float).reshape(base.shape)
        return cls(base, tuple(deltas))

    @property
    def shape(self):
        return self.base.shape

    def __call__(self, w):
        w = np.asarray(w, dtype=float).ravel()
        if w.size != len(self.deltas):
            raise DimensionMismatch(f"expected {len(self.deltas)} uncertainty coordinates, got {w.size}")
        out = self.base.copy()
        for wi, d in zip(w, self.deltas):
            out = out + wi * d
        return out


@dataclass(frozen=True)
class RealizedPlant:
    """Concrete matrices of the strict-feedback plant at one uncertainty value."""

    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    E0: np.ndarray
    Er: np.ndarray
    F: np.ndarray
    c: np.ndarray
    b: float

    @property
    def r(self):
        return self.c.size

    @property
    def nz(self):
        return self.A1.shape[0]

    @property
    def n(self):
        return self.nz + self.r

    @property
    def q(self):
        return self.F.shape[1]


@dataclass(frozen=True)
class UncertainPlant:
    """Minimum-phase strict-feedback plant with affine uncertainty over a box.

    ``z' = A1 z + A2 xi_1 + E0 v``, ``xi_s' = xi_{s+1}``,
    ``xi_r' = A3 z + c . xi + Er v + b u_p``, ``y = xi_1``.

    ``c`` is a 1 x r uncertain row and ``b`` a 1 x 1 uncertain scalar.
    ``W`` is an (n_w, 2) array of closed intervals.
    """

    n: int
    r: int
    A1: UncertainMatrixAffine
    A2: UncertainMatrixAffine
    A3: UncertainMatrixAffine
    E0: UncertainMatrixAffine
    Er: UncertainMatrixAffine
    F: UncertainMatrixAffine
    c: UncertainMatrixAffine
    b: UncertainMatrixAffine
    W: np.ndarray

    def __post_init__(self):
        W = _frozen(np.asarray(self.W, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "W", W)
        nz, r = self.n - self.r, self.r
        q = self.F.shape[1]
        expected = {
            "A1": (nz, nz), "A2": (nz, 1), "A3": (1, nz), "E0": (nz, q),
            "Er": (1, q), "F": (1, q), "c": (1, r), "b": (1, 1),
        }
        if r < 1:
            raise DimensionMismatch("relative degree must be at least 1")
        for name, shape in expected.items():
            m = getattr(self, name)
            if m.shape != shape:
                raise DimensionMismatch(f"{name} has shape {m.shape}, expected {shape}")
            if len(m.deltas) != self.n_w:
                raise DimensionMismatch(f"{name} depends on {len(m.deltas)} coordinates, W has {self.n_w}")

    @property
    def n_w(self):
        return self.W.shape[0]

    @property
    def q(self):
        return self.F.shape[1]

    def contains(self, w):
        w = np.asarray(w, dtype=float).ravel()
        return bool(np.all(w >= self.W[:, 0]) and np.all(w <= self.W[:, 1]))


def realize_plant(plant, w):
    """Evaluate every uncertain matrix of ``plant`` at ``w``."""
    w = np.asarray(w, dtype=float).ravel()
    if w.size != plant.n_w:
        raise DimensionMismatch(f"w has {w.size} entries, plant expects {plant.n_w}")
    if not plant.contains(w):
        warnings.warn(f"w = {w} lies outside the uncertainty box", OutsideUncertaintyBox, stacklevel=2)
    b = float(plant.b(w)[0, 0])
    if not b > 0:
        raise NonPositiveControlDirection(f"b(w) = {b} is not positive")
    return RealizedPlant(
        A1=plant.A1(w), A2=plant.A2(w), A3=plant.A3(w), E0=plant.E0(w),
        Er=plant.Er(w), F=plant.F(w), c=plant.c(w).ravel(), b=b,
    )


@dataclass(frozen=True)
class Exosystem:
    """``v' = S v``; the minimal polynomial and its companion pair are derived."""

    S: np.ndarray
    p: np.ndarray = field(init=False)

    def __post_init__(self):
        S = _frozen(np.atleast_2d(np.asarray(self.S, dtype=float)))
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "p", _frozen(linalg.minimal_polynomial(S)))

    @property
    def q(self):
        return self.S.shape[0]

    @property
    def l(self):
        return self.p.size

    def companion(self):
        return linalg.companion_pair(self.p, self.l)


@dataclass(frozen=True)
class ActuatorBank:
    """N identical first-order actuators ``x_i' = a x_i + b_a u_i``."""

    a: float
    b_a: float
    N: int = 1

    def __post_init__(self):
        if not self.b_a > 0:
            raise ValueError("actuator input gain b_a must be positive")
        if int(self.N) < 1:
            raise ValueError("need at least one actuator")


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph given by its symmetric adjacency matrix."""

    weights: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.weights, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch("adjacency matrix must be square")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency matrix must be symmetric")
        if np.any(np.diag(A) != 0):
            raise ValueError("adjacency matrix must have a zero diagonal")
        if np.any(A < 0):
            raise ValueError("edge weights must be nonnegative")
        object.__setattr__(self, "weights", _frozen(A))

    @property
    def N(self):
        return self.weights.shape[0]

    @classmethod
    def ring(cls, N, weight=1.0):
        A = np.zeros((N, N))
        if N == 2:
            A[0, 1] = A[1, 0] = weight
        elif N > 2:
            for i in range(N):
                j = (i + 1) % N
                A[i, j] = A[j, i] = weight
        return cls(A)

    @classmethod
    def from_edges(cls, N, edges):
        A = np.zeros((N, N))
        for edge in edges:
            i, j = int(edge[0]), int(edge[1])
            wt = float(edge[2]) if len(edge) > 2 else 1.0
            A[i, j] = A[j, i] = wt
        return cls(A)

    def laplacian(self):
        return laplacian(self)

    def algebraic_connectivity(self):
        if self.N < 2:
            return np.inf
        return float(np.sort(np.linalg.eigvalsh(self.laplacian()))[1])


def laplacian(g):
    A = np.asarray(g.weights)
    return np.diag(A.sum(axis=1)) - A


def box_vertices(W):
    W = np.asarray(W, dtype=float).reshape(-1, 2)
    return np.array(list(itertools.product(*W)), dtype=float).reshape(-1, W.shape[0])


def default_samples(plant):
    """Vertices of W followed by the origin."""
    return np.vstack([box_vertices(plant.W), np.zeros((1, plant.n_w))])


@dataclass
class AssumptionReport:
    checks: list

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.checks)

    def failures(self):
        return [(name, detail) for name, ok, detail in self.checks if not ok]

    def __str__(self):
        return "\n".join(f"[{'pass' if ok else 'FAIL'}] {name}: {detail}" for name, ok, detail in self.checks)


def validate_assumptions(plant, exo, g=None, w_samples=None, tol=linalg.DEFAULT_TOL):
    """Check the standing assumptions on sampled uncertainty values.

    Exosystem spectrum in the closed right half plane, graph connected (when a
    graph is given), and at every sample ``A1(w)`` Hurwitz and ``b(w) > 0``.
    Sampling is a heuristic certificate, not a proof over all of W.
    """
    checks = []
    sa = np.min(linalg.eigenvalues(exo.S).real)
    checks.append(("exosystem spectrum nonnegative", bool(sa >= -tol.hurwitz),
                   f"min Re(eig S) = {sa:.3e}"))
    if g is not None:
        lam2 = g.algebraic_connectivity()
        checks.append(("graph connected", bool(lam2 > tol.hurwitz), f"lambda_2 = {lam2:.6g}"))
    if w_samples is None:
        w_samples = default_samples(plant)
    for w in np.atleast_2d(w_samples):
        A1 = plant.A1(w)
        absc = linalg.spectral_abscissa(A1) if A1.size else -np.inf
        checks.append((f"A1 Hurwitz at w={np.round(w, 6).tolist()}", bool(absc < 0),
                       f"spectral abscissa {absc:.6g}"))
        b = float(plant.b(w)[0, 0])
        checks.append((f"b > 0 at w={np.round(w, 6).tolist()}", b > 0, f"b = {b:.6g}"))
    return AssumptionReport(checks)
