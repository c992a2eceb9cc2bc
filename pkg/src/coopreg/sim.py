"""Fixed-step RK4 simulation of the full closed loop and trajectory metrics."""
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ConfigMismatch, Diverged, DimensionMismatch, StepTooLarge
from .models import realize_plant
from .regulator import (
    ControllerState,
    build_observer,
    controller_derivatives,
    solve_regulator_equations,
    steady_state_generators,
)

__all__ = [
    "ClosedLoopSystem",
    "Trajectory",
    "Metrics",
    "rk4",
    "simulate",
    "metrics",
    "random_initial_state",
    "steady_state_initial",
    "matched_single_initial",
    "sum_equivalence",
    "step_halving_ratio",
    "write_csv",
]

DIVERGENCE_NORM = 1e12

# numpy 2 renamed trapz
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class ClosedLoopSystem:
    """Plant + exosystem + N actuators + N controllers at a fixed ``w``.

    State layout: ``z, xi, v, x_1..x_N, eta1_1..eta1_N, eta2_1..eta2_N,
    varsigma_1..varsigma_N``. The right-hand side is linear; its matrix is
    obtained by probing :meth:`rhs` on the unit vectors.
    """

    def __init__(self, plant, exo, actuator, im, deltas, gains, graph=None, w=None):
        w = np.zeros(plant.n_w) if w is None else np.asarray(w, dtype=float).ravel()
        self.uncertain_plant = plant
        self.plant = realize_plant(plant, w)
        self.w = w
        self.exo = exo
        self.actuator = actuator
        self.im = im
        self.gains = gains
        self.obs = build_observer(deltas, gains.h, self.plant.r)
        self.graph = graph
        self.N = actuator.N
        if graph is not None and graph.N != self.N:
            raise DimensionMismatch(f"graph has {graph.N} nodes, actuator bank has {self.N}")
        self.L = np.zeros((self.N, self.N)) if graph is None else graph.laplacian()

        p, N, l, r = self.plant, self.N, im.l, self.plant.r
        sizes = {"z": p.nz, "xi": r, "v": exo.q, "x": N, "eta1": N * l, "eta2": N * l, "vs": N * r}
        self.slices = {}
        start = 0
        for name, size in sizes.items():
            self.slices[name] = slice(start, start + size)
            start += size
        self.dim = start
        self.A = self._probe(self.rhs)
        self.C_u = self._probe(self.inputs)

    def _probe(self, fn):
        cols = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = 1.0
            cols.append(fn(e))
        return np.column_stack(cols)

    def unpack(self, X):
        s = self.slices
        N, l, r = self.N, self.im.l, self.plant.r
        return (X[s["z"]], X[s["xi"]], X[s["v"]], X[s["x"]],
                ControllerState(X[s["eta1"]].reshape(N, l), X[s["eta2"]].reshape(N, l),
                                X[s["vs"]].reshape(N, r)))

    def pack(self, z, xi, v, x, state):
        return np.concatenate([np.ravel(z), np.ravel(xi), np.ravel(v), np.ravel(x),
                               np.ravel(state.eta1), np.ravel(state.eta2), np.ravel(state.varsigma)])

    def error(self, X):
        xi, v = X[self.slices["xi"]], X[self.slices["v"]]
        return xi[0] - (self.plant.F @ v).item()

    def inputs(self, X):
        z, xi, v, x, state = self.unpack(X)
        u, *_ = controller_derivatives(state, x, self.error(X), self.im, self.obs, self.gains, self.L)
        return u

    def rhs(self, X):
        p, act = self.plant, self.actuator
        z, xi, v, x, state = self.unpack(X)
        e = xi[0] - (p.F @ v).item()
        u, d_eta1, d_eta2, d_vs = controller_derivatives(state, x, e, self.im, self.obs, self.gains, self.L)
        u_p = np.sum(x)
        dz = p.A1 @ z + p.A2.ravel() * xi[0] + p.E0 @ v
        dxi = np.empty_like(xi)
        dxi[:-1] = xi[1:]
        dxi[-1] = (p.A3 @ z).item() + p.c @ xi + (p.Er @ v).item() + p.b * u_p
        dv = self.exo.S @ v
        dx = act.a * x + act.b_a * u
        return np.concatenate([dz, dxi, dv, dx, d_eta1.ravel(), d_eta2.ravel(), d_vs.ravel()])

    def output_matrix(self):
        """Rows mapping the state to ``e, y0, y, u_p``."""
        s = self.slices
        C = np.zeros((4, self.dim))
        C[0, s["xi"].start] = 1.0
        C[0, s["v"]] = -self.plant.F.ravel()
        C[1, s["v"]] = self.plant.F.ravel()
        C[2, s["xi"].start] = 1.0
        C[3, s["x"]] = 1.0
        return C


@dataclass
class Trajectory:
    t: np.ndarray
    X: np.ndarray
    system: ClosedLoopSystem = field(repr=False)
    dt: float = 0.0

    def _part(self, name):
        return self.X[:, self.system.slices[name]]

    @property
    def e(self):
        return self.X @ self.system.output_matrix()[0]

    @property
    def y0(self):
        return self.X @ self.system.output_matrix()[1]

    @property
    def y(self):
        return self.X @ self.system.output_matrix()[2]

    @property
    def u_p(self):
        return self._part("x").sum(axis=1)

    @property
    def y_i(self):
        return self._part("x")

    @property
    def u_i(self):
        return self.X @ self.system.C_u.T

    def eta1_i(self):
        N, l = self.system.N, self.system.im.l
        return self._part("eta1").reshape(-1, N, l)

    def eta2_i(self):
        N, l = self.system.N, self.system.im.l
        return self._part("eta2").reshape(-1, N, l)

    def varsigma_i(self):
        N, r = self.system.N, self.system.plant.r
        return self._part("vs").reshape(-1, N, r)


def rk4(f, x0, dt, steps, decimate=1):
    """Classical fourth-order Runge-Kutta for ``x' = f(x)``; returns recorded states."""
    x = np.array(x0, dtype=float)
    out = [x.copy()]
    for k in range(1, steps + 1):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % decimate == 0 or k == steps:
            out.append(x.copy())
    return np.array(out)


def _rk4_propagator(A, dt):
    # one RK4 step of x' = A x is exactly this degree-4 Taylor polynomial
    hA = dt * A
    P = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, 5):
        term = term @ hA / k
        P = P + term
    return P


def simulate(sys, x0, dt=1e-3, T=30.0, decimate=1, method="propagator", check_step=True):
    """Integrate the closed loop with fixed-step RK4.

    ``method="propagator"`` applies the exact one-step RK4 matrix of the
    linear system; ``method="stages"`` evaluates the four stages through
    :meth:`ClosedLoopSystem.rhs`. Both are the same scheme.
    """
    if not dt > 0:
        raise ValueError("step must be positive")
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != sys.dim:
        raise DimensionMismatch(f"initial state has {x0.size} entries, system has {sys.dim}")
    steps = int(round(T / dt))
    if check_step:
        rho = np.max(np.abs(linalg.eigenvalues(sys.A)))
        if dt * rho >= 2.5:
            warnings.warn(f"dt * spectral radius = {dt * rho:.3g} is beyond the RK4 comfort zone",
                          StepTooLarge, stacklevel=2)
    if method == "stages":
        X = rk4(sys.rhs, x0, dt, steps, decimate)
    elif method == "propagator":
        P = _rk4_propagator(sys.A, dt)
        n_rec = steps // decimate + (1 if steps % decimate else 0) + 1
        X = np.empty((n_rec, sys.dim))
        X[0] = x = x0.copy()
        j = 1
        for k in range(1, steps + 1):
            x = P @ x
            if k % decimate == 0 or k == steps:
                X[j] = x
                j += 1
            if k % 1000 == 0 and not np.abs(x).max() <= DIVERGENCE_NORM:
                raise Diverged(f"state norm exceeded {DIVERGENCE_NORM:g} at t = {k * dt:g}")
    else:
        raise ValueError(f"unknown integration method {method!r}")
    if not np.isfinite(X[-1]).all() or np.max(np.abs(X)) > DIVERGENCE_NORM:
        raise Diverged(f"state norm exceeded {DIVERGENCE_NORM:g}")
    idx = [k for k in range(0, steps + 1) if k % decimate == 0 or k == steps]
    t = np.array(idx, dtype=float) * dt
    return Trajectory(t=t, X=X, system=sys, dt=dt)


@dataclass
class Metrics:
    tail_max_error: float
    tail_max_sharing: float
    settling_time: float
    settled: bool
    input_energy: float
    plant_input_energy: float
    error_energy: float

    def as_dict(self):
        return {k: float(v) if not isinstance(v, bool) else v for k, v in self.__dict__.items()}


def metrics(traj, threshold=0.02, tail=0.2):
    """Regulation and sharing summary of a trajectory.

    Tail quantities are maxima over the last ``tail`` fraction of the horizon.
    ``settling_time`` is the first time after which ``|e|`` stays below
    ``threshold`` (``inf`` and ``settled=False`` if it never does).
    """
    t = traj.t
    if t.size == 0:
        raise ValueError("empty trajectory")
    t_start = t[-1] - tail * (t[-1] - t[0])
    mask = t >= t_start - 1e-12
    e = traj.e
    tail_err = float(np.max(np.abs(e[mask])))
    y = traj.y_i
    if y.shape[1] > 1:
        spread = y[mask].max(axis=1) - y[mask].min(axis=1)
        tail_share = float(np.max(spread))
    else:
        tail_share = 0.0
    above = np.nonzero(np.abs(e) >= threshold)[0]
    if above.size == 0:
        settling, settled = float(t[0]), True
    elif above[-1] == t.size - 1:
        settling, settled = float("inf"), False
    else:
        settling, settled = float(t[above[-1] + 1]), True
    return Metrics(
        tail_max_error=tail_err,
        tail_max_sharing=tail_share,
        settling_time=settling,
        settled=settled,
        input_energy=float(_trapezoid(np.sum(traj.u_i ** 2, axis=1), t)),
        plant_input_energy=float(_trapezoid(traj.u_p ** 2, t)),
        error_energy=float(_trapezoid(e ** 2, t)),
    )


def random_initial_state(sys, rng, v0, low=-3.0, high=3.0, identical_observers=False):
    """Uniform draw in ``[low, high]`` for every state except the exosystem."""
    X = rng.uniform(low, high, size=sys.dim)
    X[sys.slices["v"]] = np.asarray(v0, dtype=float).ravel()
    if identical_observers:
        vs = X[sys.slices["vs"]].reshape(sys.N, -1)
        vs[:] = vs[0]
        X[sys.slices["vs"]] = vs.ravel()
    return X


def steady_state_initial(sys, v0):
    """State on the regulation manifold at ``v0``; agents share load equally."""
    ss = solve_regulator_equations(sys.uncertain_plant, sys.exo, sys.actuator, sys.w)
    th1, th2 = steady_state_generators(ss, sys.im, sys.exo, v0)
    N, r = sys.N, sys.plant.r
    v0 = np.asarray(v0, dtype=float).ravel()
    state = ControllerState(np.tile(th1 / N, (N, 1)), np.tile(th2 / N, (N, 1)), np.zeros((N, r)))
    x = np.full(N, (ss.Xi @ v0).item() / N)
    return sys.pack(ss.Z @ v0, ss.Pi @ v0, v0, x, state)


def matched_single_initial(multi, single, X0):
    """Initial state of ``single`` whose sums reproduce ``X0`` of ``multi``."""
    z, xi, v, x, st = multi.unpack(np.asarray(X0, dtype=float))
    if not np.allclose(st.varsigma, st.varsigma[0], rtol=0, atol=0):
        raise ConfigMismatch("observer initial states differ across agents")
    state = ControllerState(st.eta1.sum(axis=0, keepdims=True), st.eta2.sum(axis=0, keepdims=True),
                            st.varsigma[:1].copy())
    return single.pack(z, xi, v, [x.sum()], state)


def _close(a, b, rtol=1e-12):
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1.0)


def sum_equivalence(multi, single):
    """Largest relative gap between the agent sums of ``multi`` and ``single``.

    Compares ``sum x_i``, ``sum eta1_i`` and ``sum eta2_i`` with the
    single-actuator states over the whole horizon. Each quantity's gap is
    scaled by ``1 + max |single quantity|``.
    """
    ms, ss = multi.system, single.system
    gm, gs = ms.gains, ss.gains
    if ss.N != 1:
        raise ConfigMismatch("reference run must use a single actuator")
    checks = {
        "k1 = N * k1_bar": _close(gs.k1, ms.N * gm.k1),
        "k2": _close(gs.k2, gm.k2),
        "h": _close(gs.h, gm.h),
        "gammas": np.allclose(gs.gammas, gm.gammas, rtol=1e-12, atol=0),
        "deltas": np.allclose(ss.obs.deltas, ms.obs.deltas, rtol=1e-12, atol=0),
        "w": np.array_equal(ms.w, ss.w),
        "dt": _close(multi.dt, single.dt),
        "time grid": multi.t.shape == single.t.shape and np.allclose(multi.t, single.t),
    }
    bad = [k for k, ok in checks.items() if not ok]
    if bad:
        raise ConfigMismatch("runs are not comparable: " + ", ".join(bad))
    try:
        expected = matched_single_initial(ms, ss, multi.X[0])
    except ConfigMismatch:
        raise
    if not np.allclose(expected, single.X[0], rtol=1e-12, atol=1e-12):
        raise ConfigMismatch("initial conditions are not matched")
    pairs = [
        (multi.y_i.sum(axis=1, keepdims=True), single.y_i),
        (multi.eta1_i().sum(axis=1), single.eta1_i()[:, 0, :]),
        (multi.eta2_i().sum(axis=1), single.eta2_i()[:, 0, :]),
    ]
    dev = 0.0
    for a, b in pairs:
        dev = max(dev, float(np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(b)))))
    return dev


def step_halving_ratio(sys, x0, dt, T):
    """``|X(dt) - X(dt/2)| / |X(dt/2) - X(dt/4)|`` at common times (about 16 for RK4)."""
    runs = [simulate(sys, x0, dt / 2 ** k, T, decimate=2 ** k, check_step=False) for k in range(3)]
    d1 = np.max(np.abs(runs[0].X - runs[1].X))
    d2 = np.max(np.abs(runs[1].X - runs[2].X))
    return d1 / d2


def write_csv(traj, path, full_state=False, decimate=1):
    """Trajectory export with header ``t,e,y0,y,u_p,y_1..y_N,u_1..u_N``."""
    N = traj.system.N
    cols = [traj.t, traj.e, traj.y0, traj.y, traj.u_p]
    header = ["t", "e", "y0", "y", "u_p"] + [f"y_{i + 1}" for i in range(N)] + [f"u_{i + 1}" for i in range(N)]
    data = np.column_stack(cols + [traj.y_i, traj.u_i])
    if full_state:
        data = np.column_stack([data, traj.X])
        header += [f"s_{k}" for k in range(traj.X.shape[1])]
    data = data[::decimate]
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt="%.10e")
