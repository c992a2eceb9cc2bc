import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from coopreg.cli import synthesize
from coopreg.errors import ConfigMismatch, DimensionMismatch, Diverged, StepTooLarge
from coopreg.experiments import builtin
from coopreg.regulator import GainSet
from coopreg.sim import (
    ClosedLoopSystem,
    matched_single_initial,
    metrics,
    random_initial_state,
    rk4,
    simulate,
    steady_state_initial,
    step_halving_ratio,
    sum_equivalence,
    write_csv,
)

W1 = np.array([0.3, -0.3, -0.3])


def _system(name, w=None, gains=None, graph="default"):
    cfg = builtin(name)
    im, _ = synthesize(cfg)
    graph = cfg.graph if graph == "default" else graph
    w = np.zeros(cfg.plant.n_w) if w is None else w
    return cfg, ClosedLoopSystem(cfg.plant, cfg.exo, cfg.actuator, im, cfg.deltas, gains or cfg.gains, graph, w)


def test_dimension():
    cfg, sys = _system("exp1-multi")
    # (n - r) + r + q + N (1 + 2 l + r)
    assert sys.dim == 0 + 2 + 3 + 5 * (1 + 6 + 2)
    assert sys.A.shape == (sys.dim, sys.dim)


def test_zero_is_equilibrium():
    _, sys = _system("exp1-multi")
    tr = simulate(sys, np.zeros(sys.dim), 1e-3, 2.0, decimate=100)
    assert np.all(tr.X == 0)


def test_rk4_exponential():
    X = rk4(lambda x: -x, [1.0], 1e-3, 5000, decimate=5000)
    assert abs(X[-1, 0] - np.exp(-5)) < 1e-8


def test_propagator_matches_stages():
    _, sys = _system("exp1-single", W1)
    X0 = random_initial_state(sys, np.random.default_rng(0), (0, 1, 2))
    a = simulate(sys, X0, 1e-3, 1.0, decimate=50)
    b = simulate(sys, X0, 1e-3, 1.0, decimate=50, method="stages")
    assert_allclose(a.t, b.t)
    assert np.max(np.abs(a.X - b.X)) <= 1e-10 * np.max(np.abs(a.X))


def test_superposition():
    _, sys = _system("exp1-multi", W1)
    rng = np.random.default_rng(1)
    x0, x1 = (random_initial_state(sys, rng, rng.uniform(-1, 1, 3)) for _ in range(2))
    a, b = 0.7, -1.3
    combo = simulate(sys, a * x0 + b * x1, 1e-3, 10.0, decimate=100).X
    parts = a * simulate(sys, x0, 1e-3, 10.0, decimate=100).X + b * simulate(sys, x1, 1e-3, 10.0, decimate=100).X
    assert np.max(np.abs(combo - parts)) <= 1e-9 * max(1.0, np.max(np.abs(parts)))


def test_step_halving():
    _, sys = _system("exp1-single", W1)
    X0 = random_initial_state(sys, np.random.default_rng(2), (0, 1, 2))
    assert step_halving_ratio(sys, X0, 4e-3, 2.0) >= 8.0


@pytest.mark.parametrize("name", ["exp1-single", "exp1-multi", "exp2-single", "exp2-multi"])
def test_steady_state_is_invariant(name):
    cfg, sys = _system(name, np.full(builtin(name).plant.n_w, 0.2))
    tr = simulate(sys, steady_state_initial(sys, cfg.v0), 1e-3, 30.0, decimate=10)
    assert np.max(np.abs(tr.e)) < 1e-6


def test_derived_series():
    _, sys = _system("exp1-multi", W1)
    tr = simulate(sys, random_initial_state(sys, np.random.default_rng(3), (0, 1, 2)), 1e-3, 1.0, decimate=10)
    assert_allclose(tr.u_p, tr.y_i.sum(axis=1))
    assert_allclose(tr.e, tr.y - tr.y0)
    assert tr.u_i.shape == (tr.t.size, 5)
    assert_allclose(np.diff(tr.t), 0.01)
    # u_i is the controller output evaluated on the recorded states
    assert_allclose(tr.u_i[7], sys.inputs(tr.X[7]))


class TestMetrics:
    def test_zero_trajectory(self):
        _, sys = _system("exp1-single")
        m = metrics(simulate(sys, np.zeros(sys.dim), 1e-3, 1.0))
        assert m.tail_max_error == 0 and m.settling_time == 0 and m.settled
        assert m.tail_max_sharing == 0
        assert m.input_energy == 0

    def test_not_settled(self):
        _, sys = _system("exp1-single")
        X0 = np.zeros(sys.dim)
        X0[sys.slices["xi"]] = 1.0
        m = metrics(simulate(sys, X0, 1e-3, 0.1))
        assert not m.settled and m.settling_time == np.inf

    def test_regulated_run(self):
        _, sys = _system("exp1-multi", W1)
        tr = simulate(sys, random_initial_state(sys, np.random.default_rng(4), (0, 1, 2)), 1e-3, 30.0, decimate=10)
        m = metrics(tr)
        assert m.tail_max_error < 0.02 and m.tail_max_sharing < 0.02
        assert m.settled and 0 < m.settling_time < 30
        # tail is the last fifth of the horizon
        assert m.tail_max_error == np.max(np.abs(tr.e[tr.t >= 24 - 1e-9]))
        assert all(v >= 0 for v in m.as_dict().values())


class TestSumEquivalence:
    def _pair(self, X0=None, k1=None, graph="default"):
        cfg, multi = _system("exp1-multi", W1, graph=graph)
        g = cfg.gains.single_equivalent(5)
        if k1 is not None:
            g = GainSet(g.gammas, k1, g.k2, g.h)
        scfg = builtin("exp1-single")
        im, _ = synthesize(scfg)
        single = ClosedLoopSystem(scfg.plant, scfg.exo, scfg.actuator, im, scfg.deltas, g, None, W1)
        if X0 is None:
            X0 = random_initial_state(multi, np.random.default_rng(5), (0, 1, 2), identical_observers=True)
        a = simulate(multi, X0, 1e-3, 30.0, decimate=10)
        b = simulate(single, matched_single_initial(multi, single, X0), 1e-3, 30.0, decimate=10)
        return a, b

    def test_sums_match(self):
        assert sum_equivalence(*self._pair()) < 1e-8

    def test_zero(self):
        assert sum_equivalence(*self._pair(X0=np.zeros(5 * 9 + 5))) == 0.0

    def test_gain_mismatch(self):
        with pytest.raises(ConfigMismatch, match="k1"):
            sum_equivalence(*self._pair(k1=1.9))

    def test_observer_mismatch(self):
        _, multi = _system("exp1-multi")
        X0 = random_initial_state(multi, np.random.default_rng(6), (0, 1, 2))
        _, single = _system("exp1-single")
        with pytest.raises(ConfigMismatch):
            matched_single_initial(multi, single, X0)


def test_coupling_does_not_change_error():
    cfg, a = _system("exp2-multi", np.full(8, 0.5))
    g = cfg.gains
    _, b = _system("exp2-multi", np.full(8, 0.5), gains=GainSet(g.gammas, g.k1, g.k2, g.h, 7.0, 0.5))
    rng = np.random.default_rng(7)
    X0 = random_initial_state(a, rng, cfg.v0, identical_observers=True)
    # identical controller states across agents
    for key in ("eta1", "eta2"):
        blk = X0[a.slices[key]].reshape(5, -1)
        X0[a.slices[key]] = np.tile(blk[0], 5)
    ea = simulate(a, X0, 1e-3, 30.0, decimate=10).e
    eb = simulate(b, X0, 1e-3, 30.0, decimate=10).e
    assert np.max(np.abs(ea - eb)) < 1e-8


def test_csv(tmp_path):
    _, sys = _system("exp1-multi")
    tr = simulate(sys, random_initial_state(sys, np.random.default_rng(8), (0, 1, 2)), 1e-3, 0.5, decimate=10)
    path = tmp_path / "t.csv"
    write_csv(tr, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,e,y0,y,u_p,y_1,y_2,y_3,y_4,y_5,u_1,u_2,u_3,u_4,u_5"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (tr.t.size, 15)
    assert_allclose(data[:, 1], tr.e, rtol=1e-9)
    write_csv(tr, path, full_state=True, decimate=5)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (len(range(0, tr.t.size, 5)), 15 + sys.dim)


def test_step_too_large_warns():
    _, sys = _system("exp1-single")
    with pytest.warns(StepTooLarge):
        simulate(sys, np.zeros(sys.dim), 1e-2, 0.1)


def test_default_step_is_quiet():
    _, sys = _system("exp1-multi", W1)
    with warnings.catch_warnings():
        warnings.simplefilter("error", StepTooLarge)
        simulate(sys, np.zeros(sys.dim), 1e-3, 0.1)


def test_diverged():
    cfg = builtin("exp2-single")
    g = cfg.gains
    _, sys = _system("exp2-single", gains=GainSet(g.gammas, g.k1, 0.01, g.h))
    X0 = random_initial_state(sys, np.random.default_rng(9), cfg.v0)
    with pytest.raises(Diverged):
        simulate(sys, X0, 1e-3, 200.0, decimate=1000)


def test_bad_inputs():
    _, sys = _system("exp1-single")
    with pytest.raises(DimensionMismatch):
        simulate(sys, np.zeros(sys.dim + 1))
    with pytest.raises(ValueError):
        simulate(sys, np.zeros(sys.dim), dt=0.0)


def test_deterministic():
    _, sys = _system("exp2-multi", np.full(8, -0.5))
    runs = []
    for _ in range(2):
        X0 = random_initial_state(sys, np.random.default_rng(10), (0, 1))
        runs.append(simulate(sys, X0, 1e-3, 5.0, decimate=10).X)
    assert_array_equal(runs[0], runs[1])
