"""
Unstable actuators need coupling
================================

In the second experiment every actuator is open-loop unstable (a = 1).
The tracking error depends only on the sum of the actuator outputs, so the
loop regulates even without coupling, but then nothing pulls the
individual actuators together. Setting sigma1 = sigma2 = 0 fails
certification on the sharing check, and a forced simulation shows the
outputs drifting apart while the error still goes to zero.
"""
import numpy as np

from coopreg.cli import certify_config, synthesize
from coopreg.experiments import builtin
from coopreg.regulator import GainSet
from coopreg.sim import ClosedLoopSystem, metrics, random_initial_state, simulate

cfg = builtin("exp2-multi")
g = cfg.gains
uncoupled = cfg.with_overrides(gains=GainSet(g.gammas, g.k1, g.k2, g.h, 0.0, 0.0))
w = np.zeros(cfg.plant.n_w)

for label, c in (("coupled", cfg), ("uncoupled", uncoupled)):
    im, obs = synthesize(c)
    report = certify_config(c, im, obs)
    worst = report.worst("sharing")
    print(f"{label}: certification {'pass' if report.passed else 'FAIL'}, "
          f"worst sharing abscissa {worst.abscissa:+.3f}")

    sys = ClosedLoopSystem(c.plant, c.exo, c.actuator, im, c.deltas, c.gains, c.graph, w)
    tr = simulate(sys, random_initial_state(sys, np.random.default_rng(1), c.v0), 1e-3, 30.0, decimate=10)
    m = metrics(tr)
    print(f"  tail error {m.tail_max_error:.2e}, tail sharing {m.tail_max_sharing:.2e}")
