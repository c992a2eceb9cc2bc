"""Plot a trajectory CSV written by ``coopreg run`` or ``coopreg example``.

Usage: python3 docs/plot_trajectory.py OUT/exp1-multi_trajectory.csv [figure.png]

Needs matplotlib (``pip install -e .[plot]``).
"""
import sys

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def main(path, target=None):
    data = np.genfromtxt(path, delimiter=",", names=True)
    t = data["t"]
    actuators = [n for n in data.dtype.names if n.startswith("y_")]

    fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ax0.plot(t, data["y"], label="y")
    ax0.plot(t, data["y0"], "--", label="reference")
    ax0.plot(t, data["e"], label="e")
    ax0.legend(loc="upper right")
    for name in actuators:
        ax1.plot(t, data[name], lw=0.8, label=name)
    ax1.set_xlabel("t [s]")
    ax1.set_ylabel("actuator output")
    if len(actuators) <= 6:
        ax1.legend(loc="upper right", ncol=len(actuators))
    fig.tight_layout()
    target = target or path.rsplit(".", 1)[0] + ".png"
    fig.savefig(target, dpi=120)
    print(target)


if __name__ == "__main__":
    if len(sys.argv) not in (2, 3):
        sys.exit(__doc__)
    main(*sys.argv[1:])
