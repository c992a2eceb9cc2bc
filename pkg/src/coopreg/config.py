"""Experiment configuration: the in-memory type and its TOML representation.

Matrices are written row by row as nested arrays. An uncertain matrix is a
table with a ``base`` entry and one ``w<k>`` entry (1-based) per uncertainty
coordinate it depends on; ``shape`` is only needed for empty matrices.

>>> cfg = builtin("exp1-single")      # doctest: +SKIP
>>> loads(dumps(cfg)) == cfg          # doctest: +SKIP
True
"""
import re
from dataclasses import dataclass, field, replace

import numpy as np
import tomli
import tomli_w

from . import linalg
from .errors import ConfigError, RegulationError
from .models import ActuatorBank, Exosystem, Graph, UncertainMatrixAffine, UncertainPlant, box_vertices
from .regulator import GainSet

__all__ = ["ExperimentConfig", "loads", "load", "dumps", "dump", "resolve_w"]

_PLANT_MATRICES = ("A1", "A2", "A3", "E0", "Er", "F", "c", "b")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to synthesize, certify and simulate one experiment.

    ``w_policy`` is ``"vertex"`` (worst vertex of W by closed-loop spectral
    abscissa), ``"center"``, or an explicit uncertainty vector.
    """

    name: str
    plant: UncertainPlant
    exo: Exosystem
    actuator: ActuatorBank
    M1: np.ndarray
    N1: np.ndarray
    M2: np.ndarray
    N2: np.ndarray
    deltas: tuple
    gains: GainSet
    v0: tuple
    graph: Graph = None
    w_policy: object = "vertex"
    seed: int = 0
    dt: float = 1e-3
    horizon: float = 30.0
    decimate: int = 10
    identical_observers: bool = True
    error_threshold: float = 0.02
    sharing_threshold: float = 0.02
    margin: float = 1e-6
    grid: int = 0
    out: str = "out"
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def N(self):
        return self.actuator.N

    def with_overrides(self, **kw):
        return replace(self, **kw)

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return dumps(self) == dumps(other)

    def __hash__(self):
        return hash(dumps(self))


# --- writing -----------------------------------------------------------------

def _rows(a):
    a = np.asarray(a, dtype=float)
    return [[float(x) for x in row] for row in np.atleast_2d(a)] if a.size else []


def _matrix_table(m):
    t = {"base": _rows(m.base)}
    if m.base.size == 0:
        t["shape"] = list(m.base.shape)
    for k, d in enumerate(m.deltas):
        if np.any(d != 0):
            t[f"w{k + 1}"] = _rows(d)
    return t


def to_dict(cfg):
    p = cfg.plant
    plant = {"n": p.n, "r": p.r, "W": _rows(p.W)}
    for name in _PLANT_MATRICES:
        plant[name] = _matrix_table(getattr(p, name))
    g = cfg.gains
    d = {
        "name": cfg.name,
        "plant": plant,
        "exosystem": {"S": _rows(cfg.exo.S), "v0": [float(x) for x in cfg.v0]},
        "actuator": {"a": float(cfg.actuator.a), "b_a": float(cfg.actuator.b_a), "N": int(cfg.actuator.N)},
        "internal_model": {"M1": _rows(cfg.M1), "N1": _rows(np.reshape(cfg.N1, (-1, 1))),
                           "M2": _rows(cfg.M2), "N2": _rows(np.reshape(cfg.N2, (-1, 1)))},
        "observer": {"deltas": [float(x) for x in cfg.deltas]},
        "gains": {"gammas": list(g.gammas), "k1": g.k1, "k2": g.k2, "h": g.h,
                  "sigma1": g.sigma1, "sigma2": g.sigma2},
        "simulation": {"w": cfg.w_policy if isinstance(cfg.w_policy, str)
                       else [float(x) for x in cfg.w_policy],
                       "seed": int(cfg.seed), "dt": float(cfg.dt), "horizon": float(cfg.horizon),
                       "decimate": int(cfg.decimate), "identical_observers": bool(cfg.identical_observers)},
        "certification": {"margin": float(cfg.margin), "grid": int(cfg.grid)},
        "thresholds": {"error": float(cfg.error_threshold), "sharing": float(cfg.sharing_threshold)},
        "output": {"dir": cfg.out},
    }
    if cfg.graph is not None:
        A = cfg.graph.weights
        d["graph"] = {"edges": [[i + 1, j + 1, float(A[i, j])]
                                for i in range(A.shape[0]) for j in range(i + 1, A.shape[0]) if A[i, j] != 0]}
    return d


def dumps(cfg):
    return tomli_w.dumps(to_dict(cfg))


def dump(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(cfg))


# --- reading -----------------------------------------------------------------

# a table header, as opposed to the opening bracket of a multi-line array
_HEADER = re.compile(r"^\s*\[\[?\s*[\w.\"'-]+\s*\]\]?\s*(#.*)?$")


class _Reader:
    """Pulls typed values out of the parsed TOML, reporting the source line on error."""

    def __init__(self, data, text):
        self.data = data
        self.lines = text.splitlines() if text else []

    def line_of(self, section, key=None):
        header = re.compile(r"^\s*\[\s*" + re.escape(section) + r"\s*\]\s*$") if section else None
        in_section = section is None or section == ""
        for i, line in enumerate(self.lines, start=1):
            if header is not None and header.match(line):
                in_section = True
                if key is None:
                    return i
                continue
            if in_section and header is not None and _HEADER.match(line):
                if not line.strip().startswith(f"[{section}."):
                    in_section = False
            if in_section and key is not None and re.match(r"^\s*" + re.escape(key) + r"\s*=", line):
                return i
        return None

    def fail(self, section, key, msg):
        line = self.line_of(section, key) or self.line_of(section)
        where = f"line {line}: " if line else ""
        path = ".".join(x for x in (section, key) if x)
        raise ConfigError(f"{where}[{path}] {msg}")

    def get(self, section, key, kind, default=None, required=True):
        node = self.data
        for part in section.split(".") if section else []:
            node = node.get(part) if isinstance(node, dict) else None
            if node is None:
                break
        if not isinstance(node, dict) or key not in node:
            if required and default is None:
                self.fail(section, key, "missing")
            return default
        val = node[key]
        try:
            return kind(val)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            self.fail(section, key, f"invalid value {val!r}: {exc}")

    def matrix(self, section, key, shape=None):
        def conv(v):
            a = np.array(v, dtype=float)
            if a.ndim == 1 and a.size:
                a = a.reshape(1, -1)
            if a.ndim != 2 and a.size:
                raise ValueError("expected a matrix written row by row")
            if shape is not None:
                a = a.reshape(shape)
            return a
        return self.get(section, key, conv)


def _uncertain(rd, name, n_w):
    sec = f"plant.{name}"
    tbl = rd.data["plant"].get(name)
    if not isinstance(tbl, dict):
        rd.fail("plant", name, "must be a table with a 'base' entry")
    shape = tuple(tbl["shape"]) if "shape" in tbl else None
    base = rd.matrix(sec, "base", shape)
    if base.size == 0 and shape is None:
        rd.fail(sec, "base", "empty matrix needs an explicit shape")
    terms = {}
    for key in tbl:
        if key in ("base", "shape"):
            continue
        m = re.fullmatch(r"w(\d+)", key)
        if not m or not 1 <= int(m.group(1)) <= n_w:
            rd.fail(sec, key, f"unknown entry (expected base, shape, or w1..w{n_w})")
        delta = rd.matrix(sec, key)
        if delta.shape != base.shape:
            rd.fail(sec, key, f"shape {delta.shape} differs from base {base.shape}")
        terms[int(m.group(1)) - 1] = delta
    return UncertainMatrixAffine.from_terms(base, n_w, terms)


def _w_policy(v):
    if isinstance(v, str):
        if v not in ("vertex", "center"):
            raise ValueError("expected 'vertex', 'center' or a list of numbers")
        return v
    return tuple(float(x) for x in v)


def from_dict(data, text=None):
    rd = _Reader(data, text)
    try:
        for sec in ("plant", "exosystem", "actuator", "internal_model", "observer", "gains"):
            if not isinstance(data.get(sec), dict):
                raise ConfigError(f"missing section [{sec}]")
        W = rd.matrix("plant", "W")
        if W.ndim != 2 or W.shape[1] != 2 or np.any(W[:, 0] > W[:, 1]):
            rd.fail("plant", "W", "must be a list of [low, high] intervals")
        n_w = W.shape[0]
        mats = {name: _uncertain(rd, name, n_w) for name in _PLANT_MATRICES}
        try:
            plant = UncertainPlant(n=rd.get("plant", "n", int), r=rd.get("plant", "r", int), W=W, **mats)
        except RegulationError as exc:
            rd.fail("plant", None, str(exc))
        exo = Exosystem(rd.matrix("exosystem", "S"))
        v0 = rd.get("exosystem", "v0", lambda v: tuple(float(x) for x in v))
        if len(v0) != exo.q:
            rd.fail("exosystem", "v0", f"needs {exo.q} entries")
        if plant.q != exo.q:
            rd.fail("exosystem", "S", f"is {exo.q}x{exo.q} but F has {plant.q} columns")
        try:
            actuator = ActuatorBank(rd.get("actuator", "a", float), rd.get("actuator", "b_a", float),
                                    rd.get("actuator", "N", int, default=1))
        except ValueError as exc:
            rd.fail("actuator", None, str(exc))
        graph = None
        if "graph" in data:
            edges = rd.get("graph", "edges", lambda v: [tuple(e) for e in v])
            try:
                graph = Graph.from_edges(actuator.N, [(int(e[0]) - 1, int(e[1]) - 1, *e[2:]) for e in edges])
            except (IndexError, ValueError) as exc:
                rd.fail("graph", "edges", str(exc))
        elif actuator.N > 1:
            graph = Graph.ring(actuator.N)
        im = {k: rd.matrix("internal_model", k) for k in ("M1", "N1", "M2", "N2")}
        deltas = rd.get("observer", "deltas", lambda v: tuple(float(x) for x in v))
        if len(deltas) != plant.r:
            rd.fail("observer", "deltas", f"needs r = {plant.r} coefficients")
        try:
            gains = GainSet(rd.get("gains", "gammas", lambda v: tuple(float(x) for x in v), default=()),
                            rd.get("gains", "k1", float), rd.get("gains", "k2", float),
                            rd.get("gains", "h", float),
                            rd.get("gains", "sigma1", float, default=0.0, required=False),
                            rd.get("gains", "sigma2", float, default=0.0, required=False)).check_positive()
        except ValueError as exc:
            rd.fail("gains", None, str(exc))
        if gains.r != plant.r:
            rd.fail("gains", "gammas", f"needs r - 1 = {plant.r - 1} coefficients")
        sim = dict(seed=rd.get("simulation", "seed", int, default=0, required=False),
                   dt=rd.get("simulation", "dt", float, default=1e-3, required=False),
                   horizon=rd.get("simulation", "horizon", float, default=30.0, required=False),
                   decimate=rd.get("simulation", "decimate", int, default=10, required=False),
                   w_policy=rd.get("simulation", "w", _w_policy, default="vertex", required=False),
                   identical_observers=rd.get("simulation", "identical_observers", bool,
                                              default=True, required=False))
        if not isinstance(sim["w_policy"], str) and len(sim["w_policy"]) != n_w:
            rd.fail("simulation", "w", f"needs {n_w} entries")
        if sim["seed"] < 0 or sim["seed"] >= 2 ** 64:
            rd.fail("simulation", "seed", "must be an unsigned 64-bit integer")
        if sim["dt"] <= 0 or sim["horizon"] <= 0 or sim["decimate"] < 1:
            rd.fail("simulation", None, "dt, horizon and decimate must be positive")
        return ExperimentConfig(
            name=rd.get("", "name", str, default="experiment", required=False),
            plant=plant, exo=exo, actuator=actuator, graph=graph,
            M1=im["M1"], N1=im["N1"].reshape(-1, 1), M2=im["M2"], N2=im["N2"].reshape(-1, 1),
            deltas=deltas, gains=gains, v0=v0,
            margin=rd.get("certification", "margin", float, default=1e-6, required=False),
            grid=rd.get("certification", "grid", int, default=0, required=False),
            error_threshold=rd.get("thresholds", "error", float, default=0.02, required=False),
            sharing_threshold=rd.get("thresholds", "sharing", float, default=0.02, required=False),
            out=rd.get("output", "dir", str, default="out", required=False),
            **sim,
        )
    except RegulationError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def loads(text):
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from exc
    return from_dict(data, text)


def load(path):
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    return loads(text)


def resolve_w(cfg, im=None, obs=None):
    """Uncertainty value used for simulation under ``cfg.w_policy``."""
    W = cfg.plant.W
    if isinstance(cfg.w_policy, str):
        if cfg.w_policy == "center":
            return W.mean(axis=1)
        from .analysis import assemble_output_feedback
        from .regulator import build_internal_model, build_observer
        im = im or build_internal_model(cfg.exo, cfg.M1, cfg.N1, cfg.M2, cfg.N2)
        obs = obs or build_observer(cfg.deltas, cfg.gains.h, cfg.plant.r)
        single = cfg.gains.single_equivalent(cfg.N)
        best, best_w = -np.inf, None
        for w in box_vertices(W):
            a = linalg.spectral_abscissa(assemble_output_feedback(cfg.plant, cfg.actuator, im, obs, single, w))
            if a > best:
                best, best_w = a, w
        return best_w
    return np.asarray(cfg.w_policy, dtype=float)
