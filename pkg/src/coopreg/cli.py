"""Command-line entry point and the synthesis -> certification -> simulation pipeline.

Exit codes: 0 pass, 2 configuration error, 3 certification failure,
4 regulation or sharing threshold violated.
"""
import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import config as cfgmod
from .analysis import certify
from .errors import AssumptionViolated, CertificationFailed, ConfigError, Diverged, RegulationError, UnknownExample
from .experiments import EXAMPLES, builtin
from .models import default_samples, validate_assumptions
from .regulator import build_internal_model, build_observer
from .sim import ClosedLoopSystem, metrics, random_initial_state, simulate, write_csv

__all__ = ["PipelineResult", "run_pipeline", "run_example", "main", "main_exit"]

EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_THRESHOLD = 0, 2, 3, 4


@dataclass
class PipelineResult:
    config: cfgmod.ExperimentConfig
    report: object
    w: np.ndarray = None
    metrics: object = None
    diverged: bool = False
    paths: dict = field(default_factory=dict)

    @property
    def thresholds_met(self):
        if self.diverged or self.metrics is None:
            return False
        m = self.metrics
        return (m.tail_max_error < self.config.error_threshold
                and m.tail_max_sharing < self.config.sharing_threshold)

    @property
    def exit_code(self):
        if self.metrics is None and not self.diverged:
            return EXIT_CERT
        if not self.thresholds_met:
            return EXIT_THRESHOLD
        return EXIT_OK if self.report.passed else EXIT_CERT


def synthesize(cfg):
    im = build_internal_model(cfg.exo, cfg.M1, cfg.N1, cfg.M2, cfg.N2)
    obs = build_observer(cfg.deltas, cfg.gains.h, cfg.plant.r)
    return im, obs


def check_assumptions(cfg):
    rep = validate_assumptions(cfg.plant, cfg.exo, cfg.graph, default_samples(cfg.plant))
    if not rep.passed:
        names = "; ".join(f"{n} ({d})" for n, d in rep.failures())
        raise AssumptionViolated(f"assumption check failed: {names}", rep)
    return rep


def certify_config(cfg, im=None, obs=None):
    if im is None:
        im, obs = synthesize(cfg)
    return certify(cfg.plant, cfg.exo, cfg.actuator, cfg.graph, im, obs, cfg.gains,
                   margin=cfg.margin, grid=cfg.grid)


def run_pipeline(cfg, out=None, force=False, write=True):
    """Validate, synthesize, certify, simulate and score one configuration.

    Raises :class:`CertificationFailed` (naming the failed checks) when the
    certificate does not hold and ``force`` is false.
    """
    out = cfg.out if out is None else out
    check_assumptions(cfg)
    im, obs = synthesize(cfg)
    report = certify_config(cfg, im, obs)
    result = PipelineResult(config=cfg, report=report)
    if write:
        os.makedirs(out, exist_ok=True)
        result.paths["certification"] = os.path.join(out, f"{cfg.name}_certification.txt")
        report.write(result.paths["certification"])
    if not report.passed and not force:
        failed = sorted({r.name for r in report.failures()})
        raise CertificationFailed("certification failed: " + ", ".join(failed), report)

    w = cfgmod.resolve_w(cfg, im, obs)
    result.w = w
    sys_ = ClosedLoopSystem(cfg.plant, cfg.exo, cfg.actuator, im, cfg.deltas, cfg.gains, cfg.graph, w)
    rng = np.random.default_rng(cfg.seed)
    x0 = random_initial_state(sys_, rng, cfg.v0, identical_observers=cfg.identical_observers)
    try:
        traj = simulate(sys_, x0, cfg.dt, cfg.horizon, decimate=1)
    except Diverged:
        result.diverged = True
        traj = None
    if traj is not None:
        result.metrics = metrics(traj, threshold=cfg.error_threshold)
        if write:
            result.paths["trajectory"] = os.path.join(out, f"{cfg.name}_trajectory.csv")
            write_csv(traj, result.paths["trajectory"], decimate=cfg.decimate)
    if write:
        summary = {
            "name": cfg.name, "seed": int(cfg.seed), "dt": cfg.dt, "horizon": cfg.horizon,
            "w": [float(x) for x in w], "v0": list(cfg.v0),
            "certified": report.passed, "diverged": result.diverged,
            "metrics": None if result.metrics is None else result.metrics.as_dict(),
            "thresholds": {"error": cfg.error_threshold, "sharing": cfg.sharing_threshold},
            "thresholds_met": result.thresholds_met,
        }
        result.paths["metrics"] = os.path.join(out, f"{cfg.name}_metrics.json")
        with open(result.paths["metrics"], "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return result


def run_example(name, out=None, force=False, write=True, **overrides):
    """Run a built-in experiment; ``overrides`` replace config fields."""
    cfg = builtin(name)
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    return run_pipeline(cfg, out=out, force=force, write=write)


def _parse_w(text):
    if text in ("vertex", "center"):
        return text
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"--w expects vertex, center or numbers, got {text!r}")


def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError("must be positive")
        return v
    return conv


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed)
    common.add_argument("--dt", type=_positive(float))
    common.add_argument("--horizon", type=_positive(float))
    common.add_argument("--w", type=_parse_w, help="vertex, center, or comma-separated values")
    common.add_argument("--out", help="output directory")
    common.add_argument("--force", action="store_true", help="simulate even if certification fails")
    common.add_argument("--decimate", type=_positive(int), help="write every k-th step")

    p = argparse.ArgumentParser(prog="coopreg", description="Cooperative robust output regulation experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    ex = sub.add_parser("example", parents=[common], help="run a built-in experiment")
    ex.add_argument("name", choices=EXAMPLES)
    run = sub.add_parser("run", parents=[common], help="run a configuration file")
    run.add_argument("config")
    cert = sub.add_parser("certify", parents=[common], help="certify a configuration file")
    cert.add_argument("config")
    dump = sub.add_parser("dump-config", help="print a built-in configuration")
    dump.add_argument("name", choices=EXAMPLES)
    dump.add_argument("--out", help="write to this file instead of stdout")
    return p


def _apply_flags(cfg, args):
    kw = {}
    for flag, key in (("seed", "seed"), ("dt", "dt"), ("horizon", "horizon"), ("decimate", "decimate"),
                      ("out", "out"), ("w", "w_policy")):
        val = getattr(args, flag, None)
        if val is not None:
            kw[key] = val
    if not isinstance(kw.get("w_policy", "vertex"), str) and len(kw["w_policy"]) != cfg.plant.n_w:
        raise ConfigError(f"--w needs {cfg.plant.n_w} values")
    return cfg.with_overrides(**kw) if kw else cfg


def _summary(result, stream):
    cfg = result.config
    print(f"{cfg.name}: certification {'pass' if result.report.passed else 'FAIL'} "
          f"({result.report.sampling})", file=stream)
    if result.diverged:
        print(f"{cfg.name}: simulation diverged", file=stream)
    elif result.metrics is not None:
        m = result.metrics
        line = f"{cfg.name}: seed={cfg.seed} tail_max_error={m.tail_max_error:.3e}"
        if cfg.N > 1:
            line += f" tail_max_sharing={m.tail_max_sharing:.3e}"
        print(line, file=stream)
    for kind, path in sorted(result.paths.items()):
        print(f"  {kind}: {path}", file=stream)


def main(argv=None, stream=None):
    stream = sys.stdout if stream is None else stream
    args = build_parser().parse_args(argv)
    try:
        if args.command == "dump-config":
            text = cfgmod.dumps(builtin(args.name))
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                stream.write(text)
            return EXIT_OK
        cfg = builtin(args.name) if args.command == "example" else cfgmod.load(args.config)
        cfg = _apply_flags(cfg, args)
        if args.command == "certify":
            check_assumptions(cfg)
            report = certify_config(cfg)
            stream.write(report.to_text())
            if args.out:
                os.makedirs(args.out, exist_ok=True)
                report.write(os.path.join(args.out, f"{cfg.name}_certification.txt"))
            return EXIT_OK if report.passed else EXIT_CERT
        result = run_pipeline(cfg, force=args.force)
        _summary(result, stream)
        return result.exit_code
    except (ConfigError, UnknownExample, AssumptionViolated, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CERT
    except RegulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
