"""
Reading a certificate
=====================

Certification checks every closed-loop matrix the design relies on at the
vertices of the uncertainty box. With k2 too small to stabilize the
actuators, every check fails, and the report says where.
"""
from coopreg.cli import certify_config
from coopreg.experiments import builtin
from coopreg.regulator import GainSet

cfg = builtin("exp2-multi")
report = certify_config(cfg)
print(report.to_text().splitlines()[0], "|", report.sampling)
for name in sorted({r.name for r in report.records}):
    rec = report.worst(name)
    print(f"  {name:<22} worst abscissa {rec.abscissa:+.4f} at {rec.params}")

g = cfg.gains
weak = cfg.with_overrides(gains=GainSet(g.gammas, g.k1, 0.05, g.h, g.sigma1, g.sigma2))
report = certify_config(weak)
print("\nwith k2 = 0.05:")
for name in sorted({r.name for r in report.records}):
    recs = [r for r in report.records if r.name == name]
    bad = sum(not r.passed for r in recs)
    print(f"  {name:<22} {bad}/{len(recs)} failed, worst abscissa {report.worst(name).abscissa:+.4f}")
