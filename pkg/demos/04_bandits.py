"""Sketched LinUCB and LinTS against their full-dimensional baselines.

All four policies face the same sparse environment. Per-round cost drops
with the sketch, while regret picks up the restricted-isometry defect
(term II of the decomposition) on top of the sketched-space regret.
"""
import numpy as np

from sketchlab.bandits import POLICIES, compare_policies, regret_terms

res = compare_policies(d=200, K=4, T=1000, b=32, s=20, sigma=1.0, trials=3, seed=4)
print(f"{'policy':>10} {'regret':>8} {'term I':>8} {'term II':>8} {'us/round':>9}")
for name in POLICIES:
    traces = res[name]
    reg = np.mean([t.cum_regret[-1] for t in traces])
    I, II = np.mean([regret_terms(t) for t in traces], axis=0)
    us = np.mean([t.wall_ns.mean() for t in traces]) / 1e3
    print(f"{name:>10} {reg:8.1f} {I:8.1f} {II:8.1f} {us:9.0f}")
