"""How far does xi^T M^T N xi stray from its mean, uniformly over two sets?

We draw two small sets of random matrices, measure their complexity
(Gaussian width, Frobenius and operator radii), and compare the Monte-Carlo
tail of the uniform deviation against the calibrated tail bound. A second
pass sums T independent deviations and checks the sqrt(T) growth.
"""
import numpy as np

from sketchlab import RandomSource
from sketchlab import calibration, chaos, geometry

Ms, Ns = calibration.chaos_fixture_sets()
pM, pN = calibration.chaos_fixture_profiles()
print(f"width(M) = {pM.width_mean:.3f} +- {pM.width_stderr:.3f}, d_F = {pM.d_F:.3f}, d_op = {pM.d_op:.3f}")

consts = calibration.load_constants()["chaos"]["gaussian_unit"]
bt = chaos.bound_triple(pM, pN, consts["c1"], consts["c2"])
print(f"W = {bt.W:.2f}, V = {bt.V:.2f}, U = {bt.U:.2f} (c1 = {bt.c1}, c2 = {bt.c2})")

study = chaos.mc_deviation_study(Ms, Ns, "gaussian_unit", 20_000, 1, RandomSource(1, 0))
eps = calibration.chaos_eps_grid(bt)
emp, bound = calibration.chaos_tail_table(study.samples, bt, eps)
print("\n  eps     empirical  bound")
for e, a, b in zip(eps, emp, bound):
    print(f"{e:7.2f}  {a:9.5f}  {b:7.5f}")

# sums of T independent chaos terms grow like sqrt(T)
Ts = [1, 4, 16, 64]
med = [np.median(chaos.mc_deviation_study(Ms, Ns, "rademacher", 500, T, RandomSource(2, T)).samples)
       for T in Ts]
slope = np.polyfit(np.log(Ts), np.log(med), 1)[0]
print(f"\nmedian summed deviation {np.round(med, 2)}; log-log slope {slope:.3f}")
