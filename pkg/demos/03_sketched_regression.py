"""Regression on sketched covariates x -> S x, then de-sketching the fit.

With b < d the de-sketched estimate can only recover the part of beta*
visible through the sketch, yet for sparse beta* it still predicts better
than regressing on b randomly chosen coordinates, measured by the worst
coordinate error.
"""
import numpy as np

from sketchlab import RandomSource
from sketchlab.calibration import regression_trial
from sketchlab.regression import fit_coordinates, fit_sketched, gen_regression, prediction_error, sparse_unit_beta

E = np.eye(64)
wins = 0
for seed in range(20):
    beta = sparse_unit_beta(64, 8, RandomSource(seed, 0))
    inst = gen_regression(64, 512, beta, 0.1, RandomSource(seed, 1))
    fit = fit_sketched(inst, 32, src=RandomSource(seed, 2))
    coords = RandomSource(seed, 3).generator().choice(64, 32, replace=False)
    e_sk = prediction_error(fit, inst, E)
    e_co = prediction_error(fit_coordinates(inst, coords), inst, E)
    wins += e_sk < e_co
print(f"sketched fit beats random coordinates on {wins}/20 instances")

# the bound is stated for the fixture's 32 unit probe directions
errs, bounds = zip(*[(e, t["total"]) for e, t in (regression_trial(7, i) for i in range(100))])
print(f"probe error median {np.median(errs):.3f}, bound median {np.median(bounds):.3f}, "
      f"coverage {np.mean(np.array(errs) <= np.array(bounds)):.0%}")
