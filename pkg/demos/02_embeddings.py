"""Gaussian sketches as norm- and inner-product-preserving embeddings.

The JL dimension grows with log N and 1/eps^2; the inner-product dimension
is governed by the Gaussian widths of the two sets instead of their sizes.
"""
import numpy as np

from sketchlab import RandomSource, make_sketch
from sketchlab.embedding import check_inner_products, check_rip, inner_required_dim, jlt_required_dim
from sketchlab.geometry import finite_width_bound

gen = RandomSource(3, 0).generator()
X = gen.standard_normal((64, 512))
X /= np.linalg.norm(X, axis=1, keepdims=True)

b = jlt_required_dim(0.25, 64)
reports = [check_rip(make_sketch(b, 512, RandomSource(3, 1).spawn(i)), X, 0.25) for i in range(50)]
print(f"JL: b = {b}, all norms within 25% in {np.mean([r.passed for r in reports]):.0%} of sketches, "
      f"mean worst distortion {np.mean([r.max_norm_distortion for r in reports]):.3f}")

U, V = X[:32], X[32:]
wU, wV = finite_width_bound(U), finite_width_bound(V)
for c in (1.0, 4.0):
    b = inner_required_dim(0.3, wU, wV, c)
    reps = [check_inner_products(make_sketch(b, 512, RandomSource(3, 2).spawn(i)), U, V, 0.3)
            for i in range(50)]
    print(f"inner products, c = {c}: b = {b}, pass rate {np.mean([r.passed for r in reps]):.0%}")
