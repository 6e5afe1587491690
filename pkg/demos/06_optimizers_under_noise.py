"""CMA-ES and finite-difference BFGS on a noisy objective.

Shot noise of order 1e-2 swamps finite-difference gradients, while the
population-based CMA-ES only needs a consistent ranking of candidates.
"""

# %%
from __future__ import annotations

import numpy as np

from vtc import OptimizerConfig, OptimizerKind, minimize

rng = np.random.default_rng(7)


def noisy_sphere(x):
    return float(np.sum(np.asarray(x) ** 2) + 1e-2 * abs(rng.standard_normal()))


x0 = np.full(6, 0.5)
for kind in OptimizerKind:
    cfg = OptimizerConfig(kind=kind, tolerance=5e-2, max_evaluations=2000, seed=1)
    result = minimize(noisy_sphere, x0, cfg)
    print(f"{kind.value:13s} best={result.best_value:.4f} converged={result.converged} evals={result.evaluations}")
