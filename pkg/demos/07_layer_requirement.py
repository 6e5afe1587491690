"""How many ansatz layers are needed to represent the evolved state.

The minimal layer count grows roughly linearly in time and saturates once
the ansatz can express any state of the relevant magnetization sector.
"""

# %%
from __future__ import annotations

from vtc import SpinChainModel, layer_requirement

model = SpinChainModel(4)
rows = layer_requirement(model, [0.0, 0.5, 1.0, 2.0, 4.0, 8.0], epsilon=1e-4, ell_max=8)
for row in rows:
    print(f"Jt={row.t:4.1f}  layers={row.ell_min}  infidelity={row.achieved_infidelity:.2e}")
