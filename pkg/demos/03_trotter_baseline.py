"""Direct Trotter circuits with a fixed gate count lose fidelity as time grows."""

# %%
from __future__ import annotations

import numpy as np

from vtc import SpinChainModel, direct_trotter_fidelity

model = SpinChainModel(3, boundary="open")

# %% [markdown]
# The Trotter error at fixed total time shrinks as ``1/n**2``.

# %%
for n in (4, 8, 16, 32):
    (_, f), = direct_trotter_fidelity(model, n, [4.0])
    print(f"n={n:3d}  infidelity at Jt=4: {1 - f:.3e}")

# %% [markdown]
# With a circuit of only six steps the fidelity collapses once the step
# size grows beyond about 1/J.

# %%
for t, f in direct_trotter_fidelity(model, 6, np.arange(0.0, 30.1, 3.0)):
    print(f"Jt={t:4.1f}  F={f:.3f}")
