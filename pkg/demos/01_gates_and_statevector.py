"""Gates, circuits and the statevector simulator.

Run with ``python3 demos/01_gates_and_statevector.py``.
"""

# %%
from __future__ import annotations

import numpy as np

from vtc import Circuit, GateKind, GateOp, StateVector, apply_circuit, decompose, sample_counts

# %% [markdown]
# Qubit ``q`` is bit ``q`` of the basis index, and labels are written in qubit
# order, so ``"10"`` means qubit 0 is up and qubit 1 is down.

# %%
psi = StateVector.basis("10")
print("index of |10>:", int(np.argmax(np.abs(psi.amplitudes))))

# %% [markdown]
# The Heisenberg gate ``exp(-i a (XX + YY + ZZ))`` swaps |01> and |10> at
# ``a = pi/4`` up to a global phase.

# %%
swap = Circuit(2, [GateOp(GateKind.HEIS, (0, 1), np.pi / 4)])
out = apply_circuit(psi, swap)
print("|<01|HEIS(pi/4)|10>|^2 =", round(abs(out.amplitudes[2]) ** 2, 12))

# %% [markdown]
# Lowering to CNOTs and rotations keeps the unitary intact.

# %%
lowered = decompose(swap)
print("lowered gates:", [op.kind.value for op in lowered])
rng = np.random.default_rng(0)
probe = StateVector.random(2, rng)
overlap = abs(np.vdot(apply_circuit(probe, swap).amplitudes, apply_circuit(probe, lowered).amplitudes))
print("overlap of native and lowered output:", round(overlap, 12))

# %%
bell = Circuit(2, [GateOp(GateKind.HADAMARD, (0,)), GateOp(GateKind.CNOT, (0, 1))])
print("Bell-state counts:", sample_counts(apply_circuit(StateVector(2), bell), 1000, seed=1))
