"""Two-qubit gate counts of the overlap circuits."""

# %%
from __future__ import annotations

from vtc import (
    SpinChainModel,
    build_double_contour_circuit,
    build_swap_test_circuit,
    build_ansatz_circuit,
    count_two_qubit_gates,
    decompose,
    trotter_params,
)

for m in (3, 4, 5, 6):
    model = SpinChainModel(m)
    p = trotter_params(model, 1.0, 2)
    contour = build_double_contour_circuit(p, model, 1.0, 2, p)
    swap = build_swap_test_circuit(build_ansatz_circuit(p), build_ansatz_circuit(p))
    c, s = count_two_qubit_gates(decompose(contour)), count_two_qubit_gates(decompose(swap))
    print(f"M={m}  double contour: {c}   swap test: {s}")

# %% [markdown]
# The double-contour circuit needs M qubits, the swap test 2M + 1, and
# every controlled swap lowers to eight CNOTs.
