"""Variational Trotter compression of Heisenberg spin-chain dynamics on a
statevector simulator, with sampled and noisy-device cost estimation."""

from __future__ import annotations

from .circuits import (
    AnsatzParams,
    ResourceCount,
    build_ansatz_circuit,
    build_double_contour_circuit,
    build_swap_test_circuit,
    build_trotter_circuit,
    count_two_qubit_gates,
    decompose,
    dump_circuit,
    load_circuit,
    parameter_count,
    trotter_params,
)
from .mitigation import (
    EmptyPostSelectionError,
    MitigationConfig,
    ReadoutCalibration,
    apply_readout_correction,
    build_readout_calibration,
    fold_circuit,
    mitigated_cost,
    pauli_twirl,
    postselect_sz,
    zne_extrapolate,
)
from .model import (
    Boundary,
    ExactEvolver,
    SpinChainModel,
    Variant,
    build_hamiltonian,
    exact_evolve,
    fidelity,
    half_chain_entropy,
    neel_label,
    neel_state,
)
from .noise import (
    CostEstimate,
    NoiseModel,
    cost_from_histogram,
    estimate_cost_exact,
    estimate_cost_sampled,
    execute_noisy,
)
from .optimize import OptimizerConfig, OptimizerKind, OptResult, finite_difference_gradient, minimize
from .statevector import (
    Circuit,
    GateKind,
    GateOp,
    StateVector,
    apply_circuit,
    apply_gate,
    inner_product,
    sample_counts,
)
from .vtc import (
    CostMode,
    LayerRequirementRow,
    OverlapCircuit,
    VtcAborted,
    VtcConfig,
    VtcRecord,
    best_compression_diagnostics,
    direct_trotter_fidelity,
    layer_requirement,
    run_vtc,
)

__version__ = "0.1.0"
