from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.stats import chisquare

from vtc.statevector import (
    ARITY,
    PARAMETRIC,
    Circuit,
    GateKind,
    GateOp,
    StateVector,
    apply_circuit,
    apply_gate,
    basis_probability,
    hamming_weight,
    index_to_label,
    inner_product,
    label_to_index,
    sample_counts,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])
I2 = np.eye(2)


def kron_in_qubit_order(*mats):
    # qubit 0 is the least significant bit, so it is the last Kronecker factor
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(m, out)
    return out


def gate_matrix(op: GateOp) -> np.ndarray:
    k = len(op.targets)
    cols = []
    for j in range(1 << k):
        amps = np.zeros(1 << k, dtype=complex)
        amps[j] = 1.0
        state = apply_gate(StateVector(k, amps), GateOp(op.kind, tuple(range(k)), op.angle))
        cols.append(state.amplitudes)
    return np.array(cols).T


def phase_aligned(a, b):
    return abs(abs(np.trace(a.conj().T @ b)) / a.shape[0] - 1)


def test_label_convention():
    assert label_to_index("10") == 1
    assert label_to_index("01") == 2
    assert index_to_label(1, 3) == "100"
    assert hamming_weight("0101") == 2
    assert StateVector.basis("010").amplitudes[2] == 1


@pytest.mark.parametrize(
    "kind, generator",
    [
        (GateKind.RZ, Z / 2),
        (GateKind.RY, Y / 2),
    ],
)
def test_rotations_match_expm(kind, generator, rng):
    for angle in rng.uniform(-4, 4, 5):
        want = expm(-1j * angle * generator)
        assert np.allclose(gate_matrix(GateOp(kind, (0,), angle)), want, atol=1e-12)


def test_two_qubit_generators_match_expm(rng):
    heis_gen = kron_in_qubit_order(X, X) + kron_in_qubit_order(Y, Y) + kron_in_qubit_order(Z, Z)
    zz_gen = kron_in_qubit_order(Z, Z)
    for angle in rng.uniform(-4, 4, 5):
        assert np.allclose(gate_matrix(GateOp(GateKind.HEIS, (0, 1), angle)), expm(-1j * angle * heis_gen), atol=1e-12)
        assert np.allclose(gate_matrix(GateOp(GateKind.ZZ, (0, 1), angle)), expm(-1j * angle * zz_gen), atol=1e-12)


def test_fixed_gates():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert np.allclose(gate_matrix(GateOp(GateKind.HADAMARD, (0,))), h)
    assert np.allclose(gate_matrix(GateOp(GateKind.PAULI_X, (0,))), X)
    assert np.allclose(gate_matrix(GateOp(GateKind.PAULI_Y, (0,))), Y)
    assert np.allclose(gate_matrix(GateOp(GateKind.PAULI_Z, (0,))), Z)
    # control is qubit 0 (low bit), target qubit 1
    cnot = gate_matrix(GateOp(GateKind.CNOT, (0, 1)))
    assert np.allclose(cnot @ np.eye(4)[:, 1], np.eye(4)[:, 3])
    assert np.allclose(cnot @ np.eye(4)[:, 2], np.eye(4)[:, 2])
    cswap = gate_matrix(GateOp(GateKind.CSWAP, (0, 1, 2)))
    # control set, qubit 1 set -> qubit 2 set: index 0b011 -> 0b101
    assert np.allclose(cswap @ np.eye(8)[:, 3], np.eye(8)[:, 5])
    assert np.allclose(cswap @ np.eye(8)[:, 2], np.eye(8)[:, 2])


def test_cnot_truth_table_on_labels():
    out = apply_gate(StateVector.basis("10"), GateOp(GateKind.CNOT, (0, 1)))
    assert basis_probability(out, "11") == pytest.approx(1.0)


def test_heis_identity_and_singlet_phase():
    state = StateVector.random(2, 3)
    same = apply_gate(state, GateOp(GateKind.HEIS, (0, 1), 0.0))
    assert np.allclose(same.amplitudes, state.amplitudes)
    singlet = StateVector(2, np.array([0, 1, -1, 0]) / np.sqrt(2))
    alpha = 0.37
    out = apply_gate(singlet, GateOp(GateKind.HEIS, (0, 1), alpha))
    assert np.allclose(out.amplitudes, np.exp(3j * alpha) * singlet.amplitudes, atol=1e-12)


def test_gate_validation():
    with pytest.raises(ValueError):
        GateOp(GateKind.RZ, (0,))
    with pytest.raises(ValueError):
        GateOp(GateKind.CNOT, (1, 1))
    with pytest.raises(ValueError):
        GateOp(GateKind.HADAMARD, (0,), 0.3)
    with pytest.raises(ValueError):
        Circuit(2, [GateOp(GateKind.HADAMARD, (2,))])
    with pytest.raises(ValueError):
        apply_gate(StateVector(2), GateOp(GateKind.CNOT, (0, 2)))


def test_apply_circuit_basics():
    s = StateVector.basis("0", 1)
    assert apply_circuit(s, Circuit(1)).amplitudes.tolist() == s.amplitudes.tolist()
    hh = Circuit(1, [GateOp(GateKind.HADAMARD, (0,))] * 2)
    assert np.allclose(apply_circuit(s, hh).amplitudes, s.amplitudes, atol=1e-12)
    with pytest.raises(ValueError):
        apply_circuit(StateVector(2), hh)


def test_inner_product_examples():
    s = StateVector.random(3, 0)
    assert inner_product(s, s) == pytest.approx(1.0, abs=1e-12)
    assert inner_product(StateVector.basis("00"), StateVector.basis("11")) == 0
    plus = StateVector(1, np.array([1, 1]) / np.sqrt(2))
    assert inner_product(StateVector.basis("0"), plus) == pytest.approx(1 / np.sqrt(2))
    with pytest.raises(ValueError):
        inner_product(StateVector(1), StateVector(2))


def test_basis_probability_examples():
    assert basis_probability(StateVector.basis("010"), "010") == 1.0
    bell = StateVector(2, np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert basis_probability(bell, "00") == pytest.approx(0.5)
    with pytest.raises(ValueError):
        basis_probability(bell, "000")


def test_sample_counts_examples():
    assert sample_counts(StateVector.basis("010"), 100, 1) == {"010": 100}
    plus = StateVector(1, np.array([1, 1]) / np.sqrt(2))
    shots = 2**13
    hist = sample_counts(plus, shots, 7)
    assert abs(hist["0"] / shots - 0.5) < 3 * np.sqrt(0.25 / shots)
    assert sample_counts(plus, shots, 7) == hist
    with pytest.raises(ValueError):
        sample_counts(plus, 0, 1)


def test_sample_counts_chi_square():
    state = StateVector.random(3, 11)
    shots = 2**16
    hist = sample_counts(state, shots, 5)
    observed = np.array([hist.get(index_to_label(i, 3), 0) for i in range(8)])
    _, pvalue = chisquare(observed, state.probabilities() * shots)
    assert pvalue > 1e-3


_GATE_KINDS = [k for k in GateKind]


@st.composite
def random_circuits(draw):
    m = draw(st.integers(3, 8))
    n = draw(st.integers(0, 500))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    ops = []
    for _ in range(n):
        kind = _GATE_KINDS[rng.integers(len(_GATE_KINDS))]
        targets = tuple(rng.choice(m, ARITY[kind], replace=False))
        ops.append(GateOp(kind, targets, rng.uniform(-np.pi, np.pi) if kind in PARAMETRIC else None))
    return Circuit(m, ops)


@settings(max_examples=25, deadline=None)
@given(random_circuits())
def test_norm_preserved_by_random_circuits(circuit):
    state = apply_circuit(StateVector.random(circuit.num_qubits, 0), circuit)
    assert abs(state.norm_squared() - 1) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(-6, 6), st.sampled_from([GateKind.HEIS, GateKind.ZZ]))
def test_sz_conserving_gates_do_not_leak(angle, kind):
    # superposition inside the weight-2 sector of 4 qubits
    amps = np.zeros(16, dtype=complex)
    for i in range(16):
        if bin(i).count("1") == 2:
            amps[i] = 1 + 0.1 * i
    state = StateVector(4, amps / np.linalg.norm(amps))
    for pair in [(0, 1), (1, 3), (2, 0)]:
        state = apply_gate(state, GateOp(kind, pair, angle))
    leak = sum(abs(state.amplitudes[i]) ** 2 for i in range(16) if bin(i).count("1") != 2)
    assert leak < 1e-12


def test_circuit_inverse_and_remap():
    ops = [GateOp(GateKind.RY, (0,), 0.3), GateOp(GateKind.CNOT, (0, 1)), GateOp(GateKind.HEIS, (1, 2), 0.7)]
    c = Circuit(3, ops)
    s = StateVector.random(3, 2)
    back = apply_circuit(apply_circuit(s, c), c.inverse())
    assert np.allclose(back.amplitudes, s.amplitudes, atol=1e-12)
    moved = c.remap([2, 1, 0], 3)
    assert moved.ops[1].targets == (2, 1)


def test_batched_kernel_matches_single():
    from vtc.statevector import apply_gate_inplace

    states = np.stack([StateVector.random(3, s).amplitudes for s in range(4)])
    op = GateOp(GateKind.HEIS, (0, 2), 0.4)
    batch = states.copy()
    apply_gate_inplace(batch, 3, op)
    for row, amps in zip(batch, states):
        assert np.allclose(row, apply_gate(StateVector(3, amps), op).amplitudes)
