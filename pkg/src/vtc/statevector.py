"""Dense statevector simulation with bit-sliced gate kernels.

Qubit ``q`` is bit ``q`` of the basis index (qubit 0 is the least significant
bit).  Basis labels are strings read in qubit order, so the label ``"10"``
means qubit 0 is set, i.e. basis index 1.  This matches writing kets site by
site, as in ``|0101...>``.

Kernels operate on views of the amplitude array reshaped to one axis per
qubit, so no dense matrix of the full register is ever formed.  Every kernel
also accepts leading batch axes, which the trajectory noise simulator uses to
evolve many noise realizations at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping

import numpy as np


class GateKind(str, Enum):
    RZ = "RZ"
    RY = "RY"
    HADAMARD = "H"
    PAULI_X = "X"
    PAULI_Y = "Y"
    PAULI_Z = "Z"
    CNOT = "CNOT"
    HEIS = "HEIS"
    ZZ = "ZZ"
    CSWAP = "CSWAP"


ARITY = {
    GateKind.RZ: 1,
    GateKind.RY: 1,
    GateKind.HADAMARD: 1,
    GateKind.PAULI_X: 1,
    GateKind.PAULI_Y: 1,
    GateKind.PAULI_Z: 1,
    GateKind.CNOT: 2,
    GateKind.HEIS: 2,
    GateKind.ZZ: 2,
    GateKind.CSWAP: 3,
}

PARAMETRIC = frozenset({GateKind.RZ, GateKind.RY, GateKind.HEIS, GateKind.ZZ})
PAULIS = frozenset({GateKind.PAULI_X, GateKind.PAULI_Y, GateKind.PAULI_Z})


@dataclass(frozen=True)
class GateOp:
    """One gate application.

    Angle conventions (radians): ``RZ(t) = exp(-i t Z / 2)``,
    ``RY(t) = exp(-i t Y / 2)``, ``HEIS(a) = exp(-i a (XX + YY + ZZ))`` and
    ``ZZ(g) = exp(-i g ZZ)``.  For ``CNOT`` the targets are
    ``(control, target)``; for ``CSWAP`` the control comes first.
    """

    kind: GateKind
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        if len(self.targets) != ARITY[self.kind]:
            raise ValueError(
                f"{self.kind.value} acts on {ARITY[self.kind]} qubit(s), got targets {self.targets}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated target in {self.targets}")
        if any(q < 0 for q in self.targets):
            raise ValueError(f"negative target in {self.targets}")
        if self.kind in PARAMETRIC:
            if self.angle is None:
                raise ValueError(f"{self.kind.value} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValueError(f"{self.kind.value} takes no angle")

    @property
    def is_multi_qubit(self) -> bool:
        return len(self.targets) > 1

    def inverse(self) -> GateOp:
        # every generator here is Hermitian and every fixed gate is self-inverse
        if self.kind in PARAMETRIC:
            return GateOp(self.kind, self.targets, -self.angle)
        return self


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[GateOp, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        for op in self.ops:
            if max(op.targets) >= self.num_qubits:
                raise ValueError(f"{op} does not fit a {self.num_qubits}-qubit register")

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.ops)

    def __add__(self, other: Circuit) -> Circuit:
        if other.num_qubits != self.num_qubits:
            raise ValueError(f"cannot join {self.num_qubits}- and {other.num_qubits}-qubit circuits")
        return Circuit(self.num_qubits, self.ops + other.ops)

    def inverse(self) -> Circuit:
        return Circuit(self.num_qubits, tuple(op.inverse() for op in reversed(self.ops)))

    def remap(self, mapping: Mapping[int, int] | Iterable[int], num_qubits: int) -> Circuit:
        """Relabel qubits (``mapping[old] = new``) onto a register of ``num_qubits``."""
        mapping = list(mapping) if not isinstance(mapping, Mapping) else mapping
        return Circuit(
            num_qubits,
            tuple(GateOp(op.kind, tuple(mapping[q] for q in op.targets), op.angle) for op in self.ops),
        )


class StateVector:
    """Amplitudes of an ``num_qubits``-qubit pure state (complex128)."""

    def __init__(self, num_qubits: int, amplitudes=None):
        if num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        self.num_qubits = int(num_qubits)
        dim = 1 << self.num_qubits
        if amplitudes is None:
            amplitudes = np.zeros(dim, dtype=np.complex128)
            amplitudes[0] = 1.0
        else:
            amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
            if amplitudes.shape != (dim,):
                raise ValueError(f"expected {dim} amplitudes, got shape {amplitudes.shape}")
        self.amplitudes = amplitudes

    @classmethod
    def basis(cls, label: str | int, num_qubits: int | None = None) -> StateVector:
        if isinstance(label, str):
            num_qubits = len(label) if num_qubits is None else num_qubits
            index = label_to_index(label, num_qubits)
        else:
            if num_qubits is None:
                raise ValueError("num_qubits is required for an integer basis index")
            index = int(label)
        state = cls(num_qubits, np.zeros(1 << num_qubits, dtype=np.complex128))
        state.amplitudes[index] = 1.0
        return state

    @classmethod
    def random(cls, num_qubits: int, rng: np.random.Generator | int | None = None) -> StateVector:
        """Haar-random state."""
        rng = np.random.default_rng(rng)
        dim = 1 << num_qubits
        amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return cls(num_qubits, amps / np.linalg.norm(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def copy(self) -> StateVector:
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


# -- basis labels -------------------------------------------------------------

def label_to_index(label: str, num_qubits: int | None = None) -> int:
    if num_qubits is not None and len(label) != num_qubits:
        raise ValueError(f"label {label!r} has length {len(label)}, expected {num_qubits}")
    if not label or set(label) - {"0", "1"}:
        raise ValueError(f"invalid basis label {label!r}")
    return int(label[::-1], 2)


def index_to_label(index: int, num_qubits: int) -> str:
    return format(int(index), f"0{num_qubits}b")[::-1]


def hamming_weight(label: str | int) -> int:
    if isinstance(label, str):
        return label.count("1")
    return int(label).bit_count()


# -- kernels ------------------------------------------------------------------

def _slice(tensor: np.ndarray, num_qubits: int, bits: Mapping[int, int]) -> np.ndarray:
    """View of ``tensor`` (shape ``(B, 2, ..., 2)``) with given qubits fixed."""
    idx = [slice(None)] * (num_qubits + 1)
    for q, b in bits.items():
        idx[num_qubits - q] = b
    return tensor[tuple(idx)]


def _apply_1q(t, m, q, u00, u01, u10, u11):
    x0 = _slice(t, m, {q: 0})
    x1 = _slice(t, m, {q: 1})
    new0 = u00 * x0 + u01 * x1
    x1 *= u11
    x1 += u10 * x0
    x0[...] = new0


def apply_gate_inplace(amplitudes: np.ndarray, num_qubits: int, gate: GateOp) -> None:
    """Apply ``gate`` to a C-contiguous amplitude array of shape ``(..., 2**num_qubits)``."""
    if max(gate.targets) >= num_qubits:
        raise ValueError(f"{gate} does not fit a {num_qubits}-qubit register")
    if not amplitudes.flags.c_contiguous:
        raise ValueError("amplitude array must be C-contiguous")
    t = amplitudes.reshape((-1,) + (2,) * num_qubits)
    m = num_qubits
    kind = gate.kind

    if kind is GateKind.RZ:
        q, = gate.targets
        _slice(t, m, {q: 0})[...] *= np.exp(-0.5j * gate.angle)
        _slice(t, m, {q: 1})[...] *= np.exp(0.5j * gate.angle)
    elif kind is GateKind.RY:
        c, s = np.cos(gate.angle / 2), np.sin(gate.angle / 2)
        _apply_1q(t, m, gate.targets[0], c, -s, s, c)
    elif kind is GateKind.HADAMARD:
        r = 1 / np.sqrt(2)
        _apply_1q(t, m, gate.targets[0], r, r, r, -r)
    elif kind is GateKind.PAULI_X:
        q, = gate.targets
        x0, x1 = _slice(t, m, {q: 0}), _slice(t, m, {q: 1})
        tmp = x0.copy()
        x0[...] = x1
        x1[...] = tmp
    elif kind is GateKind.PAULI_Y:
        q, = gate.targets
        x0, x1 = _slice(t, m, {q: 0}), _slice(t, m, {q: 1})
        tmp = x0.copy()
        x0[...] = -1j * x1
        x1[...] = 1j * tmp
    elif kind is GateKind.PAULI_Z:
        _slice(t, m, {gate.targets[0]: 1})[...] *= -1
    elif kind is GateKind.CNOT:
        c, q = gate.targets
        x0, x1 = _slice(t, m, {c: 1, q: 0}), _slice(t, m, {c: 1, q: 1})
        tmp = x0.copy()
        x0[...] = x1
        x1[...] = tmp
    elif kind is GateKind.HEIS:
        # XX + YY + ZZ = 2 SWAP - 1, so HEIS(a) = e^{ia} (cos 2a - i sin 2a SWAP)
        a, b = gate.targets
        alpha = gate.angle
        same = np.exp(-1j * alpha)
        _slice(t, m, {a: 0, b: 0})[...] *= same
        _slice(t, m, {a: 1, b: 1})[...] *= same
        x01, x10 = _slice(t, m, {a: 0, b: 1}), _slice(t, m, {a: 1, b: 0})
        ph = np.exp(1j * alpha)
        c, s = ph * np.cos(2 * alpha), -1j * ph * np.sin(2 * alpha)
        new01 = c * x01 + s * x10
        x10 *= c
        x10 += s * x01
        x01[...] = new01
    elif kind is GateKind.ZZ:
        a, b = gate.targets
        even, odd = np.exp(-1j * gate.angle), np.exp(1j * gate.angle)
        _slice(t, m, {a: 0, b: 0})[...] *= even
        _slice(t, m, {a: 1, b: 1})[...] *= even
        _slice(t, m, {a: 0, b: 1})[...] *= odd
        _slice(t, m, {a: 1, b: 0})[...] *= odd
    elif kind is GateKind.CSWAP:
        c, a, b = gate.targets
        x01, x10 = _slice(t, m, {c: 1, a: 0, b: 1}), _slice(t, m, {c: 1, a: 1, b: 0})
        tmp = x01.copy()
        x01[...] = x10
        x10[...] = tmp
    else:  # pragma: no cover
        raise ValueError(f"unknown gate kind {kind}")


def apply_circuit_inplace(amplitudes: np.ndarray, circuit: Circuit) -> None:
    for op in circuit.ops:
        apply_gate_inplace(amplitudes, circuit.num_qubits, op)


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    out = state.copy()
    apply_gate_inplace(out.amplitudes, out.num_qubits, gate)
    return out


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if circuit.num_qubits != state.num_qubits:
        raise ValueError(
            f"circuit has {circuit.num_qubits} qubits but state has {state.num_qubits}"
        )
    out = state.copy()
    apply_circuit_inplace(out.amplitudes, circuit)
    return out


# -- observables ----------------------------------------------------------------

def inner_product(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugating the first argument."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"size mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def basis_probability(state: StateVector, bitstring: str) -> float:
    index = label_to_index(bitstring, state.num_qubits)
    return float(abs(state.amplitudes[index]) ** 2)


def sample_counts(state: StateVector, shots: int, seed: int | np.random.Generator | None) -> dict[str, int]:
    """Draw ``shots`` computational-basis measurements.

    Returns a histogram keyed by basis label, ordered by basis index, with
    zero-count outcomes omitted.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    probs = state.probabilities()
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs)
    return counts_to_histogram(counts, state.num_qubits)


def counts_to_histogram(counts: np.ndarray, num_qubits: int) -> dict[str, int]:
    nz = np.flatnonzero(counts)
    return {index_to_label(i, num_qubits): int(counts[i]) for i in nz}
