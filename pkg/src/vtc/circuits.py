"""Circuit builders: brickwall ansatz, Trotter propagator, overlap circuits.

Builders emit native ``HEIS`` and ``ZZ`` blocks.  :func:`decompose` lowers a
circuit to CNOTs and single-qubit rotations; resource counts and the noisy
executor work on the lowered form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Boundary, SpinChainModel, Variant
from .statevector import ARITY, Circuit, GateKind, GateOp, StateVector

_ROT = np.pi / 4


@dataclass(frozen=True)
class AnsatzParams:
    """Layered angles of the brickwall ansatz.

    ``theta[l, j]`` drives the j-th odd bond of layer ``l`` and ``phi[l, j]``
    the j-th even bond (including the closing bond for periodic chains of
    even length).  ``gamma`` holds the next-nearest ZZ angles and
    ``boundary_angle`` the closing bond of odd periodic chains; both are
    ``None`` when the layout has no such gates.
    """

    num_sites: int
    num_layers: int
    boundary: Boundary
    variant: Variant
    theta: np.ndarray
    phi: np.ndarray
    gamma: np.ndarray | None = None
    boundary_angle: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.num_layers < 0:
            raise ValueError("num_layers must be >= 0")
        shapes = _layout_shapes(self.chain, self.num_layers)
        for name, shape in shapes.items():
            value = getattr(self, name)
            if shape is None:
                if value is not None:
                    raise ValueError(f"{name} is not used by this layout")
                continue
            if value is None:
                raise ValueError(f"{name} is required for this layout")
            if np.size(value) != shape[0] * shape[1]:
                raise ValueError(f"{name} must have shape {shape}, got {np.shape(value)}")
            object.__setattr__(self, name, np.array(value, dtype=float).reshape(shape))

    @property
    def chain(self) -> SpinChainModel:
        return SpinChainModel(self.num_sites, 1.0, self.boundary, self.variant)

    @classmethod
    def zeros(cls, model: SpinChainModel, num_layers: int) -> AnsatzParams:
        return cls.from_vector(model, num_layers, np.zeros(parameter_count(model, num_layers)))

    @classmethod
    def from_vector(cls, model: SpinChainModel, num_layers: int, vector: Sequence[float]) -> AnsatzParams:
        """Inverse of :meth:`to_vector`; layer-major, in gate order within a layer."""
        vector = np.asarray(vector, dtype=float)
        shapes = _layout_shapes(model, num_layers)
        per_layer = {k: s[1] for k, s in shapes.items() if s is not None}
        if vector.size != num_layers * sum(per_layer.values()):
            raise ValueError(
                f"expected {num_layers * sum(per_layer.values())} parameters, got {vector.size}"
            )
        blocks = vector.reshape(num_layers, -1) if num_layers else np.zeros((0, sum(per_layer.values())))
        fields, start = {}, 0
        for name, width in per_layer.items():
            fields[name] = blocks[:, start:start + width]
            start += width
        return cls(model.num_sites, num_layers, model.boundary, model.variant, **fields)

    def to_vector(self) -> np.ndarray:
        parts = [self.theta, self.phi]
        if self.gamma is not None:
            parts.append(self.gamma)
        if self.boundary_angle is not None:
            parts.append(self.boundary_angle)
        return np.concatenate(parts, axis=1).ravel() if self.num_layers else np.zeros(0)

    @property
    def size(self) -> int:
        return parameter_count(self.chain, self.num_layers)

    def compatible_with(self, other: AnsatzParams) -> bool:
        return (self.num_sites, self.boundary, self.variant) == (
            other.num_sites, other.boundary, other.variant,
        )


def _layout_shapes(model: SpinChainModel, num_layers: int) -> dict[str, tuple[int, int] | None]:
    odd, even, boundary = model.bond_layers()
    nnn = model.next_nearest_bonds()
    return {
        "theta": (num_layers, len(odd)),
        "phi": (num_layers, len(even)),
        "gamma": (num_layers, len(nnn)) if nnn else None,
        "boundary_angle": (num_layers, len(boundary)) if boundary else None,
    }


def parameter_count(model: SpinChainModel, num_layers: int) -> int:
    """Number of ansatz angles; ``M * layers`` for periodic nearest-neighbour chains."""
    shapes = _layout_shapes(model, num_layers)
    return sum(s[0] * s[1] for s in shapes.values() if s is not None)


def _layer(chain: SpinChainModel, odd_a, even_a, zz_a, boundary_a) -> list[GateOp]:
    odd, even, boundary = chain.bond_layers()
    ops = [GateOp(GateKind.HEIS, b, a) for b, a in zip(odd, odd_a)]
    ops += [GateOp(GateKind.HEIS, b, a) for b, a in zip(even, even_a)]
    if zz_a is not None:
        ops += [GateOp(GateKind.ZZ, b, a) for b, a in zip(chain.next_nearest_bonds(), zz_a)]
    if boundary_a is not None:
        ops += [GateOp(GateKind.HEIS, b, a) for b, a in zip(boundary, boundary_a)]
    return ops


def build_ansatz_circuit(params: AnsatzParams) -> Circuit:
    chain = params.chain
    ops: list[GateOp] = []
    for l in range(params.num_layers):
        ops += _layer(
            chain,
            params.theta[l],
            params.phi[l],
            None if params.gamma is None else params.gamma[l],
            None if params.boundary_angle is None else params.boundary_angle[l],
        )
    return Circuit(params.num_sites, ops)


def build_trotter_circuit(model: SpinChainModel, tau: float, n: int) -> Circuit:
    """First-order product formula for ``exp(-i H tau)`` with ``n`` steps.

    Each step applies the odd, even, next-nearest and boundary sublayers in
    the same order as one ansatz layer, every gate at angle ``J tau / (4 n)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    angle = model.coupling * (tau / n) / 4
    odd, even, boundary = model.bond_layers()
    nnn = model.next_nearest_bonds()
    step = _layer(
        model,
        [angle] * len(odd),
        [angle] * len(even),
        [angle] * len(nnn) if nnn else None,
        [angle] * len(boundary) if boundary else None,
    )
    return Circuit(model.num_sites, step * n)


def trotter_params(model: SpinChainModel, tau: float, n: int) -> AnsatzParams:
    """Ansatz angles that reproduce ``build_trotter_circuit(model, tau, n)`` with ``n`` layers."""
    angle = model.coupling * (tau / n) / 4
    return AnsatzParams.from_vector(model, n, np.full(parameter_count(model, n), angle))


def _check_model(params: AnsatzParams, model: SpinChainModel) -> None:
    if (params.num_sites, params.boundary, params.variant) != (
        model.num_sites, model.boundary, model.variant,
    ):
        raise ValueError("ansatz layout does not match the model")


def build_double_contour_circuit(
    params_t: AnsatzParams,
    model: SpinChainModel,
    tau: float,
    n: int,
    params_next: AnsatzParams,
) -> Circuit:
    """``U(params_t)``, then ``U_trot(tau)``, then ``U(params_next)^dagger`` on M qubits.

    ``n = 0`` omits the Trotter block.
    """
    if not params_t.compatible_with(params_next):
        raise ValueError("params_t and params_next describe different ansatz layouts")
    _check_model(params_t, model)
    circuit = build_ansatz_circuit(params_t)
    if n > 0:
        circuit = circuit + build_trotter_circuit(model, tau, n)
    return circuit + build_ansatz_circuit(params_next).inverse()


def build_swap_test_circuit(prep_phi: Circuit, prep_psi: Circuit) -> Circuit:
    """SWAP test on ``2M + 1`` qubits.

    Qubit 0 is the ancilla, ``1..M`` hold ``prep_phi`` and ``M+1..2M`` hold
    ``prep_psi``.  The ancilla ``<Z>`` after the circuit equals
    ``|<psi|phi>|^2``.
    """
    m = prep_phi.num_qubits
    if prep_psi.num_qubits != m:
        raise ValueError(f"register sizes differ: {m} vs {prep_psi.num_qubits}")
    width = 2 * m + 1
    ops = list(prep_phi.remap(range(1, m + 1), width).ops)
    ops += prep_psi.remap(range(m + 1, 2 * m + 1), width).ops
    ops += swap_test_block(m).ops
    return Circuit(width, ops)


def swap_test_block(m: int) -> Circuit:
    """Hadamard, M controlled swaps, Hadamard, without state preparation."""
    ops = [GateOp(GateKind.HADAMARD, (0,))]
    ops += [GateOp(GateKind.CSWAP, (0, 1 + i, 1 + m + i)) for i in range(m)]
    ops.append(GateOp(GateKind.HADAMARD, (0,)))
    return Circuit(2 * m + 1, ops)


def ancilla_z(state: StateVector) -> float:
    """Exact ``<Z>`` of qubit 0."""
    probs = state.probabilities()
    return float(probs[0::2].sum() - probs[1::2].sum())


# -- lowering and resources ---------------------------------------------------

def _heis_ops(a: int, b: int, alpha: float) -> list[GateOp]:
    # a is the upper wire of the three-CNOT Heisenberg block
    theta = np.pi / 2 - 2 * alpha
    phi = 2 * alpha - np.pi / 2
    return [
        GateOp(GateKind.RZ, (b,), -np.pi / 2),
        GateOp(GateKind.CNOT, (b, a)),
        GateOp(GateKind.RZ, (a,), -theta),
        GateOp(GateKind.RY, (b,), -phi),
        GateOp(GateKind.CNOT, (a, b)),
        GateOp(GateKind.RY, (b,), -theta),
        GateOp(GateKind.CNOT, (b, a)),
        GateOp(GateKind.RZ, (a,), np.pi / 2),
    ]


def _toffoli_ops(c1: int, c2: int, t: int) -> list[GateOp]:
    # T = RZ(pi/4) up to a global phase
    cx = lambda c, q: GateOp(GateKind.CNOT, (c, q))  # noqa: E731
    rz = lambda q, s: GateOp(GateKind.RZ, (q,), s * _ROT)  # noqa: E731
    h = GateOp(GateKind.HADAMARD, (t,))
    return [
        h, cx(c2, t), rz(t, -1), cx(c1, t), rz(t, 1), cx(c2, t), rz(t, -1), cx(c1, t),
        rz(c2, 1), rz(t, 1), h, cx(c1, c2), rz(c1, 1), rz(c2, -1), cx(c1, c2),
    ]


def decompose_gate(op: GateOp) -> list[GateOp]:
    if op.kind is GateKind.HEIS:
        return _heis_ops(*op.targets, op.angle)
    if op.kind is GateKind.ZZ:
        a, b = op.targets
        return [
            GateOp(GateKind.CNOT, (a, b)),
            GateOp(GateKind.RZ, (b,), 2 * op.angle),
            GateOp(GateKind.CNOT, (a, b)),
        ]
    if op.kind is GateKind.CSWAP:
        c, a, b = op.targets
        return [GateOp(GateKind.CNOT, (b, a)), *_toffoli_ops(c, a, b), GateOp(GateKind.CNOT, (b, a))]
    return [op]


def decompose(circuit: Circuit) -> Circuit:
    """Lower HEIS, ZZ and CSWAP to CNOTs and single-qubit gates (equal up to global phase)."""
    ops: list[GateOp] = []
    for op in circuit.ops:
        ops.extend(decompose_gate(op))
    return Circuit(circuit.num_qubits, ops)


def circuit_depth(circuit: Circuit) -> int:
    """Layers of non-overlapping gates under as-soon-as-possible scheduling."""
    front = [0] * circuit.num_qubits
    for op in circuit.ops:
        level = max(front[q] for q in op.targets) + 1
        for q in op.targets:
            front[q] = level
    return max(front, default=0)


@dataclass(frozen=True)
class ResourceCount:
    two_qubit_gates: int
    single_qubit_gates: int
    depth: int


def count_two_qubit_gates(circuit: Circuit) -> ResourceCount:
    """Gate counts and depth after lowering to the CNOT basis."""
    lowered = decompose(circuit)
    two = sum(1 for op in lowered.ops if op.is_multi_qubit)
    return ResourceCount(two, len(lowered.ops) - two, circuit_depth(lowered))


# -- text format ----------------------------------------------------------------

def dump_circuit(circuit: Circuit) -> str:
    """One op per line: ``KIND targets... [angle]``; a leading comment records the width."""
    lines = [f"# qubits {circuit.num_qubits}"]
    for op in circuit.ops:
        fields = [op.kind.value, *map(str, op.targets)]
        if op.angle is not None:
            fields.append(f"{op.angle:.17g}")
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def load_circuit(text: str, num_qubits: int | None = None) -> Circuit:
    ops = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "qubits" and num_qubits is None:
                num_qubits = int(parts[1])
            continue
        fields = line.split()
        kind = GateKind(fields[0])
        arity = ARITY[kind]
        targets = tuple(int(f) for f in fields[1:1 + arity])
        rest = fields[1 + arity:]
        ops.append(GateOp(kind, targets, float(rest[0]) if rest else None))
    if num_qubits is None:
        num_qubits = 1 + max((max(op.targets) for op in ops), default=0)
    return Circuit(num_qubits, ops)
