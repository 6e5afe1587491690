"""Heisenberg chains, exact time evolution and state observables.

Energies are in units of ``J`` and times in units of ``1/J``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .statevector import StateVector, inner_product


class Boundary(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class Variant(str, Enum):
    NEAREST = "nearest"  # H0
    NEXT_NEAREST = "next_nearest"  # H1 = H0 + J/4 sum Z_i Z_{i+2}


@dataclass(frozen=True)
class SpinChainModel:
    num_sites: int
    coupling: float = 1.0
    boundary: Boundary = Boundary.PERIODIC
    variant: Variant = Variant.NEAREST

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.num_sites < 2:
            raise ValueError("a spin chain needs at least 2 sites")
        if (
            self.variant is Variant.NEXT_NEAREST
            and self.boundary is Boundary.PERIODIC
            and self.num_sites < 3
        ):
            raise ValueError("periodic next-nearest chains need at least 3 sites")

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    def bond_layers(self) -> tuple[list[tuple[int, int]], list[tuple[int, int]], list[tuple[int, int]]]:
        """Nearest-neighbour bonds as qubit pairs, split into odd, even and boundary sublayers.

        Sites are 1-indexed in the usual chain notation, so the odd bonds
        ``(1,2), (3,4), ...`` are qubit pairs ``(0,1), (2,3), ...``.  Under
        periodic boundaries with even length the closing bond ``(M,1)`` is an
        even bond; with odd length it cannot join either sublayer and is
        returned on its own.
        """
        m = self.num_sites
        odd = [(j, j + 1) for j in range(0, m - 1, 2)]
        even = [(j, j + 1) for j in range(1, m - 1, 2)]
        boundary: list[tuple[int, int]] = []
        if self.periodic:
            if m % 2 == 0:
                even.append((m - 1, 0))
            else:
                boundary.append((m - 1, 0))
        return odd, even, boundary

    def nearest_bonds(self) -> list[tuple[int, int]]:
        odd, even, boundary = self.bond_layers()
        return odd + even + boundary

    def next_nearest_bonds(self) -> list[tuple[int, int]]:
        """``(i, i+2)`` pairs; empty for the nearest-neighbour variant."""
        if self.variant is Variant.NEAREST:
            return []
        m = self.num_sites
        if self.periodic:
            return [(i, (i + 2) % m) for i in range(m)]
        return [(i, i + 2) for i in range(m - 2)]


def _bits(num_qubits: int) -> np.ndarray:
    idx = np.arange(1 << num_qubits)
    return (idx[:, None] >> np.arange(num_qubits)[None, :]) & 1


def build_hamiltonian(model: SpinChainModel) -> np.ndarray:
    """Dense Hamiltonian matrix in the computational basis."""
    m = model.num_sites
    dim = 1 << m
    z = 1 - 2 * _bits(m)  # Z eigenvalue per qubit
    idx = np.arange(dim)
    h = np.zeros((dim, dim), dtype=np.complex128)
    quarter = model.coupling / 4
    for a, b in model.nearest_bonds():
        h[idx, idx] += quarter * z[:, a] * z[:, b]
        # XX + YY maps |..01..> <-> |..10..> with amplitude 2
        anti = z[:, a] != z[:, b]
        src = idx[anti]
        dst = src ^ ((1 << a) | (1 << b))
        h[dst, src] += 2 * quarter
    for a, b in model.next_nearest_bonds():
        h[idx, idx] += quarter * z[:, a] * z[:, b]
    return h


def total_sz(num_sites: int) -> np.ndarray:
    """Diagonal of ``sum_i Z_i``."""
    return (1 - 2 * _bits(num_sites)).sum(axis=1).astype(float)


class ExactEvolver:
    """Full-spectrum propagator ``exp(-iHt)``; practical up to about 14 sites."""

    def __init__(self, model: SpinChainModel):
        self.model = model
        self.hamiltonian = build_hamiltonian(model)
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(self.hamiltonian)

    @cached_property
    def _eigenvectors_h(self) -> np.ndarray:
        return self.eigenvectors.conj().T

    def evolve(self, state: StateVector, t: float) -> StateVector:
        return exact_evolve(self, state, t)


def exact_evolve(evolver: ExactEvolver, state: StateVector, t: float) -> StateVector:
    if state.num_qubits != evolver.model.num_sites:
        raise ValueError(
            f"state has {state.num_qubits} qubits, model has {evolver.model.num_sites} sites"
        )
    coeffs = evolver._eigenvectors_h @ state.amplitudes
    coeffs *= np.exp(-1j * evolver.eigenvalues * t)
    return StateVector(state.num_qubits, evolver.eigenvectors @ coeffs)


def neel_label(num_sites: int) -> str:
    return "".join("01"[i % 2] for i in range(num_sites))


def neel_state(num_sites: int) -> StateVector:
    """``|0101...>`` with site 1 in ``|0>``."""
    if num_sites < 1:
        raise ValueError("num_sites must be >= 1")
    return StateVector.basis(neel_label(num_sites))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(inner_product(a, b)) ** 2


def half_chain_entropy(state: StateVector) -> float:
    """Von Neumann entropy (nats) of the first ``floor(M/2)`` sites."""
    m = state.num_qubits
    if m < 2:
        raise ValueError("entanglement entropy needs at least 2 sites")
    left = m // 2
    # low bits are the first sites: rows index the right part, columns the left
    psi = state.amplitudes.reshape(1 << (m - left), 1 << left)
    schmidt = np.linalg.svd(psi, compute_uv=False) ** 2
    schmidt = schmidt[schmidt > 1e-300]
    return float(max(-(schmidt * np.log(schmidt)).sum(), 0.0))
