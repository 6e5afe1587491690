"""Finite-shot cost estimation and a stochastic-Pauli device emulator."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .circuits import decompose
from .statevector import (
    PAULIS,
    Circuit,
    GateKind,
    GateOp,
    StateVector,
    apply_circuit,
    apply_gate_inplace,
    basis_probability,
    counts_to_histogram,
    label_to_index,
    sample_counts,
)

Histogram = Mapping[str, float]

_PAULI_KINDS = (GateKind.PAULI_X, GateKind.PAULI_Y, GateKind.PAULI_Z)


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate errors plus asymmetric readout flips.

    Defaults are typical superconducting-device magnitudes, not calibration
    data of any particular chip.
    """

    p1: float = 1e-3
    p2: float = 1e-2
    readout_01: float = 2e-2
    readout_10: float = 2e-2
    trajectories: int = 64

    def __post_init__(self):
        for name in ("p1", "p2", "readout_01", "readout_10"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.trajectories < 1:
            raise ValueError("trajectories must be >= 1")

    @classmethod
    def noiseless(cls, trajectories: int = 1) -> NoiseModel:
        return cls(0.0, 0.0, 0.0, 0.0, trajectories)

    def scaled(self, factor: float) -> NoiseModel:
        """Gate error rates multiplied by ``factor`` (readout unchanged)."""
        return NoiseModel(
            min(self.p1 * factor, 1.0), min(self.p2 * factor, 1.0),
            self.readout_01, self.readout_10, self.trajectories,
        )


@dataclass
class CostEstimate:
    value: float
    std_error: float
    shots_used: int
    raw_histogram: dict[str, int] = field(default_factory=dict)


def estimate_cost_exact(circuit: Circuit, psi0: str) -> float:
    """Return probability to basis state ``psi0`` after running ``circuit`` on it."""
    return basis_probability(apply_circuit(StateVector.basis(psi0), circuit), psi0)


def binomial_std_error(p: float, shots: float) -> float:
    p = min(max(p, 0.0), 1.0)
    return float(np.sqrt(p * (1.0 - p) / shots))


def return_probability_estimate(state: StateVector, psi0: str, shots: int, seed) -> CostEstimate:
    hist = sample_counts(state, shots, seed)
    value = cost_from_histogram(hist, psi0, shots)
    return CostEstimate(value, binomial_std_error(value, shots), shots, hist)


def estimate_cost_sampled(circuit: Circuit, psi0: str, shots: int, seed) -> CostEstimate:
    """Return-probability estimate from ``shots`` Born-rule samples."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    state = apply_circuit(StateVector.basis(psi0), circuit)
    return return_probability_estimate(state, psi0, shots, seed)


def cost_from_histogram(hist: Histogram, psi0: str, shots: float | None = None) -> float:
    """``hist[psi0] / shots``; ``shots`` defaults to the histogram's total mass."""
    if not hist:
        raise ValueError("empty histogram")
    total = float(sum(hist.values())) if shots is None else float(shots)
    if total <= 0:
        raise ValueError("histogram has no positive mass")
    return float(hist.get(psi0, 0.0)) / total


def _inject_paulis(states, num_qubits, qubit, prob, rng):
    hit = np.flatnonzero(rng.random(states.shape[0]) < prob)
    if hit.size == 0:
        return
    which = rng.integers(0, 3, size=hit.size)
    for k, kind in enumerate(_PAULI_KINDS):
        rows = hit[which == k]
        if rows.size:
            sub = np.ascontiguousarray(states[rows])
            apply_gate_inplace(sub, num_qubits, GateOp(kind, (qubit,)))
            states[rows] = sub


def _apply_readout(outcomes, num_qubits, r01, r10, rng):
    if r01 == 0.0 and r10 == 0.0:
        return outcomes
    for q in range(num_qubits):
        bit = (outcomes >> q) & 1
        flip = rng.random(outcomes.size) < np.where(bit == 1, r10, r01)
        outcomes ^= flip.astype(outcomes.dtype) << q
    return outcomes


def execute_noisy(
    circuit: Circuit,
    noise: NoiseModel,
    shots: int,
    seed,
    initial: str | None = None,
) -> dict[str, int]:
    """Sample ``circuit`` on a stochastic-Pauli device.

    Composite gates are lowered to the CNOT basis first.  After every gate,
    each qubit it touches independently suffers a uniformly drawn X, Y or Z
    with probability ``p1`` (single-qubit gates) or ``p2`` (CNOT).  Pauli
    gates themselves are treated as error-free frame changes, since on
    hardware they merge into neighbouring rotations.  Shots are split evenly
    over ``noise.trajectories`` independent error realizations, then every
    measured bit flips with the readout probabilities.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if noise.trajectories > shots:
        raise ValueError(f"{noise.trajectories} trajectories cannot share {shots} shots")
    rng = np.random.default_rng(seed)
    m = circuit.num_qubits
    dim = 1 << m
    ntraj = noise.trajectories
    states = np.zeros((ntraj, dim), dtype=np.complex128)
    states[:, 0 if initial is None else label_to_index(initial, m)] = 1.0

    for op in decompose(circuit).ops:
        apply_gate_inplace(states, m, op)
        if op.kind in PAULIS:
            continue
        prob = noise.p2 if op.is_multi_qubit else noise.p1
        if prob > 0.0:
            for q in op.targets:
                _inject_paulis(states, m, q, prob, rng)

    probs = np.abs(states) ** 2
    probs /= probs.sum(axis=1, keepdims=True)
    per_traj = np.full(ntraj, shots // ntraj)
    per_traj[: shots % ntraj] += 1
    counts = rng.multinomial(per_traj, probs).sum(axis=0)
    if noise.readout_01 or noise.readout_10:
        outcomes = np.repeat(np.arange(dim, dtype=np.int64), counts)
        outcomes = _apply_readout(outcomes, m, noise.readout_01, noise.readout_10, rng)
        counts = np.bincount(outcomes, minlength=dim)
    return counts_to_histogram(counts, m)


# -- histogram files ------------------------------------------------------------

def histogram_to_csv(hist: Histogram) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bitstring", "count"])
    for label in sorted(hist, key=lambda s: label_to_index(s)):
        value = hist[label]
        writer.writerow([label, value if isinstance(value, (int, np.integer)) else repr(float(value))])
    return buf.getvalue()


def write_histogram_csv(hist: Histogram, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(histogram_to_csv(hist))


def read_histogram_csv(path: str | os.PathLike) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["bitstring", "count"]:
            raise ValueError(f"unexpected histogram header {reader.fieldnames}")
        out: dict[str, float] = {}
        for row in reader:
            text = row["count"]
            out[row["bitstring"]] = int(text) if text.lstrip("-").isdigit() else float(text)
        return out
