"""Error mitigation: Pauli twirling, gate folding with linear ZNE, readout
correction and magnetization post-selection."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .circuits import decompose
from .noise import CostEstimate, Histogram, NoiseModel, binomial_std_error, cost_from_histogram, execute_noisy
from .statevector import Circuit, GateKind, GateOp, hamming_weight, index_to_label, label_to_index


def _seed_sequence(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


class EmptyPostSelectionError(ValueError):
    """Every count fell outside the conserved magnetization sector."""


@dataclass(frozen=True)
class MitigationConfig:
    zne_scales: tuple[int, ...] = (1, 3, 5)
    twirl: bool = True
    postselect_sz: bool = True
    readout_calibration: bool = True
    calib_shots: int = 8192

    def __post_init__(self):
        scales = tuple(int(s) for s in self.zne_scales)
        object.__setattr__(self, "zne_scales", scales)
        if not scales:
            raise ValueError("zne_scales must not be empty")
        if any(s < 1 or s % 2 == 0 for s in scales):
            raise ValueError(f"zne_scales must be odd positive integers, got {scales}")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValueError(f"zne_scales must be strictly increasing, got {scales}")
        if self.readout_calibration and self.calib_shots < 100:
            raise ValueError("calib_shots must be >= 100")

    @classmethod
    def disabled(cls) -> MitigationConfig:
        return cls((1,), False, False, False)


# -- Pauli twirling ---------------------------------------------------------------

_PAULI_MATS = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0 + 0j, -1.0]),
}
_PAULI_GATE = {"X": GateKind.PAULI_X, "Y": GateKind.PAULI_Y, "Z": GateKind.PAULI_Z}


def _cnot_twirl_table() -> tuple[tuple[str, str, str, str], ...]:
    """All ``(a, b, c, d)`` with ``CNOT (P_c x P_d) = (P_a x P_b) CNOT`` up to phase.

    Control is the first tensor factor.
    """
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    table = []
    for c, d in itertools.product("IXYZ", repeat=2):
        lhs = cnot @ np.kron(_PAULI_MATS[c], _PAULI_MATS[d]) @ cnot.conj().T
        for a, b in itertools.product("IXYZ", repeat=2):
            if abs(abs(np.trace(np.kron(_PAULI_MATS[a], _PAULI_MATS[b]).conj().T @ lhs)) - 4) < 1e-12:
                table.append((a, b, c, d))
                break
        else:  # pragma: no cover
            raise AssertionError(f"no twirl partner for {c}{d}")
    return tuple(table)


CNOT_TWIRLS = _cnot_twirl_table()


def pauli_twirl(circuit: Circuit, seed) -> Circuit:
    """Dress every CNOT with a random Pauli pair that leaves its unitary intact."""
    rng = np.random.default_rng(seed)
    ops: list[GateOp] = []
    for op in circuit.ops:
        if op.kind in (GateKind.HEIS, GateKind.ZZ, GateKind.CSWAP):
            raise ValueError(f"lower {op.kind.value} to CNOTs before twirling")
        if op.kind is not GateKind.CNOT:
            ops.append(op)
            continue
        a, b, c, d = CNOT_TWIRLS[rng.integers(len(CNOT_TWIRLS))]
        ctrl, tgt = op.targets
        ops += [GateOp(_PAULI_GATE[p], (q,)) for p, q in ((c, ctrl), (d, tgt)) if p != "I"]
        ops.append(op)
        ops += [GateOp(_PAULI_GATE[p], (q,)) for p, q in ((a, ctrl), (b, tgt)) if p != "I"]
    return Circuit(circuit.num_qubits, ops)


# -- zero-noise extrapolation -----------------------------------------------------

def fold_circuit(circuit: Circuit, scale: int) -> Circuit:
    """Local folding: each multi-qubit gate G becomes ``G (G^dagger G)^((scale-1)/2)``."""
    if scale < 1 or scale % 2 == 0:
        raise ValueError(f"scale must be an odd positive integer, got {scale}")
    folds = (scale - 1) // 2
    ops: list[GateOp] = []
    for op in circuit.ops:
        ops.append(op)
        if op.is_multi_qubit:
            ops += [op.inverse(), op] * folds
    return Circuit(circuit.num_qubits, ops)


def zne_extrapolate(points: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Unweighted least-squares line through ``(scale, value[, std_error])``, read at scale 0.

    With per-point standard errors the intercept error is propagated through
    the fit weights; otherwise it comes from the residual variance.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two (scale, value) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.ptp(x) == 0:
        raise ValueError("all scales are identical")
    design = np.column_stack([np.ones_like(x), x])
    xtx_inv = np.linalg.inv(design.T @ design)
    weights = xtx_inv[0] @ design.T  # intercept = weights @ y
    intercept = float(weights @ y)
    if pts.shape[1] >= 3:
        std = float(np.sqrt(np.sum((weights * pts[:, 2]) ** 2)))
    elif len(x) > 2:
        resid = y - design @ (xtx_inv @ design.T @ y)
        std = float(np.sqrt(resid @ resid / (len(x) - 2) * xtx_inv[0, 0]))
    else:
        std = 0.0
    return intercept, std


# -- magnetization post-selection ------------------------------------------------

def postselect_sz(hist: Histogram, target_weight: int) -> dict:
    """Keep only outcomes with ``target_weight`` ones; counts are not renormalized."""
    kept = {k: v for k, v in hist.items() if hamming_weight(k) == target_weight}
    if not kept or sum(kept.values()) <= 0:
        raise EmptyPostSelectionError(f"no counts with Hamming weight {target_weight}")
    return kept


# -- readout calibration ----------------------------------------------------------

@dataclass(frozen=True)
class ReadoutCalibration:
    """``per_qubit_confusion[q][prepared, measured]``; rows sum to one."""

    per_qubit_confusion: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.per_qubit_confusion, dtype=float)
        if mats.ndim != 3 or mats.shape[1:] != (2, 2):
            raise ValueError("expected an array of 2x2 confusion matrices")
        if np.any(mats < 0) or np.any(mats > 1) or np.any(np.abs(mats.sum(axis=2) - 1) > 1e-9):
            raise ValueError("confusion matrices must be row-stochastic")
        object.__setattr__(self, "per_qubit_confusion", mats)

    @property
    def num_qubits(self) -> int:
        return self.per_qubit_confusion.shape[0]

    @classmethod
    def identity(cls, num_qubits: int) -> ReadoutCalibration:
        return cls(np.tile(np.eye(2), (num_qubits, 1, 1)))

    @classmethod
    def from_flip_probabilities(cls, flips01: Sequence[float], flips10: Sequence[float]) -> ReadoutCalibration:
        return cls(np.array([[[1 - a, a], [b, 1 - b]] for a, b in zip(flips01, flips10)]))


def build_readout_calibration(noise: NoiseModel, num_qubits: int, calib_shots: int, seed) -> ReadoutCalibration:
    """Estimate per-qubit flip rates from all-zeros and all-ones preparations."""
    if calib_shots < 100:
        raise ValueError("calib_shots must be >= 100")
    seeds = _seed_sequence(seed).spawn(2)
    calib_noise = NoiseModel(
        noise.p1, noise.p2, noise.readout_01, noise.readout_10,
        min(noise.trajectories, calib_shots),
    )
    zeros = Circuit(num_qubits)
    ones = Circuit(num_qubits, [GateOp(GateKind.PAULI_X, (q,)) for q in range(num_qubits)])
    mats = np.empty((num_qubits, 2, 2))
    for prepared, (circ, ss) in enumerate(((zeros, seeds[0]), (ones, seeds[1]))):
        hist = execute_noisy(circ, calib_noise, calib_shots, ss)
        for q in range(num_qubits):
            ones_seen = sum(c for label, c in hist.items() if label[q] == "1")
            p1 = ones_seen / calib_shots
            mats[q, prepared] = (1 - p1, p1)
    return ReadoutCalibration(mats)


def apply_readout_correction(hist: Histogram, calib: ReadoutCalibration) -> dict[str, float]:
    """Invert the tensor-product confusion model on a histogram (quasi-counts may be negative)."""
    m = calib.num_qubits
    if any(len(k) != m for k in hist):
        raise ValueError(f"histogram labels do not match a {m}-qubit calibration")
    inverses = []
    for q, mat in enumerate(calib.per_qubit_confusion):
        if mat[0, 1] + mat[1, 0] >= 1.0:
            raise ValueError(f"confusion matrix of qubit {q} is not invertible (flip probability >= 0.5)")
        inverses.append(np.linalg.inv(mat.T))
    vec = np.zeros(1 << m)
    for label, count in hist.items():
        vec[label_to_index(label)] += count
    t = vec.reshape((2,) * m)
    for q, inv in enumerate(inverses):
        axis = m - 1 - q
        t = np.moveaxis(np.tensordot(inv, t, axes=([1], [axis])), 0, axis)
    out = t.reshape(-1)
    return {index_to_label(i, m): float(out[i]) for i in np.flatnonzero(out)}


# -- full pipeline ----------------------------------------------------------------

def mitigated_cost(
    circuit: Circuit,
    psi0: str,
    noise: NoiseModel,
    mitcfg: MitigationConfig,
    shots: int,
    seed,
    calibration: ReadoutCalibration | None = None,
) -> CostEstimate:
    """Return-probability estimate through fold, twirl, execute, readout-correct,
    post-select and extrapolate.

    A ``calibration`` may be supplied to reuse one readout calibration across
    many evaluations; otherwise one is built from ``mitcfg.calib_shots``.
    The value is not clamped to ``[0, 1]``.
    """
    lowered = decompose(circuit)
    ss = _seed_sequence(seed)
    calib_seed, *scale_seeds = ss.spawn(1 + len(mitcfg.zne_scales))
    if mitcfg.readout_calibration and calibration is None:
        calibration = build_readout_calibration(noise, circuit.num_qubits, mitcfg.calib_shots, calib_seed)

    points = []
    raw_histogram: dict[str, int] = {}
    for scale, scale_seed in zip(mitcfg.zne_scales, scale_seeds):
        twirl_seed, exec_seed = scale_seed.spawn(2)
        folded = fold_circuit(lowered, scale)
        if mitcfg.twirl:
            folded = pauli_twirl(folded, twirl_seed)
        hist = execute_noisy(folded, noise, shots, exec_seed, initial=psi0)
        if scale == mitcfg.zne_scales[0]:
            raw_histogram = hist
        quasi: Mapping[str, float] = hist
        if mitcfg.readout_calibration:
            quasi = apply_readout_correction(quasi, calibration)
        if mitcfg.postselect_sz:
            quasi = postselect_sz(quasi, hamming_weight(psi0))
        kept = float(sum(quasi.values()))
        value = cost_from_histogram(quasi, psi0, kept)
        points.append((scale, value, binomial_std_error(value, max(kept, 1.0))))

    if len(points) == 1:
        _, value, std = points[0]
    else:
        value, std = zne_extrapolate(points)
    return CostEstimate(value, std, shots * len(points), raw_histogram)
