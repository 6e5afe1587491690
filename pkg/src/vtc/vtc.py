"""Variational Trotter compression driver and benchmark studies.

A VTC run alternates Trotter propagation of the current variational state
over ``tau`` with a re-fit of the propagated state into the ansatz.  The fit
minimizes ``1 - C`` where ``C`` is the overlap cost, computed exactly, from
finite samples, or on the emulated noisy device with mitigation.  Fidelities
against the exact state are computed by exact diagonalization for reporting
only and never enter the optimized objective.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuits import (
    AnsatzParams,
    build_ansatz_circuit,
    build_double_contour_circuit,
    build_trotter_circuit,
    parameter_count,
    swap_test_block,
)
from .mitigation import (
    EmptyPostSelectionError,
    MitigationConfig,
    build_readout_calibration,
    mitigated_cost,
)
from .model import ExactEvolver, SpinChainModel, exact_evolve, fidelity, neel_label, neel_state
from .noise import CostEstimate, NoiseModel, binomial_std_error, return_probability_estimate
from .optimize import OptimizerConfig, OptimizerKind, minimize
from .statevector import (
    GateKind,
    StateVector,
    _slice,
    apply_circuit,
    apply_circuit_inplace,
    apply_gate_inplace,
    inner_product,
    sample_counts,
)

log = logging.getLogger(__name__)


class CostMode(str, Enum):
    EXACT = "exact"
    SAMPLED = "sampled"
    NOISY_MITIGATED = "noisy_mitigated"


class OverlapCircuit(str, Enum):
    DOUBLE_CONTOUR = "double_contour"
    SWAP_TEST = "swap_test"


class VtcAborted(RuntimeError):
    """A compression step could not produce a usable cost estimate."""


@dataclass(frozen=True)
class VtcConfig:
    model: SpinChainModel
    num_layers: int
    trotter_steps: int
    tau: float
    t_final: float
    tolerance: float = 5e-3
    cost_mode: CostMode = CostMode.EXACT
    shots: int = 8192
    overlap_circuit: OverlapCircuit = OverlapCircuit.DOUBLE_CONTOUR
    noise: NoiseModel = field(default_factory=NoiseModel)
    mitigation: MitigationConfig = field(default_factory=MitigationConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    depth_budget: int | None = None
    baseline_steps: int | None = None  # direct-Trotter comparison; None -> 2 layers + n
    mitigate_every_evaluation: bool = True
    reevaluation_factor: int = 4

    def __post_init__(self):
        object.__setattr__(self, "cost_mode", CostMode(self.cost_mode))
        object.__setattr__(self, "overlap_circuit", OverlapCircuit(self.overlap_circuit))
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.num_layers < 1 or self.trotter_steps < 1:
            raise ValueError("num_layers and trotter_steps must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.depth_budget is not None and not 2 * self.num_layers + self.trotter_steps < self.depth_budget:
            raise ValueError(
                f"2*layers + trotter_steps = {2 * self.num_layers + self.trotter_steps} "
                f"exceeds depth budget {self.depth_budget}"
            )
        if self.cost_mode is CostMode.NOISY_MITIGATED and self.overlap_circuit is OverlapCircuit.SWAP_TEST:
            raise ValueError("noisy mitigated runs support only the double-contour circuit")

    @property
    def num_steps(self) -> int:
        return int(math.floor(self.t_final / self.tau + 1e-9)) if self.t_final >= self.tau else 0

    @property
    def direct_trotter_steps(self) -> int:
        return self.baseline_steps or 2 * self.num_layers + self.trotter_steps


@dataclass
class VtcRecord:
    step: int
    time: float
    converged_cost: float
    fidelity_exact: float
    best_compression_fidelity: float
    trotter_baseline_fidelity: float
    evaluations: int
    converged: bool
    wall_seconds: float
    estimated_cost: float
    params: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class LayerRequirementRow:
    M: int
    t: float
    epsilon: float
    ell_min: int | None  # None: not reached within ell_max
    achieved_infidelity: float


def ansatz_state(params: AnsatzParams, psi0: StateVector | None = None) -> StateVector:
    psi0 = neel_state(params.num_sites) if psi0 is None else psi0
    return apply_circuit(psi0, build_ansatz_circuit(params))


def best_compression_diagnostics(
    prev_params: AnsatzParams,
    model: SpinChainModel,
    tau: float,
    n: int,
    new_params: AnsatzParams,
    *,
    time: float | None = None,
    evolver: ExactEvolver | None = None,
) -> tuple[float, float]:
    """``(|<psi(t)|U_trot|prev>|^2, |<new|U_trot|prev>|^2)`` from exact statevectors.

    ``time`` is the time reached after propagation (defaults to ``tau``).
    """
    evolver = evolver or ExactEvolver(model)
    propagated = ansatz_state(prev_params)
    if n > 0:
        propagated = apply_circuit(propagated, build_trotter_circuit(model, tau, n))
    exact = exact_evolve(evolver, neel_state(model.num_sites), tau if time is None else time)
    return fidelity(exact, propagated), fidelity(ansatz_state(new_params), propagated)


def direct_trotter_fidelity(
    model: SpinChainModel,
    num_steps: int,
    times: Iterable[float],
    evolver: ExactEvolver | None = None,
) -> list[tuple[float, float]]:
    """Fidelity of a ``num_steps`` Trotter circuit for total time ``t`` with the exact state."""
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    evolver = evolver or ExactEvolver(model)
    psi_i = neel_state(model.num_sites)
    out = []
    for t in times:
        trotter = apply_circuit(psi_i, build_trotter_circuit(model, float(t), num_steps))
        out.append((float(t), fidelity(trotter, exact_evolve(evolver, psi_i, float(t)))))
    return out


# -- compression objective ----------------------------------------------------------

class _CompressionCost:
    """Estimator of ``C(theta) = |<psi(theta)|U_trot|psi(prev)>|^2`` for one step."""

    def __init__(self, config: VtcConfig, prev: AnsatzParams, propagated: StateVector, seed):
        self.config = config
        self.model = config.model
        self.prev = prev
        self.propagated = propagated
        self.psi0_label = neel_label(self.model.num_sites)
        self.psi0 = neel_state(self.model.num_sites)
        self.seeds = np.random.SeedSequence(seed)
        self.calibration = None
        mode = config.cost_mode
        if mode is CostMode.NOISY_MITIGATED and config.mitigation.readout_calibration:
            self.calibration = build_readout_calibration(
                config.noise, self.model.num_sites, config.mitigation.calib_shots, self.seeds.spawn(1)[0]
            )

    def params(self, x) -> AnsatzParams:
        return AnsatzParams.from_vector(self.model, self.config.num_layers, x)

    def exact(self, x) -> float:
        return fidelity(ansatz_state(self.params(x), self.psi0), self.propagated)

    def estimate(self, x, shots: int | None = None, mitigation: MitigationConfig | None = None) -> CostEstimate:
        cfg = self.config
        shots = cfg.shots if shots is None else shots
        seed = self.seeds.spawn(1)[0]
        if cfg.cost_mode is CostMode.EXACT:
            value = self.exact(x)
            return CostEstimate(value, 0.0, 0)
        if cfg.cost_mode is CostMode.SAMPLED:
            trial = ansatz_state(self.params(x), self.psi0)
            if cfg.overlap_circuit is OverlapCircuit.SWAP_TEST:
                return _swap_test_estimate(self.propagated, trial, shots, seed)
            unwound = apply_circuit(self.propagated, build_ansatz_circuit(self.params(x)).inverse())
            return return_probability_estimate(unwound, self.psi0_label, shots, seed)
        circuit = build_double_contour_circuit(
            self.prev, self.model, cfg.tau, cfg.trotter_steps, self.params(x)
        )
        mitcfg = mitigation or self.objective_mitigation
        for attempt in range(2):
            try:
                return mitigated_cost(
                    circuit, self.psi0_label, cfg.noise, mitcfg, shots,
                    seed if attempt == 0 else self.seeds.spawn(1)[0], self.calibration,
                )
            except EmptyPostSelectionError:
                log.warning("empty post-selection, retrying with a fresh seed")
        raise VtcAborted("post-selection removed every count twice in a row")

    @property
    def objective_mitigation(self) -> MitigationConfig:
        mit = self.config.mitigation
        if self.config.mitigate_every_evaluation:
            return mit
        return MitigationConfig((1,), mit.twirl, mit.postselect_sz, mit.readout_calibration, mit.calib_shots)

    def objective(self, x) -> float:
        return 1.0 - self.estimate(x).value

    def reevaluate(self, x) -> float:
        shots = self.config.shots * self.config.reevaluation_factor
        return 1.0 - self.estimate(x, shots=shots, mitigation=self.config.mitigation).value


def _swap_test_estimate(phi: StateVector, psi: StateVector, shots: int, seed) -> CostEstimate:
    """Ancilla ``<Z>`` of a sampled SWAP test between ``phi`` and ``psi``."""
    m = phi.num_qubits
    # qubit 0 ancilla, 1..M phi, M+1..2M psi: index = anc + 2 phi + 2^(M+1) psi
    joint = np.zeros(1 << (2 * m + 1), dtype=np.complex128)
    joint.reshape(1 << m, 1 << m, 2)[:, :, 0] = np.outer(psi.amplitudes, phi.amplitudes)
    state = StateVector(2 * m + 1, joint)
    apply_circuit_inplace(state.amplitudes, swap_test_block(m))
    hist = sample_counts(state, shots, seed)
    ones = sum(c for label, c in hist.items() if label[0] == "1")
    z = (shots - 2 * ones) / shots
    return CostEstimate(z, float(np.sqrt(max(1 - z * z, 0.0) / shots)), shots, hist)


def run_vtc(
    config: VtcConfig,
    *,
    progress: Callable[[VtcRecord], None] | None = None,
    step_hook: Callable[[int, AnsatzParams, AnsatzParams], None] | None = None,
    jobs: int = 1,
    record_wall_time: bool = True,
) -> list[VtcRecord]:
    """Run ``floor(t_final / tau)`` propagate-and-compress steps from the Neel state.

    Each step warm-starts the optimizer at the previous optimum.  A step that
    exhausts its budget keeps the best parameters found and is recorded with
    ``converged=False``.
    """
    model = config.model
    evolver = ExactEvolver(model)
    psi_i = neel_state(model.num_sites)
    trotter = build_trotter_circuit(model, config.tau, config.trotter_steps)
    params = AnsatzParams.zeros(model, config.num_layers)
    step_seeds = np.random.SeedSequence(config.optimizer.seed).spawn(max(config.num_steps, 1))
    records: list[VtcRecord] = []

    for step in range(1, config.num_steps + 1):
        started = time.perf_counter()
        t = step * config.tau
        propagated = apply_circuit(ansatz_state(params, psi_i), trotter)
        opt_seed, cost_seed = step_seeds[step - 1].generate_state(2)
        cost = _CompressionCost(config, params, propagated, int(cost_seed))
        noisy = config.cost_mode is not CostMode.EXACT
        result = minimize(
            cost.objective,
            params.to_vector(),
            config.optimizer.with_(tolerance=config.tolerance, seed=int(opt_seed)),
            reevaluate=cost.reevaluate if noisy else None,
            jobs=jobs,
        )
        new_params = AnsatzParams.from_vector(model, config.num_layers, result.best_params)
        exact_t = exact_evolve(evolver, psi_i, t)
        trial = ansatz_state(new_params, psi_i)
        baseline = direct_trotter_fidelity(model, config.direct_trotter_steps, [t], evolver)[0][1]
        record = VtcRecord(
            step=step,
            time=t,
            converged_cost=fidelity(trial, propagated),
            fidelity_exact=fidelity(trial, exact_t),
            best_compression_fidelity=fidelity(exact_t, propagated),
            trotter_baseline_fidelity=baseline,
            evaluations=result.evaluations,
            converged=bool(result.converged),
            wall_seconds=time.perf_counter() - started if record_wall_time else 0.0,
            estimated_cost=1.0 - result.best_value,
            params=new_params.to_vector(),
        )
        if step_hook is not None:
            step_hook(step, params, new_params)
        records.append(record)
        if progress is not None:
            progress(record)
        params = new_params
    return records


# -- layer requirement ----------------------------------------------------------------

class AnsatzInfidelity:
    """``1 - |<psi(theta)|target>|^2`` with an adjoint-mode gradient.

    Values and gradients are cached for the most recent point, so a
    quasi-Newton step that evaluates and then differentiates at the same
    parameters runs the circuit once.
    """

    def __init__(self, model: SpinChainModel, num_layers: int, target: StateVector):
        self.model = model
        self.num_layers = num_layers
        self.target = target
        self.psi0 = neel_state(model.num_sites)
        self._key = None
        self._value = None
        self._grad = None

    def _compute(self, x):
        x = np.asarray(x, dtype=float)
        key = x.tobytes()
        if key == self._key:
            return
        m = self.model.num_sites
        circuit = build_ansatz_circuit(AnsatzParams.from_vector(self.model, self.num_layers, x))
        ops = circuit.ops
        psi = self.psi0.amplitudes.copy()
        for op in ops:
            apply_gate_inplace(psi, m, op)
        overlap = np.vdot(self.target.amplitudes, psi)
        value = 1.0 - abs(overlap) ** 2

        # gate order equals the flattened parameter order, one gate per angle
        grads = np.empty(len(ops))
        pair = np.stack([psi, self.target.amplitudes])  # [state after gate k, adjoint]
        for k in range(len(ops) - 1, -1, -1):
            op = ops[k]
            gpsi = _apply_generator(pair[0], m, op)
            grads[k] = 2.0 * (np.conj(overlap) * (-1j) * np.vdot(pair[1], gpsi)).real
            apply_gate_inplace(pair, m, op.inverse())
        self._key, self._value, self._grad = key, float(value), -grads

    def __call__(self, x) -> float:
        self._compute(x)
        return self._value

    def gradient(self, x) -> np.ndarray:
        self._compute(x)
        return self._grad.copy()


def _apply_generator(amplitudes: np.ndarray, num_qubits: int, op) -> np.ndarray:
    """``G |psi>`` for the Hermitian generator of a HEIS or ZZ gate."""
    out = amplitudes.copy()
    t = out.reshape((1,) + (2,) * num_qubits)
    a, b = op.targets
    if op.kind is GateKind.HEIS:
        # XX + YY + ZZ = 2 SWAP - 1
        x01, x10 = _slice(t, num_qubits, {a: 0, b: 1}), _slice(t, num_qubits, {a: 1, b: 0})
        tmp = x01.copy()
        x01[...] = 2 * x10 - x01
        x10[...] = 2 * tmp - x10
    elif op.kind is GateKind.ZZ:
        _slice(t, num_qubits, {a: 0, b: 1})[...] *= -1
        _slice(t, num_qubits, {a: 1, b: 0})[...] *= -1
    else:  # pragma: no cover
        raise ValueError(f"no generator for {op.kind}")
    return out


def _optimize_layers(objective, x0, optimizer):
    return minimize(objective, x0, optimizer, gradient=objective.gradient)


def layer_requirement(
    model: SpinChainModel,
    times: Sequence[float],
    epsilon: float,
    ell_max: int,
    optimizer: OptimizerConfig | None = None,
    *,
    restarts: int = 3,
    seed: int = 0,
    progress: Callable[[LayerRequirementRow], None] | None = None,
) -> list[LayerRequirementRow]:
    """Smallest layer count whose optimized ansatz reaches infidelity below ``epsilon``.

    Times are processed in ascending order and the search at each time starts
    from the previous time's result.  Every layer count gets warm starts (the
    previous time's optimum at that depth, and this time's optimum at one
    layer less padded with an identity layer) plus ``restarts`` randomized
    starts around the Trotter angles before it is declared insufficient.
    """
    if ell_max < 1:
        raise ValueError("ell_max must be >= 1")
    optimizer = optimizer or OptimizerConfig(
        kind=OptimizerKind.QUASI_NEWTON, tolerance=epsilon, max_evaluations=4000
    )
    optimizer = optimizer.with_(tolerance=epsilon)
    rng = np.random.default_rng(seed)
    evolver = ExactEvolver(model)
    psi_i = neel_state(model.num_sites)
    rows: list[LayerRequirementRow] = []
    best_at: dict[int, np.ndarray] = {}  # layer count -> optimum at the previous time
    start_ell = 1

    for t in sorted(float(t) for t in times):
        target = exact_evolve(evolver, psi_i, t)
        base = 1.0 - fidelity(psi_i, target)
        if base < epsilon:
            row = LayerRequirementRow(model.num_sites, t, epsilon, 0, max(base, 0.0))
            rows.append(row)
            if progress:
                progress(row)
            continue
        found, achieved = None, base
        below: np.ndarray | None = None
        for ell in range(start_ell, ell_max + 1):
            objective = AnsatzInfidelity(model, ell, target)
            npar = parameter_count(model, ell)
            starts = []
            if ell in best_at:
                starts.append(best_at[ell])
            if below is not None:
                starts.append(np.concatenate([below, np.zeros(npar - below.size)]))
            trotter_angles = np.full(npar, model.coupling * t / (4 * ell))
            starts.append(trotter_angles)
            starts += [trotter_angles + rng.normal(scale=0.3, size=npar) for _ in range(restarts)]
            best = None
            for x0 in starts:
                res = _optimize_layers(objective, x0, optimizer)
                if best is None or res.best_value < best.best_value:
                    best = res
                if best.best_value < epsilon:
                    break
            best_at[ell] = best.best_params
            below = best.best_params
            achieved = max(best.best_value, 0.0)
            if best.best_value < epsilon:
                found = ell
                break
        row = LayerRequirementRow(model.num_sites, t, epsilon, found, achieved)
        rows.append(row)
        if progress:
            progress(row)
        start_ell = found if found is not None else ell_max
    return rows


def fixed_layer_infidelity(
    model: SpinChainModel,
    t: float,
    num_layers: int,
    optimizer: OptimizerConfig | None = None,
    *,
    starts: Sequence[np.ndarray] = (),
    restarts: int = 3,
    seed: int = 0,
) -> tuple[float, np.ndarray]:
    """Minimal infidelity reached by a ``num_layers`` ansatz for the state at time ``t``."""
    optimizer = optimizer or OptimizerConfig(
        kind=OptimizerKind.QUASI_NEWTON, tolerance=1e-12, max_evaluations=4000
    )
    rng = np.random.default_rng(seed)
    target = exact_evolve(ExactEvolver(model), neel_state(model.num_sites), t)
    objective = AnsatzInfidelity(model, num_layers, target)
    npar = parameter_count(model, num_layers)
    trotter_angles = np.full(npar, model.coupling * t / (4 * max(num_layers, 1)))
    candidates = list(starts) + [trotter_angles]
    candidates += [trotter_angles + rng.normal(scale=0.3, size=npar) for _ in range(restarts)]
    best = None
    for x0 in candidates:
        res = _optimize_layers(objective, x0, optimizer)
        if best is None or res.best_value < best.best_value:
            best = res
    return max(best.best_value, 0.0), best.best_params
