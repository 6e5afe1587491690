from __future__ import annotations

import numpy as np
import pytest

from vtc.circuits import AnsatzParams, build_double_contour_circuit, count_two_qubit_gates, parameter_count
from vtc.model import SpinChainModel, neel_label
from vtc.noise import (
    NoiseModel,
    cost_from_histogram,
    estimate_cost_exact,
    estimate_cost_sampled,
    execute_noisy,
    histogram_to_csv,
    read_histogram_csv,
    write_histogram_csv,
)
from vtc.statevector import Circuit, GateKind, GateOp, StateVector, apply_circuit, sample_counts


def random_contour(model, layers, seed, n=1, tau=0.7):
    rng = np.random.default_rng(seed)
    npar = parameter_count(model, layers)
    p = AnsatzParams.from_vector(model, layers, rng.uniform(-1, 1, npar))
    q = AnsatzParams.from_vector(model, layers, rng.uniform(-1, 1, npar))
    return build_double_contour_circuit(p, model, tau, n, q)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(p1=1.5)
    with pytest.raises(ValueError):
        NoiseModel(trajectories=0)
    assert NoiseModel().scaled(3).p2 == pytest.approx(0.03)


def test_cost_from_histogram_examples():
    assert cost_from_histogram({"010": 8192}, "010", 8192) == 1.0
    assert cost_from_histogram({"010": 4096, "100": 4096}, "010", 8192) == 0.5
    assert cost_from_histogram({"011": 8192}, "010", 8192) == 0.0
    assert cost_from_histogram({"010": 3, "100": 1}, "010") == 0.75
    with pytest.raises(ValueError):
        cost_from_histogram({}, "010", 1)


def test_exact_and_sampled_examples():
    model = SpinChainModel(3, boundary="open")
    p = AnsatzParams.from_vector(model, 1, [0.3, -0.2])
    ident = build_double_contour_circuit(p, model, 0.0, 1, p)
    assert estimate_cost_exact(ident, "010") == pytest.approx(1.0)
    est = estimate_cost_sampled(ident, "010", 1000, 3)
    assert est.value == 1.0 and est.std_error == 0.0 and est.shots_used == 1000
    flip = Circuit(1, [GateOp(GateKind.PAULI_X, (0,))])
    assert estimate_cost_exact(flip, "0") == 0.0
    half = Circuit(1, [GateOp(GateKind.HADAMARD, (0,))])
    shots = 2**13
    est = estimate_cost_sampled(half, "0", shots, 9)
    assert abs(est.value - 0.5) < 3 * 0.00552
    assert estimate_cost_sampled(half, "0", shots, 9).value == est.value
    with pytest.raises(ValueError):
        estimate_cost_sampled(half, "0", 0, 1)


def test_sampled_agrees_with_exact_on_random_contours():
    model = SpinChainModel(4, boundary="open")
    label = neel_label(4)
    for seed in range(5):
        circ = random_contour(model, 2, seed)
        exact = estimate_cost_exact(circ, label)
        est = estimate_cost_sampled(circ, label, 2**16, seed)
        assert abs(est.value - exact) <= 4 * max(est.std_error, 1e-4)


def test_sampled_estimator_unbiased():
    model = SpinChainModel(4)
    label = neel_label(4)
    circ = random_contour(model, 1, 42)
    exact = estimate_cost_exact(circ, label)
    shots = 1024
    values = [estimate_cost_sampled(circ, label, shots, s).value for s in range(200)]
    pooled = np.sqrt(exact * (1 - exact) / (shots * len(values)))
    assert abs(np.mean(values) - exact) < 4 * pooled


def test_noiseless_execution_matches_sampling():
    model = SpinChainModel(3, boundary="open")
    circ = random_contour(model, 1, 0)
    start = StateVector.basis(neel_label(3))
    want = sample_counts(apply_circuit(start, circ), 4096, 5)
    got = execute_noisy(circ, NoiseModel.noiseless(), 4096, 5, initial=neel_label(3))
    assert got == want


def test_readout_only_on_even_x_chain():
    r = 0.1
    circ = Circuit(1, [GateOp(GateKind.PAULI_X, (0,))] * 4)
    hist = execute_noisy(circ, NoiseModel(0.0, 0.0, r, 0.0, 8), 40_000, 1)
    p1 = hist.get("1", 0) / 40_000
    assert abs(p1 - r) < 4 * np.sqrt(r * (1 - r) / 40_000)


def test_execute_noisy_contracts():
    circ = Circuit(2, [GateOp(GateKind.HADAMARD, (0,)), GateOp(GateKind.CNOT, (0, 1))])
    hist = execute_noisy(circ, NoiseModel(), 1000, 3)
    assert sum(hist.values()) == 1000
    assert execute_noisy(circ, NoiseModel(), 1000, 3) == hist
    with pytest.raises(ValueError):
        execute_noisy(circ, NoiseModel(trajectories=64), 10, 0)
    with pytest.raises(ValueError):
        execute_noisy(circ, NoiseModel(), 0, 0)


def test_noise_lowers_return_probability_more_for_deeper_circuits():
    from vtc.vtc import VtcConfig, run_vtc

    model = SpinChainModel(3, boundary="open")
    label = neel_label(3)
    noise = NoiseModel(p1=1e-3, p2=1e-2, readout_01=0.0, readout_10=0.0, trajectories=256)
    gaps, cnots = [], []
    for ell in (1, 2, 3):
        recs = run_vtc(VtcConfig(model, ell, ell, 1.0, 1.0))
        p = AnsatzParams.from_vector(model, ell, np.zeros(parameter_count(model, ell)))
        q = AnsatzParams.from_vector(model, ell, recs[0].params)
        circ = build_double_contour_circuit(p, model, 1.0, ell, q)
        exact = estimate_cost_exact(circ, label)
        raw = np.mean([cost_from_histogram(execute_noisy(circ, noise, 8192, s, initial=label), label) for s in range(4)])
        assert raw < exact
        gaps.append(exact - raw)
        cnots.append(count_two_qubit_gates(circ).two_qubit_gates)
    assert cnots == sorted(cnots) and gaps == sorted(gaps)


def test_noise_monotone_in_scale():
    model = SpinChainModel(3, boundary="open")
    label = neel_label(3)
    circ = random_contour(model, 1, 7, tau=0.0)
    base = NoiseModel(1e-3, 1e-2, 0.0, 0.0, 128)
    raws = []
    for k in (1, 2, 4, 8):
        vals = [cost_from_histogram(execute_noisy(circ, base.scaled(k), 4096, s, initial=label), label) for s in range(4)]
        raws.append(np.mean(vals))
    assert all(b <= a + 0.01 for a, b in zip(raws, raws[1:]))
    assert raws[-1] < raws[0]


def test_depolarizing_decay_per_cnot():
    # identity circuit of CNOT pairs: with X/Y/Z errors at rate p per qubit
    # the return probability of |00> decays by about 2 * (2/3) p per CNOT
    p2 = 5e-3
    noise = NoiseModel(0.0, p2, 0.0, 0.0, 512)
    counts, returns = [], []
    for pairs in (5, 10, 20, 40):
        circ = Circuit(2, [GateOp(GateKind.CNOT, (0, 1))] * (2 * pairs))
        hist = execute_noisy(circ, noise, 2**15, pairs)
        counts.append(2 * pairs)
        returns.append(cost_from_histogram(hist, "00"))
    slope = -np.polyfit(counts, np.log(returns), 1)[0]
    expected = 4 * p2 / 3
    assert abs(slope - expected) < 0.3 * expected


def test_histogram_csv_round_trip(tmp_path):
    hist = {"010": 10, "100": 5, "001": 0}
    text = histogram_to_csv(hist)
    assert text.splitlines()[0] == "bitstring,count"
    assert text.splitlines()[1].startswith("100")  # ordered by basis index
    path = tmp_path / "h.csv"
    write_histogram_csv(hist, path)
    assert read_histogram_csv(path) == hist
    quasi = {"01": -0.25, "10": 1.25}
    write_histogram_csv(quasi, path)
    assert read_histogram_csv(path) == quasi
