import itertools

import numpy as np
import pytest

from mfswitch.circuit import TWO_QUBIT_PAULIS, CircuitBuilder
from mfswitch.codes import build_decoder_table, steane_spec
from mfswitch.engines import (compile_protocol, count_weight2_faults, estimate_failure_rate,
                              ft_check_single_faults, run_trajectory)
from mfswitch.noise import NoiseModel, single_param_model
from mfswitch.pauli import PauliString
from mfswitch.protocol_types import Protocol, switch_inputs
from mfswitch.tableau import NonDeterministicToffoliControl


def steane_toy(pairs):
    """Steane data followed by the given CNOTs between data qubits (each pair applied twice)."""
    b = CircuitBuilder()
    d = b.register("d", 7)
    for c, t in pairs:
        b.add("CNOT", d[c], d[t])
    s = steane_spec()
    return Protocol("toy", b.build(), s, s, tuple(d), tuple(d), switch_inputs(s, s, 7, d))


def fanout_toy():
    """CNOTs from data qubit 0 onto two scratch qubits: faults touch one data qubit only."""
    b = CircuitBuilder()
    d = b.register("d", 7)
    a = b.register("a", 2)
    for q in a:
        b.add("INIT", q)
        b.add("H", q)
    b.add("CNOT", d[0], a[0])
    b.add("CNOT", d[0], a[1])
    s = steane_spec()
    return Protocol("fanout", b.build(), s, s, tuple(d), tuple(d), switch_inputs(s, s, 9, d))


def _cnot_conj(p: PauliString, c: int, t: int) -> PauliString:
    x, z = p.x_mask, p.z_mask
    x ^= ((x >> c) & 1) << t
    z ^= ((z >> t) & 1) << c
    return PauliString(p.n_qubits, x, z)


def _xor(a: PauliString, b: PauliString) -> PauliString:
    """Product up to phase."""
    return PauliString(a.n_qubits, a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask)


def _fails(err: PauliString, tracked: PauliString) -> bool:
    dec = build_decoder_table(steane_spec())
    residual = _xor(err, dec.correction(err))
    return not residual.commutes(tracked)


def oracle_pair_failures(label: str) -> int:
    """Malignant (variant, variant) pairs for CNOT(0,1); CNOT(0,1) by direct Pauli algebra."""
    s = steane_spec()
    tracked = s.logical_z[0] if label == "0" else s.logical_x[0]
    count = 0
    for v1, v2 in itertools.product(TWO_QUBIT_PAULIS, repeat=2):
        e1 = PauliString.from_sparse(7, {0: v1[0], 1: v1[1]})
        e2 = PauliString.from_sparse(7, {0: v2[0], 1: v2[1]})
        count += _fails(_xor(_cnot_conj(e1, 0, 1), e2), tracked)
    return count


# -- zero-noise soundness --------------------------------------------------------------------

@pytest.mark.parametrize("name", ["switch-15-7", "switch-7-15", "full-cycle", "mb-15-7",
                                  "init-833-plus"])
def test_zero_noise_never_fails(name, protocols):
    res = estimate_failure_rate(protocols(name), NoiseModel(), 100_000, seed=1)
    assert all(r.failures == 0 for r in res.values())


def test_zero_noise_trajectories_never_fail(protocols):
    rng = np.random.default_rng(0)
    proto = protocols("switch-15-7")
    for lab in proto.inputs:
        for _ in range(20):
            r = run_trajectory(proto, NoiseModel(), lab, rng)
            assert not r.aborted and not any(r.failed.values())


def test_zero_noise_pair_count_is_zero():
    rep = count_weight2_faults(fanout_toy(), ("2", "2"))
    assert rep.raw == {"0": 0, "+": 0}


# -- designated-location oracles -------------------------------------------------------------

def test_double_cnot_failure_frequency_matches_pauli_algebra():
    proto = steane_toy([(0, 1), (0, 1)])
    res = estimate_failure_rate(proto, NoiseModel(p2=1.0), 225 * 400, seed=3)
    for lab in ("0", "+"):
        want = oracle_pair_failures(lab) / 225
        r = res[lab]
        assert r.ci_low <= want <= r.ci_high or abs(r.rate - want) < 0.01, (lab, r.rate, want)


def test_pair_count_matches_pauli_algebra():
    proto = steane_toy([(0, 1), (0, 1)])
    rep = count_weight2_faults(proto, ("2", "2"))
    for lab in ("0", "+"):
        assert rep.raw[lab] == oracle_pair_failures(lab)
        assert rep.normalized[lab] == pytest.approx(rep.raw[lab] / 225)


def test_single_cnot_location_malignant_fraction():
    # one CNOT between data qubits: each single Pauli is weight <= 2 on data and only the
    # weight-2 variants that are logical-equivalent-uncorrectable fail
    proto = steane_toy([(0, 1), (0, 1)])
    rep = ft_check_single_faults(proto)
    dec_fail = {lab: 0 for lab in proto.inputs}
    s = steane_spec()
    for v in TWO_QUBIT_PAULIS:
        e = PauliString.from_sparse(7, {0: v[0], 1: v[1]})
        for lab, tracked in (("0", s.logical_z[0]), ("+", s.logical_x[0])):
            # a fault after the second CNOT reaches the output unchanged
            dec_fail[lab] += _fails(e, tracked)
    second = [f for f in rep.failing if f.location.op_index == 1]
    assert len(second) == sum(dec_fail.values())


# -- certification ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["init-steane-zero", "init-833-plus", "yellow-reinit"])
def test_initializations_certified(name, protocols):
    rep = ft_check_single_faults(protocols(name))
    assert rep.certified, rep.failing_locations()[:5]
    assert rep.total_locations > 0


def test_report_json(protocols):
    rep = ft_check_single_faults(protocols("switch-15-7", False))
    data = rep.to_json()
    assert data["certified"] is False and data["failing_locations"]
    assert set(data["failing_locations"]) <= set(range(len(protocols("switch-15-7", False)
                                                           .circuit.ops)))


# -- determinism and parallelism -------------------------------------------------------------

def test_rates_identical_across_worker_counts(protocols):
    proto = protocols("switch-15-7")
    m = single_param_model(5e-3)
    runs = [estimate_failure_rate(proto, m, 150_000, seed=9, batch=1 << 14, workers=w)
            for w in (1, 2, 5)]
    assert runs[0] == runs[1] == runs[2]


def test_seed_changes_sample(protocols):
    proto = protocols("switch-15-7")
    m = single_param_model(1e-2)
    a = estimate_failure_rate(proto, m, 50_000, seed=1)["avg"].failures
    b = estimate_failure_rate(proto, m, 50_000, seed=2)["avg"].failures
    assert a != b


def test_counts_deterministic(protocols):
    proto = protocols("init-steane-zero")
    a = count_weight2_faults(proto, ("2", "2"))
    b = count_weight2_faults(proto, ("2", "2"))
    assert a == b


def test_count_size_guard(protocols):
    with pytest.raises(ValueError):
        count_weight2_faults(protocols("switch-7-15"), ("2", "2"), max_runs=1000)


def test_shots_must_be_positive(protocols):
    with pytest.raises(ValueError):
        estimate_failure_rate(protocols("switch-15-7"), NoiseModel(), 0)


# -- engine cross-checks ---------------------------------------------------------------------

def test_tableau_trajectories_agree_with_frame_simulator(protocols):
    proto = protocols("switch-15-7")
    m = single_param_model(2e-2)
    rng = np.random.default_rng(5)
    n = 1500
    fails = sum(any(run_trajectory(proto, m, lab, rng).failed.values())
                for lab in ("0", "+") for _ in range(n))
    frame = estimate_failure_rate(proto, m, 100_000, seed=5)["avg"].rate
    sd = np.sqrt(frame * (1 - frame) / (2 * n))
    assert abs(fails / (2 * n) - frame) < 4 * sd


def test_failure_rate_monotone_in_p(protocols):
    proto = protocols("switch-15-7")
    prev = None
    for p in (1e-3, 3e-3, 1e-2, 3e-2):
        r = estimate_failure_rate(proto, single_param_model(p), 100_000, seed=4)["avg"]
        if prev is not None:
            assert r.ci_high >= prev.ci_low
            assert r.rate >= prev.rate
        prev = r


def test_random_toffoli_control_aborts():
    s = steane_spec()
    b = CircuitBuilder()
    d = b.register("d", 7)
    a = b.register("a", 3)
    b.add("H", a[0])
    b.add("TOFFOLI", a[0], a[1], a[2])
    proto = Protocol("bad", b.build(), s, s, tuple(d), tuple(d), switch_inputs(s, s, 10, d))
    r = run_trajectory(proto, NoiseModel(), "0", np.random.default_rng(0))
    assert r.aborted and not r.failed and "Toffoli" in r.diagnostics
    with pytest.raises(NonDeterministicToffoliControl):
        compile_protocol(proto)


def test_unknown_input_rejected(protocols):
    with pytest.raises(KeyError):
        estimate_failure_rate(protocols("switch-15-7"), NoiseModel(), 10, inputs=["1"])
