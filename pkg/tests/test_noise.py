import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfswitch.circuit import TWO_QUBIT_PAULIS, FaultLocation, enumerate_fault_locations
from mfswitch.noise import (NoiseModel, RateEstimate, calibrate_toffoli, sample_fault,
                            single_param_model, toffoli_first_order_slope, toffoli_flip_rates)


def test_single_param_model_relations():
    m = single_param_model(1e-3)
    assert m.p2 == 1e-3
    assert m.p1 == m.p_init == m.p_meas == pytest.approx(1e-4)
    assert m.p_toff == pytest.approx(2.88e-3)
    assert m.p_idle_meas == 0


def test_zero_model():
    m = single_param_model(0)
    assert all(v == 0 for v in m.to_dict().values())


@pytest.mark.parametrize("p", [-1e-3, 0.6])
def test_out_of_range_p(p):
    with pytest.raises(ValueError):
        single_param_model(p)


def test_model_rejects_non_probabilities():
    with pytest.raises(ValueError):
        NoiseModel(p1=1.5)
    with pytest.raises(ValueError):
        NoiseModel(p2=float("nan"))


def test_two_qubit_variants_uniform():
    loc = FaultLocation(0, "two-qubit", (0, 1))
    rng = np.random.default_rng(0)
    m = NoiseModel(p2=1.0)
    draws = 100_000
    counts = {}
    for _ in range(draws):
        e = sample_fault(m, loc, rng)
        key = e.letter(0) + e.letter(1)
        counts[key] = counts.get(key, 0) + 1
    assert set(counts) == set(TWO_QUBIT_PAULIS)
    mean, sd = draws / 15, np.sqrt(draws * (1 / 15) * (14 / 15))
    assert all(abs(c - mean) < 3.5 * sd for c in counts.values())


def test_zero_rate_never_faults():
    rng = np.random.default_rng(1)
    for cls, q in (("two-qubit", (0, 1)), ("single-qubit", (0,)), ("toffoli", (2,))):
        loc = FaultLocation(0, cls, q)
        assert all(sample_fault(NoiseModel(), loc, rng) is None for _ in range(200))


def test_toffoli_fault_is_target_x_only():
    loc = FaultLocation(0, "toffoli", (2,))
    rng = np.random.default_rng(2)
    for _ in range(100):
        e = sample_fault(NoiseModel(p_toff=1.0), loc, rng, n_qubits=3)
        assert e.support() == [2] and e.letter(2) == "X"


def test_idle_fault_is_dephasing():
    loc = FaultLocation(0, "idle-during-meas", (1,))
    e = sample_fault(NoiseModel(p_idle_meas=1.0), loc, np.random.default_rng(0), n_qubits=2)
    assert e.letter(1) == "Z"


def test_sampling_reproducible_from_seed(protocols):
    locs = enumerate_fault_locations(protocols("switch-15-7").circuit)
    m = single_param_model(0.05)

    def draw(seed):
        rng = np.random.default_rng(seed)
        return [sample_fault(m, loc, rng, 33) for loc in locs]

    assert draw(4) == draw(4)


def test_expected_fault_count(protocols):
    locs = enumerate_fault_locations(protocols("switch-15-7").circuit)
    m = single_param_model(0.02)
    rng = np.random.default_rng(3)
    trials = 2000
    hits = sum(sample_fault(m, loc, rng, 33) is not None for _ in range(trials) for loc in locs)
    expected = trials * sum(m.prob(loc.fault_class) for loc in locs)
    assert abs(hits - expected) < 4 * np.sqrt(expected)


@given(st.integers(1, 10_000), st.data())
def test_rate_estimate_interval_contains_point(shots, data):
    fails = data.draw(st.integers(0, shots))
    r = RateEstimate.from_counts(fails, shots)
    assert r.ci_low <= r.rate <= r.ci_high
    assert 0 <= r.ci_low and r.ci_high <= 1


def test_rate_estimate_rejects_bad_counts():
    with pytest.raises(ValueError):
        RateEstimate.from_counts(5, 3)


def test_calibration_zero_noise_never_flips():
    rates = toffoli_flip_rates(0.0, 2000, np.random.default_rng(0))
    assert np.all(rates == 0)


def test_calibration_input_validation():
    with pytest.raises(ValueError):
        calibrate_toffoli(p_values=(5e-2,))
    with pytest.raises(ValueError):
        calibrate_toffoli(shots=10)


def test_exact_first_order_slopes():
    single = toffoli_first_order_slope()
    pair = toffoli_first_order_slope(pair=True)
    assert single == pytest.approx(2.88, abs=0.15)
    assert pair == pytest.approx(5.12, abs=0.35)
    assert pair < 2 * single


def test_sampled_slope_near_exact_slope():
    cal = calibrate_toffoli(p_values=(4e-3, 8e-3), shots=50_000, seed=1)
    assert cal.slope == pytest.approx(toffoli_first_order_slope(), rel=0.1)
