"""Circuit-level stochastic Pauli noise."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .circuit import FaultLocation
from .pauli import PauliString

DEFAULT_TOFFOLI_FACTOR = 2.88


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    p_toff: float = 0.0
    p_init: float = 0.0
    p_meas: float = 0.0
    p_idle_meas: float = 0.0

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ValueError(f"{name}={v} is not a probability")

    def prob(self, fault_class: str) -> float:
        return {
            "single-qubit": self.p1,
            "two-qubit": self.p2,
            "toffoli": self.p_toff,
            "init": self.p_init,
            "meas": self.p_meas,
            "idle-during-meas": self.p_idle_meas,
        }.get(fault_class, 0.0)

    def replace(self, **kw) -> NoiseModel:
        d = asdict(self)
        d.update(kw)
        return NoiseModel(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def single_param_model(p: float, toffoli_factor: float = DEFAULT_TOFFOLI_FACTOR,
                       p_idle_meas: float = 0.0) -> NoiseModel:
    """Two-qubit gates fail with ``p``; single-qubit gates, init and measurement with ``p/10``."""
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"p={p} outside [0, 0.5]")
    return NoiseModel(p1=p / 10, p2=p, p_toff=min(1.0, toffoli_factor * p),
                      p_init=p / 10, p_meas=p / 10, p_idle_meas=p_idle_meas)


def sample_fault(model: NoiseModel, loc: FaultLocation, rng: np.random.Generator,
                 n_qubits: int | None = None) -> PauliString | None:
    n = n_qubits if n_qubits is not None else max(loc.qubits) + 1
    if rng.random() >= model.prob(loc.fault_class):
        return None
    variants = loc.variants()
    letters = variants[int(rng.integers(len(variants)))]
    return PauliString.from_sparse(n, dict(zip(loc.qubits, letters)))


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    ci_low: float
    ci_high: float
    shots: int
    failures: int

    @classmethod
    def from_counts(cls, failures: int, shots: int, alpha: float = 0.05) -> RateEstimate:
        if shots < 1 or not 0 <= failures <= shots:
            raise ValueError("need 0 <= failures <= shots and shots >= 1")
        from statsmodels.stats.proportion import proportion_confint

        lo, hi = proportion_confint(failures, shots, alpha=alpha, method="wilson")
        rate = failures / shots
        # clip round-off at the ends of [0, 1]
        lo, hi = max(0.0, min(float(lo), rate)), min(1.0, max(float(hi), rate))
        return cls(rate, lo, hi, shots, failures)

    def to_dict(self) -> dict:
        return asdict(self)


# -- Toffoli calibration on the dense oracle ------------------------------------------------

@dataclass(frozen=True)
class ToffoliCalibration:
    slope: float
    per_input: list[float]
    p_values: list[float]
    shots: int
    pair: bool
    reduced: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _calibration_setup(pair: bool, reduced: bool):
    from .circuit import CircuitBuilder
    from .dense import toffoli_decomposition

    b = CircuitBuilder()
    n = 4 if pair else 3
    q = b.register("q", n)
    t = q[n - 1]
    toffoli_decomposition(b, q[0], q[1], t, reduced)
    if pair:
        toffoli_decomposition(b, q[0], q[2], t, reduced)
    b.measure(t)
    c = b.build()

    def ideal_target(bits: int) -> int:
        a = bits & 1
        v = (bits >> (n - 1)) & 1
        v ^= a & (bits >> 1) & 1
        if pair:
            v ^= a & (bits >> 2) & 1
        return v

    return c, n, ideal_target


def calibration_model(p: float) -> NoiseModel:
    """Gate-level depolarizing noise used for calibration: p2=p, everything else p/10."""
    return NoiseModel(p1=p / 10, p2=p, p_init=p / 10, p_meas=p / 10)


def toffoli_flip_rates(p: float, shots: int, rng: np.random.Generator,
                       pair: bool = False, reduced: bool = False) -> np.ndarray:
    """Target-flip frequency for every basis input at physical rate ``p``.

    Inputs are prepared with an X fault of probability ``p_init`` per qubit and the
    target readout carries the measurement fault.
    """
    from .dense import DenseState

    c, n, ideal = _calibration_setup(pair, reduced)
    model = calibration_model(p)
    out = np.zeros(1 << n)
    for bits in range(1 << n):
        st = DenseState.basis(n, bits, batch=shots)
        for q in range(n):
            rows = np.nonzero(rng.random(shots) < model.p_init)[0]
            if len(rows):
                st.apply_pauli_letters("X", (q,), rows)
        rec = _final_record(c, st, rng, model)
        out[bits] = np.mean(rec != ideal(bits))
    return out


def _final_record(c, st, rng, model):
    from .dense import dense_simulate

    # dense_simulate does not return the record, so read the target after evolving the
    # gate part and apply the readout fault by hand
    gates = type(c)(c.registers, c.ops[:-1], c.markers)
    fin = dense_simulate(gates, st, rng, model)
    t = c.ops[-1].qubits[0]
    bit = (rng.random(fin.batch) < np.clip(fin.prob_one(t), 0, 1)).astype(np.int64)
    flip = rng.random(fin.batch) < model.p_meas
    return bit ^ flip


def calibrate_toffoli(p_values=(2e-3, 4e-3, 6e-3, 8e-3), shots: int = 200_000, seed: int = 0,
                      pair: bool = False, reduced: bool | None = None) -> ToffoliCalibration:
    """Fit the target-flip probability linearly in ``p`` per input and average the slopes.

    With ``pair`` two consecutive Toffolis share one control and the target; each then
    only needs the reduced decomposition because its private control is not reused.
    """
    p_values = [float(p) for p in p_values]
    if any(p > 1e-2 or p <= 0 for p in p_values):
        raise ValueError("calibration points must lie in (0, 1e-2]")
    if shots < 1000:
        raise ValueError("at least 1000 shots per point are needed for a usable slope")
    if reduced is None:
        reduced = pair
    rng = np.random.default_rng(seed)
    rates = np.array([toffoli_flip_rates(p, shots, rng, pair, reduced) for p in p_values])
    ps = np.array(p_values)
    # least-squares line through the origin: no faults means no flips
    slopes = (ps @ rates) / (ps @ ps)
    return ToffoliCalibration(float(slopes.mean()), [float(s) for s in slopes], p_values,
                              shots, pair, reduced)


def toffoli_first_order_slope(pair: bool = False, reduced: bool | None = None) -> float:
    """Exact d(flip probability)/dp at p=0 by enumerating every single fault."""
    from .circuit import enumerate_fault_locations
    from .dense import DenseState, dense_simulate

    if reduced is None:
        reduced = pair
    c, n, ideal = _calibration_setup(pair, reduced)
    gates = type(c)(c.registers, c.ops[:-1], c.markers)
    unit = calibration_model(1.0)
    rng = np.random.default_rng(0)
    total = 0.0
    locs = enumerate_fault_locations(gates)
    for bits in range(1 << n):
        want = ideal(bits)
        t = n - 1
        for loc in locs:
            variants = loc.variants()
            st = DenseState.basis(n, bits, batch=len(variants))
            forced = {loc.op_index: [(np.array([k]), v) for k, v in enumerate(variants)]}
            fin = dense_simulate(gates, st, rng, forced_faults=forced)
            p1 = fin.prob_one(t)
            wrong = p1 if want == 0 else 1 - p1
            total += unit.prob(loc.fault_class) * float(wrong.mean())
        # preparation faults on each qubit and the readout fault
        for q in range(n):
            flipped = bits ^ (1 << q)
            st = DenseState.basis(n, flipped)
            fin = dense_simulate(gates, st, rng)
            p1 = float(fin.prob_one(t)[0])
            total += unit.p_init * (p1 if want == 0 else 1 - p1)
        total += unit.p_meas
    return total / (1 << n)
