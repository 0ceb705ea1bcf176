"""Monte Carlo failure rates, single-fault certification and weight-2 fault-path counting.

Everything runs on the bit-packed frame simulator except ``run_trajectory``, which
walks one shot through the full tableau and serves as a slow cross-check.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuit import FaultLocation, enumerate_fault_locations
from .codes import build_decoder_table
from .frame import FrameSimulator, Reference, prepare_input, reference_run
from .noise import NoiseModel, RateEstimate, sample_fault
from .pauli import PauliString
from .protocol_types import Protocol
from .tableau import NonDeterministicToffoliControl

DEFAULT_BATCH = 1 << 16
MAX_PAIR_RUNS = 10**8


class ProtocolError(ValueError):
    """The noiseless protocol does not produce the expected logical output."""


# -- compilation ---------------------------------------------------------------------------

def _check_matrix(paulis) -> tuple[np.ndarray, np.ndarray]:
    n = paulis[0].n_qubits
    xm = np.array([[p.x_mask >> q & 1 for q in range(n)] for p in paulis], dtype=np.uint8).T
    zm = np.array([[p.z_mask >> q & 1 for q in range(n)] for p in paulis], dtype=np.uint8).T
    return xm, zm


def _bits_to_index(bits: np.ndarray) -> np.ndarray:
    weights = (1 << np.arange(bits.shape[1], dtype=np.int64))
    return bits.astype(np.int64) @ weights


class _Decoder:
    """Vectorised failure test on output-qubit frame bits (shots x n arrays)."""

    def __init__(self, protocol: Protocol, tracked: tuple[PauliString, ...]):
        code = protocol.output_code
        n = code.n
        self.mode = protocol.failure_mode
        self.tracked = _check_matrix(list(tracked))
        if self.mode == "decode":
            table = build_decoder_table(code)
            self.zc = np.array([[c >> q & 1 for q in range(n)] for c in table.z_checks], dtype=np.uint8).T
            self.xc = np.array([[c >> q & 1 for q in range(n)] for c in table.x_checks], dtype=np.uint8).T
            self.corr_x = self._table(table.x_table, len(table.z_checks), n)
            self.corr_z = self._table(table.z_table, len(table.x_checks), n)
        elif self.mode == "weight":
            checks = list(code.generators()) + list(tracked)
            if any(g.x_mask and g.z_mask for g in checks):
                raise ValueError("weight mode needs CSS checks")
            # Z-type checks see X errors and vice versa; each part is judged on its own
            self.z_checks = [g for g in checks if not g.x_mask]
            self.x_checks = [g for g in checks if g.x_mask]
            self.zc = _check_matrix(self.z_checks)[1] if self.z_checks else np.zeros((n, 0), np.uint8)
            self.xc = _check_matrix(self.x_checks)[0] if self.x_checks else np.zeros((n, 0), np.uint8)
            allowed = list(protocol.allowed_errors)
            self.ok_x = self._ok_table(n, "X", self.z_checks, [e for e in allowed if e.x_mask])
            self.ok_z = self._ok_table(n, "Z", self.x_checks, [e for e in allowed if e.z_mask])
        else:
            raise ValueError(f"unknown failure mode {self.mode!r}")

    @staticmethod
    def _ok_table(n: int, letter: str, checks, allowed) -> np.ndarray:
        ok = np.zeros(1 << len(checks), dtype=bool)
        errs = [PauliString.identity(n)] + [PauliString.from_sparse(n, {q: letter}) for q in range(n)]
        for e in errs + allowed:
            ok[sum((0 if e.commutes(g) else 1) << i for i, g in enumerate(checks))] = True
        return ok

    def weight_ok(self, sx: np.ndarray, sz: np.ndarray) -> np.ndarray:
        """``sx``: Z-type check flips (from X errors); ``sz``: X-type check flips."""
        return self.ok_x[_bits_to_index(sx)] & self.ok_z[_bits_to_index(sz)]

    @staticmethod
    def _table(table: dict[int, int], m: int, n: int) -> np.ndarray:
        out = np.zeros((1 << m, n), dtype=np.uint8)
        for s, corr in table.items():
            out[s] = [corr >> q & 1 for q in range(n)]
        return out

    def failures(self, xb: np.ndarray, zb: np.ndarray) -> np.ndarray:
        """Boolean failure flag per shot, with ``xb``/``zb`` of shape (shots, n)."""
        xb = xb.astype(np.uint8)
        zb = zb.astype(np.uint8)
        if self.mode == "decode":
            sx = (xb @ self.zc) & 1
            sz = (zb @ self.xc) & 1
            xb = xb ^ self.corr_x[_bits_to_index(sx)]
            zb = zb ^ self.corr_z[_bits_to_index(sz)]
            tx, tz = self.tracked
            anti = ((xb @ tz) + (zb @ tx)) & 1
            return anti.any(axis=1)
        return ~self.weight_ok((xb @ self.zc) & 1, (zb @ self.xc) & 1)


@dataclass
class _CompiledInput:
    ref: Reference
    sim: FrameSimulator
    decoder: _Decoder


@dataclass
class Compiled:
    protocol: Protocol
    inputs: dict[str, _CompiledInput] = field(default_factory=dict)

    @property
    def locations(self) -> list[FaultLocation]:
        return next(iter(self.inputs.values())).sim.locations


def _output_operator(protocol: Protocol, p: PauliString) -> PauliString:
    return p.embed(protocol.circuit.n_qubits, list(protocol.output_qubits))


def compile_protocol(protocol: Protocol) -> Compiled:
    """Reference runs, frame simulators and decoders for every input; cached on the protocol."""
    cached = protocol.__dict__.get("_compiled")
    if cached is not None:
        return cached
    comp = Compiled(protocol)
    for label, spec in protocol.inputs.items():
        start = prepare_input(protocol.circuit.n_qubits, list(spec.projections))
        ref = reference_run(protocol.circuit, start)
        _check_reference(protocol, ref, spec.tracked, label)
        comp.inputs[label] = _CompiledInput(ref, FrameSimulator(protocol.circuit, ref),
                                            _Decoder(protocol, spec.tracked))
    object.__setattr__(protocol, "_compiled", comp)
    return comp


def _check_reference(protocol: Protocol, ref: Reference, tracked, label: str) -> None:
    for p in list(protocol.output_code.generators()) + list(tracked):
        v = ref.final.pauli_expectation(_output_operator(protocol, p).unsigned())
        want = 0 if p.sign > 0 else 1
        if not v.deterministic or v.bit != want:
            raise ProtocolError(f"{protocol.name} input {label}: noiseless output has "
                                f"{p.sparse_str()} = {v}")


# -- Monte Carlo -----------------------------------------------------------------------------

def _batch_failures(ci: _CompiledInput, protocol: Protocol, shots: int, rng, noise=None,
                    forced=None) -> np.ndarray:
    batch = ci.sim.run(shots, rng, noise=noise, forced=forced)
    xb, zb = batch.qubit_bits(protocol.output_qubits)
    return ci.decoder.failures(xb.T, zb.T)


def _resolve_inputs(protocol: Protocol, inputs) -> list[str]:
    labels = list(protocol.inputs) if inputs is None else list(inputs)
    for lab in labels:
        if lab not in protocol.inputs:
            raise KeyError(f"{protocol.name} has no input {lab!r}")
    return labels


def default_workers() -> int:
    """Worker count from ``MFSWITCH_WORKERS``, else 1."""
    try:
        return max(1, int(os.environ.get("MFSWITCH_WORKERS", "1")))
    except ValueError:
        return 1


def estimate_failure_rate(protocol: Protocol, model: NoiseModel, shots: int, inputs=None,
                          seed: int = 0, batch: int = DEFAULT_BATCH,
                          workers: int | None = None) -> dict[str, RateEstimate]:
    """Per-input failure rates plus their plain average under key ``"avg"``.

    Batches use independent generators seeded by ``(seed, input, batch index)`` so the
    result does not depend on how batches are scheduled or on the worker count.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    workers = default_workers() if workers is None else max(1, int(workers))
    comp = compile_protocol(protocol)
    out: dict[str, RateEstimate] = {}
    labels = _resolve_inputs(protocol, inputs)
    sizes = [min(batch, shots - s) for s in range(0, shots, batch)]
    for li, lab in enumerate(labels):
        ci = comp.inputs[lab]

        def run(k, m, ci=ci, li=li):
            rng = np.random.default_rng([seed, li, k])
            return int(_batch_failures(ci, protocol, m, rng, noise=model).sum())

        if workers == 1 or len(sizes) == 1:
            fails = sum(run(k, m) for k, m in enumerate(sizes))
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                fails = sum(pool.map(run, range(len(sizes)), sizes))
        out[lab] = RateEstimate.from_counts(fails, shots)
    if len(labels) > 1:
        out["avg"] = RateEstimate.from_counts(sum(out[lab].failures for lab in labels),
                                              shots * len(labels))
    return out


# -- single trajectories on the tableau ------------------------------------------------------

@dataclass
class TrajectoryResult:
    failed: dict[str, bool]
    aborted: bool = False
    diagnostics: str = ""
    faults: list[tuple[int, str]] = field(default_factory=list)


def run_trajectory(protocol: Protocol, model: NoiseModel, input_state: str,
                   rng: np.random.Generator, log_faults: bool = False) -> TrajectoryResult:
    """One noisy shot on the full tableau followed by noiseless syndrome readout and decoding."""
    c = protocol.circuit
    spec = protocol.inputs[input_state]
    t = prepare_input(c.n_qubits, list(spec.projections))
    locs = {loc.op_index: loc for loc in enumerate_fault_locations(c)}
    record: list[int] = []
    faults: list[tuple[int, str]] = []

    def fault(i):
        loc = locs.get(i)
        if loc is None:
            return
        e = sample_fault(model, loc, rng, c.n_qubits)
        if e is not None:
            t.apply_pauli(e)
            if log_faults:
                faults.append((i, e.sparse_str()))

    try:
        for i, op in enumerate(c.ops):
            k = op.kind
            if k == "MEASZ":
                fault(i)
                record.append(t.measure_z(op.qubits[0], rng))
                continue
            if k in ("INIT", "RESET"):
                t.reset(op.qubits[0], rng)
            elif k == "TOFFOLI":
                t.apply_toffoli(*op.qubits)
            elif k == "PAULI_IF":
                if op.eval_cond(record):
                    for ch, q in zip(op.paulis, op.qubits):
                        {"X": t.pauli_x, "Y": t.pauli_y, "Z": t.pauli_z}[ch](q)
            elif k != "IDLE":
                t.apply_gate(k, *op.qubits)
            fault(i)
    except NonDeterministicToffoliControl as exc:
        return TrajectoryResult({}, aborted=True, diagnostics=str(exc), faults=faults)

    code = protocol.output_code
    # noiseless readout of the output code's syndrome
    err_x = err_z = 0
    x_syn = z_syn = 0
    for i, g in enumerate(code.z_masks()):
        v = t.pauli_expectation(PauliString(code.n, 0, g).embed(c.n_qubits, list(protocol.output_qubits)))
        x_syn |= v.bit << i
    for i, g in enumerate(code.x_masks()):
        v = t.pauli_expectation(PauliString(code.n, g, 0).embed(c.n_qubits, list(protocol.output_qubits)))
        z_syn |= v.bit << i
    if protocol.failure_mode == "decode":
        corr = build_decoder_table(code).lookup(x_syn, z_syn)
        err_x, err_z = corr.x_mask, corr.z_mask
        t.apply_pauli(_output_operator(protocol, PauliString(code.n, err_x, err_z)))
        failed = {}
        for p in spec.tracked:
            v = t.pauli_expectation(_output_operator(protocol, p).unsigned())
            failed[p.sparse_str()] = (not v.deterministic) or v.bit != (0 if p.sign > 0 else 1)
        return TrajectoryResult(failed, faults=faults)
    # weight mode: read every check; the X and Z parts are judged separately
    dec = compile_protocol(protocol).inputs[input_state].decoder

    def flips(checks):
        bits = []
        for p in checks:
            v = t.pauli_expectation(_output_operator(protocol, p).unsigned())
            if not v.deterministic:
                return None
            bits.append(v.bit ^ (0 if p.sign > 0 else 1))
        return np.array([bits], dtype=np.uint8).reshape(1, len(checks))

    sx, sz = flips(dec.z_checks), flips(dec.x_checks)
    bad = sx is None or sz is None or not bool(dec.weight_ok(sx, sz)[0])
    return TrajectoryResult({p.sparse_str(): bad for p in spec.tracked}, faults=faults)


# -- single-fault certification ---------------------------------------------------------------

@dataclass
class FtFailure:
    location: FaultLocation
    variant: str
    input_state: str

    def to_json(self) -> dict:
        return {"op_index": self.location.op_index, "class": self.location.fault_class,
                "qubits": list(self.location.qubits), "variant": self.variant,
                "input": self.input_state}


@dataclass
class FtReport:
    protocol: str
    total_locations: int
    total_runs: int
    failing: list[FtFailure]

    @property
    def certified(self) -> bool:
        return not self.failing

    def failing_locations(self) -> list[int]:
        return sorted({f.location.op_index for f in self.failing})

    def to_json(self) -> dict:
        return {"protocol": self.protocol, "total_locations": self.total_locations,
                "total_runs": self.total_runs, "certified": self.certified,
                "failing_locations": self.failing_locations(),
                "failing": [f.to_json() for f in self.failing]}


def _columns(locs: list[FaultLocation], indices) -> list[tuple[int, int]]:
    return [(j, v) for j in indices for v in range(len(locs[j].variants()))]


def ft_check_single_faults(protocol: Protocol, inputs=None, replicates: int = 8,
                           seed: int = 0) -> FtReport:
    """Inject every variant of every fault location alone and decode ideally.

    Random measurement and reset branches are resampled ``replicates`` times per fault,
    because the coherent Toffoli feedback makes the effect of a fault branch-dependent.
    """
    comp = compile_protocol(protocol)
    locs = comp.locations
    cols = _columns(locs, range(len(locs)))
    failing: list[FtFailure] = []
    runs = 0
    for li, lab in enumerate(_resolve_inputs(protocol, inputs)):
        ci = comp.inputs[lab]
        shots = len(cols) * replicates
        col_of_shot = np.repeat(np.arange(len(cols)), replicates)
        forced: dict[int, tuple[list[int], list[int]]] = {}
        for s, ci_col in enumerate(col_of_shot):
            j, v = cols[ci_col]
            sh, var = forced.setdefault(j, ([], []))
            sh.append(s)
            var.append(v)
        forced_np = {j: (np.array(s, dtype=np.int64), np.array(v, dtype=np.int64))
                     for j, (s, v) in forced.items()}
        fails = _batch_failures(ci, protocol, shots, np.random.default_rng([seed, li]),
                                forced=forced_np)
        runs += shots
        bad = sorted(set(col_of_shot[np.nonzero(fails)[0]].tolist()))
        for b in bad:
            j, v = cols[b]
            failing.append(FtFailure(locs[j], locs[j].variants()[v], lab))
    return FtReport(protocol.name, len(locs), runs, failing)


# -- weight-2 fault-path counting ------------------------------------------------------------

CLASS_ALIASES = {"1": "single-qubit", "2": "two-qubit", "toff": "toffoli"}
# equiprobable variants per location of each class
CLASS_VARIANTS = {"single-qubit": 3, "two-qubit": 15}


@dataclass
class CountReport:
    protocol: str
    class_pair: tuple[str, str]
    raw: dict[str, int]
    normalized: dict[str, float]
    runs: int

    def to_json(self) -> dict:
        return {"protocol": self.protocol, "class_pair": list(self.class_pair), "raw": self.raw,
                "normalized": self.normalized, "runs": self.runs}


def _pair_runs(locs, a_idx, b_idx, same) -> int:
    va = [len(locs[j].variants()) for j in a_idx]
    vb = [len(locs[j].variants()) for j in b_idx]
    if same:
        tot = sum(va) ** 2 - sum(v * v for v in va)
        return tot // 2
    return sum(va) * sum(vb)


def count_weight2_faults(protocol: Protocol, class_pair: tuple[str, str], inputs=None,
                         seed: int = 0, replicates: int = 1, batch: int = 1 << 18,
                         max_runs: int = MAX_PAIR_RUNS) -> CountReport:
    """Count logical failures over every pair of faults at distinct locations.

    Two-qubit locations expand over their 15 Paulis and Toffoli locations over their
    single target flip. The normalised coefficient divides by the variant count of each
    member's class, so it multiplies the per-location fault probabilities.
    """
    ca, cb = (CLASS_ALIASES.get(c, c) for c in class_pair)
    comp = compile_protocol(protocol)
    locs = comp.locations
    a_idx = [j for j, loc in enumerate(locs) if loc.fault_class == ca]
    b_idx = [j for j, loc in enumerate(locs) if loc.fault_class == cb]
    same = ca == cb
    total = _pair_runs(locs, a_idx, b_idx, same) * replicates
    if total > max_runs:
        raise ValueError(f"{total} pair runs exceed the limit of {max_runs}")

    def pairs():
        if same:
            for j1, j2 in itertools.combinations(a_idx, 2):
                yield j1, j2
        else:
            for j1 in a_idx:
                for j2 in b_idx:
                    if j1 != j2:
                        yield j1, j2

    raw: dict[str, int] = {}
    labels = _resolve_inputs(protocol, inputs)
    for li, lab in enumerate(labels):
        ci = comp.inputs[lab]
        count = 0
        chunk: dict[int, tuple[list[int], list[int]]] = {}
        fill = 0
        k = 0

        def flush():
            nonlocal count, chunk, fill, k
            if fill == 0:
                return
            forced = {j: (np.array(s, dtype=np.int64), np.array(v, dtype=np.int64))
                      for j, (s, v) in chunk.items()}
            rng = np.random.default_rng([seed, li, k])
            count += int(_batch_failures(ci, protocol, fill, rng, forced=forced).sum())
            chunk, fill, k = {}, 0, k + 1

        for j1, j2 in pairs():
            n1, n2 = len(locs[j1].variants()), len(locs[j2].variants())
            m = n1 * n2 * replicates
            if fill + m > batch:
                flush()
            v1 = np.repeat(np.arange(n1), n2 * replicates)
            v2 = np.tile(np.repeat(np.arange(n2), replicates), n1)
            sh = np.arange(fill, fill + m)
            for j, v in ((j1, v1), (j2, v2)):
                s_list, v_list = chunk.setdefault(j, ([], []))
                s_list.extend(sh.tolist())
                v_list.extend(v.tolist())
            fill += m
        flush()
        raw[lab] = count
    scale = CLASS_VARIANTS.get(ca, 1) * CLASS_VARIANTS.get(cb, 1) * replicates
    norm = {lab: raw[lab] / scale for lab in raw}
    return CountReport(protocol.name, tuple(class_pair), raw, norm, total * len(labels))
