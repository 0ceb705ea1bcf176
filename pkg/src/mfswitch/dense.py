"""Batched state-vector simulation for small registers (oracle and Toffoli calibration).

Qubit ``q`` is bit ``q`` of the basis index. States are arrays of shape
``(batch, 2**n)`` so many noisy trajectories evolve together.
"""

from __future__ import annotations

import numpy as np

from .circuit import Circuit, CircuitBuilder, FaultLocation, enumerate_fault_locations

MAX_DENSE_QUBITS = 12

_SQ = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "TDG": np.diag([1, np.exp(-1j * np.pi / 4)]),
}


class DenseState:
    def __init__(self, n: int, amps: np.ndarray | None = None, batch: int = 1):
        if n > MAX_DENSE_QUBITS:
            raise ValueError(f"{n} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}")
        self.n = n
        if amps is None:
            amps = np.zeros((batch, 1 << n), dtype=complex)
            amps[:, 0] = 1.0
        amps = np.asarray(amps, dtype=complex)
        if amps.ndim == 1:
            amps = amps[None, :]
        if amps.shape[1] != 1 << n:
            raise ValueError("amplitude table has the wrong size")
        self.amps = amps
        self._idx = np.arange(1 << n)

    @classmethod
    def basis(cls, n: int, bits: int, batch: int = 1) -> DenseState:
        amps = np.zeros((batch, 1 << n), dtype=complex)
        amps[:, bits] = 1.0
        return cls(n, amps)

    @property
    def batch(self) -> int:
        return self.amps.shape[0]

    def copy(self) -> DenseState:
        return DenseState(self.n, self.amps.copy())

    def norms(self) -> np.ndarray:
        return np.sqrt((np.abs(self.amps) ** 2).sum(axis=1))

    # -- gates (rows selects a subset of the batch) --------------------------------------
    def apply_1q(self, u: np.ndarray, q: int, rows=slice(None)) -> None:
        lo = self._idx[(self._idx >> q) & 1 == 0]
        hi = lo | (1 << q)
        a0 = self.amps[rows][:, lo]
        a1 = self.amps[rows][:, hi]
        sub = self.amps[rows]
        sub[:, lo] = u[0, 0] * a0 + u[0, 1] * a1
        sub[:, hi] = u[1, 0] * a0 + u[1, 1] * a1
        self.amps[rows] = sub

    def apply_perm(self, perm: np.ndarray, rows=slice(None)) -> None:
        # new[i] = old[perm[i]]
        self.amps[rows] = self.amps[rows][:, perm]

    def apply_phase(self, phase: np.ndarray, rows=slice(None)) -> None:
        self.amps[rows] = self.amps[rows] * phase

    def gate(self, kind: str, qubits, rows=slice(None)) -> None:
        idx = self._idx
        if kind in _SQ:
            self.apply_1q(_SQ[kind], qubits[0], rows)
        elif kind == "CNOT":
            c, t = qubits
            self.apply_perm(idx ^ (((idx >> c) & 1) << t), rows)
        elif kind == "CZ":
            a, b = qubits
            self.apply_phase(np.where((idx >> a) & (idx >> b) & 1, -1.0, 1.0), rows)
        elif kind == "TOFFOLI":
            a, b, t = qubits
            self.apply_perm(idx ^ (((idx >> a) & (idx >> b) & 1) << t), rows)
        else:
            raise ValueError(f"dense gate {kind} unsupported")

    def apply_pauli_letters(self, letters: str, qubits, rows) -> None:
        for ch, q in zip(letters, qubits):
            if ch != "I":
                self.apply_1q(_SQ[ch], q, rows)

    def prob_one(self, q: int) -> np.ndarray:
        mask = (self._idx >> q) & 1 == 1
        return (np.abs(self.amps[:, mask]) ** 2).sum(axis=1)

    def measure(self, q: int, rng: np.random.Generator) -> np.ndarray:
        p1 = np.clip(self.prob_one(q), 0.0, 1.0)
        out = (rng.random(self.batch) < p1).astype(np.int64)
        keep = ((self._idx[None, :] >> q) & 1) == out[:, None]
        self.amps = np.where(keep, self.amps, 0.0)
        self.amps /= self.norms()[:, None]
        return out

    def reset(self, q: int, rng: np.random.Generator) -> None:
        out = self.measure(q, rng)
        rows = np.nonzero(out)[0]
        if len(rows):
            self.apply_1q(_SQ["X"], q, rows)


def dense_simulate(c: Circuit, state: DenseState, rng: np.random.Generator, noise=None,
                   forced_faults: dict[int, list[tuple[np.ndarray, str]]] | None = None) -> DenseState:
    """Evolve every trajectory in ``state`` through ``c`` with stochastic Pauli faults.

    ``noise`` is a ``NoiseModel`` (or ``None`` for noiseless). ``forced_faults`` maps
    an op index to ``(rows, letters)`` pairs injected deterministically, which lets
    callers enumerate fault paths exactly.
    """
    if c.n_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"{c.n_qubits} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}")
    st = state.copy()
    locs = {loc.op_index: loc for loc in enumerate_fault_locations(c)}
    record: list[np.ndarray] = []
    for i, op in enumerate(c.ops):
        loc = locs.get(i)
        if op.kind == "MEASZ":
            _inject(st, loc, noise, rng, forced_faults, i)
            record.append(st.measure(op.qubits[0], rng))
            continue
        if op.kind in ("INIT", "RESET"):
            st.reset(op.qubits[0], rng)
        elif op.kind == "IDLE":
            pass
        elif op.kind == "PAULI_IF":
            fire = np.zeros(st.batch, dtype=np.int64)
            for mono in op.cond:
                term = np.ones(st.batch, dtype=np.int64)
                for m in mono:
                    term &= record[m]
                fire ^= term
            rows = np.nonzero(fire)[0]
            if len(rows):
                st.apply_pauli_letters(op.paulis, op.qubits, rows)
        else:
            st.gate(op.kind, op.qubits)
        if loc is not None:
            _inject(st, loc, noise, rng, forced_faults, i)
    return st


def _inject(st: DenseState, loc: FaultLocation | None, noise, rng, forced, i) -> None:
    if loc is None:
        return
    if forced is not None:
        for rows, letters in forced.get(i, []):
            st.apply_pauli_letters(letters, loc.qubits, rows)
        return
    if noise is None:
        return
    p = noise.prob(loc.fault_class)
    if p <= 0:
        return
    hit = np.nonzero(rng.random(st.batch) < p)[0]
    if not len(hit):
        return
    variants = loc.variants()
    choice = rng.integers(len(variants), size=len(hit))
    for k, letters in enumerate(variants):
        rows = hit[choice == k]
        if len(rows):
            st.apply_pauli_letters(letters, loc.qubits, rows)


# -- Toffoli decompositions ---------------------------------------------------------------

def toffoli_decomposition(builder: CircuitBuilder, a: int, b: int, t: int, reduced: bool = False) -> None:
    """Standard 7-T Clifford+T Toffoli; ``reduced`` drops the controls-only phase tail."""
    seq = [
        ("H", t), ("CNOT", b, t), ("TDG", t), ("CNOT", a, t), ("T", t), ("CNOT", b, t),
        ("TDG", t), ("CNOT", a, t), ("T", t), ("H", t),
    ]
    tail = [("T", b), ("CNOT", a, b), ("T", a), ("TDG", b), ("CNOT", a, b)]
    for g in seq + ([] if reduced else tail):
        builder.add(g[0], *g[1:])


def decomposed_toffoli_circuit(reduced: bool = False) -> Circuit:
    b = CircuitBuilder()
    q = b.register("q", 3)
    toffoli_decomposition(b, q[0], q[1], q[2], reduced)
    return b.build()


def two_toffoli_circuit(reduced: bool = False) -> Circuit:
    """Toffoli(c0, c1 -> t) then Toffoli(c0, c2 -> t): one shared control and a shared target."""
    b = CircuitBuilder()
    q = b.register("q", 4)
    toffoli_decomposition(b, q[0], q[1], q[3], reduced)
    toffoli_decomposition(b, q[0], q[2], q[3], reduced)
    return b.build()
