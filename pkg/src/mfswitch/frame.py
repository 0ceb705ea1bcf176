"""Bit-packed Pauli-frame propagation over a noiseless stabilizer reference run.

A noiseless tableau run fixes a reference trajectory (random outcomes forced to 0).
Every shot is then tracked as a Pauli frame ``F`` with the true state ``F|ref>``.
Shots live in the bits of ``uint64`` words, so a batch of ``64*W`` shots updates with a
handful of word operations per gate.

Toffolis are exact here because the reference guarantees Z-deterministic controls: a
shot's control values are the reference values XOR the frame's X bits, and the target
picks up X exactly when the shot's AND differs from the reference AND. Random
measurements and resets flip a fair coin per shot and multiply in the reference
stabilizer that anticommutes with Z on the measured qubit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, FaultLocation, enumerate_fault_locations
from .pauli import PauliString
from .tableau import NonDeterministicToffoliControl, StabilizerTableau

ALL = np.uint64(0xFFFFFFFFFFFFFFFF)
ONE = np.uint64(1)


class UnsupportedOperation(ValueError):
    pass


@dataclass
class Reference:
    """Per-op data recorded from the noiseless run."""

    toffoli_controls: dict[int, tuple[int, int]]
    # op index -> (x qubits, z qubits) of the stabilizer flipping a random outcome
    random_flip: dict[int, tuple[np.ndarray, np.ndarray]]
    outcomes: list[int]
    cond_values: dict[int, int]
    final: StabilizerTableau


def prepare_input(n: int, projections: list[PauliString]) -> StabilizerTableau:
    """|0...0> projected onto the +1 eigenspace of each operator in turn."""
    t = StabilizerTableau(n)
    for p in projections:
        if t.measure_pauli(p.unsigned(), forced=0 if p.sign > 0 else 1) != (0 if p.sign > 0 else 1):
            raise ValueError(f"input projection {p.sparse_str()} has a fixed opposite value")
    return t


def reference_run(c: Circuit, start: StabilizerTableau) -> Reference:
    t = start.copy()
    toff: dict[int, tuple[int, int]] = {}
    flips: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    outcomes: list[int] = []
    conds: dict[int, int] = {}
    for i, op in enumerate(c.ops):
        k = op.kind
        if k in ("MEASZ", "RESET", "INIT"):
            q = op.qubits[0]
            s = t.anticommuting_stabilizer(q)
            if s is not None:
                flips[i] = (np.array([j for j in range(t.n) if s.x_mask >> j & 1], dtype=np.intp),
                            np.array([j for j in range(t.n) if s.z_mask >> j & 1], dtype=np.intp))
            bit = t.measure_z(q, forced=0)
            if k == "MEASZ":
                outcomes.append(bit)
            elif bit:
                t.pauli_x(q)
        elif k == "TOFFOLI":
            a, b, tg = op.qubits
            va, vb = t.z_value(a), t.z_value(b)
            if not (va.deterministic and vb.deterministic):
                raise NonDeterministicToffoliControl(
                    f"op {i}: Toffoli controls {c.label(a)}, {c.label(b)} are {va}, {vb}")
            toff[i] = (va.bit, vb.bit)
            if va.bit and vb.bit:
                t.pauli_x(tg)
        elif k == "PAULI_IF":
            v = op.eval_cond(outcomes)
            conds[i] = v
            if v:
                for ch, q in zip(op.paulis, op.qubits):
                    {"X": t.pauli_x, "Y": t.pauli_y, "Z": t.pauli_z}[ch](q)
        elif k == "IDLE":
            pass
        elif k in ("T", "TDG"):
            raise UnsupportedOperation(f"op {i}: {k} is not a stabilizer operation")
        else:
            t.apply_gate(k, *op.qubits)
    return Reference(toff, flips, outcomes, conds, t)


class _LocationTable:
    """Fault locations of a circuit with their variants as per-qubit X/Z bit tables."""

    def __init__(self, c: Circuit):
        self.locs = enumerate_fault_locations(c)
        self.by_op: dict[int, int] = {loc.op_index: j for j, loc in enumerate(self.locs)}
        self.tables = []
        for loc in self.locs:
            vs = loc.variants()
            xb = np.array([[ch in "XY" for ch in v] for v in vs], dtype=bool).T
            zb = np.array([[ch in "ZY" for ch in v] for v in vs], dtype=bool).T
            self.tables.append((xb, zb))


def _xor_bits(words: np.ndarray, shots: np.ndarray) -> None:
    if len(shots):
        np.bitwise_xor.at(words, shots >> 6, np.left_shift(ONE, (shots & 63).astype(np.uint64)))


@dataclass
class FrameBatch:
    x: np.ndarray
    z: np.ndarray
    shots: int

    def qubit_bits(self, qubits) -> tuple[np.ndarray, np.ndarray]:
        """Unpacked (len(qubits), shots) boolean arrays of the X and Z frame parts."""
        def unpack(a):
            b = np.unpackbits(a[list(qubits)].view(np.uint8), axis=1, bitorder="little")
            return b[:, : self.shots].astype(bool)

        return unpack(self.x), unpack(self.z)


class FrameSimulator:
    def __init__(self, c: Circuit, ref: Reference):
        self.c = c
        self.ref = ref
        self.loctab = _LocationTable(c)
        self._steps = self._compile()

    @property
    def locations(self) -> list[FaultLocation]:
        return self.loctab.locs

    def _compile(self):
        steps = []
        for i, op in enumerate(self.c.ops):
            steps.append((i, op.kind, op.qubits, self.loctab.by_op.get(i)))
        return steps

    def run(self, shots: int, rng: np.random.Generator, noise=None,
            forced: dict[int, tuple[np.ndarray, np.ndarray]] | None = None) -> FrameBatch:
        """Propagate ``shots`` frames.

        ``noise`` samples faults at every location; ``forced`` maps a location index to
        ``(shot indices, variant indices)`` injected deterministically. Random outcomes
        use ``rng`` in both cases.
        """
        n = self.c.n_qubits
        w = (shots + 63) // 64
        x = np.zeros((n, w), dtype=np.uint64)
        z = np.zeros((n, w), dtype=np.uint64)
        record: list[np.ndarray] = []
        ref = self.ref
        probs = None
        if noise is not None:
            probs = [noise.prob(loc.fault_class) for loc in self.loctab.locs]

        def inject(j):
            if forced is not None:
                hit = forced.get(j)
                if hit is None:
                    return
                sh, var = hit
            elif probs is not None and probs[j] > 0:
                k = rng.binomial(shots, probs[j])
                if k == 0:
                    return
                sh = rng.choice(shots, size=k, replace=False)
                var = rng.integers(self.loctab.tables[j][0].shape[1], size=k)
            else:
                return
            xb, zb = self.loctab.tables[j]
            for qi, q in enumerate(self.loctab.locs[j].qubits):
                _xor_bits(x[q], sh[xb[qi][var]])
                _xor_bits(z[q], sh[zb[qi][var]])

        for i, kind, qs, j in self._steps:
            if kind == "CNOT":
                a, b = qs
                x[b] ^= x[a]
                z[a] ^= z[b]
            elif kind == "CZ":
                a, b = qs
                z[a] ^= x[b]
                z[b] ^= x[a]
            elif kind == "H":
                q = qs[0]
                tmp = x[q].copy()
                x[q] = z[q]
                z[q] = tmp
            elif kind in ("S", "SDG"):
                q = qs[0]
                z[q] ^= x[q]
            elif kind == "TOFFOLI":
                a, b, t = qs
                ra, rb = ref.toffoli_controls[i]
                ca = ~x[a] if ra else x[a]
                cb = ~x[b] if rb else x[b]
                flip = ca & cb
                if ra and rb:
                    flip = ~flip
                x[t] ^= flip
            elif kind in ("MEASZ", "RESET", "INIT"):
                q = qs[0]
                if kind == "MEASZ" and j is not None:
                    inject(j)
                    j = None
                rf = ref.random_flip.get(i)
                if rf is not None:
                    sel = rng.bit_generator.random_raw(w).astype(np.uint64)
                    xs, zs = rf
                    if len(xs):
                        x[xs] ^= sel
                    if len(zs):
                        z[zs] ^= sel
                if kind == "MEASZ":
                    record.append(x[q].copy())
                else:
                    x[q] = 0
                    z[q] = 0
            elif kind == "PAULI_IF":
                op = self.c.ops[i]
                diff = np.zeros(w, dtype=np.uint64)
                for mono in op.cond:
                    term = np.full(w, ALL, dtype=np.uint64)
                    for m in mono:
                        term &= (~record[m]) if ref.outcomes[m] else record[m]
                    diff ^= term
                if ref.cond_values[i]:
                    diff = ~diff
                for ch, q in zip(op.paulis, qs):
                    if ch in "XY":
                        x[q] ^= diff
                    if ch in "ZY":
                        z[q] ^= diff
            elif kind in ("X", "Y", "Z", "IDLE"):
                pass
            else:
                raise UnsupportedOperation(f"{kind} cannot be frame-simulated")
            if j is not None:
                inject(j)
        return FrameBatch(x, z, shots)
