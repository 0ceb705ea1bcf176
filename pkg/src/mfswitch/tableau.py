"""Aaronson-Gottesman stabilizer tableau with a deterministic-control Toffoli."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliString


class NonDeterministicToffoliControl(RuntimeError):
    """A Toffoli control was not a Z eigenstate, so the gate leaves the stabilizer formalism."""


@dataclass(frozen=True)
class ZValue:
    """Outcome of a determinism query: ``bit`` is ``None`` when the outcome is random."""

    bit: int | None

    @property
    def deterministic(self) -> bool:
        return self.bit is not None

    @classmethod
    def random(cls) -> ZValue:
        return cls(None)

    def __repr__(self) -> str:
        return "Random" if self.bit is None else f"Deterministic({self.bit})"


SINGLE_QUBIT_GATES = {"H", "S", "SDG", "X", "Y", "Z"}
TWO_QUBIT_GATES = {"CNOT", "CZ"}


def _g_sum(x1, z1, x2, z2) -> np.ndarray:
    """Sum over qubits of the i-exponent picked up when multiplying row 1 into row 2.

    Arrays are (..., n) uint8; returns the sum modulo 4 over the last axis.
    """
    x1 = x1.astype(np.int8)
    z1 = z1.astype(np.int8)
    x2 = x2.astype(np.int8)
    z2 = z2.astype(np.int8)
    g = (
        (x1 & z1) * (z2 - x2)
        + (x1 & (1 - z1)) * (z2 * (2 * x2 - 1))
        + ((1 - x1) & z1) * (x2 * (1 - 2 * z2))
    )
    return g.sum(axis=-1, dtype=np.int64) % 4


class StabilizerTableau:
    """Rows ``0..n-1`` are destabilizers, rows ``n..2n-1`` stabilizers."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("a tableau needs at least one qubit")
        self.n = n
        eye = np.eye(n, dtype=np.uint8)
        zero = np.zeros((n, n), dtype=np.uint8)
        self.x = np.vstack([eye, zero])
        self.z = np.vstack([zero, eye])
        self.r = np.zeros(2 * n, dtype=np.uint8)

    def copy(self) -> StabilizerTableau:
        t = StabilizerTableau.__new__(StabilizerTableau)
        t.n = self.n
        t.x = self.x.copy()
        t.z = self.z.copy()
        t.r = self.r.copy()
        return t

    def _check(self, *qubits: int) -> None:
        for q in qubits:
            if not 0 <= q < self.n:
                raise IndexError(f"qubit {q} out of range for {self.n} qubits")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in {qubits}")

    # -- Clifford gates -----------------------------------------------------------
    def h(self, q: int) -> None:
        x, z = self.x[:, q].copy(), self.z[:, q].copy()
        self.r ^= x & z
        self.x[:, q], self.z[:, q] = z, x

    def s(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.z[:, q] ^= self.x[:, q]

    def sdg(self, q: int) -> None:
        self.r ^= self.x[:, q] & (self.z[:, q] ^ 1)
        self.z[:, q] ^= self.x[:, q]

    def pauli_x(self, q: int) -> None:
        self.r ^= self.z[:, q]

    def pauli_z(self, q: int) -> None:
        self.r ^= self.x[:, q]

    def pauli_y(self, q: int) -> None:
        self.r ^= self.x[:, q] ^ self.z[:, q]

    def cnot(self, c: int, t: int) -> None:
        xc, zc, xt, zt = self.x[:, c], self.z[:, c], self.x[:, t], self.z[:, t]
        self.r ^= xc & zt & (xt ^ zc ^ 1)
        self.x[:, t] ^= xc
        self.z[:, c] ^= zt

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def apply_gate(self, gate: str, *qubits: int) -> None:
        gate = gate.upper()
        self._check(*qubits)
        if gate in SINGLE_QUBIT_GATES:
            if len(qubits) != 1:
                raise ValueError(f"{gate} takes one qubit")
            {"H": self.h, "S": self.s, "SDG": self.sdg, "X": self.pauli_x,
             "Y": self.pauli_y, "Z": self.pauli_z}[gate](qubits[0])
        elif gate in TWO_QUBIT_GATES:
            if len(qubits) != 2:
                raise ValueError(f"{gate} takes two qubits")
            (self.cnot if gate == "CNOT" else self.cz)(*qubits)
        else:
            raise ValueError(f"unknown gate {gate!r}")

    def apply_pauli(self, p: PauliString) -> None:
        """Multiply the state by ``p`` (the sign of ``p`` is a global phase)."""
        if p.n_qubits != self.n:
            raise ValueError("Pauli size does not match the tableau")
        px = np.array([(p.x_mask >> q) & 1 for q in range(self.n)], dtype=np.uint8)
        pz = np.array([(p.z_mask >> q) & 1 for q in range(self.n)], dtype=np.uint8)
        # a row anticommuting with p flips sign
        anti = ((self.x.astype(np.int64) @ pz) + (self.z.astype(np.int64) @ px)) % 2
        self.r ^= anti.astype(np.uint8)

    # -- row algebra ----------------------------------------------------------------
    def _rowsum_into(self, targets: np.ndarray, src: int) -> None:
        """Replace each row in ``targets`` by (row * row[src]) with phase tracking."""
        if len(targets) == 0:
            return
        g = _g_sum(self.x[src][None, :], self.z[src][None, :], self.x[targets], self.z[targets])
        tot = (2 * self.r[targets].astype(np.int64) + 2 * int(self.r[src]) + g) % 4
        self.r[targets] = (tot == 2).astype(np.uint8)
        self.x[targets] ^= self.x[src]
        self.z[targets] ^= self.z[src]

    def _product_of_stabilizers(self, rows) -> tuple[np.ndarray, np.ndarray, int]:
        x = np.zeros(self.n, dtype=np.uint8)
        z = np.zeros(self.n, dtype=np.uint8)
        r = 0
        for i in rows:
            g = int(_g_sum(self.x[i], self.z[i], x, z))
            r = ((2 * r + 2 * int(self.r[i]) + g) % 4) // 2
            x ^= self.x[i]
            z ^= self.z[i]
        return x, z, r

    # -- queries --------------------------------------------------------------------
    def z_value(self, q: int) -> ZValue:
        self._check(q)
        n = self.n
        if self.x[n:, q].any():
            return ZValue.random()
        rows = [n + i for i in np.nonzero(self.x[:n, q])[0]]
        _, _, r = self._product_of_stabilizers(rows)
        return ZValue(r)

    def pauli_expectation(self, p: PauliString) -> ZValue:
        """Deterministic(b) iff (-1)^b * p (unsigned) is in the stabilizer group."""
        if p.n_qubits != self.n:
            raise ValueError("Pauli size does not match the tableau")
        n = self.n
        if p.is_identity():
            return ZValue(0)
        px = np.array([(p.x_mask >> q) & 1 for q in range(n)], dtype=np.uint8)
        pz = np.array([(p.z_mask >> q) & 1 for q in range(n)], dtype=np.uint8)
        anti = ((self.x.astype(np.int64) @ pz) + (self.z.astype(np.int64) @ px)) % 2
        if anti[n:].any():
            return ZValue.random()
        rows = [n + i for i in np.nonzero(anti[:n])[0]]
        x, z, r = self._product_of_stabilizers(rows)
        if not (np.array_equal(x, px) and np.array_equal(z, pz)):
            raise AssertionError("stabilizer decomposition failed")
        # stored rows use the i^{x.z} convention, same as PauliString
        return ZValue(r)

    def stabilizers(self) -> list[PauliString]:
        out = []
        for i in range(self.n, 2 * self.n):
            xm = sum(1 << q for q in np.nonzero(self.x[i])[0])
            zm = sum(1 << q for q in np.nonzero(self.z[i])[0])
            out.append(PauliString(self.n, int(xm), int(zm), -1 if self.r[i] else 1))
        return out

    # -- non-unitary operations -----------------------------------------------------------
    def _random_stabilizer_row(self, q: int) -> int | None:
        hits = np.nonzero(self.x[self.n:, q])[0]
        return None if len(hits) == 0 else self.n + int(hits[0])

    def anticommuting_stabilizer(self, q: int) -> PauliString | None:
        """Stabilizer element anticommuting with Z_q (it maps one outcome branch to the other)."""
        p = self._random_stabilizer_row(q)
        if p is None:
            return None
        xm = sum(1 << j for j in np.nonzero(self.x[p])[0])
        zm = sum(1 << j for j in np.nonzero(self.z[p])[0])
        return PauliString(self.n, int(xm), int(zm), -1 if self.r[p] else 1)

    def measure_z(self, q: int, rng: np.random.Generator | None = None, forced: int | None = None) -> int:
        """Z measurement; random outcomes use ``rng`` unless ``forced`` is given."""
        self._check(q)
        n = self.n
        p = self._random_stabilizer_row(q)
        if p is None:
            return self.z_value(q).bit
        if forced is None:
            if rng is None:
                raise ValueError("random measurement needs an rng or a forced outcome")
            forced = int(rng.integers(2))
        others = np.nonzero(self.x[:, q])[0]
        others = others[others != p]
        self._rowsum_into(others, p)
        self.x[p - n] = self.x[p]
        self.z[p - n] = self.z[p]
        self.r[p - n] = self.r[p]
        self.x[p] = 0
        self.z[p] = 0
        self.z[p, q] = 1
        self.r[p] = forced
        return forced

    def reset(self, q: int, rng: np.random.Generator | None = None, forced: int | None = None) -> None:
        if self.measure_z(q, rng=rng, forced=forced):
            self.pauli_x(q)

    def apply_toffoli(self, c1: int, c2: int, target: int) -> None:
        self._check(c1, c2, target)
        v1, v2 = self.z_value(c1), self.z_value(c2)
        if not (v1.deterministic and v2.deterministic):
            raise NonDeterministicToffoliControl(
                f"Toffoli controls ({c1}, {c2}) have values ({v1}, {v2})")
        if v1.bit and v2.bit:
            self.pauli_x(target)

    def measure_pauli(self, p: PauliString, forced: int = 0) -> int:
        """Project onto the (-1)^forced eigenspace of ``p`` when random; return the outcome."""
        v = self.pauli_expectation(p)
        if v.deterministic:
            return v.bit
        n = self.n
        px = np.array([(p.x_mask >> q) & 1 for q in range(n)], dtype=np.uint8)
        pz = np.array([(p.z_mask >> q) & 1 for q in range(n)], dtype=np.uint8)
        anti = ((self.x.astype(np.int64) @ pz) + (self.z.astype(np.int64) @ px)) % 2
        hits = np.nonzero(anti[n:])[0]
        piv = n + int(hits[0])
        others = np.nonzero(anti)[0]
        others = others[others != piv]
        self._rowsum_into(others, piv)
        self.x[piv - n] = self.x[piv]
        self.z[piv - n] = self.z[piv]
        self.r[piv - n] = self.r[piv]
        self.x[piv] = px
        self.z[piv] = pz
        self.r[piv] = forced
        return forced

    def check_invariants(self) -> bool:
        """Symplectic check: stabilizers commute, destabilizer i pairs only with stabilizer i."""
        n = self.n
        x = self.x.astype(np.int64)
        z = self.z.astype(np.int64)
        omega = (x @ z.T + z @ x.T) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[:n, n:] = np.eye(n, dtype=np.int64)
        expected[n:, :n] = np.eye(n, dtype=np.int64)
        # destabilizers need not commute among themselves
        omega[:n, :n] = 0
        return bool(np.array_equal(omega, expected))


def tableau_new(n: int) -> StabilizerTableau:
    return StabilizerTableau(n)
