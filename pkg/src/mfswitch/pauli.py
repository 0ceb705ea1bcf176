"""Signed n-qubit Pauli operators stored as a pair of integer bit masks.

A ``PauliString`` represents ``sign * i^{|x & z|} * X^x Z^z`` so that a bit set in
both masks is a plain ``Y``. Only real (+1/-1) signs are stored; products that
would pick up a factor of ``i`` raise instead of silently producing an
anti-Hermitian operator.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

_LABELS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be non-negative")
        limit = 1 << self.n_qubits
        if self.x_mask < 0 or self.z_mask < 0 or self.x_mask >= limit or self.z_mask >= limit:
            raise ValueError(f"masks do not fit in {self.n_qubits} qubits")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    # -- construction -----------------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse ``"+XIZY"`` / ``"-ZZ"``; qubit 0 is the leftmost letter."""
        sign = 1
        if label[:1] in "+-":
            sign = -1 if label[0] == "-" else 1
            label = label[1:]
        x = z = 0
        for q, ch in enumerate(label.upper()):
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
            if ch not in "IXYZ":
                raise ValueError(f"bad Pauli letter {ch!r}")
        return cls(len(label), x, z, sign)

    @classmethod
    def from_support(cls, n: int, kind: str, qubits: Iterable[int], sign: int = 1) -> PauliString:
        mask = 0
        for q in qubits:
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for {n} qubits")
            mask ^= 1 << q
        kind = kind.upper()
        if kind not in ("X", "Y", "Z"):
            raise ValueError(f"bad Pauli kind {kind!r}")
        x = mask if kind in "XY" else 0
        z = mask if kind in "ZY" else 0
        return cls(n, x, z, sign)

    @classmethod
    def from_sparse(cls, n: int, terms: dict[int, str], sign: int = 1) -> PauliString:
        x = z = 0
        for q, ch in terms.items():
            ch = ch.upper()
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
        return cls(n, x, z, sign)

    # -- queries ----------------------------------------------------------------
    @property
    def support_mask(self) -> int:
        return self.x_mask | self.z_mask

    def support(self) -> list[int]:
        m = self.support_mask
        return [q for q in range(self.n_qubits) if m >> q & 1]

    def weight(self) -> int:
        return _popcount(self.support_mask)

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def letter(self, q: int) -> str:
        return _LABELS[(self.x_mask >> q & 1, self.z_mask >> q & 1)]

    def commutes(self, other: PauliString) -> bool:
        self._check_size(other)
        return (_popcount(self.x_mask & other.z_mask) + _popcount(self.z_mask & other.x_mask)) % 2 == 0

    def x_part(self) -> PauliString:
        return PauliString(self.n_qubits, self.x_mask, 0)

    def z_part(self) -> PauliString:
        return PauliString(self.n_qubits, 0, self.z_mask)

    def restrict(self, qubits: Iterable[int]) -> PauliString:
        """Keep only the given qubits (same register size), dropping the sign."""
        mask = 0
        for q in qubits:
            mask |= 1 << q
        return PauliString(self.n_qubits, self.x_mask & mask, self.z_mask & mask)

    def embed(self, n: int, qubit_map: list[int]) -> PauliString:
        """Place this operator on qubits ``qubit_map[i]`` of an ``n``-qubit register."""
        x = z = 0
        for i, q in enumerate(qubit_map):
            if self.x_mask >> i & 1:
                x |= 1 << q
            if self.z_mask >> i & 1:
                z |= 1 << q
        return PauliString(n, x, z, self.sign)

    # -- algebra ----------------------------------------------------------------
    def __mul__(self, other: PauliString) -> PauliString:
        self._check_size(other)
        x = self.x_mask ^ other.x_mask
        z = self.z_mask ^ other.z_mask
        e = (
            _popcount(self.x_mask & self.z_mask)
            + _popcount(other.x_mask & other.z_mask)
            - _popcount(x & z)
            + 2 * _popcount(self.z_mask & other.x_mask)
        ) % 4
        if e % 2:
            raise ValueError("product of anticommuting Paulis has an imaginary phase")
        sign = self.sign * other.sign * (-1 if e == 2 else 1)
        return PauliString(self.n_qubits, x, z, sign)

    def __neg__(self) -> PauliString:
        return PauliString(self.n_qubits, self.x_mask, self.z_mask, -self.sign)

    def unsigned(self) -> PauliString:
        return PauliString(self.n_qubits, self.x_mask, self.z_mask)

    def _check_size(self, other: PauliString) -> None:
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"size mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __str__(self) -> str:
        body = "".join(self.letter(q) for q in range(self.n_qubits))
        return ("-" if self.sign < 0 else "+") + body

    def sparse_str(self) -> str:
        """Compact form like ``X0 X1 Z5`` (sign prefixed when negative)."""
        terms = [f"{self.letter(q)}{q}" for q in self.support()]
        body = " ".join(terms) if terms else "I"
        return ("-" if self.sign < 0 else "") + body


def pauli_group_product(paulis: Iterable[PauliString], n: int) -> PauliString:
    out = PauliString.identity(n)
    for p in paulis:
        out = out * p
    return out
