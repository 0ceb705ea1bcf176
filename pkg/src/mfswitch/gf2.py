"""Linear algebra over GF(2) on row vectors stored as Python ints."""

from __future__ import annotations

from collections.abc import Iterable


def reduce_basis(rows: Iterable[int]) -> dict[int, int]:
    """Echelon basis keyed by leading bit."""
    basis: dict[int, int] = {}
    for r in rows:
        r = _reduce(r, basis)
        if r:
            lead = r.bit_length() - 1
            # keep the basis fully reduced on leading bits
            for k, v in list(basis.items()):
                if v >> lead & 1:
                    basis[k] = v ^ r
            basis[lead] = r
    return basis


def _reduce(v: int, basis: dict[int, int]) -> int:
    while v:
        lead = v.bit_length() - 1
        b = basis.get(lead)
        if b is None:
            return v
        v ^= b
    return 0


def rank(rows: Iterable[int]) -> int:
    return len(reduce_basis(rows))


def in_span(v: int, rows: Iterable[int] | dict[int, int]) -> bool:
    basis = rows if isinstance(rows, dict) else reduce_basis(rows)
    return _reduce(v, basis) == 0


def parity(v: int) -> int:
    return bin(v).count("1") & 1


def mask(qubits: Iterable[int]) -> int:
    m = 0
    for q in qubits:
        m |= 1 << q
    return m


def bits(m: int) -> list[int]:
    out = []
    i = 0
    while m:
        if m & 1:
            out.append(i)
        m >>= 1
        i += 1
    return out
