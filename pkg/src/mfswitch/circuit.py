"""Circuit data model, fault-location taxonomy and the line-oriented text format.

Text grammar (UTF-8, LF)::

    # comment
    qubits d 15            register declarations come first
    marker F1              named position before the next op
    cnot a0 d0
    toffoli s0 s1 d2
    measz s0               measurement records are numbered m0, m1, ... in order
    pauli_if m0*m1+m2 X:d0 X:d1

``pauli_if`` applies the Pauli when the GF(2) polynomial over measurement
records evaluates to 1 (a sum of products, ``1`` is the constant term).
"""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

FAULT_CLASSES = ("single-qubit", "two-qubit", "toffoli", "init", "meas", "idle-during-meas")

# kind -> (arity, fault class)
OP_KINDS: dict[str, tuple[int | None, str]] = {
    "INIT": (1, "init"),
    "H": (1, "single-qubit"),
    "S": (1, "single-qubit"),
    "SDG": (1, "single-qubit"),
    "X": (1, "single-qubit"),
    "Y": (1, "single-qubit"),
    "Z": (1, "single-qubit"),
    "T": (1, "single-qubit"),
    "TDG": (1, "single-qubit"),
    "CNOT": (2, "two-qubit"),
    "CZ": (2, "two-qubit"),
    "TOFFOLI": (3, "toffoli"),
    "MEASZ": (1, "meas"),
    "RESET": (1, "init"),
    "IDLE": (1, "idle-during-meas"),
    "PAULI_IF": (None, "none"),
}

SINGLE_PAULIS = ("X", "Y", "Z")
# two-qubit depolarizing error set, letters are (first qubit, second qubit)
TWO_QUBIT_PAULIS = (
    "IX", "XI", "XX", "IY", "YI", "YY", "IZ", "ZI", "ZZ",
    "XY", "YX", "XZ", "ZX", "YZ", "ZY",
)


class CircuitError(ValueError):
    pass


class CircuitParseError(CircuitError):
    def __init__(self, line: int, col: int, msg: str):
        super().__init__(f"line {line}, col {col}: {msg}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class GateOp:
    kind: str
    qubits: tuple[int, ...]
    # PAULI_IF only: monomials over measurement records, and one letter per qubit
    cond: tuple[tuple[int, ...], ...] = ()
    paulis: str = ""

    @property
    def fault_class(self) -> str:
        return OP_KINDS[self.kind][1]

    def eval_cond(self, record: Sequence[int]) -> int:
        v = 0
        for mono in self.cond:
            term = 1
            for m in mono:
                term &= record[m]
            v ^= term
        return v


@dataclass(frozen=True)
class FaultLocation:
    op_index: int
    fault_class: str
    qubits: tuple[int, ...]

    def variants(self) -> list[str]:
        """Error letters per support qubit for every variant at this location."""
        if self.fault_class == "two-qubit":
            return list(TWO_QUBIT_PAULIS)
        if self.fault_class == "single-qubit":
            return list(SINGLE_PAULIS)
        if self.fault_class == "idle-during-meas":
            return ["Z"]
        return ["X"]


@dataclass(frozen=True)
class Circuit:
    registers: tuple[tuple[str, int], ...]
    ops: tuple[GateOp, ...] = ()
    markers: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        names = [r for r, _ in self.registers]
        if len(set(names)) != len(names):
            raise CircuitError("duplicate register name")
        n = self.n_qubits
        for i, op in enumerate(self.ops):
            _validate_op(op, n, i)
        mnames = [m for m, _ in self.markers]
        if len(set(mnames)) != len(mnames):
            raise CircuitError("duplicate marker")
        pos = [p for _, p in self.markers]
        if pos != sorted(pos) or any(p < 0 or p > len(self.ops) for p in pos):
            raise CircuitError("markers out of order")

    @property
    def n_qubits(self) -> int:
        return sum(size for _, size in self.registers)

    def register_offset(self, name: str) -> int:
        off = 0
        for r, size in self.registers:
            if r == name:
                return off
            off += size
        raise KeyError(name)

    def register_qubits(self, name: str) -> list[int]:
        off = self.register_offset(name)
        size = dict(self.registers)[name]
        return list(range(off, off + size))

    def label(self, q: int) -> str:
        off = 0
        for r, size in self.registers:
            if q < off + size:
                return f"{r}{q - off}"
            off += size
        raise IndexError(q)

    def marker_position(self, name: str) -> int:
        for m, p in self.markers:
            if m == name:
                return p
        raise KeyError(name)

    @property
    def n_measurements(self) -> int:
        return sum(1 for op in self.ops if op.kind == "MEASZ")


def _validate_op(op: GateOp, n: int, index: int) -> None:
    if op.kind not in OP_KINDS:
        raise CircuitError(f"op {index}: unknown kind {op.kind}")
    arity = OP_KINDS[op.kind][0]
    if arity is not None and len(op.qubits) != arity:
        raise CircuitError(f"op {index}: {op.kind} takes {arity} qubits, got {len(op.qubits)}")
    if len(set(op.qubits)) != len(op.qubits):
        raise CircuitError(f"op {index}: repeated qubit")
    for q in op.qubits:
        if not 0 <= q < n:
            raise CircuitError(f"op {index}: qubit {q} undeclared")
    if op.kind == "PAULI_IF":
        if len(op.paulis) != len(op.qubits) or any(c not in "XYZ" for c in op.paulis):
            raise CircuitError(f"op {index}: malformed conditional Pauli")


class CircuitBuilder:
    """Incremental construction with register-relative addressing."""

    def __init__(self):
        self.registers: list[tuple[str, int]] = []
        self.ops: list[GateOp] = []
        self.markers: list[tuple[str, int]] = []
        self._offsets: dict[str, int] = {}
        self.n_meas = 0

    def register(self, name: str, size: int) -> list[int]:
        if self.ops:
            raise CircuitError("registers must be declared before ops")
        if name in self._offsets:
            raise CircuitError(f"duplicate register {name}")
        off = sum(s for _, s in self.registers)
        self.registers.append((name, size))
        self._offsets[name] = off
        return list(range(off, off + size))

    def q(self, name: str, i: int) -> int:
        return self._offsets[name] + i

    def add(self, kind: str, *qubits: int) -> None:
        op = GateOp(kind, tuple(qubits))
        _validate_op(op, sum(s for _, s in self.registers), len(self.ops))
        self.ops.append(op)

    def measure(self, q: int) -> int:
        self.add("MEASZ", q)
        self.n_meas += 1
        return self.n_meas - 1

    def pauli_if(self, cond: Iterable[Iterable[int]], terms: Sequence[tuple[str, int]]) -> None:
        op = GateOp("PAULI_IF", tuple(q for _, q in terms),
                    tuple(tuple(sorted(m)) for m in cond), "".join(p for p, _ in terms))
        _validate_op(op, sum(s for _, s in self.registers), len(self.ops))
        self.ops.append(op)

    def marker(self, name: str) -> None:
        if any(m == name for m, _ in self.markers):
            raise CircuitError(f"duplicate marker {name}")
        self.markers.append((name, len(self.ops)))

    def build(self) -> Circuit:
        return Circuit(tuple(self.registers), tuple(self.ops), tuple(self.markers))


# -- text format --------------------------------------------------------------------

def _format_cond(cond: tuple[tuple[int, ...], ...]) -> str:
    if not cond:
        return "0"
    return "+".join("*".join(f"m{m}" for m in mono) if mono else "1" for mono in cond)


def serialize_circuit(c: Circuit) -> str:
    lines = [f"qubits {name} {size}" for name, size in c.registers]
    marks: dict[int, list[str]] = {}
    for name, pos in c.markers:
        marks.setdefault(pos, []).append(name)
    for i, op in enumerate(c.ops):
        lines.extend(f"marker {m}" for m in marks.get(i, []))
        if op.kind == "PAULI_IF":
            terms = " ".join(f"{p}:{c.label(q)}" for p, q in zip(op.paulis, op.qubits))
            lines.append(f"pauli_if {_format_cond(op.cond)} {terms}")
        else:
            lines.append(" ".join([op.kind.lower()] + [c.label(q) for q in op.qubits]))
    lines.extend(f"marker {m}" for m in marks.get(len(c.ops), []))
    return "\n".join(lines) + "\n"


def _split_qubit_ref(tok: str) -> tuple[str, int] | None:
    i = len(tok)
    while i > 0 and tok[i - 1].isdigit():
        i -= 1
    if i == 0 or i == len(tok):
        return None
    name = tok[:i]
    if not (name.replace("_", "a").isalpha()):
        return None
    return name, int(tok[i:])


def parse_circuit(text: str | bytes) -> Circuit:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise CircuitParseError(1, 1, f"not UTF-8: {e}") from None
    registers: list[tuple[str, int]] = []
    offsets: dict[str, tuple[int, int]] = {}
    ops: list[GateOp] = []
    markers: list[tuple[str, int]] = []
    n_meas = 0

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0]
        toks = line.split()
        if not toks:
            continue
        col = line.index(toks[0]) + 1
        head = toks[0].lower()

        def qubit(tok: str) -> int:
            ref = _split_qubit_ref(tok)
            if ref is None:
                raise CircuitParseError(lineno, line.find(tok) + 1, f"bad qubit reference {tok!r}")
            name, idx = ref
            if name not in offsets:
                raise CircuitParseError(lineno, line.find(tok) + 1, f"undeclared register {name!r}")
            off, size = offsets[name]
            if idx >= size:
                raise CircuitParseError(lineno, line.find(tok) + 1, f"{tok} out of range")
            return off + idx

        if head == "qubits":
            if ops:
                raise CircuitParseError(lineno, col, "register declared after ops")
            if len(toks) != 3 or not toks[2].isdigit():
                raise CircuitParseError(lineno, col, "expected 'qubits <name> <size>'")
            name = toks[1]
            if not name.replace("_", "a").isalpha():
                raise CircuitParseError(lineno, col, f"bad register name {name!r}")
            if name in offsets:
                raise CircuitParseError(lineno, col, f"duplicate register {name!r}")
            offsets[name] = (sum(s for _, s in registers), int(toks[2]))
            registers.append((name, int(toks[2])))
        elif head == "marker":
            if len(toks) != 2:
                raise CircuitParseError(lineno, col, "expected 'marker <name>'")
            if any(m == toks[1] for m, _ in markers):
                raise CircuitParseError(lineno, col, f"duplicate marker {toks[1]!r}")
            markers.append((toks[1], len(ops)))
        elif head == "pauli_if":
            if len(toks) < 3:
                raise CircuitParseError(lineno, col, "pauli_if needs a condition and terms")
            cond = []
            if toks[1] != "0":
                for mono in toks[1].split("+"):
                    if mono == "1":
                        cond.append(())
                        continue
                    idx = []
                    for f in mono.split("*"):
                        if not (f.startswith("m") and f[1:].isdigit()) or int(f[1:]) >= n_meas:
                            raise CircuitParseError(lineno, line.find(toks[1]) + 1, f"bad record {f!r}")
                        idx.append(int(f[1:]))
                    cond.append(tuple(sorted(idx)))
            letters, qs = [], []
            for tok in toks[2:]:
                if len(tok) < 3 or tok[1] != ":" or tok[0].upper() not in "XYZ":
                    raise CircuitParseError(lineno, line.find(tok) + 1, f"bad Pauli term {tok!r}")
                letters.append(tok[0].upper())
                qs.append(qubit(tok[2:]))
            if len(set(qs)) != len(qs):
                raise CircuitParseError(lineno, col, "repeated qubit")
            ops.append(GateOp("PAULI_IF", tuple(qs), tuple(cond), "".join(letters)))
        else:
            kind = head.upper()
            if kind not in OP_KINDS or kind == "PAULI_IF":
                raise CircuitParseError(lineno, col, f"unknown mnemonic {toks[0]!r}")
            qs = [qubit(t) for t in toks[1:]]
            arity = OP_KINDS[kind][0]
            if len(qs) != arity:
                raise CircuitParseError(lineno, col, f"{head} takes {arity} qubits, got {len(qs)}")
            if len(set(qs)) != len(qs):
                raise CircuitParseError(lineno, col, "repeated qubit")
            if kind == "MEASZ":
                n_meas += 1
            ops.append(GateOp(kind, tuple(qs)))
    return Circuit(tuple(registers), tuple(ops), tuple(markers))


# -- fault locations and statistics ----------------------------------------------------

def enumerate_fault_locations(c: Circuit, classes: Iterable[str] = FAULT_CLASSES) -> list[FaultLocation]:
    classes = set(classes)
    unknown = classes - set(FAULT_CLASSES)
    if unknown:
        raise CircuitError(f"unknown fault class {sorted(unknown)}")
    out = []
    for i, op in enumerate(c.ops):
        fc = op.fault_class
        if fc not in classes:
            continue
        qs = op.qubits[2:] if fc == "toffoli" else op.qubits
        out.append(FaultLocation(i, fc, tuple(qs)))
    return out


def circuit_stats(c: Circuit, input_qubits: Iterable[int] = ()) -> dict:
    counts = Counter(op.kind for op in c.ops)
    used = set()
    fresh_extra = 0
    # a reset counts as an extra fresh qubit only if the qubit is used again afterwards
    last_use: dict[int, int] = {}
    for i, op in enumerate(c.ops):
        for q in op.qubits:
            last_use[q] = i
            used.add(q)
    used |= set(input_qubits)
    for i, op in enumerate(c.ops):
        if op.kind == "RESET" and last_use[op.qubits[0]] > i:
            fresh_extra += 1
    return {
        "cnot": counts["CNOT"],
        "cz": counts["CZ"],
        "toffoli": counts["TOFFOLI"],
        "t": counts["T"] + counts["TDG"],
        "resets": counts["RESET"],
        "qubits_with_reset": len(used),
        "qubits_without_reset": len(used) + fresh_extra,
    }


def stats_json(c: Circuit, input_qubits: Iterable[int] = ()) -> str:
    return json.dumps(circuit_stats(c, input_qubits), sort_keys=True)
