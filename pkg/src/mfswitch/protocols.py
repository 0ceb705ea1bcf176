"""Circuit builders for the measurement-free switching protocols and their parts."""

from __future__ import annotations

from dataclasses import dataclass

from .circuit import CircuitBuilder
from .codes import (STEANE_PLAQUETTES, YELLOW_CELL, CodeSpec, code832_spec, pinned_tetra_labeling,
                    steane_spec, tetra_cells, tetra_faces, tetrahedral_spec)
from .pauli import PauliString
from .protocol_types import InputSpec, Protocol, switch_inputs

# Steane encoder: Hadamards on one generator qubit per plaquette, then this CNOT fan-out
STEANE_GENERATORS = (0, 4, 6)
STEANE_ENCODER = ((0, 1), (0, 2), (0, 3), (4, 1), (4, 2), (4, 5), (6, 2), (6, 3), (6, 5))
# two weight-3 logical-Z supports checked after encoding; the Toffoli target is their overlap
STEANE_CHECKS = ((0, 2, 5), (1, 3, 5))


def encode_steane_zero(b: CircuitBuilder, data: list[int], order=STEANE_ENCODER) -> None:
    """Unverified |0>_L: Hadamards on the generator qubits, then fan-out CNOTs."""
    for g in STEANE_GENERATORS:
        b.add("H", data[g])
    for c, t in order:
        b.add("CNOT", data[c], data[t])


def verify_steane_zero(b: CircuitBuilder, data: list[int], flags: list[int],
                       checks=STEANE_CHECKS) -> None:
    """Copy two logical-Z parities to flag qubits and undo a logical X flip coherently.

    A single encoder fault can leave ``X_L`` times a one-qubit error; both parities
    then read 1 and the Toffoli flips the shared qubit, leaving a correctable error.
    """
    for f, support in zip(flags, checks):
        for q in support:
            b.add("CNOT", data[q], f)
    target = sorted(set(checks[0]) & set(checks[1]))[0]
    b.add("TOFFOLI", flags[0], flags[1], data[target])


def init_steane_zero(order=STEANE_ENCODER, checks=STEANE_CHECKS) -> Protocol:
    b = CircuitBuilder()
    data = b.register("d", 7)
    flags = b.register("f", 2)
    for q in data + flags:
        b.add("INIT", q)
    encode_steane_zero(b, data, order)
    verify_steane_zero(b, data, flags, checks)
    code = steane_spec()
    return Protocol("init_steane_zero", b.build(), None, code, (), tuple(data),
                    {"0": InputSpec((), (code.logical_z[0],))}, aux={"flags": tuple(flags)})


# -- 15 -> 7 ----------------------------------------------------------------------------------

PLAQUETTE_ORDER = ("R", "B", "G")


def tetra_inputs(n: int, data: list[int], extra=()) -> dict[str, InputSpec]:
    tetra = tetrahedral_spec()
    steane = steane_spec()
    gens = tuple(g.embed(n, data) for g in tetra.generators())
    return {
        "0": InputSpec(gens + (tetra.logical_z[0].embed(n, data),) + tuple(extra),
                       (steane.logical_z[0],)),
        "+": InputSpec(gens + (tetra.logical_x[0].embed(n, data),) + tuple(extra),
                       (steane.logical_x[0],)),
    }


# -- feedback lookup tables -------------------------------------------------------------------

# syndrome tuples are listed in the order of the published table; the operators are verbatim
_LUT_ROWS = {
    "15to7": {
        (1, 0, 0): "Z2 Z5 Z11 Z13",
        (0, 1, 0): "Z2 Z3 Z12 Z13",
        (0, 0, 1): "Z1 Z2 Z13 Z14",
        (1, 1, 0): "Z3 Z5 Z11 Z12",
        (1, 0, 1): "Z1 Z5 Z11 Z14",
        (0, 1, 1): "Z1 Z3 Z12 Z14",
        (1, 1, 1): "Z1 Z2 Z3 Z5 Z11 Z12 Z13 Z14",
    },
    "7to15": {
        (1, 0, 0): "X0 X1 X2 X3",
        (0, 1, 0): "X1 X2 X4 X5",
        (0, 0, 1): "X2 X3 X5 X6",
        (1, 1, 0): "X0 X3 X4 X5",
        (1, 0, 1): "X0 X1 X5 X6",
        (0, 1, 1): "X1 X3 X4 X6",
        (1, 1, 1): "X0 X2 X4 X6",
    },
}
LUT_SYNDROME_LABELS = {"15to7": ("R", "G", "B"), "7to15": ("BG", "RB", "RG")}


def _parse_sparse(text: str, n: int = 15) -> PauliString:
    return PauliString.from_sparse(n, {int(t[1:]): t[0] for t in text.split()})


@dataclass(frozen=True)
class SwitchLUT:
    """Syndrome tuple to switching operator, in full and data-restricted (qubits 0..6) form."""

    direction: str
    full: dict[tuple[int, int, int], PauliString]

    @property
    def restricted(self) -> dict[tuple[int, int, int], PauliString]:
        return {s: _restrict(p, range(7)) for s, p in self.full.items()}

    def support(self, syndrome, restricted: bool = False) -> tuple[int, ...]:
        p = (self.restricted if restricted else self.full)[tuple(syndrome)]
        return tuple(p.support())


def _restrict(p: PauliString, keep) -> PauliString:
    keep = set(keep)
    return PauliString.from_sparse(p.n_qubits, {q: p.letter(q) for q in p.support() if q in keep})


def switch_lut(direction: str) -> SwitchLUT:
    if direction not in _LUT_ROWS:
        raise ValueError(f"unknown direction {direction!r}; use '15to7' or '7to15'")
    full = {(0, 0, 0): PauliString.identity(15)}
    full.update({s: _parse_sparse(t) for s, t in _LUT_ROWS[direction].items()})
    return SwitchLUT(direction, full)


def feedback_lut(direction: str, syndrome, restricted: bool = False) -> PauliString:
    syndrome = tuple(int(b) for b in syndrome)
    if len(syndrome) != 3 or any(b not in (0, 1) for b in syndrome):
        raise ValueError("syndrome must be three bits")
    lut = switch_lut(direction)
    return (lut.restricted if restricted else lut.full)[syndrome]


# -- 15 -> 7 ----------------------------------------------------------------------------------

# yellow faces (each shared with one other cell) and their complements inside the yellow cell
YELLOW_FACES = {"R": (8, 12, 13, 14), "B": (9, 11, 13, 14), "G": (10, 11, 12, 13)}
YELLOW_OPPOSITE = {c: tuple(q for q in YELLOW_CELL if q not in f) for c, f in YELLOW_FACES.items()}
# product of the three yellow faces and its complement: both equal the parity of all three
# plaquette syndromes, and a yellow Z error flips exactly one of them
YELLOW_PARITY = (8, 9, 10, 13)
YELLOW_PARITY_COMPLEMENT = (7, 11, 12, 14)
# first pass: the qubit of each data-restricted face that is not shared by all three faces
FIRST_PASS_TARGET = {"R": 5, "B": 3, "G": 1}
SHARED_TARGET = 2


def _extract_plaquettes(b: CircuitBuilder, data, anc, flags, fresh: bool) -> None:
    """Verified |0>_L on ``anc``, transversal CNOT onto the Steane part, then H.

    Afterwards each ancilla plaquette holds the corresponding X-plaquette value in Z.
    """
    kind = "RESET" if fresh else "INIT"
    for q in anc + flags:
        b.add(kind, q)
    encode_steane_zero(b, anc)
    verify_steane_zero(b, anc, flags)
    for q in range(7):
        b.add("CNOT", anc[q], data[q])
    for q in anc:
        b.add("H", q)


def _copy_x_parity(b: CircuitBuilder, target: int, support) -> None:
    b.add("H", target)
    for q in support:
        b.add("CNOT", target, q)
    b.add("H", target)


def _majority_pass(b: CircuitBuilder, data, anc, flags, synd, agree, agree2,
                   references, fresh: bool) -> None:
    """Per syndrome bit, vote between the plaquette copy and two yellow references.

    ``agree`` gets syndrome xor first reference, ``agree2`` syndrome xor second; when
    both disagree the syndrome bit itself must be the faulty one and is flipped.
    """
    _extract_plaquettes(b, data, anc, flags, fresh)
    kind = "RESET" if fresh else "INIT"
    for c in PLAQUETTE_ORDER:
        for q in (synd[c], agree[c], agree2[c]):
            b.add(kind, q)
    for c in PLAQUETTE_ORDER:
        for q in STEANE_PLAQUETTES[c]:
            b.add("CNOT", anc[q], synd[c])
    for c in PLAQUETTE_ORDER:
        first, second = references[c]
        for reg, support in ((agree, first), (agree2, second)):
            _copy_x_parity(b, reg[c], [data[q] for q in support])
            b.add("CNOT", synd[c], reg[c])
        b.add("TOFFOLI", agree[c], agree2[c], synd[c])


WORK_15_TO_7 = {True: 18, False: 12}


def emit_switch_15_to_7(b: CircuitBuilder, data, work, ft: bool = True,
                        fresh: bool = False) -> dict[str, tuple[int, ...]]:
    """Append the 15 -> 7 switch on ``data`` using ``work`` qubits; returns their roles.

    FT variant: two passes, each with a majority-voted syndrome. The first applies one
    qubit of each data-restricted face; the second re-extracts the syndrome, votes it
    against the two yellow parity operators and applies the shared qubit ``Z_2`` once
    per set bit. Non-FT variant: one unchecked extraction and the full restricted table.
    """
    work = list(work)
    anc, flags = work[0:7], work[7:9]
    synd = dict(zip(PLAQUETTE_ORDER, work[9:12]))
    lut = switch_lut("15to7")
    restricted = {c: lut.support(_bit_syndrome(c), restricted=True) for c in PLAQUETTE_ORDER}
    roles = {"anc": tuple(anc), "flags": tuple(flags), "syndrome": tuple(synd.values())}
    if not ft:
        _extract_plaquettes(b, data, anc, flags, fresh)
        for c in PLAQUETTE_ORDER:
            b.add("RESET" if fresh else "INIT", synd[c])
        for c in PLAQUETTE_ORDER:
            for q in STEANE_PLAQUETTES[c]:
                b.add("CNOT", anc[q], synd[c])
        for c in PLAQUETTE_ORDER:
            for q in restricted[c]:
                b.add("CZ", synd[c], data[q])
        return roles
    agree = dict(zip(PLAQUETTE_ORDER, work[12:15]))
    agree2 = dict(zip(PLAQUETTE_ORDER, work[15:18]))
    passes = (
        {c: (YELLOW_FACES[c], YELLOW_OPPOSITE[c]) for c in PLAQUETTE_ORDER},
        {c: (YELLOW_PARITY, YELLOW_PARITY_COMPLEMENT) for c in PLAQUETTE_ORDER},
    )
    for k, refs in enumerate(passes):
        _majority_pass(b, data, anc, flags, synd, agree, agree2, refs, fresh=fresh or k > 0)
        for c in PLAQUETTE_ORDER:
            target = FIRST_PASS_TARGET[c] if k == 0 else SHARED_TARGET
            b.add("CZ", synd[c], data[target])
    roles["agreement"] = tuple(agree.values()) + tuple(agree2.values())
    return roles


def build_switch_15_to_7(ft: bool = True) -> Protocol:
    """Coherent switch from the tetrahedral code to the Steane code on qubits 0..6."""
    b = CircuitBuilder()
    data = b.register("d", 15)
    work = b.register("w", WORK_15_TO_7[ft])
    roles = emit_switch_15_to_7(b, data, work, ft)
    circuit = b.build()
    return Protocol(f"switch_15_to_7{'' if ft else '_nonft'}", circuit, tetrahedral_spec(),
                    steane_spec(), tuple(data), tuple(data[:7]),
                    tetra_inputs(circuit.n_qubits, data), ft=ft, aux=roles)


def _bit_syndrome(colour: str) -> tuple[int, int, int]:
    """Table tuple whose operator fixes the given Steane X-plaquette.

    Table bit 2 corrects plaquette B and bit 3 plaquette G; the column header names them
    the other way round, the operators themselves settle the question.
    """
    return {"R": (1, 0, 0), "B": (0, 1, 0), "G": (0, 0, 1)}[colour]


# -- [[8,3,2]] |+++> ---------------------------------------------------------------------------

# vertex v of the cube carries coordinates (v & 1, v >> 1 & 1, v >> 2 & 1); the two halves
# v < 4 and v >= 4 hold the two GHZ states and are entangled along axis 2
CUBE_X_CHECKS = ((4, 5), (4, 6))
# complementary logical-X supports; each dangerous Z pair anticommutes with both
CUBE_LOGICAL_CHECKS = ((0, 2, 5, 7), (1, 3, 4, 6))
CUBE_Z_FIX = 0


def _flagged_x_parity(b: CircuitBuilder, aux: int, f1: int, f2: int, support) -> None:
    """Copy an X parity to ``aux`` with two overlapping flags.

    A bit flip on ``aux`` that would leave two data flips behind sets a flag pattern that
    the two trailing corrections undo down to at most one flip.
    """
    d1, d2, d3, d4 = support
    b.add("H", aux)
    for t in (f1, d1, f2, d2, f1, d3, f2, d4):
        b.add("CNOT", aux, t)
    b.add("H", aux)
    b.add("CNOT", f2, d4)
    b.add("TOFFOLI", f1, f2, d3)


def prepare_cube_plus(b: CircuitBuilder, cube, aux, flags, fresh: bool = False) -> None:
    """Prepare |+++> of the [[8,3,2]] code on ``cube`` (qubit per vertex).

    Two four-qubit GHZ states, a bit-flip check on the second one before they are joined,
    then a flagged readout of two complementary logical X operators whose joint firing
    marks a phase-flip pair.
    """
    kind = "RESET" if fresh else "INIT"
    for q in list(cube) + list(aux) + list(flags):
        b.add(kind, q)
    b.add("H", cube[0])
    for t in (1, 2, 3):
        b.add("CNOT", cube[0], cube[t])
    for v in range(4):
        b.add("H", cube[v])
    b.add("H", cube[4])
    for t in (5, 6, 7):
        b.add("CNOT", cube[4], cube[t])
    for a, (i, j) in zip(aux, CUBE_X_CHECKS):
        b.add("CNOT", cube[i], a)
        b.add("CNOT", cube[j], a)
    b.add("TOFFOLI", aux[0], aux[1], cube[4])
    for a in aux:
        b.add("RESET", a)
    for v in range(4):
        b.add("CNOT", cube[v], cube[v + 4])
    for k, (a, support) in enumerate(zip(aux, CUBE_LOGICAL_CHECKS)):
        if k:
            for f in flags:
                b.add("RESET", f)
        _flagged_x_parity(b, a, flags[0], flags[1], [cube[v] for v in support])
    target = cube[CUBE_Z_FIX]
    b.add("H", target)
    b.add("TOFFOLI", aux[0], aux[1], target)
    b.add("H", target)


def cube_allowed_pair() -> PauliString:
    """Bit-flip pair along axis 2; it never splits the faces of axes 0 and 1."""
    return PauliString.from_sparse(8, {0: "X", 4: "X"})


def build_init_833_plus() -> Protocol:
    b = CircuitBuilder()
    cube = b.register("d", 8)
    aux = b.register("a", 2)
    flags = b.register("f", 2)
    prepare_cube_plus(b, cube, aux, flags)
    code = code832_spec()
    return Protocol("init_833_plus", b.build(), None, code, (), tuple(cube),
                    {"+++": InputSpec((), tuple(code.logical_x))},
                    aux={"aux": tuple(aux), "flags": tuple(flags)}, failure_mode="weight",
                    allowed_errors=(cube_allowed_pair(),))


# -- 7 -> 15 ----------------------------------------------------------------------------------

TETRA_FACES = tetra_faces()
TETRA_CELLS = tetra_cells()
# yellow-cell axes; the last one is the axis of the allowed bit-flip pair
YELLOW_AXES = ("RY", "BY", "GY")
# faces fixed by the switch, with the Steane X-plaquette that flips each one (the only
# plaquette overlapping the face on an odd number of qubits)
SWITCH_FACES = ("BG", "RB", "RG")
FACE_FIX = {f: next(c for c, plq in STEANE_PLAQUETTES.items()
                    if len(set(plq) & set(TETRA_FACES[f])) % 2) for f in SWITCH_FACES}
# per face: (cell read twice, other cell); estimates are both opposite faces and the face
# itself from the first cell, three disjoint supports
FACE_SOURCES = {"RB": ("R", "B"), "RG": ("R", "G"), "BG": ("B", "G")}


def cube_vertices(axes: tuple[str, ...], cell: tuple[int, ...]) -> list[int]:
    """Qubits of ``cell`` ordered by vertex: bit ``a`` of the vertex is membership in face ``a``."""
    order = [0] * 8
    for q in cell:
        v = sum(1 << a for a, f in enumerate(axes) if q in TETRA_FACES[f])
        order[v] = q
    if sorted(order) != sorted(cell):
        raise ValueError("faces do not induce a cube on this cell")
    return order


def cell_axes(colour: str) -> tuple[str, str, str]:
    others = [f for f in TETRA_FACES if colour in f and "Y" not in f]
    return (others[0], others[1], colour + "Y")


def build_yellow_reinit() -> Protocol:
    """Reset the yellow cell and prepare it in the cube code's |+++> state."""
    b = CircuitBuilder()
    data = b.register("d", 15)
    aux = b.register("aux", 2)
    flags = b.register("fl", 2)
    cube = [data[q] for q in cube_vertices(YELLOW_AXES, TETRA_CELLS["Y"])]
    _reinit_yellow(b, cube, aux, flags)
    code = code832_spec()
    out = tuple(cube)
    return Protocol("yellow_reinit", b.build(), None, code, (), out,
                    {"+++": InputSpec((), tuple(code.logical_x))}, failure_mode="weight",
                    allowed_errors=(cube_allowed_pair(),))


def _reinit_yellow(b: CircuitBuilder, cube, aux, flags) -> None:
    prepare_cube_plus(b, cube, aux, flags, fresh=True)


def _copy_z_parity(b: CircuitBuilder, sources, target: int) -> None:
    for q in sources:
        b.add("CNOT", q, target)


WORK_7_TO_15 = {True: 21, False: 15}


def emit_switch_7_to_15(b: CircuitBuilder, data, work, ft: bool = True,
                        fresh: bool = False) -> dict[str, tuple[int, ...]]:
    """Append the 7 -> 15 switch (yellow re-preparation included) on ``data``.

    Each of the red, blue and green cells is copied onto a fresh cube-code block whose face
    parities go to a physical register. FT variant: four parts, each majority-voting three
    disjoint estimates per face and applying one qubit of the matching X-plaquette.
    Non-FT variant: one estimate per face and the whole plaquette at once.
    """
    work = list(work)
    block, aux, flags = work[0:8], work[8:10], work[10:12]
    reg = work[12:]
    yellow = [data[q] for q in cube_vertices(YELLOW_AXES, TETRA_CELLS["Y"])]
    prepare_cube_plus(b, yellow, aux, flags, fresh=True)
    # register slots: per face, (opposite in first cell, opposite in second, face itself)
    wanted = []
    for face in SWITCH_FACES:
        c1, c2 = FACE_SOURCES[face]
        wanted += [(face, c1, "opp"), (face, c2, "opp"), (face, c1, "face")] if ft else [(face, c1, "opp")]
    slots = dict(zip(wanted, reg))
    for q in reg:
        b.add("RESET" if fresh else "INIT", q)
    for i, colour in enumerate(("R", "B", "G")):
        axes = cell_axes(colour)
        vertices = cube_vertices(axes, TETRA_CELLS[colour])
        prepare_cube_plus(b, block, aux, flags, fresh=True)
        for v, q in enumerate(vertices):
            b.add("CNOT", data[q], block[v])
        for (face, cell, which), r in slots.items():
            if cell != colour:
                continue
            a = axes.index(face)
            side = 1 if which == "face" else 0
            _copy_z_parity(b, [block[v] for v in range(8) if (v >> a & 1) == side], r)
    plaquettes = {f: STEANE_PLAQUETTES[FACE_FIX[f]] for f in SWITCH_FACES}
    roles = {"block": tuple(block), "register": tuple(reg)}
    if not ft:
        for face in SWITCH_FACES:
            for q in plaquettes[face]:
                b.add("CNOT", slots[(face, FACE_SOURCES[face][0], "opp")], data[q])
        return roles
    # the vote reuses the block and its helpers
    vote = block + aux + flags
    synd = dict(zip(SWITCH_FACES, vote[0:3]))
    agree = dict(zip(SWITCH_FACES, vote[3:6]))
    agree2 = dict(zip(SWITCH_FACES, vote[6:9]))
    for part in range(4):
        for face in SWITCH_FACES:
            for q in (synd[face], agree[face], agree2[face]):
                b.add("RESET", q)
        for face in SWITCH_FACES:
            c1, c2 = FACE_SOURCES[face]
            b.add("CNOT", slots[(face, c1, "opp")], synd[face])
            b.add("CNOT", synd[face], agree[face])
            b.add("CNOT", slots[(face, c2, "opp")], agree[face])
            b.add("CNOT", synd[face], agree2[face])
            b.add("CNOT", slots[(face, c1, "face")], agree2[face])
            b.add("TOFFOLI", agree[face], agree2[face], synd[face])
        for face in SWITCH_FACES:
            b.add("CNOT", synd[face], data[plaquettes[face][part]])
    roles["syndrome"] = tuple(synd.values())
    return roles


def build_switch_7_to_15(ft: bool = True) -> Protocol:
    """Coherent switch from the Steane code on qubits 0..6 to the tetrahedral code."""
    b = CircuitBuilder()
    data = b.register("d", 15)
    work = b.register("w", WORK_7_TO_15[ft])
    roles = emit_switch_7_to_15(b, data, work, ft)
    circuit = b.build()
    steane, tetra = steane_spec(), tetrahedral_spec()
    return Protocol(f"switch_7_to_15{'' if ft else '_nonft'}", circuit, steane, tetra,
                    tuple(data[:7]), tuple(data),
                    switch_inputs(steane, tetra, circuit.n_qubits, data[:7]), ft=ft, aux=roles)


def build_full_cycle(ft: bool = True, t_pattern: bool = False) -> Protocol:
    """Steane -> tetrahedral -> Steane; identity on the logical qubit.

    ``t_pattern`` inserts the transversal T pattern between the switches; that circuit is
    for export and resource accounting only.
    """
    b = CircuitBuilder()
    data = b.register("d", 15)
    work = b.register("w", max(WORK_7_TO_15[ft], WORK_15_TO_7[ft]))
    b.marker("to_tetrahedral")
    emit_switch_7_to_15(b, data, work, ft)
    if t_pattern:
        b.marker("t_pattern")
        emit_t_pattern(b, data)
    b.marker("to_steane")
    emit_switch_15_to_7(b, data, work[:WORK_15_TO_7[ft]], ft, fresh=True)
    circuit = b.build()
    steane = steane_spec()
    action = {"X": "X", "Z": "Z"}
    return Protocol(f"full_cycle{'' if ft else '_nonft'}{'_t' if t_pattern else ''}", circuit,
                    steane, steane, tuple(data[:7]), tuple(data[:7]),
                    switch_inputs(steane, steane, circuit.n_qubits, data[:7]), ft=ft,
                    logical_action=action)


# -- transversal gates ------------------------------------------------------------------------

class UnsupportedOperation(Exception):
    """Raised when a non-Clifford circuit is requested for stabilizer execution."""


def t_pattern() -> dict[int, str]:
    """T on qubits whose labeling vector has odd weight, T^dagger on the rest; acts as T_L."""
    vectors = pinned_tetra_labeling()[0]
    return {q: "T" if bin(v).count("1") % 2 else "TDG" for q, v in enumerate(vectors)}


def emit_t_pattern(b: CircuitBuilder, data) -> None:
    for q, kind in t_pattern().items():
        b.add(kind, data[q])


def build_transversal(code: str, gate: str, for_execution: bool = True) -> Protocol:
    """Bitwise logical gates: H or CNOT on the Steane code, the T pattern on the tetrahedral code.

    The T pattern is non-Clifford; it is built for export and resource accounting and
    raises ``UnsupportedOperation`` when requested for execution.
    """
    gate = gate.upper()
    if code == "steane" and gate == "H":
        b = CircuitBuilder()
        data = b.register("d", 7)
        for q in data:
            b.add("H", q)
        s = steane_spec()
        return Protocol("transversal_h", b.build(), s, s, tuple(data), tuple(data),
                        switch_inputs(s, s, 7, data, action={"X": "Z", "Z": "X"}),
                        logical_action={"X": "Z", "Z": "X"})
    if code == "steane" and gate == "CNOT":
        b = CircuitBuilder()
        ctrl = b.register("c", 7)
        tgt = b.register("t", 7)
        for c, t in zip(ctrl, tgt):
            b.add("CNOT", c, t)
        s = steane_spec()
        n = 14
        gens = tuple(g.embed(n, ctrl) for g in s.generators()) + tuple(g.embed(n, tgt) for g in s.generators())
        pair = _two_block_code(s)
        xl, zl = s.logical_x[0], s.logical_z[0]
        two = {"XX": (xl.embed(n, list(range(7))) * xl.embed(n, list(range(7, 14)))),
               "ZZ": (zl.embed(n, list(range(7))) * zl.embed(n, list(range(7, 14)))),
               "ZI": zl.embed(n, list(range(7))), "IX": xl.embed(n, list(range(7, 14)))}
        inputs = {
            # X_L on the control spreads to both blocks; Z_L on the target spreads back
            "+0": InputSpec(gens + (s.logical_x[0].embed(n, ctrl), s.logical_z[0].embed(n, tgt)),
                            (two["XX"], two["ZZ"])),
            "0+": InputSpec(gens + (s.logical_z[0].embed(n, ctrl), s.logical_x[0].embed(n, tgt)),
                            (two["ZI"], two["IX"])),
        }
        return Protocol("transversal_cnot", b.build(), pair, pair, tuple(ctrl + tgt),
                        tuple(ctrl + tgt), inputs,
                        logical_action={"XI": "XX", "IX": "IX", "ZI": "ZI", "IZ": "ZZ"})
    if code == "tetrahedral" and gate in ("T", "T-PATTERN", "T_PATTERN"):
        if for_execution:
            raise UnsupportedOperation("the T pattern cannot run on the stabilizer simulator; "
                                       "estimate it through build_full_cycle")
        b = CircuitBuilder()
        data = b.register("d", 15)
        emit_t_pattern(b, data)
        tet = tetrahedral_spec()
        return Protocol("transversal_t", b.build(), tet, tet, tuple(data), tuple(data), {},
                        logical_action={"X": "(X+Y)/sqrt2", "Z": "Z"})
    raise ValueError(f"unsupported transversal gate {gate!r} on {code!r}")


def _two_block_code(code: CodeSpec) -> CodeSpec:
    n = 2 * code.n
    lo, hi = range(code.n), range(code.n, n)

    def both(ps):
        return tuple(p.embed(n, list(lo)) for p in ps) + tuple(p.embed(n, list(hi)) for p in ps)

    return CodeSpec(n, 2, code.d, both(code.x_generators), both(code.z_generators),
                    both(code.logical_x), both(code.logical_z), f"{code.label}x2")


# -- measurement-based comparison -------------------------------------------------------------

def _measure_slice(b: CircuitBuilder, measured, n_qubits: int) -> list[int]:
    """Measure ``measured`` together; every other qubit idles (dephasing) meanwhile."""
    busy = set(measured)
    for q in range(n_qubits):
        if q not in busy:
            b.add("IDLE", q)
    return [b.measure(q) for q in measured]


def _flagged_parity_mb(b: CircuitBuilder, kind: str, aux: int, f1: int, f2: int, support,
                       n_qubits: int) -> int:
    """Measure an X- or Z-type weight-4 parity with two flags and classical hook fixes."""
    d1, d2, d3, d4 = support
    for q in (aux, f1, f2):
        b.add("RESET", q)
    if kind == "X":
        b.add("H", aux)
        for t in (f1, d1, f2, d2, f1, d3, f2, d4):
            b.add("CNOT", aux, t)
        b.add("H", aux)
    else:
        # phase hooks travel from the target back to the data; flags watch them in X basis
        b.add("H", f1)
        b.add("H", f2)
        for c in (f1, d1, f2, d2, f1, d3, f2, d4):
            b.add("CNOT", c, aux)
        b.add("H", f1)
        b.add("H", f2)
    m, m1, m2 = _measure_slice(b, [aux, f1, f2], n_qubits)
    b.pauli_if([[m2]], [(kind, d4)])
    b.pauli_if([[m1, m2]], [(kind, d3)])
    return m


def _majority(m1: int, m2: int, m3: int) -> list[list[int]]:
    return [[m1, m2], [m1, m3], [m2, m3]]


def build_mb_switch(direction: str) -> Protocol:
    """Switch by measuring the missing checks and applying the table classically.

    Every syndrome bit is measured on three disjoint supports (as in the coherent
    versions) and the feedback uses their majority; all qubits not being measured idle
    during each measurement slice.
    """
    if direction not in ("15to7", "7to15"):
        raise ValueError("direction must be '15to7' or '7to15'")
    b = CircuitBuilder()
    data = b.register("d", 15)
    aux = b.register("m", 3)
    extra = b.register("x", 4) if direction == "7to15" else []
    n = 15 + 3 + len(extra)
    if direction == "15to7":
        lut = switch_lut("15to7")
        for c in PLAQUETTE_ORDER:
            sources = (STEANE_PLAQUETTES[c], YELLOW_FACES[c], YELLOW_OPPOSITE[c])
            ms = [_flagged_parity_mb(b, "X", aux[0], aux[1], aux[2], [data[q] for q in s], n)
                  for s in sources]
            ops = lut.support(_bit_syndrome(c), restricted=True)
            b.pauli_if(_majority(*ms), [("Z", data[q]) for q in ops])
        steane, tetra = steane_spec(), tetrahedral_spec()
        return Protocol("mb_switch_15_to_7", b.build(), tetra, steane, tuple(data),
                        tuple(data[:7]), tetra_inputs(n, data))
    yellow = [data[q] for q in cube_vertices(YELLOW_AXES, TETRA_CELLS["Y"])]
    prepare_cube_plus(b, yellow, extra[0:2], extra[2:4], fresh=True)
    for face in SWITCH_FACES:
        c1, c2 = FACE_SOURCES[face]
        f = TETRA_FACES[face]
        sources = (tuple(q for q in TETRA_CELLS[c1] if q not in f),
                   tuple(q for q in TETRA_CELLS[c2] if q not in f), f)
        ms = [_flagged_parity_mb(b, "Z", aux[0], aux[1], aux[2], [data[q] for q in s], n)
              for s in sources]
        b.pauli_if(_majority(*ms), [("X", data[q]) for q in STEANE_PLAQUETTES[FACE_FIX[face]]])
    steane, tetra = steane_spec(), tetrahedral_spec()
    return Protocol("mb_switch_7_to_15", b.build(), steane, tetra, tuple(data[:7]), tuple(data),
                    switch_inputs(steane, tetra, n, data[:7]))


build_init_steane_zero = init_steane_zero

# name -> (builder, whether it accepts the ft flag)
PROTOCOLS = {
    "switch-15-7": (build_switch_15_to_7, True),
    "switch-7-15": (build_switch_7_to_15, True),
    "full-cycle": (build_full_cycle, True),
    "init-steane-zero": (build_init_steane_zero, False),
    "init-833-plus": (build_init_833_plus, False),
    "yellow-reinit": (build_yellow_reinit, False),
    "mb-15-7": (lambda: build_mb_switch("15to7"), False),
    "mb-7-15": (lambda: build_mb_switch("7to15"), False),
}


def build_protocol(name: str, ft: bool = True) -> Protocol:
    """Build a registered protocol; ``ft`` selects the variant where one exists."""
    if name not in PROTOCOLS:
        raise KeyError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}")
    builder, has_ft = PROTOCOLS[name]
    if not has_ft and not ft:
        raise ValueError(f"{name} has no non-FT variant")
    return builder(ft) if has_ft else builder()
