import cmath
import itertools

import numpy as np
import pytest

from mfswitch import gf2
from mfswitch.circuit import enumerate_fault_locations
from mfswitch.codes import steane_spec, tetra_cells, tetrahedral_spec
from mfswitch.engines import run_trajectory
from mfswitch.frame import prepare_input, reference_run
from mfswitch.noise import NoiseModel
from mfswitch.pauli import PauliString
from mfswitch.protocols import (FACE_FIX, LUT_SYNDROME_LABELS, PROTOCOLS, UnsupportedOperation,
                                build_init_steane_zero, build_protocol, build_transversal,
                                feedback_lut, switch_lut, t_pattern)

SYNDROMES = list(itertools.product((0, 1), repeat=3))
SWITCHES = ["switch-15-7", "switch-7-15", "full-cycle"]


def sparse(n, text):
    terms = {}
    for tok in text.split():
        terms[int(tok[1:])] = tok[0]
    return PauliString.from_sparse(n, terms)


# -- lookup tables -----------------------------------------------------------------------

@pytest.mark.parametrize("direction,syndrome,expected", [
    ("15to7", (1, 0, 0), "Z2 Z5 Z11 Z13"),
    ("15to7", (1, 1, 1), "Z1 Z2 Z3 Z5 Z11 Z12 Z13 Z14"),
    ("7to15", (0, 1, 1), "X1 X3 X4 X6"),
    ("7to15", (1, 0, 0), "X0 X1 X2 X3"),
])
def test_lut_entries(direction, syndrome, expected):
    assert feedback_lut(direction, syndrome) == sparse(15, expected)


def test_restricted_form_drops_yellow_cell():
    full = feedback_lut("15to7", (1, 0, 0))
    restricted = feedback_lut("15to7", (1, 0, 0), restricted=True)
    assert restricted.support() == [q for q in full.support() if q < 7]


@pytest.mark.parametrize("bad", [(1, 0), (2, 0, 0), (1, 0, 0, 1)])
def test_lut_rejects_bad_syndromes(bad):
    with pytest.raises(ValueError):
        feedback_lut("15to7", bad)


def test_lut_rejects_bad_direction():
    with pytest.raises(ValueError):
        switch_lut("sideways")


@pytest.mark.parametrize("direction", ["15to7", "7to15"])
@pytest.mark.parametrize("restricted", [False, True])
def test_lut_xor_additivity(direction, restricted):
    for s1, s2 in itertools.product(SYNDROMES, repeat=2):
        s12 = tuple(a ^ b for a, b in zip(s1, s2))
        prod = feedback_lut(direction, s1, restricted) * feedback_lut(direction, s2, restricted)
        assert prod.unsigned() == feedback_lut(direction, s12, restricted).unsigned()


def test_unit_lut_entries_fix_one_check_each():
    # 15->7: data-restricted Z entries against the Steane X plaquettes;
    # 7->15: X entries against the three Z faces named by the syndrome labels
    steane_x = [g.embed(15, list(range(7))) for g in steane_spec().x_generators]
    faces = tetrahedral_spec().extra["faces"]
    face_z = [PauliString.from_support(15, "Z", faces[f]) for f in LUT_SYNDROME_LABELS["7to15"]]
    for direction, checks in (("15to7", steane_x), ("7to15", face_z)):
        hit = []
        for i in range(3):
            s = tuple(int(j == i) for j in range(3))
            op = feedback_lut(direction, s, restricted=(direction == "15to7"))
            flipped = [k for k, g in enumerate(checks) if not g.commutes(op)]
            assert len(flipped) == 1, (direction, s)
            hit += flipped
        assert sorted(hit) == [0, 1, 2]
    assert set(FACE_FIX) == set(LUT_SYNDROME_LABELS["7to15"])


# -- codespace contract ------------------------------------------------------------------

def _inputs_with_complements(protocol):
    """(label, start tableau, tracked) for each input and its logical complement."""
    n = protocol.circuit.n_qubits
    out = []
    for lab, spec in protocol.inputs.items():
        start = prepare_input(n, list(spec.projections))
        out.append((lab, start, spec.tracked))
        if protocol.input_code is None:
            continue
        code = protocol.input_code
        # flip the prepared logical with its anticommuting partner
        partners = [L.embed(n, list(protocol.input_qubits))
                    for L in code.logical_x[:1] + code.logical_z[:1]]
        flip = next(L for L in partners if any(not L.commutes(p) for p in spec.projections))
        other = start.copy()
        other.apply_pauli(flip)
        out.append((lab + "-", other, tuple(-t for t in spec.tracked)))
    return out


def _out(protocol, p):
    return p.unsigned().embed(protocol.circuit.n_qubits, list(protocol.output_qubits))


@pytest.mark.parametrize("name", SWITCHES + ["init-steane-zero", "init-833-plus",
                                            "yellow-reinit"])
def test_fault_free_output_in_codespace_with_logical_action(name, protocols):
    proto = protocols(name)
    code = proto.output_code
    for lab, start, tracked in _inputs_with_complements(proto):
        final = reference_run(proto.circuit, start).final
        for g in code.generators():
            assert final.pauli_expectation(_out(proto, g)).bit == 0, (lab, g.sparse_str())
        for t in tracked:
            v = final.pauli_expectation(_out(proto, t))
            assert v.deterministic and v.bit == (0 if t.sign > 0 else 1), (lab, t)


@pytest.mark.parametrize("name", ["mb-15-7", "mb-7-15"])
def test_measurement_based_switch_fault_free(name, protocols):
    proto = protocols(name)
    rng = np.random.default_rng(0)
    for lab in proto.inputs:
        for _ in range(30):
            res = run_trajectory(proto, NoiseModel(), lab, rng)
            assert not res.aborted and not any(res.failed.values())


def test_mb_switch_idles_every_measurement_slice(protocols):
    for name in ("mb-15-7", "mb-7-15"):
        ops = protocols(name).circuit.ops
        meas = [i for i, op in enumerate(ops) if op.kind == "MEASZ"]
        assert meas
        for i in meas:
            window = ops[max(0, i - 40):i + 40]
            assert any(op.kind == "IDLE" for op in window)
        idle = enumerate_fault_locations(protocols(name).circuit, {"idle-during-meas"})
        assert len(idle) > 0


def test_yellow_reinit_is_idempotent(protocols):
    proto = protocols("yellow-reinit")
    spec = proto.inputs["+++"]
    once = reference_run(proto.circuit, prepare_input(proto.circuit.n_qubits,
                                                      list(spec.projections))).final
    twice = reference_run(proto.circuit, once).final
    n = proto.circuit.n_qubits
    x_all = PauliString.from_support(n, "X", proto.output_qubits)
    for t in (once, twice):
        assert t.pauli_expectation(x_all).bit == 0
        for g in proto.output_code.generators():
            assert t.pauli_expectation(_out(proto, g)).bit == 0


def test_registry_and_alias():
    assert build_init_steane_zero().name == "init_steane_zero"
    with pytest.raises(KeyError):
        build_protocol("nope")
    with pytest.raises(ValueError):
        build_protocol("init-833-plus", ft=False)
    assert set(PROTOCOLS) >= {"switch-15-7", "switch-7-15", "full-cycle"}


# -- resource census (within 15% of the published table) -------------------------------

def within(value, target, tol=0.15):
    return abs(value - target) <= tol * target


CENSUS = {
    # name: (CNOT-type gates, Toffolis, qubits with reset, qubits without reset)
    "switch-15-7": (120, 8, 29, 53),
    "switch-7-15": (296, 40, 35, 131),
    "full-cycle": (416, 48, 35, 169),
    "init-833-plus": (32, 4, 12, 16),
    "init-steane-zero": (15, 1, 9, None),
}
TOFFOLI_DEVIATION = pytest.mark.xfail(
    strict=True, reason="one Toffoli per majority vote instead of two; see decisions ledger")


@pytest.mark.parametrize("name", list(CENSUS))
def test_census_two_qubit_gates_and_qubits(name, protocols):
    c = protocols(name).census()
    cnot, _, q_reset, q_plain = CENSUS[name]
    assert within(c["cnot"] + c["cz"], cnot)
    assert within(c["qubits_with_reset"], q_reset)
    if q_plain is not None:
        assert within(c["qubits_without_reset"], q_plain)


@pytest.mark.parametrize("name", [
    "switch-15-7", "init-833-plus", "init-steane-zero",
    pytest.param("switch-7-15", marks=TOFFOLI_DEVIATION),
    pytest.param("full-cycle", marks=TOFFOLI_DEVIATION),
])
def test_census_toffolis(name, protocols):
    assert within(protocols(name).census()["toffoli"], CENSUS[name][1])


def test_steane_init_census_exact(protocols):
    c = protocols("init-steane-zero").census()
    assert (c["cnot"], c["toffoli"], c["qubits_with_reset"]) == (15, 1, 9)


# -- transversal gates -------------------------------------------------------------------

def test_transversal_h_swaps_logicals():
    proto = build_transversal("steane", "H")
    assert proto.census()["cnot"] == 0 and len(proto.circuit.ops) == 7
    assert proto.logical_action == {"X": "Z", "Z": "X"}
    for lab, spec in proto.inputs.items():
        final = reference_run(proto.circuit, prepare_input(7, list(spec.projections))).final
        for t in spec.tracked:
            assert final.pauli_expectation(t).bit == 0


def test_transversal_cnot_spreads_x_from_control():
    proto = build_transversal("steane", "CNOT")
    for lab, spec in proto.inputs.items():
        final = reference_run(proto.circuit, prepare_input(14, list(spec.projections))).final
        for t in spec.tracked:
            assert final.pauli_expectation(t).bit == 0, lab


def test_t_pattern_refuses_execution():
    with pytest.raises(UnsupportedOperation):
        build_transversal("tetrahedral", "T-pattern")
    proto = build_transversal("tetrahedral", "T-pattern", for_execution=False)
    assert proto.census()["t"] == 15


def test_t_pattern_acts_as_logical_t():
    """Phase of every basis string in the |0>_L and |1>_L supports under the pattern."""
    tet = tetrahedral_spec()
    pattern = t_pattern()
    stabs = [0]
    for g in tet.x_masks():
        stabs += [s ^ g for s in stabs]
    lx = tet.logical_x[0].x_mask

    def phase(x):
        k = sum((1 if pattern[q] == "T" else -1) for q in gf2.bits(x))
        return cmath.exp(1j * cmath.pi / 4 * k)

    zero = {phase(s) for s in stabs}
    one = {phase(s ^ lx) for s in stabs}
    assert len({round(z.real, 9) + 1j * round(z.imag, 9) for z in zero}) == 1
    assert len({round(z.real, 9) + 1j * round(z.imag, 9) for z in one}) == 1
    rel = next(iter(one)) / next(iter(zero))
    assert rel == pytest.approx(cmath.exp(1j * cmath.pi / 4))


def test_unknown_transversal_rejected():
    with pytest.raises(ValueError):
        build_transversal("steane", "T")


def test_yellow_cell_is_the_reinit_target(protocols):
    # cube vertices are laid out on the yellow cell in face-axis order
    assert sorted(protocols("yellow-reinit").output_qubits) == list(tetra_cells()["Y"])
