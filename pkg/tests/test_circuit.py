from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfswitch.circuit import (CircuitBuilder, CircuitError, CircuitParseError,
                              enumerate_fault_locations, parse_circuit, serialize_circuit)
from mfswitch.protocols import PROTOCOLS


def small_circuit():
    b = CircuitBuilder()
    b.register("d", 3)
    b.register("a", 2)
    b.add("H", 0)
    b.add("CNOT", 0, 3)
    b.marker("m1")
    b.add("TOFFOLI", 0, 1, 4)
    m = b.measure(2)
    b.pauli_if([[m]], [("X", 1)])
    return b.build()


def test_parse_single_cnot():
    c = parse_circuit("qubits d 7\ncnot d0 d1")
    assert len(c.ops) == 1 and c.ops[0].kind == "CNOT" and c.ops[0].qubits == (0, 1)


def test_toffoli_arity_error_reports_line():
    with pytest.raises(CircuitParseError) as err:
        parse_circuit("qubits d 3\n# comment\ntoffoli d0 d1")
    assert err.value.line == 3


@pytest.mark.parametrize("text", [
    "qubits d 3\nfoo d0",
    "qubits d 3\ncnot d0 e1",
    "qubits d 3\nmarker a\nmarker a",
    "qubits d 3\ncnot d0 d0",
    "qubits d 3\nh d7",
])
def test_malformed_inputs_rejected(text):
    with pytest.raises(CircuitError):
        parse_circuit(text)


def test_registers_without_ops_serialize_to_header_only():
    b = CircuitBuilder()
    b.register("d", 7)
    assert serialize_circuit(b.build()) == "qubits d 7\n"


def test_round_trip_small():
    c = small_circuit()
    text = serialize_circuit(c)
    assert parse_circuit(text) == c
    assert serialize_circuit(parse_circuit(text)) == text


@pytest.mark.parametrize("name", sorted(PROTOCOLS))
def test_protocol_corpus_round_trips(name, protocols):
    c = protocols(name).circuit
    text = serialize_circuit(c)
    assert parse_circuit(text) == c
    assert serialize_circuit(parse_circuit(text)) == text


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=200))
def test_parser_total_on_arbitrary_bytes(data):
    try:
        parse_circuit(data)
    except CircuitError:
        pass


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["qubits d 3", "h d0", "cnot d0 d1", "toffoli d0 d1 d2",
                                 "measz d2", "marker x", "# c", "", "cz d1 d2", "reset d1"]),
                max_size=12))
def test_parser_total_on_line_soup(lines):
    try:
        c = parse_circuit("\n".join(lines))
    except CircuitError:
        return
    assert parse_circuit(serialize_circuit(c)) == c


def test_two_cnots_give_thirty_variants():
    b = CircuitBuilder()
    b.register("q", 3)
    b.add("CNOT", 0, 1)
    b.add("CNOT", 1, 2)
    locs = enumerate_fault_locations(b.build(), {"two-qubit"})
    assert len(locs) == 2 and sum(len(loc.variants()) for loc in locs) == 30


def test_variant_counts_per_class():
    locs = enumerate_fault_locations(small_circuit())
    by_class = {loc.fault_class: len(loc.variants()) for loc in locs}
    assert by_class == {"single-qubit": 3, "two-qubit": 15, "toffoli": 1, "meas": 1}
    toff = next(loc for loc in locs if loc.fault_class == "toffoli")
    assert toff.variants() == ["X"] and toff.qubits == (4,)


def test_unknown_fault_class_rejected():
    with pytest.raises(ValueError):
        enumerate_fault_locations(small_circuit(), {"cosmic-ray"})


def test_enumeration_is_deterministic_and_duplicate_free(protocols):
    c = protocols("switch-7-15").circuit
    a, b = enumerate_fault_locations(c), enumerate_fault_locations(c)
    assert a == b
    assert len({(loc.op_index, loc.fault_class) for loc in a}) == len(a)


@pytest.mark.parametrize("name", ["switch-15-7", "switch-7-15", "full-cycle", "init-833-plus"])
def test_enumeration_matches_census(name, protocols):
    p = protocols(name)
    census = p.census()
    counts = Counter(loc.fault_class for loc in enumerate_fault_locations(p.circuit))
    assert counts["two-qubit"] == census["cnot"] + census["cz"]
    assert counts["toffoli"] == census["toffoli"]


def test_fifteen_to_seven_has_eight_toffoli_locations(protocols):
    locs = enumerate_fault_locations(protocols("switch-15-7").circuit, {"toffoli"})
    assert len(locs) == 8
