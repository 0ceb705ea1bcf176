"""Protocol container shared by the builders and the simulation engines."""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import Circuit, circuit_stats
from .codes import CodeSpec
from .pauli import PauliString


@dataclass(frozen=True)
class InputSpec:
    """One logical input: operators projected on before the run and operators checked after.

    ``projections`` act on the full circuit register; ``tracked`` act on the output
    code's own qubit indices and must end with value +1.
    """

    projections: tuple[PauliString, ...]
    tracked: tuple[PauliString, ...]


@dataclass(frozen=True)
class Protocol:
    name: str
    circuit: Circuit
    input_code: CodeSpec | None
    output_code: CodeSpec
    input_qubits: tuple[int, ...]
    output_qubits: tuple[int, ...]
    inputs: dict[str, InputSpec]
    ft: bool = True
    logical_action: dict[str, str] = field(default_factory=lambda: {"X": "X", "Z": "Z"})
    aux: dict[str, tuple[int, ...]] = field(default_factory=dict)
    budget: dict | None = None
    # "decode": ideal decoding then logical check; "weight": residual must be equivalent
    # to weight <= 1 per Pauli type modulo the output state's stabilizers
    failure_mode: str = "decode"
    # extra error patterns tolerated in weight mode (e.g. a pair harmless to later use)
    allowed_errors: tuple[PauliString, ...] = ()

    @property
    def default_inputs(self) -> list[str]:
        return list(self.inputs)

    def census(self) -> dict:
        return circuit_stats(self.circuit, self.input_qubits)


def embed(p: PauliString, n: int, qubits) -> PauliString:
    return p.embed(n, list(qubits))


def switch_inputs(input_code: CodeSpec, output_code: CodeSpec, n: int, input_qubits,
                  extra: tuple[PauliString, ...] = (), action: dict[str, str] | None = None
                  ) -> dict[str, InputSpec]:
    """|0>_L and |+>_L inputs; ``extra`` projections prepare auxiliary registers ideally."""
    action = action or {"X": "X", "Z": "Z"}
    gens = tuple(embed(g, n, input_qubits) for g in input_code.generators())
    out_log = {"X": output_code.logical_x[0], "Z": output_code.logical_z[0]}
    return {
        "0": InputSpec(gens + extra + (embed(input_code.logical_z[0], n, input_qubits),),
                       (out_log[action["Z"]],)),
        "+": InputSpec(gens + extra + (embed(input_code.logical_x[0], n, input_qubits),),
                       (out_log[action["X"]],)),
    }
