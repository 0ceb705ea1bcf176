"""The Steane [[7,1,3]], tetrahedral [[15,1,3]] and [[8,3,2]] codes.

All three are CSS codes, so generators and logicals are stored as pure X or pure Z
``PauliString`` objects. The tetrahedral code is built from the nonzero vectors of
GF(2)^4 with coordinates (red, blue, green, yellow): cell ``c`` is the set of vectors
with coordinate ``c`` set and the face between cells ``c1`` and ``c2`` is the set with
both coordinates set.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from . import gf2
from .pauli import PauliString

COLORS = ("R", "B", "G", "Y")
STEANE_PLAQUETTES = {"R": (0, 1, 2, 3), "B": (1, 2, 4, 5), "G": (2, 3, 5, 6)}
# faces applied by the 15->7 feedback for the unit syndromes, in table order
LUT_FACES_15_TO_7 = ((2, 5, 11, 13), (2, 3, 12, 13), (1, 2, 13, 14))
YELLOW_CELL = tuple(range(7, 15))
EXHAUSTIVE_LIMIT = 16


class NoLabelingFound(RuntimeError):
    pass


@dataclass(frozen=True)
class CodeSpec:
    n: int
    k: int
    d: int
    x_generators: tuple[PauliString, ...]
    z_generators: tuple[PauliString, ...]
    logical_x: tuple[PauliString, ...]
    logical_z: tuple[PauliString, ...]
    label: str
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    def generators(self) -> list[PauliString]:
        return list(self.x_generators) + list(self.z_generators)

    def x_masks(self) -> list[int]:
        return [g.x_mask for g in self.x_generators]

    def z_masks(self) -> list[int]:
        return [g.z_mask for g in self.z_generators]

    def to_json(self) -> dict:
        def ops(ps):
            return [{"support": p.support(), "sign": p.sign} for p in ps]

        return {
            "label": self.label, "n": self.n, "k": self.k, "d": self.d,
            "x_generators": ops(self.x_generators), "z_generators": ops(self.z_generators),
            "logical_x": ops(self.logical_x), "logical_z": ops(self.logical_z),
            **({"extra": self.extra} if self.extra else {}),
        }

    @classmethod
    def from_json(cls, data: dict) -> CodeSpec:
        n = data["n"]

        def ops(kind, items):
            return tuple(PauliString.from_support(n, kind, it["support"], it.get("sign", 1))
                         for it in items)

        return cls(n, data["k"], data["d"], ops("X", data["x_generators"]),
                   ops("Z", data["z_generators"]), ops("X", data["logical_x"]),
                   ops("Z", data["logical_z"]), data["label"], data.get("extra", {}))


def _css(n, k, d, x_sets, z_sets, lx_sets, lz_sets, label, extra=None) -> CodeSpec:
    def mk(kind, sets):
        return tuple(PauliString.from_support(n, kind, s) for s in sets)

    return CodeSpec(n, k, d, mk("X", x_sets), mk("Z", z_sets), mk("X", lx_sets),
                    mk("Z", lz_sets), label, extra or {})


# -- Steane ------------------------------------------------------------------------------------

def steane_spec() -> CodeSpec:
    plaqs = list(STEANE_PLAQUETTES.values())
    full = tuple(range(7))
    return _css(7, 1, 3, plaqs, plaqs, [full], [full], "steane-7-1-3",
                {"plaquettes": {c: list(s) for c, s in STEANE_PLAQUETTES.items()}})


# -- tetrahedral ---------------------------------------------------------------------------------

def _cell(c: int) -> list[int]:
    return [v for v in range(1, 16) if v >> c & 1]


def _face(c1: int, c2: int) -> list[int]:
    return [v for v in range(1, 16) if v >> c1 & 1 and v >> c2 & 1]


def _tetra_constraints_ok(assign: dict[int, int], final: bool) -> bool:
    """Check constraints on a partial map qubit -> GF(2)^4 vector."""
    tri = [q for q in assign if q < 7]
    # some coordinate (yellow) vanishes on the Steane triangle and colours R,B,G map to
    # the other coordinates so that plaquettes are cells restricted to the triangle
    feasible = False
    for y in range(4):
        if any(assign[q] >> y & 1 for q in tri):
            continue
        if any(not assign[q] >> y & 1 for q in assign if q >= 7):
            continue
        for perm in itertools.permutations([c for c in range(4) if c != y]):
            if all((q in STEANE_PLAQUETTES[col]) == bool(assign[q] >> perm[i] & 1)
                   for i, col in enumerate("RBG") for q in tri):
                feasible = True
                break
        if feasible:
            break
    if not feasible:
        return False
    if final:
        inv = {v: q for q, v in assign.items()}
        zgroup = gf2.reduce_basis(
            [gf2.mask(inv[v] for v in _cell(c)) for c in range(4)]
            + [gf2.mask(inv[v] for v in _face(a, b)) for a, b in itertools.combinations(range(4), 2)])
        return all(gf2.in_span(gf2.mask(f), zgroup) for f in LUT_FACES_15_TO_7)
    return True


def solve_tetra_labeling() -> list[int]:
    """First qubit -> vector assignment (lexicographic in the vectors) meeting all constraints.

    Constraints: qubits 0..6 form the Steane triangle with the fixed plaquettes, qubits
    7..14 form the yellow cell, and the three feedback faces lie in the Z group.
    """
    assign: dict[int, int] = {}
    used: set[int] = set()

    def dfs(q: int) -> bool:
        if q == 15:
            return _tetra_constraints_ok(assign, final=True)
        for v in range(1, 16):
            if v in used:
                continue
            assign[q] = v
            used.add(v)
            if _tetra_constraints_ok(assign, final=False) and dfs(q + 1):
                return True
            del assign[q]
            used.discard(v)
        return False

    if not dfs(0):
        raise NoLabelingFound("no labeling satisfies the tetrahedral constraints")
    return [assign[q] for q in range(15)]


@lru_cache(maxsize=1)
def pinned_tetra_labeling() -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(vector per qubit, coordinate index per colour R,B,G,Y) from the pinned data file."""
    text = resources.files("mfswitch.data").joinpath("tetra_labeling.json").read_text()
    data = json.loads(text)
    return tuple(data["vectors"]), tuple(data["coordinates"][c] for c in COLORS)


def _colour_coordinates(vectors) -> tuple[int, ...]:
    y = next(c for c in range(4) if all(not vectors[q] >> c & 1 for q in range(7)))
    coords = {"Y": y}
    for col, plaq in STEANE_PLAQUETTES.items():
        coords[col] = next(c for c in range(4) if c != y
                           and all((q in plaq) == bool(vectors[q] >> c & 1) for q in range(7)))
    return tuple(coords[c] for c in COLORS)


def labeling_record(vectors: list[int]) -> dict:
    coords = _colour_coordinates(vectors)
    return {"vectors": list(vectors), "coordinates": dict(zip(COLORS, coords)),
            "encoding": "bit c of the vector is coordinate c"}


def tetra_cells(vectors=None, coords=None) -> dict[str, tuple[int, ...]]:
    if vectors is None:
        vectors, coords = pinned_tetra_labeling()
    return {col: tuple(q for q in range(15) if vectors[q] >> coords[i] & 1)
            for i, col in enumerate(COLORS)}


def tetra_faces(vectors=None, coords=None) -> dict[str, tuple[int, ...]]:
    """Weight-4 interfaces keyed by colour pair, e.g. ``"BG"``."""
    cells = tetra_cells(vectors, coords)
    out = {}
    for a, b in itertools.combinations(COLORS, 2):
        out[a + b] = tuple(sorted(set(cells[a]) & set(cells[b])))
    return out


def tetrahedral_spec() -> CodeSpec:
    cells = tetra_cells()
    faces = tetra_faces()
    face_names = [f for f in ("RB", "RG", "BG", "RY", "BY", "GY")]
    z_sets = [cells[c] for c in COLORS] + [faces[f] for f in face_names]
    # cells plus all six faces span a 10-dimensional space; keep an independent subset
    basis_sets, basis = [], {}
    for s in z_sets:
        m = gf2.mask(s)
        if not gf2.in_span(m, basis):
            basis_sets.append(s)
            basis = gf2.reduce_basis(list(basis.values()) + [m])
    tri = tuple(range(7))
    return _css(15, 1, 3, [cells[c] for c in COLORS], basis_sets, [tri], [tri],
                "tetrahedral-15-1-3",
                {"cells": {c: list(v) for c, v in cells.items()},
                 "faces": {f: list(v) for f, v in faces.items()}})


# -- [[8,3,2]] -----------------------------------------------------------------------------------

def _cube_face(axis: int, value: int) -> tuple[int, ...]:
    return tuple(v for v in range(8) if (v >> axis & 1) == value)


def _cube_edge(axis: int) -> tuple[int, ...]:
    # edge parallel to ``axis`` with the other two coordinates equal to 1
    others = [a for a in range(3) if a != axis]
    return tuple(v for v in range(8) if all(v >> a & 1 for a in others))


def code832_spec() -> CodeSpec:
    """Cube code: vertex ``v`` has coordinates (bit0, bit1, bit2)."""
    full = tuple(range(8))
    z_faces = [_cube_face(a, 0) for a in range(3)]
    return _css(8, 3, 2, [full], [full] + z_faces,
                [_cube_face(a, 0) for a in range(3)], [_cube_edge(a) for a in range(3)],
                "cube-8-3-2")


# -- validation ----------------------------------------------------------------------------------

@dataclass
class Report:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))

    @property
    def ok(self) -> bool:
        return all(c[1] for c in self.checks)

    def failed(self) -> list[str]:
        return [c[0] for c in self.checks if not c[1]]

    def to_json(self) -> dict:
        return {"ok": self.ok, "checks": [{"name": n, "ok": o, "detail": d} for n, o, d in self.checks]}


def _symplectic_masks(p: PauliString) -> int:
    return p.x_mask | (p.z_mask << p.n_qubits)


def stabilizer_basis(spec: CodeSpec) -> dict[int, int]:
    return gf2.reduce_basis(_symplectic_masks(g) for g in spec.generators())


def validate_code(spec: CodeSpec) -> Report:
    rep = Report()
    gens = spec.generators()
    comm = all(a.commutes(b) for a, b in itertools.combinations(gens, 2))
    rep.add("generators commute", comm)
    rk = gf2.rank(_symplectic_masks(g) for g in gens)
    rep.add("generator rank", rk == spec.n - spec.k == len(gens), f"rank {rk}, {len(gens)} generators")
    ok_pairs = len(spec.logical_x) == spec.k == len(spec.logical_z)
    for i, lx in enumerate(spec.logical_x):
        for j, lz in enumerate(spec.logical_z):
            if lx.commutes(lz) != (i != j):
                ok_pairs = False
    rep.add("logical pairs", ok_pairs)
    logicals = list(spec.logical_x) + list(spec.logical_z)
    rep.add("logicals commute with generators", all(g.commutes(L) for g in gens for L in logicals))
    rep.add("logical X mutually commute", all(a.commutes(b) for a, b in itertools.combinations(spec.logical_x, 2)))
    rep.add("logical Z mutually commute", all(a.commutes(b) for a, b in itertools.combinations(spec.logical_z, 2)))
    if spec.n <= EXHAUSTIVE_LIMIT:
        d = code_distance(spec)
        rep.add("distance", d == spec.d, f"found {d}, declared {spec.d}")
    return rep


def _is_css(spec: CodeSpec) -> bool:
    return all(g.z_mask == 0 for g in spec.x_generators) and all(g.x_mask == 0 for g in spec.z_generators)


def css_distances(spec: CodeSpec) -> tuple[int, int]:
    """(minimum weight of a nontrivial X logical, same for Z) by exhaustive search."""
    if spec.n > EXHAUSTIVE_LIMIT:
        raise ValueError(f"exhaustive distance limited to n <= {EXHAUSTIVE_LIMIT}")
    if not _is_css(spec):
        raise ValueError("distance search assumes a CSS code")
    return (_min_logical(spec.n, spec.z_masks(), spec.x_masks()),
            _min_logical(spec.n, spec.x_masks(), spec.z_masks()))


def _min_logical(n: int, checks: list[int], stabs: list[int]) -> int:
    basis = gf2.reduce_basis(stabs)
    for w in range(1, n + 1):
        for combo in itertools.combinations(range(n), w):
            m = gf2.mask(combo)
            if all(gf2.parity(m & c) == 0 for c in checks) and not gf2.in_span(m, basis):
                return w
    return n + 1


def code_distance(spec: CodeSpec) -> int:
    # for a CSS code a minimum-weight logical can always be taken pure X or pure Z
    return min(css_distances(spec))


# -- decoding ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class DecoderTable:
    """Minimum-weight CSS decoder: X and Z parts are corrected independently.

    ``x_table`` maps the syndrome of the Z generators (bit i = generator i) to an X
    correction mask; ``z_table`` does the same for Z errors against X generators.
    """

    n: int
    z_checks: tuple[int, ...]
    x_checks: tuple[int, ...]
    x_table: dict[int, int]
    z_table: dict[int, int]

    @staticmethod
    def syndrome(mask: int, checks) -> int:
        return sum(gf2.parity(mask & c) << i for i, c in enumerate(checks))

    def correction_masks(self, x_mask: int, z_mask: int) -> tuple[int, int]:
        return (self.x_table[self.syndrome(x_mask, self.z_checks)],
                self.z_table[self.syndrome(z_mask, self.x_checks)])

    def correction(self, err: PauliString) -> PauliString:
        cx, cz = self.correction_masks(err.x_mask, err.z_mask)
        return PauliString(self.n, cx, cz)

    def lookup(self, x_syndrome: int, z_syndrome: int) -> PauliString:
        return PauliString(self.n, self.x_table[x_syndrome], self.z_table[z_syndrome])


def _min_weight_table(n: int, checks: list[int]) -> dict[int, int]:
    reachable = 1 << gf2.rank(checks)
    table: dict[int, int] = {}
    for w in range(0, n + 1):
        # combinations come out in lexicographic order, so ties favour low indices
        for combo in itertools.combinations(range(n), w):
            m = gf2.mask(combo)
            s = DecoderTable.syndrome(m, checks)
            table.setdefault(s, m)
        if len(table) >= reachable:
            break
    return table


def build_decoder_table(spec: CodeSpec) -> DecoderTable:
    if not _is_css(spec):
        raise ValueError("decoder tables are built for CSS codes only")
    zc, xc = spec.z_masks(), spec.x_masks()
    return DecoderTable(spec.n, tuple(zc), tuple(xc), _min_weight_table(spec.n, zc),
                        _min_weight_table(spec.n, xc))


# -- subsystem relation --------------------------------------------------------------------------

def steane_gauge_group(tetra: CodeSpec) -> list[PauliString]:
    """The other gauge of the subsystem code.

    X and Z cells plus the X and Z faces of the yellow cell: the Steane code on qubits
    0..6 with the yellow cell in the cube-code state |+++>.
    """
    cells = tetra.extra["cells"]
    faces = tetra.extra["faces"]
    n = tetra.n
    out = [PauliString.from_support(n, k, cells[c]) for c in COLORS for k in "XZ"]
    out += [PauliString.from_support(n, k, faces[f]) for f in ("RY", "BY", "GY") for k in "XZ"]
    return out


def verify_subsystem_relation(steane: CodeSpec, tetra: CodeSpec) -> Report:
    rep = Report()
    n = tetra.n
    cells = tetra.extra["cells"]
    faces = tetra.extra["faces"]
    cell_ops = [PauliString.from_support(n, k, cells[c]) for c in COLORS for k in "XZ"]
    face_ops = [PauliString.from_support(n, k, f) for f in faces.values() for k in "XZ"]
    rep.add("cells commute with every face", all(c.commutes(f) for c in cell_ops for f in face_ops))

    tetra_basis = stabilizer_basis(tetra)
    rep.add("tetrahedral group contains cells",
            all(gf2.in_span(_symplectic_masks(c), tetra_basis) for c in cell_ops))
    gauge = steane_gauge_group(tetra)
    gauge_basis = gf2.reduce_basis(_symplectic_masks(g) for g in gauge)
    rep.add("steane gauge is an abelian group of rank 14",
            len(gauge_basis) == n - 1 and all(a.commutes(b) for a, b in itertools.combinations(gauge, 2)))
    rep.add("steane gauge contains the steane generators",
            all(gf2.in_span(_symplectic_masks(g.embed(n, list(range(7)))), gauge_basis)
                for g in steane.generators()))
    logicals = [L.embed(n, list(range(7))) for L in steane.logical_x + steane.logical_z]
    rep.add("steane logicals commute with the steane gauge",
            all(L.commutes(g) for L in logicals for g in gauge))

    same = all(lt == ls.embed(n, list(range(7)))
               for lt, ls in zip(tetra.logical_x + tetra.logical_z, steane.logical_x + steane.logical_z))
    rep.add("logicals agree on qubits 0-6", same)
    not_in = all(not gf2.in_span(_symplectic_masks(g.embed(n, list(range(7)))), tetra_basis)
                 for g in steane.x_generators)
    rep.add("steane X plaquettes outside tetrahedral group", not_in)
    return rep


# -- export --------------------------------------------------------------------------------------

def all_codes() -> dict[str, CodeSpec]:
    return {"steane": steane_spec(), "tetrahedral": tetrahedral_spec(), "832": code832_spec()}


def export_codes_json() -> str:
    return json.dumps({k: v.to_json() for k, v in all_codes().items()}, indent=2)
