"""Leading-order error polynomials, crossing-point solvers and concatenation recursion."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

DIVERGENCE_CLAMP = 0.5
QEC_TOFFOLI_BOUND = math.comb(21, 2)
PAIRS_PER_BLOCK = math.comb(7, 2)


class NoCrossing(ValueError):
    pass


class NoThreshold(ValueError):
    pass


@dataclass(frozen=True)
class ErrorPolynomial:
    """Quadratic failure polynomial in the two-qubit and Toffoli rates.

    ``extra`` holds optional coefficients of the full form keyed by class pair, e.g.
    ``("1", "toff")`` or ``("init",)`` for a single-class term.
    """

    c2: float
    c2_toff: float
    c_toff: float
    protocol: str = ""
    input_state: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for v in (self.c2, self.c2_toff, self.c_toff, *self.extra.values()):
            if v < 0:
                raise ValueError("coefficients must be nonnegative")

    def scaled(self, factor: float) -> ErrorPolynomial:
        return ErrorPolynomial(self.c2 * factor, self.c2_toff * factor, self.c_toff * factor,
                               self.protocol, self.input_state,
                               {k: v * factor for k, v in self.extra.items()})

    def to_dict(self) -> dict:
        return {"protocol": self.protocol, "input_state": self.input_state, "c2": self.c2,
                "c2_toff": self.c2_toff, "c_toff": self.c_toff,
                "extra": {"/".join(k): v for k, v in self.extra.items()}}


_RATE_KEYS = {"1": "p1", "2": "p2", "toff": "p_toff", "init": "p_init", "meas": "p_meas"}


def eval_polynomial(poly: ErrorPolynomial, rates: dict[str, float], full: bool = False) -> float:
    """``c2 p2^2 + c2_toff p2 p_toff + c_toff p_toff^2``, plus the ``extra`` terms if ``full``."""
    if any(v < 0 for v in rates.values()):
        raise ValueError("rates must be nonnegative")
    p2 = rates.get("p2", 0.0)
    pt = rates.get("p_toff", 0.0)
    out = poly.c2 * p2 * p2 + poly.c2_toff * p2 * pt + poly.c_toff * pt * pt
    if full:
        for key, c in poly.extra.items():
            term = c
            for cls in (key if len(key) == 2 else (key[0], key[0])):
                term *= rates.get(_RATE_KEYS[cls], 0.0)
            out += term
    return out


def physical_rates(p: float, toffoli_factor: float = 2.88) -> dict[str, float]:
    return {"p1": p / 10, "p2": p, "p_toff": toffoli_factor * p, "p_init": p / 10,
            "p_meas": p / 10}


# Coefficients pinned from the published fault-path counting table
PUBLISHED_COEFFICIENTS: dict[tuple[str, str], ErrorPolynomial] = {
    ("switch_15_to_7", "+"): ErrorPolynomial(300.05, 69.06, 9, "switch_15_to_7", "+"),
    ("switch_15_to_7", "0"): ErrorPolynomial(386.60, 18.94, 0, "switch_15_to_7", "0"),
    ("switch_7_to_15", "+"): ErrorPolynomial(1832.53, 178.67, 3, "switch_7_to_15", "+"),
    ("switch_7_to_15", "0"): ErrorPolynomial(490.38, 469.33, 1220, "switch_7_to_15", "0"),
    ("init_steane_zero", "0"): ErrorPolynomial(27.88, 8.27, 0, "init_steane_zero", "0"),
}


def published_polynomials(protocol: str) -> dict[str, ErrorPolynomial]:
    return {inp: poly for (name, inp), poly in PUBLISHED_COEFFICIENTS.items() if name == protocol}


# -- crossing points -----------------------------------------------------------------------------

Curve = Callable[[float], float] | Sequence[tuple[float, float]]


def _log_diff_points(points_a, points_b) -> tuple[np.ndarray, np.ndarray]:
    pa = np.asarray(sorted(points_a), dtype=float)
    pb = np.asarray(sorted(points_b), dtype=float)
    xs = np.intersect1d(pa[:, 0], pb[:, 0])
    if len(xs) < 2:
        # resample b onto a's grid by log-log interpolation
        xs = pa[:, 0]
    lx = np.log(xs)
    ya = np.interp(lx, np.log(pa[:, 0]), np.log(np.maximum(pa[:, 1], 1e-300)))
    yb = np.interp(lx, np.log(pb[:, 0]), np.log(np.maximum(pb[:, 1], 1e-300)))
    return lx, ya - yb


def find_break_even(curve_a: Curve, curve_b: Curve, p_min: float = 1e-6, p_max: float = 0.5,
                    rel_tol: float = 1e-2) -> float:
    """Rate where the two curves cross.

    Callables are bisected on ``log p``; point sets ``[(p, rate), ...]`` are interpolated
    linearly in log-log coordinates between the bracketing samples.
    """
    if callable(curve_a) and callable(curve_b):
        def f(lp):
            p = math.exp(lp)
            return math.log(max(curve_a(p), 1e-300)) - math.log(max(curve_b(p), 1e-300))

        grid = np.linspace(math.log(p_min), math.log(p_max), 200)
        vals = [f(x) for x in grid]
        for lo, hi, flo, fhi in zip(grid, grid[1:], vals, vals[1:]):
            if flo == 0:
                return math.exp(lo)
            if flo * fhi < 0:
                while hi - lo > math.log1p(rel_tol) / 4:
                    mid = 0.5 * (lo + hi)
                    fm = f(mid)
                    if fm == 0:
                        return math.exp(mid)
                    if (fm < 0) == (flo < 0):
                        lo, flo = mid, fm
                    else:
                        hi = mid
                return math.exp(0.5 * (lo + hi))
        raise NoCrossing("curves do not cross in the scanned range")
    if callable(curve_a):
        curve_a = [(p, curve_a(p)) for p, _ in curve_b]
    if callable(curve_b):
        curve_b = [(p, curve_b(p)) for p, _ in curve_a]
    lx, d = _log_diff_points(curve_a, curve_b)
    for i in range(len(lx) - 1):
        if d[i] == 0:
            return float(math.exp(lx[i]))
        if d[i] * d[i + 1] < 0:
            t = d[i] / (d[i] - d[i + 1])
            return float(math.exp(lx[i] + t * (lx[i + 1] - lx[i])))
    if len(d) and d[-1] == 0:
        return float(math.exp(lx[-1]))
    raise NoCrossing("sampled curves do not cross")


# -- concatenation ---------------------------------------------------------------------------------

OPERATIONS = ("init", "measurement", "H", "T", "CNOT", "reduced_toffoli", "toffoli",
              "switch_15_to_7", "switch_7_to_15", "qec")


@dataclass
class LevelTable:
    rates: list[dict[str, float | None]]
    diverged: list[set[str]]
    provenance: str

    @property
    def levels(self) -> int:
        return len(self.rates) - 1

    def rate(self, level: int, operation: str) -> float | None:
        return self.rates[level][operation]

    def rows(self) -> list[tuple[int, str, float | None, str]]:
        out = []
        for lvl, row in enumerate(self.rates):
            for op in OPERATIONS:
                out.append((lvl, op, row[op], self.provenance))
        return out

    def to_json(self) -> dict:
        return {"provenance": self.provenance,
                "levels": [{"level": lvl, "rates": row, "diverged": sorted(self.diverged[lvl])}
                           for lvl, row in enumerate(self.rates)]}


def _combine(polys: dict[str, ErrorPolynomial], rates: dict[str, float], how: str) -> float:
    vals = [eval_polynomial(p, rates) for p in polys.values()]
    if how == "max":
        return max(vals)
    if how == "avg":
        return sum(vals) / len(vals)
    return eval_polynomial(polys[how], rates)


def concat_levels(forward: dict[str, ErrorPolynomial], backward: dict[str, ErrorPolynomial],
                  p_phys: float, levels: int, init_poly: ErrorPolynomial | None = None,
                  c_init_toff: float | None = None, c_qec_toff: float = QEC_TOFFOLI_BOUND,
                  toffoli_factor: float = 2.88, input_state: str = "max",
                  provenance: str = "published") -> LevelTable:
    """Leading-order rates of every operation up to concatenation level ``levels``.

    ``forward`` and ``backward`` map input labels to the 15->7 and 7->15 switching
    polynomials; ``input_state`` picks one label, or ``"max"``/``"avg"`` over them.
    Initialization beyond its two-qubit terms needs ``c_init_toff``; without it the row
    is left as ``None``.
    """
    if levels < 1:
        raise ValueError("need at least one concatenation level")
    if c_qec_toff > QEC_TOFFOLI_BOUND:
        raise ValueError(f"QEC Toffoli coefficient is bounded by {QEC_TOFFOLI_BOUND}")
    phys = physical_rates(p_phys, toffoli_factor)
    row0: dict[str, float | None] = {
        "init": phys["p_init"], "measurement": phys["p_meas"], "H": phys["p1"], "T": phys["p1"],
        "CNOT": phys["p2"], "reduced_toffoli": phys["p_toff"], "toffoli": phys["p_toff"],
        "switch_15_to_7": None, "switch_7_to_15": None, "qec": None,
    }
    rows = [row0]
    diverged: list[set[str]] = [set()]
    for lvl in range(1, levels + 1):
        prev = rows[-1]
        p2 = prev["CNOT"]
        pt = prev["toffoli"]
        r = {"p2": p2, "p_toff": pt}
        fwd = _combine(forward, r, input_state)
        bwd = _combine(backward, r, input_state)
        row: dict[str, float | None] = {
            "switch_15_to_7": fwd,
            "switch_7_to_15": bwd,
            "T": fwd + bwd,
            "toffoli": 3 * fwd + 3 * bwd,
            "reduced_toffoli": 3 * bwd + fwd,
            "CNOT": PAIRS_PER_BLOCK * p2 * p2,
            "H": PAIRS_PER_BLOCK * (p2 / 10) ** 2,
            "measurement": PAIRS_PER_BLOCK * (p2 / 10) ** 2,
            "qec": c_qec_toff * pt * pt,
        }
        if c_init_toff is None:
            row["init"] = None
        elif lvl == 1:
            base = eval_polynomial(init_poly, r) if init_poly is not None else 0.0
            row["init"] = base + c_init_toff * (p2 / 10) * pt
        else:
            row["init"] = c_init_toff * prev["init"] * pt
        flags = set()
        for k, v in row.items():
            if v is not None and v >= DIVERGENCE_CLAMP:
                row[k] = DIVERGENCE_CLAMP
                flags.add(k)
        rows.append(row)
        diverged.append(flags)
    return LevelTable(rows, diverged, provenance)


def closed_form_toffoli_rate(c_toff_forward: float, c_toff_backward: float, p_toff0: float,
                             level: int) -> float:
    """Level-``level`` Toffoli rate when only the Toffoli-pair terms are kept.

    The map ``x -> a x^2`` with ``a = 3 (c_fwd + c_bwd)`` iterated ``level`` times from the
    physical Toffoli rate gives ``a^(2^level - 1) x0^(2^level)``.
    """
    a = 3 * (c_toff_forward + c_toff_backward)
    return a ** (2**level - 1) * p_toff0 ** (2**level)


def pseudothreshold(forward: dict[str, ErrorPolynomial], backward: dict[str, ErrorPolynomial],
                    operation: str = "toffoli", levels: int = 5, p_min: float = 1e-7,
                    p_max: float = 1e-2, rel_tol: float = 0.05, **kwargs) -> float:
    """Largest physical rate at which the operation's rate still falls from level to level.

    The test compares the two deepest levels of the recursion, which for a quadratic map
    is the fixed-point criterion.
    """
    def improving(p):
        t = concat_levels(forward, backward, p, levels, **kwargs)
        hi, lo = t.rate(levels, operation), t.rate(levels - 1, operation)
        if operation in t.diverged[levels]:
            return False
        return hi < lo

    lo, hi = math.log(p_min), math.log(p_max)
    if not improving(math.exp(lo)):
        raise NoThreshold("operation does not improve even at the smallest rate")
    if improving(math.exp(hi)):
        raise NoThreshold("operation still improves at the largest scanned rate")
    while hi - lo > math.log1p(rel_tol) / 4:
        mid = 0.5 * (lo + hi)
        if improving(math.exp(mid)):
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def concat_distance(d1: int, d2: int) -> int:
    """Distance of a code concatenated from distances ``d1`` and ``d2``."""
    if d1 <= 0 or d2 <= 0:
        raise ValueError("distances must be positive")
    total = d1 * d2 + d1 + d2 - 1
    return total // 2
