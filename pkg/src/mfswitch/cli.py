"""Command-line front end: build, certify, sample, count, calibrate and extrapolate.

Every artifact carries the hash of the resolved configuration and the seed. Exit codes
are 0 on success, 2 on a failed certification, 3 on a configuration error and 4 when a
run aborts.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

CONFIG_VERSION = 1
EXIT_OK, EXIT_CERT, EXIT_CONFIG, EXIT_ABORT = 0, 2, 3, 4
SWEEP_COLUMNS = ("p", "shots", "failures", "rate", "ci_low", "ci_high", "input_state",
                 "protocol", "variant", "config_hash", "seed")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- config handling ------------------------------------------------------------------------

def parse_grid(text: str, points: int = 5) -> list[float]:
    """``a..b`` gives ``points`` log-spaced values; otherwise a comma-separated list."""
    try:
        if ".." in text:
            a, b = (float(x) for x in text.split(".."))
            if a <= 0 or b < a:
                raise ConfigError(f"bad range {text!r}")
            if points < 1:
                raise ConfigError("need at least one grid point")
            if points == 1 or a == b:
                return [a]
            return [float(x) for x in np.geomspace(a, b, points)]
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc
    if not vals:
        raise ConfigError("grid is empty")
    return vals


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _resolved(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items())
            if k not in ("func", "config", "out", "workers") and v is not None}


def _load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    version = data.pop("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version}")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _emit(args, payload, text: str | None = None) -> None:
    out = text if text is not None else json.dumps(payload, indent=2, default=str) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


def _meta(args) -> dict:
    cfg = _resolved(args)
    return {"config": cfg, "config_hash": config_hash(cfg), "seed": getattr(args, "seed", None)}


def _protocol(args):
    from .protocols import build_protocol

    try:
        return build_protocol(args.protocol, args.ft)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _variant(args) -> str:
    return "ft" if args.ft else "non-ft"


def _check_shots(shots: int) -> None:
    if shots < 1:
        raise ConfigError("shots must be at least 1")


# -- commands -------------------------------------------------------------------------------

def cmd_codes_validate(args) -> int:
    from .codes import all_codes, code_distance, tetrahedral_spec, steane_spec
    from .codes import validate_code, verify_subsystem_relation

    reports = {}
    ok = True
    for name, spec in all_codes().items():
        rep = validate_code(spec)
        d = code_distance(spec)
        reports[name] = {"valid": rep.ok, "distance": d, "failed": rep.failed()}
        ok &= rep.ok
    rel = verify_subsystem_relation(steane_spec(), tetrahedral_spec())
    reports["subsystem_relation"] = {"valid": rel.ok, "failed": rel.failed()}
    ok &= rel.ok
    _emit(args, {**_meta(args), "certified": ok, "codes": reports})
    return EXIT_OK if ok else EXIT_CERT


def cmd_protocol(args) -> int:
    from .circuit import serialize_circuit

    proto = _protocol(args)
    if args.action == "build":
        _emit(args, None, serialize_circuit(proto.circuit))
        return EXIT_OK
    meta = _meta(args)
    if args.action == "census":
        _emit(args, {**meta, "protocol": proto.name, "census": proto.census()})
        return EXIT_OK
    payload = {
        **meta,
        "protocol": proto.name,
        "ft": proto.ft,
        "input_qubits": list(proto.input_qubits),
        "output_qubits": list(proto.output_qubits),
        "inputs": {lab: {"projections": [p.sparse_str() for p in spec.projections],
                         "tracked": [p.sparse_str() for p in spec.tracked]}
                   for lab, spec in proto.inputs.items()},
        "census": proto.census(),
        "circuit": serialize_circuit(proto.circuit),
    }
    _emit(args, payload)
    return EXIT_OK


def cmd_ftcheck(args) -> int:
    from .engines import ft_check_single_faults

    proto = _protocol(args)
    rep = ft_check_single_faults(proto, replicates=args.replicates, seed=args.seed)
    _emit(args, {**_meta(args), **rep.to_json()})
    return EXIT_OK if rep.certified else EXIT_CERT


def sweep_rows(proto, ps, shots: int, seed: int, workers: int | None, variant: str,
               chash: str, inputs=None, model_fn=None) -> list[dict]:
    """One CSV row per (p, input) plus the input average."""
    from .engines import estimate_failure_rate
    from .noise import single_param_model

    model_fn = model_fn or single_param_model
    rows = []
    for i, p in enumerate(ps):
        res = estimate_failure_rate(proto, model_fn(p), shots, inputs=inputs,
                                    seed=seed + i, workers=workers)
        for lab, est in res.items():
            rows.append({"p": p, "shots": est.shots, "failures": est.failures,
                         "rate": est.rate, "ci_low": est.ci_low, "ci_high": est.ci_high,
                         "input_state": lab, "protocol": proto.name, "variant": variant,
                         "config_hash": chash, "seed": seed})
    return rows


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def cmd_mc_sweep(args) -> int:
    _check_shots(args.shots)
    ps = parse_grid(args.p, args.points)
    if any(not 0 <= p <= 0.5 for p in ps):
        raise ConfigError("p must lie in [0, 0.5]")
    proto = _protocol(args)
    inputs = args.inputs.split(",") if args.inputs else None
    if inputs and any(i not in proto.inputs for i in inputs):
        raise ConfigError(f"inputs must be among {list(proto.inputs)}")
    meta = _meta(args)
    rows = sweep_rows(proto, ps, args.shots, args.seed, args.workers, _variant(args),
                      meta["config_hash"], inputs)
    _emit(args, None, _csv(rows, SWEEP_COLUMNS))
    return EXIT_OK


def cmd_count_pairs(args) -> int:
    from .engines import count_weight2_faults

    proto = _protocol(args)
    pair = tuple(args.classes.split(","))
    if len(pair) != 2:
        raise ConfigError("--classes takes two comma-separated fault classes")
    try:
        rep = count_weight2_faults(proto, pair, seed=args.seed, replicates=args.replicates)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit(args, {**_meta(args), **rep.to_json()})
    return EXIT_OK


def cmd_calibrate_toffoli(args) -> int:
    from .noise import calibrate_toffoli, toffoli_first_order_slope

    _check_shots(args.shots)
    try:
        cal = calibrate_toffoli(parse_grid(args.p, args.points), shots=args.shots,
                                seed=args.seed, pair=args.pair)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    exact = toffoli_first_order_slope(pair=args.pair)
    _emit(args, {**_meta(args), **cal.to_dict(), "first_order_slope": exact})
    return EXIT_OK


def load_coefficients(source: str):
    """``published`` or a JSON file ``{"15to7": {"+": [c2, c2_toff, c_toff], ...}, "7to15": ...}``."""
    from .analysis import ErrorPolynomial, published_polynomials

    if source == "published":
        return (published_polynomials("switch_15_to_7"), published_polynomials("switch_7_to_15"),
                "published")
    try:
        data = json.loads(Path(source).read_text())
        polys = []
        for key in ("15to7", "7to15"):
            polys.append({lab: ErrorPolynomial(*map(float, c), protocol=key, input_state=lab)
                          for lab, c in data[key].items()})
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad coefficient file {source}: {exc}") from exc
    return polys[0], polys[1], f"counted:{source}"


def cmd_concat(args) -> int:
    from .analysis import NoThreshold, concat_levels, pseudothreshold

    fwd, bwd, prov = load_coefficients(args.coeffs)
    meta = _meta(args)
    if args.action == "threshold":
        try:
            pth = pseudothreshold(fwd, bwd, operation=args.operation, levels=args.levels,
                                  input_state=args.input_state)
        except NoThreshold as exc:
            _emit(args, {**meta, "error": str(exc)})
            return EXIT_ABORT
        _emit(args, {**meta, "provenance": prov, "operation": args.operation,
                     "pseudothreshold": pth})
        return EXIT_OK
    if args.levels < 1:
        raise ConfigError("levels must be at least 1")
    table = concat_levels(fwd, bwd, args.p_phys, args.levels, input_state=args.input_state,
                          provenance=prov)
    if args.format == "csv":
        rows = [{"level": lvl, "operation": op, "rate": rate, "provenance": pv,
                 "config_hash": meta["config_hash"]}
                for lvl, op, rate, pv in table.rows()]
        _emit(args, None, _csv(rows, ("level", "operation", "rate", "provenance",
                                      "config_hash")))
    else:
        _emit(args, {**meta, **table.to_json()})
    return EXIT_OK


def mb_grid(direction: str, ps, idles, shots: int, seed: int, workers=None) -> list[dict]:
    """Sign of ``rate(MF) - rate(MB)`` per cell; +1 means the measurement-based switch wins.

    A cell is only signed when the two Wilson intervals are disjoint, otherwise it is 0.
    The MF protocol has no idle locations, so one MF run per ``p`` serves a whole column.
    """
    from .engines import estimate_failure_rate
    from .noise import single_param_model
    from .protocols import build_mb_switch, build_switch_15_to_7, build_switch_7_to_15

    mf = (build_switch_15_to_7 if direction == "15to7" else build_switch_7_to_15)(True)
    mb = build_mb_switch(direction)
    rows = []
    for i, p in enumerate(ps):
        r_mf = estimate_failure_rate(mf, single_param_model(p), shots, seed=seed + i,
                                     workers=workers)["avg"]
        for j, q in enumerate(idles):
            model = single_param_model(p, p_idle_meas=q)
            r_mb = estimate_failure_rate(mb, model, shots, seed=seed + 1000 * (j + 1) + i,
                                         workers=workers)["avg"]
            if r_mb.ci_high < r_mf.ci_low:
                sign = 1
            elif r_mf.ci_high < r_mb.ci_low:
                sign = -1
            else:
                sign = 0
            rows.append({"p": p, "p_idle_meas": q, "rate_mf": r_mf.rate,
                         "rate_mb": r_mb.rate, "delta": r_mf.rate - r_mb.rate, "sign": sign})
    return rows


def cmd_compare_mb_grid(args) -> int:
    _check_shots(args.shots)
    ps = parse_grid(args.p, args.points)
    idles = parse_grid(args.idle, args.points)
    meta = _meta(args)
    rows = mb_grid(args.direction, ps, idles, args.shots, args.seed, args.workers)
    for r in rows:
        r.update(config_hash=meta["config_hash"], seed=args.seed)
    _emit(args, None, _csv(rows, ("p", "p_idle_meas", "rate_mf", "rate_mb", "delta", "sign",
                                  "config_hash", "seed")))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, protocol: bool = True, seed: bool = True) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--out", help="write the artifact here instead of stdout")
    if protocol:
        p.add_argument("--protocol", default="switch-15-7")
        p.add_argument("--ft", action=argparse.BooleanOptionalAction, default=True)
    if seed:
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    from .engines import default_workers

    top = _Parser(prog="mfswitch", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    codes = sub.add_parser("codes").add_subparsers(dest="action", required=True,
                                                   parser_class=_Parser)
    p = codes.add_parser("validate")
    _common(p, protocol=False, seed=False)
    p.set_defaults(func=cmd_codes_validate)

    p = sub.add_parser("protocol")
    p.add_argument("action", choices=("build", "export", "census"))
    _common(p, seed=False)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("ftcheck")
    _common(p)
    p.add_argument("--replicates", type=int, default=8)
    p.set_defaults(func=cmd_ftcheck)

    mc = sub.add_parser("mc").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = mc.add_parser("sweep")
    _common(p)
    p.add_argument("--p", default="1e-4..1e-2")
    p.add_argument("--points", type=int, default=5)
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--inputs", help="comma-separated input labels, default all")
    p.add_argument("--workers", type=int, default=default_workers())
    p.set_defaults(func=cmd_mc_sweep)

    cnt = sub.add_parser("count").add_subparsers(dest="action", required=True,
                                                 parser_class=_Parser)
    p = cnt.add_parser("pairs")
    _common(p)
    p.add_argument("--classes", default="2,2", help="fault classes, e.g. 2,2 or 2,toff")
    p.add_argument("--replicates", type=int, default=1)
    p.set_defaults(func=cmd_count_pairs)

    cal = sub.add_parser("calibrate").add_subparsers(dest="action", required=True,
                                                     parser_class=_Parser)
    p = cal.add_parser("toffoli")
    _common(p, protocol=False)
    p.add_argument("--pair", action="store_true", help="two consecutive Toffolis")
    p.add_argument("--p", default="2e-3,4e-3,6e-3,8e-3")
    p.add_argument("--points", type=int, default=4)
    p.add_argument("--shots", type=int, default=200_000)
    p.set_defaults(func=cmd_calibrate_toffoli)

    p = sub.add_parser("concat")
    p.add_argument("action", choices=("levels", "threshold"))
    _common(p, protocol=False, seed=False)
    p.add_argument("--coeffs", default="published", help="'published' or a coefficient JSON file")
    p.add_argument("--p-phys", type=float, default=1e-4)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--operation", default="toffoli")
    p.add_argument("--input-state", default="max")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_concat)

    cmp_ = sub.add_parser("compare").add_subparsers(dest="action", required=True,
                                                    parser_class=_Parser)
    p = cmp_.add_parser("mb-grid")
    _common(p, protocol=False)
    p.add_argument("--direction", choices=("15to7", "7to15"), default="15to7")
    p.add_argument("--p", default="3e-4..3e-3")
    p.add_argument("--idle", default="1e-5..1e-2")
    p.add_argument("--points", type=int, default=4)
    p.add_argument("--shots", type=int, default=50_000)
    p.add_argument("--workers", type=int, default=default_workers())
    p.set_defaults(func=cmd_compare_mb_grid)
    return top


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        file_cfg = _load_config(args.config)
        unknown = set(file_cfg) - set(vars(args))
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        given = {tok[2:].split("=")[0].replace("-", "_") for tok in argv if tok.startswith("--")}
        given |= {g[3:] for g in given if g.startswith("no_")}
        for k, v in file_cfg.items():
            if k not in given:
                setattr(args, k, v)
    return args


def run_command(argv=None) -> int:
    from .engines import ProtocolError
    from .tableau import NonDeterministicToffoliControl

    try:
        args = parse_args(sys.argv[1:] if argv is None else list(argv))
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonDeterministicToffoliControl, ProtocolError, FloatingPointError) as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
