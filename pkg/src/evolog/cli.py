"""Command line front end: ``evolog {logrep,swap,trajectory,spectrum,selftest}``.

Exit codes: 0 success, 1 self-test failure or unmet residual threshold,
2 configuration error (nothing written), 3 numerical error (recorded in the
manifest).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .contour import certify_kappa, choose_kappa, common_certificate
from .errors import (
    BackwardNotAvailable,
    EvologError,
    IllPosedDirection,
    RepresentationNotInvertible,
)
from .evolution import (
    SCALINGS,
    SCHEMES,
    build_family,
    constant_family,
    log_representation,
    propagator,
    random_generator,
    regularized_trajectory,
    representation_eq5,
    scaled_family,
    stiff_heat_family,
)
from .operator_core import eigenvalues, load_matrix, norm2, save_matrix
from .reporting import RunManifest, write_name_value_csv, write_svg_polyline, write_table_csv
from .selftest import format_table, run_checks
from .swap import (
    KINDS,
    PROFILES,
    ProblemSpec,
    compare_directions,
    exact_field,
    illposedness_indicator,
    reslice_discrete_trajectory,
    slice_errors,
    solve_direction,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_pos_int = {"type": "integer", "minimum": 1}
_pos_num = {"type": "number", "exclusiveMinimum": 0}

_FAMILY_PROPS = {
    "preset": {"enum": ["constant", "scaled", "stiff_heat"]},
    "n": {"type": "integer", "minimum": 1, "maximum": 128},
    "f": {"enum": sorted(SCALINGS)},
    "nu": _pos_num,
    "domain": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    "steps": {"type": "integer", "minimum": 2, "maximum": 4096},
    "scheme": {"enum": list(SCHEMES)},
    "k": {"type": "integer", "minimum": 0},
    "kappa": {"oneOf": [{"const": "auto"}, _pos_num]},
    "nodes": {"type": "integer", "minimum": 8, "maximum": 1024, "multipleOf": 2},
    "seed": {"type": "integer", "minimum": 0},
}

SCHEMAS = {
    "logrep": {
        "type": "object",
        "additionalProperties": False,
        "required": ["preset"],
        "properties": {
            **_FAMILY_PROPS,
            "j": {"type": "integer", "minimum": 0},
            "thresholds": {
                "type": "object",
                "additionalProperties": False,
                "properties": {k: _pos_num for k in (
                    "forward_residual", "recovery_residual", "eq5_agreement", "derivative_agreement")},
            },
        },
    },
    "trajectory": {
        "type": "object",
        "additionalProperties": False,
        "required": ["preset"],
        "properties": {**_FAMILY_PROPS, "u0": {"enum": ["ones", "random"]}},
    },
    "swap": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "kind": {"enum": list(KINDS)},
            "c": {"type": "number", "not": {"const": 0}},
            "nu": _pos_num,
            "T": _pos_num,
            "L": _pos_num,
            "n0": {"type": "integer", "minimum": 8, "maximum": 1024},
            "n1": {"type": "integer", "minimum": 8, "maximum": 1024},
            "profile": {"enum": list(PROFILES)},
            "width": _pos_num,
            "center": {"type": "number"},
            "mode": _pos_int,
            "scheme": {"enum": list(SCHEMES)},
            "indicator_base": {"type": "integer", "minimum": 8, "maximum": 256},
            "blowup": {"type": "number", "exclusiveMinimum": 1},
        },
    },
    "spectrum": {
        "type": "object",
        "additionalProperties": False,
        "required": ["matrix"],
        "properties": {"matrix": {"type": "string"}},
    },
    "selftest": {
        "type": "object",
        "additionalProperties": False,
        "properties": {"mutation": {"enum": ["quadrature_sign"]}},
    },
}

PRESET_DEFAULTS = {
    "constant": {"n": 8, "domain": [0.0, 1.0], "steps": 16, "j": 8, "k": 0},
    "scaled": {"n": 8, "domain": [0.0, 1.0], "steps": 32, "j": 16, "k": 0, "f": "cos"},
    "stiff_heat": {"n": 16, "nu": 1.0, "domain": [0.0, 16.0], "steps": 8, "j": 4, "k": 0},
}

DEFAULT_THRESHOLDS = {"forward_residual": 1e-6}


class ConfigError(Exception):
    pass


def load_config(command: str, path, extra: dict | None = None) -> dict:
    if path is None:
        doc = {}
    else:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc.update(extra or {})
    try:
        jsonschema.validate(doc, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    return doc


def _family_config(cfg: dict) -> dict:
    full = dict(PRESET_DEFAULTS[cfg["preset"]])
    full.update(cfg)
    lo, hi = full["domain"]
    if not hi > lo:
        raise ConfigError("domain must satisfy lo < hi")
    for key in ("j", "k"):
        if key in full and full[key] > full["steps"]:
            raise ConfigError(f"{key}={full[key]} exceeds steps={full['steps']}")
    if "j" in full and full["j"] < full["k"]:
        raise ConfigError("j must be >= k")
    return full


def _build_grid(cfg: dict, seed: int):
    domain = tuple(cfg["domain"])
    preset = cfg["preset"]
    if preset == "stiff_heat":
        gen = stiff_heat_family(cfg["n"], cfg["nu"], domain)
    else:
        A = random_generator(cfg["n"], seed)
        gen = constant_family(A, domain) if preset == "constant" else scaled_family(A, cfg["f"], domain)
    return build_family(gen, cfg["steps"], cfg.get("scheme", "midpoint_exp"))


def _certificate(U, cfg):
    nodes = cfg.get("nodes", 64)
    kappa = cfg.get("kappa", "auto")
    return choose_kappa(U, nodes) if kappa == "auto" else certify_kappa(U, kappa, nodes)


def run_logrep(cfg: dict, man: RunManifest, seed: int) -> int:
    cfg = _family_config(cfg)
    with man.stage("build"):
        grid = _build_grid(cfg, seed)
        j, k = cfg["j"], cfg["k"]
        U = propagator(grid, j, k)
        K = grid.generator(grid.x(j))
    with man.stage("certify"):
        if cfg.get("kappa", "auto") == "auto" and "nodes" not in cfg:
            cert = None
        else:
            cert = _certificate(U, cfg)
    with man.stage("report"):
        try:
            report = log_representation(grid, j, k, cert)
        except RepresentationNotInvertible as exc:
            report = exc.report
        try:
            representation_eq5(grid, j, k, cert)
            eq5_path = "ok"
        except BackwardNotAvailable:
            eq5_path = BackwardNotAvailable.__name__
    rows = report.rows() + [("eq5_path", eq5_path), ("sigma_min_U", float(np.linalg.svd(U, compute_uv=False).min()))]
    write_name_value_csv(man.path("report.csv"), rows)
    save_matrix(man.path("U.json"), U)
    save_matrix(man.path("K.json"), K)
    thresholds = {**DEFAULT_THRESHOLDS, **cfg.get("thresholds", {})}
    failed = [name for name, limit in thresholds.items()
              if getattr(report, name) is not None and getattr(report, name) > limit]
    man.summary.update({name: value for name, value in report.rows()})
    man.summary["eq5_path"] = eq5_path
    man.summary["thresholds_failed"] = failed
    return EXIT_FAIL if failed else EXIT_OK


def run_trajectory(cfg: dict, man: RunManifest, seed: int) -> int:
    cfg = _family_config(cfg)
    with man.stage("build"):
        grid = _build_grid(cfg, seed)
    k = cfg["k"]
    if cfg.get("u0", "ones") == "ones":
        u0 = np.ones(grid.dim, dtype=np.complex128)
    else:
        rng = np.random.default_rng(seed)
        u0 = rng.standard_normal(grid.dim) + 1j * rng.standard_normal(grid.dim)
    with man.stage("trajectory"):
        Us = [propagator(grid, j, k) for j in range(k, grid.steps + 1)]
        cert = common_certificate(Us, cfg.get("nodes", 64))
        traj = regularized_trajectory(grid, k, cert, u0)
    rows, worst = [], 0.0
    for (x, v), U in zip(traj, Us):
        worst = max(worst, float(np.linalg.norm(v - U @ u0) / np.linalg.norm(u0)))
        rows.extend((x, c, z.real, z.imag) for c, z in enumerate(v))
    write_table_csv(man.path("trajectory.csv"), ["x", "component", "re", "im"], rows)
    man.summary.update({"kappa": cert.kappa, "max_deviation": worst, "points": len(traj)})
    return EXIT_OK


def run_swap(cfg: dict, man: RunManifest, seed: int, override: bool) -> int:
    keys = {f for f in ProblemSpec.__dataclass_fields__}
    try:
        spec = ProblemSpec(**{k: v for k, v in cfg.items() if k in keys})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    scheme = cfg.get("scheme", "midpoint_exp")
    base = cfg.get("indicator_base")
    reports = {}
    with man.stage("indicator"):
        sizes = None if base is None else (base, 2 * base, 4 * base)
        for d in (0, 1):
            reports[d] = illposedness_indicator(spec, d, sizes)
    rows = []
    for d, r in reports.items():
        rows += [(f"x{d}_wellposed", r.wellposed), (f"x{d}_spectral_abscissa", r.spectral_abscissa),
                 (f"x{d}_growth_bound", r.growth_bound)]
        rows += [(f"x{d}_abscissa_n{n}", a) for n, a in r.abscissa_trend]
    fields = {}
    with man.stage("solve"):
        for d in (0, 1):
            try:
                fields[d] = solve_direction(spec, d, override=override, report=reports[d],
                                            scheme=scheme, blowup=cfg.get("blowup", 1e8))
                rows.append((f"x{d}_status", "ok"))
            except IllPosedDirection:
                rows.append((f"x{d}_status", IllPosedDirection.__name__))
            except EvologError as exc:
                coord = getattr(exc, "coordinate", None)
                rows.append((f"x{d}_status", exc.name))
                if coord is not None:
                    rows.append((f"x{d}_blowup_coordinate", coord[2]))
    ref = exact_field(spec)
    series = {}
    for d, f in fields.items():
        f.to_csv(man.path(f"field_x{d}.csv"))
        rows.append((f"x{d}_error_vs_exact", compare_directions(ref, f)))
        series[f"evolved along x{d}"] = (list(spec.x0), list(slice_errors(f, ref)))
    if len(fields) == 2:
        rows.append(("comparison", compare_directions(fields[0], fields[1])))
    if fields:
        first = fields[min(fields)]
        rs = reslice_discrete_trajectory(first)
        rows += [("reslice_modulus_x0", rs.modulus_x0), ("reslice_modulus_x1", rs.modulus_x1),
                 ("reslice_discreteness_x0", rs.discreteness_x0)]
        write_svg_polyline(man.path("slice_errors.svg"), series, title=f"{spec.kind}: per-slice error",
                           xlabel="x0", ylabel="relative L2 error")
    write_name_value_csv(man.path("report.csv"), rows)
    man.summary.update(dict(rows))
    return EXIT_OK


def _load_spectrum_matrix(cfg: dict):
    try:
        return load_matrix(cfg["matrix"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot load matrix: {exc}") from exc


def run_spectrum(A, man: RunManifest) -> int:
    with man.stage("eigenvalues"):
        spec = eigenvalues(A)
    write_table_csv(man.path("spectrum.csv"), ["index", "re", "im"],
                    [(i, z.real, z.imag) for i, z in enumerate(spec.eigenvalues)])
    man.summary.update({"dim": A.shape[0], "radius": spec.radius, "abscissa": spec.abscissa,
                        "norm": norm2(A)})
    for i, z in enumerate(spec.eigenvalues):
        print(f"{i}\t{z.real:.17g}\t{z.imag:+.17g}")
    return EXIT_OK


def run_selftest(cfg: dict, man: RunManifest | None, seed: int) -> int:
    results = run_checks(seed, mutation=cfg.get("mutation"))
    print(format_table(results))
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    if man is not None:
        write_table_csv(man.path("selftest.csv"), ["key", "passed", "detail"],
                        [(r.key, r.passed, r.detail) for r in results])
        man.summary["failed"] = [r.key for r in results if not r.passed]
        man.timings.update({r.key: r.seconds for r in results})
    return EXIT_OK if ok else EXIT_FAIL


def _add_common(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON config document")
    parser.add_argument("--out", default=default, help="output directory (created if missing)")
    parser.add_argument("--seed", type=int, default=default, help="seed for random presets")
    parser.add_argument("--override-illposed", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="evolve along directions flagged ill posed")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evolog", description="logarithmic generator representation toolkit")
    _add_common(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)
    subs = {
        "logrep": "generator representation report",
        "swap": "solve along x0 and x1 and compare",
        "trajectory": "regularized trajectory",
        "spectrum": "eigenvalues of a matrix file",
        "selftest": "run every acceptance check",
    }
    for name, help_text in subs.items():
        sp = sub.add_parser(name, help=help_text)
        # SUPPRESS keeps flags given before the subcommand from being reset
        _add_common(sp, suppress=True)
        if name == "spectrum":
            sp.add_argument("matrix", nargs="?", help="matrix JSON file (overrides config)")
        if name == "selftest":
            sp.add_argument("--mutation", choices=["quadrature_sign"], help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        extra = {}
        if args.command == "spectrum" and getattr(args, "matrix", None):
            extra["matrix"] = args.matrix
        cfg = load_config(args.command, args.config, extra)
        if args.command == "selftest" and getattr(args, "mutation", None):
            cfg["mutation"] = args.mutation
    except (ConfigError, jsonschema.ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    if args.command in ("logrep", "trajectory"):
        try:
            _family_config(cfg)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    matrix = None
    if args.command == "spectrum":
        try:
            matrix = _load_spectrum_matrix(cfg)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    if args.command == "swap":
        try:
            ProblemSpec(**{k: v for k, v in cfg.items() if k in ProblemSpec.__dataclass_fields__})
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG

    if args.out is None:
        if args.command != "selftest":
            print("config error: --out is required", file=sys.stderr)
            return EXIT_CONFIG
        return run_selftest(cfg, None, seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(args.command, cfg, seed, out)
    try:
        if args.command == "logrep":
            code = run_logrep(cfg, man, seed)
        elif args.command == "trajectory":
            code = run_trajectory(cfg, man, seed)
        elif args.command == "swap":
            code = run_swap(cfg, man, seed, args.override_illposed)
        elif args.command == "spectrum":
            code = run_spectrum(matrix, man)
        else:
            code = run_selftest(cfg, man, seed)
    except EvologError as exc:
        man.status = exc.name
        man.summary["error"] = str(exc)
        code = EXIT_NUMERIC
        print(f"{exc.name}: {exc}", file=sys.stderr)
    man.exit_code = code
    if code == EXIT_FAIL and man.status == "ok":
        man.status = "failed"
    man.write()
    return code


if __name__ == "__main__":
    sys.exit(main())
