"""Command line front end: ``mcchaos {table,solve,compare,coefficients}``.

Configuration is an INI file; every key can be overridden on the command
line as ``--key=value`` or ``--section.key=value``.  Exit status is 0 on
success, 1 for configuration or usage errors and 2 for numerical failures.
Failures print one line to stderr starting with ``mcchaos-error: <kind>:``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
import time
from pathlib import Path


from . import __version__
from . import experiments as ex
from .errors import (
    AssemblyError,
    EvaluationError,
    InvalidArgument,
    McChaosError,
    NumericalError,
    SolverError,
)
from .random_field import draw_samples, load_samples

log = logging.getLogger("mcchaos")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
NUMERICAL_ERRORS = (NumericalError, SolverError, AssemblyError, EvaluationError)


class ConfigError(McChaosError):
    kind = "config"


def _int_list(s):
    return tuple(int(v) for v in s.replace(",", " ").split())


def _str_list(s):
    return tuple(v for v in s.replace(",", " ").split())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s):
    return None if s.strip().lower() in ("", "none") else int(s)


def _opt_str(s):
    return None if s.strip().lower() in ("", "none") else s.strip()


# section -> key -> (parser, default)
SCHEMA = {
    "experiment": {
        "case": (str, "case1"),
        "n_elements": (int, 100),
        "degrees": (_int_list, (1, 2, 3, 4, 5, 6)),
        "sample_counts": (_int_list, (100, 500, 1000, 5000, 10000)),
        "seeds": (_int_list, (1,)),
        "degree_convention": (_opt_str, None),
        "norms": (_str_list, ("h1", "l2")),
        "plot": (_bool, True),
    },
    "solve": {
        "case": (str, "case1"),
        "n_elements": (int, 100),
        "degree": (int, 2),
        "samples": (int, 500),
        "seed": (int, 7),
    },
    "compare": {
        "case": (str, "case1"),
        "n_elements": (int, 100),
        "collocation_nodes": (int, 5),
        "collocation_basis": (str, "hermite"),
        "mc_samples": (int, 5),
        "chaos_degree": (int, 4),
        "chaos_samples": (int, 1000),
        "seed": (int, 1),
    },
    "coefficients": {
        "case": (str, "case1"),
        "n_elements": (int, 100),
        "degree": (int, 4),
        "sample_counts": (_int_list, (100, 1000, 10000)),
        "seed": (int, 1),
        "plot": (_bool, True),
    },
    "solver": {
        "tol": (float, 1e-10),
        "max_iter": (_opt_int, None),
        "preconditioner": (_opt_str, None),
        "low_memory": (_bool, False),
        "orthonormal": (_bool, True),
    },
}

COMMAND_SECTION = {"table": "experiment", "solve": "solve", "compare": "compare",
                   "coefficients": "coefficients"}


def load_config(path, command: str, overrides: list[str]) -> dict:
    """Resolve ``{section: {key: value}}`` for the command's section and ``[solver]``."""
    section = COMMAND_SECTION[command]
    raw = configparser.ConfigParser()
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}".replace("\n", " ")) from None
    text = {s: dict(raw[s]) if raw.has_section(s) else {} for s in (section, "solver")}
    for s in (section, "solver"):
        for key in text[s]:
            if key not in SCHEMA[s]:
                raise ConfigError(f"unknown field '{s}.{key}'")
    for item in overrides:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"unrecognised argument {item!r}; overrides look like --key=value")
        key, value = item[2:].split("=", 1)
        key = key.replace("-", "_")
        if "." in key:
            s, key = key.split(".", 1)
        else:
            s = section if key in SCHEMA[section] else "solver"
        if s not in (section, "solver") or key not in SCHEMA[s]:
            raise ConfigError(f"unknown field '{key}' for command {command}")
        text[s][key] = value
    resolved = {}
    for s in (section, "solver"):
        resolved[s] = {}
        for key, (parse, default) in SCHEMA[s].items():
            if key in text[s]:
                try:
                    resolved[s][key] = parse(text[s][key])
                except ValueError as exc:
                    raise ConfigError(f"field '{s}.{key}': {exc}") from None
            else:
                resolved[s][key] = default
    return resolved


def _check_common(cfg: dict, section: str):
    c = cfg[section]
    if c["case"] not in ex.CASES:
        raise ConfigError(f"field '{section}.case': unknown case {c['case']!r}")
    if c["n_elements"] < 2:
        raise ConfigError(f"field '{section}.n_elements': must be >= 2")
    s = cfg["solver"]
    if not 0 < s["tol"] < 1:
        raise ConfigError("field 'solver.tol': must lie in (0, 1)")
    if s["preconditioner"] not in (None, "none", "mean"):
        raise ConfigError("field 'solver.preconditioner': expected none or mean")


def _write_manifest(out: Path, command: str, cfg: dict, extra: dict):
    manifest = {"tool": "mcchaos", "version": __version__, "command": command,
                "config": {s: {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
                           for s, d in cfg.items()}}
    manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n",
                                       encoding="utf-8")


def cmd_table(args, cfg) -> int:
    e, s = cfg["experiment"], cfg["solver"]
    _check_common(cfg, "experiment")
    seeds = tuple(args.seed) if args.seed else e["seeds"]
    try:
        config = ex.ExperimentConfig(
            case=e["case"], n_elements=e["n_elements"], degrees=e["degrees"],
            sample_counts=e["sample_counts"], seeds=seeds, degree_convention=e["degree_convention"],
            norms=e["norms"], tol=s["tol"], max_iter=s["max_iter"],
            preconditioner=s["preconditioner"], low_memory=args.low_memory or s["low_memory"],
            samples_file=args.samples_file, orthonormal=s["orthonormal"])
    except InvalidArgument as exc:
        raise ConfigError(f"field experiment.{exc}") from None
    samples = load_samples(args.samples_file) if args.samples_file else None
    if samples is not None and samples.s_count < max(config.sample_counts):
        raise ConfigError(f"samples file has {samples.s_count} rows, "
                          f"sample_counts needs {max(config.sample_counts)}")
    report = ex.run_table(config, samples=samples)
    out = args.out
    report.write_csv(out / "errors.csv")
    for norm in config.norms:
        report.write_table_csv(out / f"table_{norm}.csv", norm)
    if e["plot"]:
        from .plotting import plot_error_convergence

        for norm in config.norms:
            plot_error_convergence(report, out / f"convergence_{norm}.svg", norm)
    cells = [{"n": c.n, "S": c.S, "seed": c.seed, "degree": c.degree, "seconds": round(c.seconds, 4),
              "converged": c.converged, "gram_condition": c.gram_condition, "failure": c.failure}
             for c in report.cells]
    _write_manifest(out, "table", cfg, {"seeds": list(seeds), "degree_convention": config.convention,
                                        "samples_file": args.samples_file, "cells": cells})
    failed = [c for c in report.cells if c.failure]
    for c in failed:
        print(f"mcchaos-error: cell: n={c.n} S={c.S} seed={c.seed}: {c.failure}", file=sys.stderr)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_solve(args, cfg) -> int:
    c, s = cfg["solve"], cfg["solver"]
    _check_common(cfg, "solve")
    if c["degree"] < 0:
        raise ConfigError("field 'solve.degree': must be >= 0")
    if c["samples"] < 1:
        raise ConfigError("field 'solve.samples': must be >= 1")
    case = ex.get_case(c["case"])
    seed = args.seed[0] if args.seed else c["seed"]
    if args.samples_file:
        samples = load_samples(args.samples_file)
        if samples.n_vars != case.n_vars:
            raise ConfigError(f"samples file has {samples.n_vars} variables, case needs {case.n_vars}")
        seed = None
    else:
        samples = draw_samples(seed, c["samples"], case.n_vars)
    t0 = time.perf_counter()
    sol = ex.solve_case(case, c["n_elements"], c["degree"], samples, tol=s["tol"],
                        max_iter=s["max_iter"], preconditioner=s["preconditioner"],
                        low_memory=args.low_memory or s["low_memory"],
                        orthonormal=s["orthonormal"])
    rep = sol.report
    extra = {"seed": seed, "samples": samples.s_count, "iterations": rep.iterations,
             "relative_residual": rep.final_relative_residual, "converged": rep.converged,
             "gram_condition": rep.gram_condition, "seconds": round(time.perf_counter() - t0, 4),
             "basis_indices": [list(a) for a in sol.basis.indices]}
    if not rep.converged:
        _write_manifest(args.out, "solve", cfg, extra | {"failure": rep.message})
        print(f"mcchaos-error: {rep.breakdown_reason}: {rep.message}", file=sys.stderr)
        return EXIT_NUMERICAL
    with open(args.out / "solution.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"] + [f"coef_{j}" for j in range(sol.basis.size)])
        for i, xi in enumerate(sol.mesh.interior_nodes):
            w.writerow([repr(float(xi))] + [repr(float(v)) for v in sol.coefficients[:, i]])
    _write_manifest(args.out, "solve", cfg, extra)
    return EXIT_OK


def cmd_compare(args, cfg) -> int:
    c, s = cfg["compare"], cfg["solver"]
    _check_common(cfg, "compare")
    for key in ("collocation_nodes", "mc_samples", "chaos_samples"):
        if c[key] < 1:
            raise ConfigError(f"field 'compare.{key}': must be >= 1")
    if c["chaos_degree"] < 0:
        raise ConfigError("field 'compare.chaos_degree': must be >= 0")
    if c["collocation_basis"] != "hermite":
        raise ConfigError(f"field 'compare.collocation_basis': collocation needs the Hermite "
                          f"basis, got {c['collocation_basis']!r}")
    seed = args.seed[0] if args.seed else c["seed"]
    rows = ex.compare_modes(c["case"], c["n_elements"], c["collocation_nodes"], c["mc_samples"],
                            c["chaos_degree"], c["chaos_samples"], seed, tol=s["tol"],
                            collocation_basis=c["collocation_basis"])
    ex.write_compare_csv(rows, args.out / "compare.csv")
    _write_manifest(args.out, "compare", cfg, {"seed": seed})
    return EXIT_OK


def cmd_coefficients(args, cfg) -> int:
    c, s = cfg["coefficients"], cfg["solver"]
    _check_common(cfg, "coefficients")
    seed = args.seed[0] if args.seed else c["seed"]
    try:
        curves = ex.coefficient_convergence(c["case"], c["degree"], c["sample_counts"], seed,
                                            n_elements=c["n_elements"], tol=s["tol"],
                                            preconditioner=s["preconditioner"])
    except InvalidArgument as exc:
        raise ConfigError(f"field 'coefficients.degree': {exc}") from None
    for S in c["sample_counts"]:
        curves.write_csv(args.out / f"coefficients_S{S}.csv", S)
    if c["plot"]:
        from .plotting import plot_coefficients

        plot_coefficients(curves, args.out / "coefficients.svg")
    _write_manifest(args.out, "coefficients", cfg,
                    {"seed": seed, "iterations": {str(S): r.iterations for S, r in curves.reports.items()}})
    return EXIT_OK


COMMANDS = {"table": cmd_table, "solve": cmd_solve, "compare": cmd_compare,
            "coefficients": cmd_coefficients}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcchaos", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("table", "error tables against the exact mean"),
                        ("solve", "solve one chaos system and write its coefficients"),
                        ("compare", "Monte Carlo vs collocation vs MC-assembled chaos"),
                        ("coefficients", "first four chaos coefficients for growing S")):
        p = sub.add_parser(name, help=help_, allow_abbrev=False)
        p.add_argument("--config", type=Path, help="INI configuration file")
        p.add_argument("--seed", type=int, action="append", help="RNG seed (repeatable)")
        p.add_argument("--samples-file", type=Path, help="CSV of samples (y1,...,yN); bypasses the RNG")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--low-memory", action="store_true",
                       help="re-assemble per-sample matrices on every operator application")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        cfg = load_config(args.config, args.command, extra)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, cfg)
    except NUMERICAL_ERRORS as exc:
        print(f"mcchaos-error: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except McChaosError as exc:
        print(f"mcchaos-error: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"mcchaos-error: io: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
