"""Command line entry point: ``threeregion <subcommand> [options]``.

Exit codes: 0 success, 1 configuration or input error, 2 numerical
failure, 3 a validation battery reported a failure.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import nonlocality as nl
from . import oracle
from .config import ExperimentConfig
from .errors import ConfigurationError, DomainError, NumericalError
from .pipeline import _base_amplitudes, emit, run_pipeline
from .rho import (GHZ_STATE, LIMIT_STATE, W_STATE, Rho8, assemble, dominance_limit,
                  filter as filter_rho, normalize, validate)
from .wick import expand, parse_string
from .windows import WindowSpec, local_frequency, sample_window

log = logging.getLogger("threeregion")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_BATTERY = 0, 1, 2, 3


def rho_to_dict(rho):
    return {"real": rho.matrix.real.tolist(), "imag": rho.matrix.imag.tolist(),
            "normalized": rho.normalized}


def rho_from_file(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
        m = np.asarray(d["real"], dtype=float) + 1j * np.asarray(d.get("imag", 0.0), dtype=float)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigurationError(f"cannot read density matrix from {path}: {exc}") from None
    return Rho8(m, normalized=bool(d.get("normalized", False)))


NAMED_STATES = {"ghz": GHZ_STATE, "w": W_STATE, "limit": LIMIT_STATE}


def named_state(name):
    if name == "mixed":
        return Rho8(np.eye(8) / 8.0, normalized=True)
    if name in NAMED_STATES:
        return Rho8.pure(NAMED_STATES[name])
    return rho_from_file(name)


def _write(args, text):
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigurationError(f"cannot write {args.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _dump(args, obj):
    _write(args, json.dumps(obj, indent=1, sort_keys=False) + "\n")


def _config(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.format is not None:
        updates["output.format"] = args.format
    return cfg.replace(**{k.replace(".", "__"): v for k, v in updates.items()}) if updates else cfg


# -- subcommands --------------------------------------------------------------

def cmd_amplitudes(args):
    cfg = _config(args)
    base = _base_amplitudes(cfg, cfg["geometry.L_over_T"])
    flat = base.to_dict()
    if cfg["output.format"] == "csv":
        keys = [k for k in flat if k not in ("imag", "meta")]
        _write(args, ",".join(keys) + "\n" + ",".join(repr(float(flat[k])) for k in keys) + "\n")
    else:
        _dump(args, flat)
    return EXIT_OK


def cmd_rho(args):
    if args.dominance is not None:
        rho, eta = dominance_limit(args.dominance)
    else:
        cfg = _config(args)
        rho = assemble(_base_amplitudes(cfg, cfg["geometry.L_over_T"]))
        if args.filter is not None:
            rho = filter_rho(rho, args.filter)
        if args.normalize:
            rho = normalize(rho)
    if args.table:
        _write(args, format_table(rho))
        return EXIT_OK
    out = rho_to_dict(rho)
    out["validation"] = validate(rho)
    _dump(args, out)
    return EXIT_OK


def format_table(rho, width=13):
    """Aligned plain-text rendering of an 8x8 matrix, one row per line."""
    labels = ("↓↓↓", "↓↓↑", "↓↑↓", "↓↑↑", "↑↓↓", "↑↓↑", "↑↑↓", "↑↑↑")
    def cell(z):
        return f"{z.real:.6g}{z.imag:+.2g}j" if z.imag else f"{z.real:.6g}"
    lines = ["".ljust(5) + "".join(l.rjust(width) for l in labels)]
    for lab, row in zip(labels, rho.matrix):
        lines.append(lab.ljust(5) + "".join(cell(z).rjust(width) for z in row))
    return "\n".join(lines) + "\n"


def cmd_filter(args):
    rho = filter_rho(rho_from_file(args.input), args.eta)
    if args.normalize:
        rho = normalize(rho)
    _dump(args, rho_to_dict(rho))
    return EXIT_OK


def cmd_svetlichny(args):
    rho = named_state(args.state)
    seed = 0 if args.seed is None else args.seed
    res = nl.maximize_svetlichny(rho, starts=args.starts, seed=seed, method=args.method)
    _dump(args, {"S_star": res.S_star, "hybrid_bound": nl.hybrid_bound(),
                 "settings": res.settings.as_list(), "local_optima": res.local_optima,
                 "converged": res.converged, "starts": res.starts, "seed": res.seed,
                 "warnings": res.warnings})
    return EXIT_OK


def cmd_lp_test(args):
    rho = named_state(args.state)
    seed = 0 if args.seed is None else args.seed
    res = nl.maximize_svetlichny(rho, starts=args.starts, seed=seed)
    beh = nl.behavior_from_rho(rho, res.settings)
    feasible, cert = nl.hybrid_lp_feasible(beh)
    _dump(args, {"S_star": res.S_star, "feasible": feasible, "certificate": cert.to_dict()})
    return EXIT_OK


def cmd_sweep(args):
    cfg = _config(args)
    records = run_pipeline(cfg)
    if not args.out and cfg["output.path"]:
        args.out = cfg["output.path"]
    _write(args, emit(records, cfg["output.format"]))
    return EXIT_NUMERICAL if any(r["error"] for r in records) else EXIT_OK


def cmd_oracle_check(args):
    spec = oracle.LatticeFieldSpec(n_max=args.n_max)
    report = oracle.validation_battery(spec)
    _dump(args, report)
    return EXIT_OK if report["pass"] else EXIT_BATTERY


def cmd_windows_dump(args):
    spec = WindowSpec(args.family, eps0=args.eps0, T=args.T, sigma=args.sigma,
                      N=args.N if args.family == "superoscillatory" else None,
                      a=args.a if args.family == "superoscillatory" else None)
    t, eps = sample_window(spec, args.samples)
    with np.errstate(invalid="ignore"):
        freq = [local_frequency(spec, x) for x in t]
    rows = ["t,eps,local_frequency"]
    rows += [f"{a!r},{b!r},{c!r}" for a, b, c in zip(t.tolist(), eps.tolist(), freq)]
    _write(args, "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_wick_expand(args):
    dets, sep, signs = args.string.partition("^")
    if not sep:
        raise ConfigurationError("expected a string such as BCBC^--++")
    ops = parse_string(dets, signs)
    _write(args, expand(ops) + "\n")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--seed", type=int, help="random seed (default from config, 0)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="threeregion",
                                description="Three-detector vacuum entanglement toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("amplitudes", parents=[common], help="second-order amplitude set")
    s.set_defaults(func=cmd_amplitudes)

    s = sub.add_parser("rho", parents=[common], help="assemble the detector density matrix")
    s.add_argument("--filter", type=float, metavar="ETA", help="apply the local filter")
    s.add_argument("--normalize", action="store_true")
    s.add_argument("--table", action="store_true", help="aligned text instead of JSON")
    s.add_argument("--dominance", type=float, metavar="S",
                   help="exchange-dominated limit with amplitude s (filtered, normalized)")
    s.set_defaults(func=cmd_rho)

    s = sub.add_parser("filter", parents=[common], help="filter a stored density matrix")
    s.add_argument("input", help="JSON file with 'real' and 'imag' 8x8 arrays")
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--normalize", action="store_true")
    s.set_defaults(func=cmd_filter)

    for name, func, help_ in (("svetlichny", cmd_svetlichny, "optimise the Svetlichny value"),
                              ("lp-test", cmd_lp_test, "hybrid-polytope membership test")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--state", default="limit",
                       help="ghz, w, limit, mixed, or a density-matrix JSON file")
        s.add_argument("--starts", type=int, default=64)
        if name == "svetlichny":
            s.add_argument("--method", choices=("coordinate", "bfgs"), default="coordinate")
        s.set_defaults(func=func)

    s = sub.add_parser("sweep", parents=[common], help="run the configured sweep")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("oracle-check", parents=[common], help="lattice validation battery")
    s.add_argument("--n-max", type=int, default=4)
    s.set_defaults(func=cmd_oracle_check)

    w = sub.add_parser("windows", help="window diagnostics").add_subparsers(
        dest="action", required=True)
    s = w.add_parser("dump", parents=[common], help="sample a window and its local frequency")
    s.add_argument("--family", default="superoscillatory",
                   choices=("gaussian", "raised-cosine", "superoscillatory"))
    s.add_argument("--eps0", type=float, default=1.0)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--sigma", type=float)
    s.add_argument("--N", type=int, default=10)
    s.add_argument("--a", type=float, default=4.0)
    s.add_argument("--samples", type=int, default=201)
    s.set_defaults(func=cmd_windows_dump)

    w = sub.add_parser("wick", help="Wick expansion").add_subparsers(dest="action", required=True)
    s = w.add_parser("expand", parents=[common], help="symbolic pairing sum")
    s.add_argument("string", help="detectors^signs, e.g. BCBC^--++")
    s.set_defaults(func=cmd_wick_expand)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
