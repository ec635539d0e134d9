"""Sweep orchestration and record output."""

from concurrent.futures import ThreadPoolExecutor
import csv
import io
import json
import logging
import math
import os

import numpy as np

from .correlator import amplitude_set
from .errors import ConfigurationError, ThreeRegionError
from .nonlocality import (CUTS, behavior_from_rho, hybrid_bound, hybrid_lp_feasible,
                          maximize_svetlichny, negativity)
from .rho import (assemble, default_eta, filter, normalize, synthetic_dominance_set,
                  to_w_state, validate)
from .wick import derived_amplitudes

log = logging.getLogger(__name__)

_PAIR_COLUMNS = ["d_AA_mp", "d_BB_mp", "d_CC_mp",
                 "d_AB_pp", "d_BC_pp", "d_CA_pp",
                 "d_AB_mp", "d_BC_mp", "d_CA_mp",
                 "x_AB_pp", "x_BC_pp", "x_CA_pp"]
COLUMNS = (["L_over_T", "eps0_scale", "eta"] + _PAIR_COLUMNS
           + ["C", "trace", "hermiticity_residual", "min_eig", "purity",
              "neg_A_BC", "neg_B_CA", "neg_C_AB", "fid_W",
              "S_star", "hybrid_bound", "lp_feasible", "lp_certificate_value",
              "psd_projected", "error"])
_NEG_COLUMN = {"A|BC": "neg_A_BC", "B|CA": "neg_B_CA", "C|AB": "neg_C_AB"}


def _base_amplitudes(cfg, ratio):
    if cfg["mode"] == "dominance":
        return synthetic_dominance_set(cfg["dominance.s"])
    return amplitude_set(cfg.field(), cfg.detectors(ratio))


def _resolve_eta(cfg, base, eta):
    if eta is not None:
        return float(eta)
    setting = cfg["filter.eta"]
    if setting == "none":
        return None
    if setting == "auto":
        e = default_eta(base)
        return e if e > 0 else None
    return float(setting)


def analyse_point(cfg, base, ratio, scale, eta):
    """One record for amplitudes ``base`` scaled by ``scale``."""
    rec = dict.fromkeys(COLUMNS)
    rec["L_over_T"] = None if cfg["mode"] == "dominance" else ratio
    rec["eps0_scale"] = scale
    amps = base.scaled(scale) if scale != 1.0 else base
    flat = amps.to_dict()
    for col in _PAIR_COLUMNS:
        rec[col] = flat[col]
    rec["C"] = amps.C

    rho = assemble(amps, derived_amplitudes(amps))
    eta = _resolve_eta(cfg, amps, eta)
    rec["eta"] = eta
    if eta is not None:
        rho = filter(rho, eta)
    rec["trace"] = rho.trace
    if cfg["filter.normalize"]:
        rho = normalize(rho)
    report = validate(rho)
    rec["hermiticity_residual"] = rho.meta.get("hermiticity_residual", report["hermiticity_residual"])
    rec["min_eig"] = report["min_eigenvalue"]
    rec["purity"] = report["purity"]
    if not rho.normalized:
        return rec

    if cfg["analysis.negativity"]:
        for cut in CUTS:
            rec[_NEG_COLUMN[cut]] = negativity(rho, cut)
    rec["fid_W"] = to_w_state(rho)[1]
    projected = report["min_eigenvalue"] < -1e-9
    rec["psd_projected"] = projected
    if projected and not cfg["analysis.psd_projection"]:
        log.warning("state is not positive semidefinite; skipping Bell analysis")
        return rec
    if cfg["analysis.svetlichny"]:
        res = maximize_svetlichny(rho, starts=cfg["analysis.starts"], seed=cfg["seed"],
                                  allow_projection=True)
        rec["S_star"] = res.S_star
        rec["hybrid_bound"] = hybrid_bound()
        if cfg["analysis.lp_test"]:
            beh = behavior_from_rho(rho, res.settings, allow_projection=True)
            feasible, cert = hybrid_lp_feasible(beh)
            rec["lp_feasible"] = feasible
            rec["lp_certificate_value"] = None if feasible else cert.value
    return rec


def _safe(fn, *args):
    try:
        return fn(*args), None
    except (ThreeRegionError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def run_pipeline(cfg):
    """Records for every sweep point, in config order.

    Amplitude sets are computed once per distinct L/T.  A failure at one
    point is stored in that record's ``error`` field; other points proceed.
    """
    points = cfg.sweep_points()
    ratios = sorted({p[0] for p in points}, key=[p[0] for p in points].index)
    workers = cfg["workers"]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        bases = dict(zip(ratios, pool.map(lambda r: _safe(_base_amplitudes, cfg, r), ratios)))

        def run(point):
            ratio, scale, eta = point
            base, err = bases[ratio]
            if err is None:
                rec, err = _safe(analyse_point, cfg, base, ratio, scale, eta)
                if rec is not None:
                    return rec
            rec = dict.fromkeys(COLUMNS)
            rec.update(L_over_T=ratio, eps0_scale=scale, eta=eta, error=err)
            log.error("sweep point L/T=%s eps0=%s eta=%s failed: %s", ratio, scale, eta, err)
            return rec

        return list(pool.map(run, points))


def _clean(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def records_to_json(records):
    rows = [{c: _clean(r.get(c)) for c in COLUMNS} for r in records]
    return json.dumps({"columns": COLUMNS, "records": rows}, indent=1) + "\n"


def records_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        row = []
        for c in COLUMNS:
            v = _clean(r.get(c))
            row.append("" if v is None else ("true" if v is True else "false" if v is False
                                             else repr(v) if isinstance(v, float) else v))
        w.writerow(row)
    return buf.getvalue()


def emit(records, fmt, path=None):
    """Serialize records as ``json`` or ``csv``; write to ``path`` if given."""
    if fmt == "json":
        text = records_to_json(records)
    elif fmt == "csv":
        text = records_to_csv(records)
    else:
        raise ConfigurationError(f"unknown output format {fmt!r}")
    if path is not None:
        try:
            with open(os.fspath(path), "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigurationError(f"cannot write {path}: {exc.strerror}") from None
    return text
