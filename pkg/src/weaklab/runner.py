"""Execute scenarios and write CSV/JSON reports."""

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .classical import OBSERVABLES, classical_shift_experiment
from .core import PointerGrid, has_zero_current, normalized_current
from .errors import WeakLabError
from .fitting import fit_slope
from .gallery import (CLASSICAL_OBJECT_PRESETS, CLASSICAL_POINTER_PRESETS, OBJECT_PRESETS,
                      POINTER_PRESETS, default_grid_for, pointer_std)
from .quantum import MeasurementSetup, evolve_exact, measure_shift, product_joint, first_order_unchecked
from .scenario import parse_complex_matrix

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"

CSV_COLUMNS = [
    "engine", "pointer", "epsilon", "outcome", "cw_re", "cw_im", "predicted_shift",
    "measured_shift", "abs_err", "remainder_norm", "weakness_ratio", "current_max",
    "marginal_drift", "flags",
]


class CellError(WeakLabError):
    """A sweep cell failed; carries its (epsilon, pointer, outcome) coordinates."""

    def __init__(self, eps, pointer, outcome, cause):
        self.coordinates = {"epsilon": eps, "pointer": pointer, "outcome": outcome}
        super().__init__(f"cell epsilon={eps!r} pointer={pointer!r} outcome={outcome!r}: {cause}")


def _flag_string(flags):
    return ";".join(f"{k}={int(bool(v))}" for k, v in flags.items())


# --- quantum ----------------------------------------------------------------

def _quantum_object(spec):
    from .core import DensityMatrix, spectral_decompose

    if spec.preset is not None:
        p = OBJECT_PRESETS[spec.preset]
        return p.observable, p.postselection, p.object_state
    basis = parse_complex_matrix(spec.postselection)
    return (spectral_decompose(parse_complex_matrix(spec.observable)), basis,
            DensityMatrix(parse_complex_matrix(spec.state)))


def _quantum_grid(scenario, pointer):
    if scenario.grid.length is not None:
        return PointerGrid(scenario.grid.n_points, scenario.grid.length)
    return default_grid_for(pointer.preset, n_points=scenario.grid.n_points, **pointer.params)


def _quantum_cell(scenario, pointer, eps):
    obs, basis, rho_s = _quantum_object(scenario.object)
    grid = _quantum_grid(scenario, pointer)
    state = POINTER_PRESETS[pointer.preset].build(grid=grid, **pointer.params)
    setup = MeasurementSetup(obs, basis, rho_s, state, eps)
    outcomes = scenario.sweep.outcomes
    if outcomes is None:
        probs = setup.postselection_probabilities()
        outcomes = [i for i in range(setup.n_outcomes) if probs[i] > setup.tol.postselection_threshold]
    exact = evolve_exact(setup)
    baseline = product_joint(setup)
    joint_error = None
    if has_zero_current(state) and eps > 0:
        first = first_order_unchecked(setup).table
        joint_error = float(np.max(np.abs(exact.table - first)))
    records = []
    for d in outcomes:
        try:
            r = measure_shift(setup, d, exact=exact, baseline=baseline)
        except WeakLabError as exc:
            raise CellError(eps, pointer.name, d, exc) from exc
        records.append({
            "engine": "quantum", "pointer": pointer.name, "epsilon": eps, "outcome": d,
            "cw_re": r.weak_value.real, "cw_im": r.weak_value.imag,
            "predicted_shift": r.predicted_shift, "measured_shift": r.measured_shift,
            "abs_err": r.abs_err, "remainder_norm": r.remainder_norm,
            "weakness_ratio": r.weakness_ratio, "current_max": r.current_max,
            "marginal_drift": r.marginal_drift, "flags": _flag_string(r.flags()),
            "_joint_error": joint_error, "_lagrange_xi0": r.lagrange_xi0,
            "_lagrange_xi_eps": r.lagrange_xi_eps,
            "_zero_current": r.zero_current,
        })
    return records


# --- classical --------------------------------------------------------------

def _classical_cell(scenario, pointer, eps):
    obj = CLASSICAL_OBJECT_PRESETS[scenario.object.preset]
    density, _ = CLASSICAL_POINTER_PRESETS[pointer.preset]
    c = OBSERVABLES[scenario.object.observable]()
    ens = scenario.ensemble
    edges = np.linspace(obj.mean_x - ens.q_range * obj.std_x, obj.mean_x + ens.q_range * obj.std_x,
                        ens.n_bins + 1)
    try:
        exp = classical_shift_experiment(obj, density, c, eps, edges, n_samples=ens.n_samples,
                                         seed=scenario.seed, substeps=ens.substeps,
                                         require_zero_current=False)
    except WeakLabError as exc:
        raise CellError(eps, pointer.name, None, exc) from exc
    zero_current = exp.current.vanishing
    bin_index = np.searchsorted(edges, exp.centers) - 1
    records = []
    for i, b in enumerate(bin_index):
        pred = float(exp.predicted[i])
        agree = bool(abs(exp.measured[i] - pred) <= 3 * exp.measured_se[i]) if eps else True
        flags = {"zero_current": zero_current,
                 "weak_coupling": exp.weakness_ratio[i] < 0.1,
                 "within_3se": agree,
                 "marginal_ok": exp.marginal_exact or exp.marginal_pvalue >= 0.01}
        records.append({
            "engine": "classical", "pointer": pointer.name, "epsilon": eps, "outcome": int(b),
            "cw_re": float(exp.weak_values[i]), "cw_im": 0.0,
            "predicted_shift": pred, "measured_shift": float(exp.measured[i]),
            "abs_err": abs(float(exp.measured[i]) - pred), "remainder_norm": float("nan"),
            "weakness_ratio": float(exp.weakness_ratio[i]), "current_max": exp.current.max_abs_mean,
            "marginal_drift": float(exp.marginal_drift[b]), "flags": _flag_string(flags),
            "_measured_se": float(exp.measured_se[i]), "_bin_center": float(exp.centers[i]),
            "_marginal_pvalue": exp.marginal_pvalue, "_zero_current": zero_current,
        })
    return records


def _cell(args):
    scenario, pointer, eps = args
    fn = _quantum_cell if scenario.engine == "quantum" else _classical_cell
    t0 = time.perf_counter()
    try:
        records = fn(scenario, pointer, eps)
    except CellError:
        raise
    except Exception as exc:  # noqa: BLE001 -- tag any failure with its coordinates
        raise CellError(eps, pointer.name, None, exc) from exc
    return records, time.perf_counter() - t0


def _fits(scenario, records):
    fits = []
    groups = {}
    for r in records:
        groups.setdefault((r["pointer"], r["outcome"]), []).append(r)
    for (pointer, outcome), rows in groups.items():
        rows = sorted(rows, key=lambda r: r["epsilon"])
        series = {"abs_err": [(r["epsilon"], r["abs_err"]) for r in rows]}
        if scenario.engine == "quantum":
            series["joint_error"] = [(r["epsilon"], r["_joint_error"]) for r in rows]
            series["marginal_drift"] = [(r["epsilon"], r["marginal_drift"]) for r in rows]
        else:
            series["measured_shift"] = [(r["epsilon"], abs(r["measured_shift"])) for r in rows]
        for quantity, pts in series.items():
            pts = [(e, v) for e, v in pts if e > 0 and v is not None and v > 0 and np.isfinite(v)]
            if len(pts) < 4:
                continue
            fit = fit_slope(*zip(*pts))
            fits.append({"pointer": pointer, "outcome": outcome, "quantity": quantity,
                         "n_points": len(pts), **fit.as_dict()})
    return fits


def run_scenario(scenario, workers=1):
    """Run every (pointer, epsilon) cell and assemble the report in a fixed order."""
    cells = [(scenario, p, eps) for p in scenario.pointers for eps in scenario.sweep.values()]
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, cells))
    else:
        results = [_cell(c) for c in cells]
    records = [r for rows, _ in results for r in rows]
    return {
        "schema_version": SCHEMA_VERSION,
        "weaklab_version": __version__,
        "scenario": scenario.model_dump(mode="json"),
        "records": records,
        "fits": _fits(scenario, records),
        "timings": {"total_s": time.perf_counter() - t0,
                    "cells_s": [dt for _, dt in results]},
    }


def physics_flags_ok(report):
    return all(r["_zero_current"] for r in report["records"])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report["records"]:
            w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])


def _jsonable(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k.lstrip("_"): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _jsonable(obj.item())
    return obj


def write_report(report, out_dir, stem):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    write_csv(report, csv_path)
    json_path.write_text(json.dumps(_jsonable(report), indent=2) + "\n")
    return csv_path, json_path


# --- gallery audit ----------------------------------------------------------

def gallery_audit(n_points=1024):
    """Purity, spread and current verdict for every pointer preset (quantum and classical)."""
    rows = []
    for name, preset in POINTER_PRESETS.items():
        state = preset.build(grid=default_grid_for(name, n_points=n_points))
        verdict = has_zero_current(state)
        rows.append({"engine": "quantum", "pointer": name, "purity": state.purity,
                     "std": pointer_std(state), "current_max": normalized_current(state),
                     "zero_current": verdict, "expected_zero_current": preset.expected_zero_current,
                     "ok": verdict == preset.expected_zero_current})
    from .classical import PhaseEnsemble, classical_current_check
    for name, (density, expected) in CLASSICAL_POINTER_PRESETS.items():
        ens = PhaseEnsemble.product(CLASSICAL_OBJECT_PRESETS["standard"], density, 200_000, seed=0)
        sd = float(np.std(ens.Q))
        check = classical_current_check(ens, np.linspace(ens.Q.mean() - 3 * sd, ens.Q.mean() + 3 * sd, 13))
        rows.append({"engine": "classical", "pointer": name, "purity": float("nan"), "std": sd,
                     "current_max": check.max_abs_mean, "zero_current": check.vanishing,
                     "expected_zero_current": expected, "ok": check.vanishing == expected})
    return rows
