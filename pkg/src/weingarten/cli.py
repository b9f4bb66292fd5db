"""Command-line entry point: ``weingarten {ineq,solve,counterexample,geomcheck}``.

Every run reads an optional YAML/JSON config, validates it against the
command's schema (unknown keys are rejected), fills in defaults and writes

* the command's data files (CSV tables, YAML summaries/reports),
* ``manifest.yaml``: the fully resolved config plus command and seed; it is
  itself a valid config, so ``--config out/manifest.yaml`` reproduces the run,
* ``timings.yaml``: wall-clock times and thread count, kept apart so that the
  other files are bit-identical across re-runs.

Exit status: 0 all checks passed, 1 a property failed, 2 usage/config error.
All files are written together once the run has finished.
"""
import argparse
import csv
import io
import math
import os
import sys
import time
from math import comb

import numpy as np
import yaml

from . import __version__
from .campaign import _plain, resolve_threads
from .errors import ConfigurationError, DomainError, PreconditionError, SearchFailure

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MAX_SEED = 2 ** 64 - 1


# ---------------------------------------------------------------------------
# serialization

def fmt(x):
    return "%.17g" % x


def _yaml_float(dumper, x):
    if math.isnan(x):
        s = ".nan"
    elif math.isinf(x):
        s = ".inf" if x > 0 else "-.inf"
    else:
        s = fmt(x)
        # YAML 1.1 floats need a dot
        if "." not in s:
            s = s.replace("e", ".0e") if "e" in s else s + ".0"
    return dumper.represent_scalar("tag:yaml.org,2002:float", s)


class _Dumper(yaml.SafeDumper):
    pass


_Dumper.add_representer(float, _yaml_float)


def dump_yaml(obj):
    return yaml.dump(_plain(obj), Dumper=_Dumper, sort_keys=False, default_flow_style=None, width=120)


def csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return fmt(float(v))
    return "" if v is None else str(v)


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}")
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config is not valid YAML/JSON: {exc}")
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a key-value document")
    return doc


# ---------------------------------------------------------------------------
# validation helpers

def _section(doc, defaults, where):
    doc = {} if doc is None else doc
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{where} must be a mapping")
    unknown = sorted(set(doc) - set(defaults))
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {where}: {', '.join(map(str, unknown))}")
    out = dict(defaults)
    out.update(doc)
    return out


def _int(v, where, lo=None):
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            raise ConfigurationError(f"{where} must be an integer, got {v!r}")
    v = int(v)
    if lo is not None and v < lo:
        raise ConfigurationError(f"{where} must be >= {lo}")
    return v


def _float(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigurationError(f"{where} must be a number, got {v!r}")
    return float(v)


def _floats(v, where, length=None):
    if not isinstance(v, (list, tuple)):
        raise ConfigurationError(f"{where} must be a list of numbers")
    out = [_float(x, where) for x in v]
    if length is not None and len(out) != length:
        raise ConfigurationError(f"{where} must have {length} entries")
    return out


def _ints(v, where, lo=None):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigurationError(f"{where} must be an integer or a non-empty list of integers")
    return [_int(x, where, lo) for x in v]


def _choice(v, options, where):
    if v not in options:
        raise ConfigurationError(f"{where} must be one of {', '.join(options)}; got {v!r}")
    return v


def _grid(doc, n, where="grid", n_theta=32):
    from .geometry import SphereGrid

    cfg = _section(doc, {"mode": "full2d" if n == 2 else "axisym", "n_theta": n_theta, "n_phi": None}, where)
    _choice(cfg["mode"], ("full2d", "axisym"), f"{where}.mode")
    cfg["n_theta"] = _int(cfg["n_theta"], f"{where}.n_theta", 8)
    if cfg["mode"] == "full2d":
        if n != 2:
            raise ConfigurationError("the full2d grid is only available for n = 2")
        cfg["n_phi"] = 2 * cfg["n_theta"] if cfg["n_phi"] is None else _int(cfg["n_phi"], f"{where}.n_phi", 8)
        if cfg["n_phi"] % 2:
            raise ConfigurationError(f"{where}.n_phi must be even")
        grid = SphereGrid.full2d(cfg["n_theta"], cfg["n_phi"])
    else:
        if cfg["n_phi"] not in (None, 1):
            raise ConfigurationError("axisymmetric grids have no phi resolution")
        cfg["n_phi"] = None
        grid = SphereGrid.axisym(n, cfg["n_theta"])
    return cfg, grid


# ---------------------------------------------------------------------------
# ineq

LEMMA_IDS = ("sigma_oracle", "newton_maclaurin", "lemma7", "lemma9", "lemma10", "lemma12", "lemma13",
             "lemma14", "quartic", "lemma17", "lemma18", "corollary19")
_ALIASES = {"sigma": "sigma_oracle", "oracle": "sigma_oracle", "nm": "newton_maclaurin",
            "corollary_19": "corollary19", "cor19": "corollary19", "19": "corollary19"}
_SEARCHED = ("lemma10", "lemma12", "lemma13", "lemma14", "lemma17", "lemma18", "corollary19")

# samples, dimensions, tolerance on the normalized min gap
INEQ_DEFAULTS = {
    "sigma_oracle": (10_000, list(range(2, 13)), 1e-12),
    "newton_maclaurin": (100_000, list(range(2, 9)), 1e-12),
    "lemma7": (100_000, list(range(2, 7)), 1e-9),
    "lemma9": (1000, list(range(2, 7)), 1e-5),
    "lemma10": (100_000, list(range(2, 7)), 0.0),
    "lemma12": (100_000, list(range(2, 7)), 1e-9),
    "lemma13": (100_000, list(range(2, 7)), 1e-9),
    "lemma14": (100_000, list(range(2, 7)), 1e-9),
    "quartic": (10_000, None, 1e-12),
    "lemma17": (100_000, list(range(2, 7)), 1e-9),
    "lemma18": (100_000, [3, 4, 5], 1e-9),
    "corollary19": (100_000, [3, 4, 5], 1e-9),
}


def canonical_lemma(v):
    s = str(v).strip().lower()
    if s in LEMMA_IDS:
        return s
    if s in _ALIASES:
        return _ALIASES[s]
    if s.isdigit() and "lemma" + s in LEMMA_IDS:
        return "lemma" + s
    raise ConfigurationError(f"invalid lemma id {v!r}; expected one of {', '.join(LEMMA_IDS)}")


def _per_lemma(value, lemmas, default, convert, where):
    """A scalar applies to every lemma; a mapping sets lemmas individually."""
    if isinstance(value, dict):
        keyed = {canonical_lemma(k): v for k, v in value.items()}
        extra = sorted(set(keyed) - set(lemmas))
        if extra:
            raise ConfigurationError(f"{where} names lemmas that were not requested: {', '.join(extra)}")
        return {lm: convert(keyed[lm], lm) if lm in keyed else default(lm) for lm in lemmas}
    if value is None:
        return {lm: default(lm) for lm in lemmas}
    return {lm: convert(value, lm) for lm in lemmas}


def resolve_ineq(doc):
    from .maxprinciple import DEFAULT_GRIDS

    cfg = _section(doc, {"lemmas": "all", "samples": None, "n": None, "tolerance": None, "grids": None},
                   "ineq config")
    raw = cfg["lemmas"]
    if raw == "all":
        lemmas = list(LEMMA_IDS)
    else:
        raw = raw if isinstance(raw, (list, tuple)) else [raw]
        if not raw:
            raise ConfigurationError("lemmas must not be empty")
        lemmas = []
        for v in raw:
            lm = canonical_lemma(v)
            if lm not in lemmas:
                lemmas.append(lm)

    def dims(v, lm):
        if lm == "quartic":
            return None
        out = _ints(v, f"n[{lm}]", 2)
        if lm in ("lemma18", "corollary19") and min(out) < 2:
            raise ConfigurationError("lemma18/corollary19 need n >= 2")
        if lm == "sigma_oracle" and max(out) > 16:
            raise ConfigurationError("sigma_oracle enumerates subsets: n <= 16")
        return out

    def grid(v, lm):
        if lm not in _SEARCHED:
            raise ConfigurationError(f"{lm} has no constant grid")
        if not isinstance(v, (list, tuple)) or not v:
            raise ConfigurationError(f"grids[{lm}] must be a non-empty list of constant tuples")
        width = len(DEFAULT_GRIDS[lm][0])
        return [_floats(t if isinstance(t, (list, tuple)) else [t], f"grids[{lm}]", width) for t in v]

    out = {"lemmas": lemmas}
    out["samples"] = _per_lemma(cfg["samples"], lemmas, lambda lm: INEQ_DEFAULTS[lm][0],
                                lambda v, lm: _int(v, f"samples[{lm}]", 1), "samples")
    out["n"] = _per_lemma(cfg["n"], lemmas, lambda lm: INEQ_DEFAULTS[lm][1], dims, "n")
    out["tolerance"] = _per_lemma(cfg["tolerance"], lemmas, lambda lm: INEQ_DEFAULTS[lm][2],
                                  lambda v, lm: abs(_float(v, f"tolerance[{lm}]")), "tolerance")
    searched = [lm for lm in lemmas if lm in _SEARCHED]
    out["grids"] = _per_lemma(cfg["grids"], searched,
                              lambda lm: [list(t) for t in DEFAULT_GRIDS[lm]], grid, "grids")
    return out


def _run_lemma(lm, cfg, seed, threads):
    """Returns (report dict, passed)."""
    from . import maxprinciple as mp
    from . import symfunc

    samples, dims, tol = cfg["samples"][lm], cfg["n"][lm], cfg["tolerance"][lm]
    if lm == "sigma_oracle":
        rep = symfunc.campaign_sigma_oracle(seed, samples, dims, threads, tol)
    elif lm == "newton_maclaurin":
        rep = symfunc.campaign_newton_maclaurin(seed, samples, dims, threads, tol)
    elif lm == "lemma7":
        rep = symfunc.campaign_lemma7(seed, samples, dims, threads, tol)
    elif lm == "lemma9":
        rep = symfunc.campaign_lemma9(seed, samples, dims, tol)
    elif lm == "quartic":
        rep = mp.quartic_check(samples, tol)
    elif lm == "lemma18":
        grid = [tuple(g) for g in cfg["grids"][lm]]
        rep = mp.search_lemma18(samples, seed, tuple(dims), grid=grid, threads=threads, tolerance=tol)
    elif lm == "corollary19":
        grid = [tuple(g) for g in cfg["grids"][lm]]
        lemma18_grid = mp.DEFAULT_GRIDS["lemma18"]
        rep = mp.search_corollary19(samples, seed, tuple(dims), grid=grid, threads=threads, tolerance=tol)
        rep.extra["lemma18_grid"] = [list(g) for g in lemma18_grid]
    else:
        res = mp.constant_search(lm, samples, cfg["grids"][lm], seed, n_values=tuple(dims),
                                 threads=threads, tolerance=tol)
        out = {"lemma": lm, "search": {"constants": list(res.constants), "passed": res.passed,
                                       "tried": [{"constants": list(c), "min_gap": g} for c, g in res.tried]}}
        out.update(res.report.to_dict())
        return out, res.passed
    out = {"lemma": lm}
    out.update(rep.to_dict())
    return out, bool(rep.passed)


def cmd_ineq(cfg, seed, threads):
    files = {}
    timings = {}
    ok = True
    lines = []
    for lm in cfg["lemmas"]:
        t0 = time.perf_counter()
        report, passed = _run_lemma(lm, cfg, seed, threads)
        timings[lm] = time.perf_counter() - t0
        files[f"report_{lm}.yaml"] = dump_yaml(report)
        ok = ok and passed
        lines.append(f"{lm}: {'pass' if passed else 'FAIL'} min_gap={fmt(report['min_gap'])}")
    return files, (EXIT_OK if ok else EXIT_FAIL), timings, lines


# ---------------------------------------------------------------------------
# solve

F_PARAMS = {
    "constant": {"c": None},
    "power": {"c": None, "p": None},
    "anisotropic": {"c": None, "p": None, "alpha": 0.2, "beta": 0.1},
    "manufactured": {"A": None, "b": None, "c0": 1.0, "p": None},
    "tabulated": {"values": None, "file": None, "p": 0.0},
}


def _resolve_f(doc, n, k):
    if doc is None:
        doc = {"name": "constant"}
    if not isinstance(doc, dict) or "name" not in doc:
        raise ConfigurationError("f must be a mapping with a 'name'")
    name = _choice(doc["name"], tuple(F_PARAMS), "f.name")
    cfg = _section({key: v for key, v in doc.items() if key != "name"}, F_PARAMS[name], f"f ({name})")
    C = float(comb(n, k))
    if name in ("constant", "power", "anisotropic"):
        cfg["c"] = C if cfg["c"] is None else _float(cfg["c"], "f.c")
        if cfg["c"] <= 0:
            raise ConfigurationError("f.c must be positive")
    if name in ("power", "anisotropic", "manufactured"):
        cfg["p"] = -2.0 * k if cfg["p"] is None else _float(cfg["p"], "f.p")
    if name == "anisotropic":
        cfg["alpha"] = _float(cfg["alpha"], "f.alpha")
        cfg["beta"] = _float(cfg["beta"], "f.beta")
    if name == "manufactured":
        dim = n + 1
        if cfg["A"] is None:
            A = np.zeros((dim, dim))
            A[-1, -1] = 0.1
            cfg["A"] = A.tolist()
        if not isinstance(cfg["A"], (list, tuple)) or len(cfg["A"]) != dim:
            raise ConfigurationError(f"f.A must be a {dim}x{dim} matrix")
        cfg["A"] = [_floats(r, "f.A", dim) for r in cfg["A"]]
        cfg["b"] = [0.0] * dim if cfg["b"] is None else _floats(cfg["b"], "f.b", dim)
        cfg["c0"] = _float(cfg["c0"], "f.c0")
    if name == "tabulated":
        cfg["p"] = _float(cfg["p"], "f.p")
        if (cfg["values"] is None) == (cfg["file"] is None):
            raise ConfigurationError("tabulated f needs exactly one of 'values' or 'file'")
        if cfg["values"] is not None:
            cfg["values"] = _floats(cfg["values"], "f.values")
        else:
            cfg["file"] = str(cfg["file"])
    return dict({"name": name}, **cfg)


def _read_tabulated(path):
    """One value per node in grid order: a single-column CSV with header ``f``, or .npy."""
    if path.endswith(".npy"):
        return np.load(path).ravel()
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["f"]:
        raise ConfigurationError("tabulated f file must be a CSV with the single header 'f'")
    return np.array([float(r[0]) for r in rows[1:]])


def build_f(fcfg, grid, k):
    from . import shapes, solver

    name = fcfg["name"]
    if name == "constant":
        return solver.constant_f(fcfg["c"]), None
    if name == "power":
        return solver.power_f(fcfg["c"], fcfg["p"]), None
    if name == "anisotropic":
        return solver.anisotropic_f(fcfg["c"], fcfg["p"], fcfg["alpha"], fcfg["beta"]), None
    if name == "manufactured":
        F = shapes.quadratic(fcfg["A"], fcfg["b"], fcfg["c0"])
        return solver.manufactured_f(grid, F, k, fcfg["p"])
    vals = np.asarray(fcfg["values"], dtype=float) if fcfg["values"] is not None else _read_tabulated(fcfg["file"])
    if vals.size != grid.size:
        raise ConfigurationError(f"tabulated f has {vals.size} values, the grid has {grid.size} nodes")
    return solver.tabulated_f(grid, vals, fcfg["p"]), None


def resolve_solve(doc):
    cfg = _section(doc, {"n": None, "k": None, "grid": None, "f": None, "homotopy": None, "newton": None,
                         "uniqueness_probe": None, "outputs": None}, "solve config")
    for key in ("n", "k"):
        if cfg[key] is None:
            raise ConfigurationError(f"solve config is missing required key {key!r}")
    n = _int(cfg["n"], "n", 2)
    k = _int(cfg["k"], "k", 1)
    if k > n:
        raise ConfigurationError("need 1 <= k <= n")
    grid_cfg, _ = _grid(cfg["grid"], n)
    hom = _section(cfg["homotopy"], {"variant": "kth_root", "steps": 4, "r1": 0.5, "r2": 2.0,
                                     "epsilon": None, "max_halvings": 10}, "homotopy")
    _choice(hom["variant"], ("kth_root", "scalar_k2"), "homotopy.variant")
    if hom["variant"] == "scalar_k2" and k != 2:
        raise ConfigurationError("the scalar_k2 homotopy needs k = 2")
    hom["steps"] = _int(hom["steps"], "homotopy.steps", 1)
    hom["max_halvings"] = _int(hom["max_halvings"], "homotopy.max_halvings", 0)
    hom["r1"] = _float(hom["r1"], "homotopy.r1")
    hom["r2"] = _float(hom["r2"], "homotopy.r2")
    if not (0 < hom["r1"] < 1 < hom["r2"]):
        raise ConfigurationError("homotopy radii must satisfy 0 < r1 < 1 < r2")
    if hom["epsilon"] is None:
        from .solver import epsilon_policy
        hom["epsilon"] = epsilon_policy(k, hom["r1"], hom["r2"])[0]
    hom["epsilon"] = _float(hom["epsilon"], "homotopy.epsilon")
    newton = _section(cfg["newton"], {"rtol": 1e-8, "max_iter": 50, "backtrack": 0.5, "min_step": 2.0 ** -20,
                                      "margin": 1e-10, "jacobian": "fd"}, "newton")
    for key in ("rtol", "backtrack", "min_step", "margin"):
        newton[key] = _float(newton[key], f"newton.{key}")
    newton["max_iter"] = _int(newton["max_iter"], "newton.max_iter", 1)
    _choice(newton["jacobian"], ("fd", "chain"), "newton.jacobian")
    probe = _section(cfg["uniqueness_probe"], {"enabled": True, "amplitudes": [0.02, -0.02]}, "uniqueness_probe")
    probe["enabled"] = bool(probe["enabled"])
    probe["amplitudes"] = _floats(probe["amplitudes"], "uniqueness_probe.amplitudes")
    outputs = _section(cfg["outputs"], {"monitor": "monitor.csv", "field": "field.csv", "summary": "summary.yaml"},
                       "outputs")
    for key, v in outputs.items():
        if not isinstance(v, str) or not v or os.path.isabs(v) or os.sep in v:
            raise ConfigurationError(f"outputs.{key} must be a plain file name")
    return {"n": n, "k": k, "grid": grid_cfg, "f": _resolve_f(cfg["f"], n, k), "homotopy": hom,
            "newton": newton, "uniqueness_probe": probe, "outputs": outputs}


MONITOR_COLUMNS = ["t", "iterations", "residual", "kappa_max", "kappa_min", "min_u", "rho_min", "rho_max"]


def cmd_solve(cfg, seed, threads):
    from dataclasses import asdict

    from .geometry import estimate_monitor, radial_geometry, write_field_csv
    from .solver import (HomotopySchedule, NewtonConfig, barrier_check, continuation_solve, residual,
                         uniqueness_probe)

    n, k = cfg["n"], cfg["k"]
    _, grid = _grid(cfg["grid"], n)
    f, rho_exact = build_f(cfg["f"], grid, k)
    hom = cfg["homotopy"]
    schedule = HomotopySchedule(list(np.linspace(0.0, 1.0, hom["steps"] + 1)), hom["epsilon"], k, n,
                                hom["variant"])
    ncfg = NewtonConfig(**cfg["newton"])
    timings = {}
    t0 = time.perf_counter()
    run = continuation_solve(f, schedule, grid, ncfg, max_halvings=hom["max_halvings"])
    timings["continuation"] = time.perf_counter() - t0
    ok = run.status in ("converged", "step_halved")
    r1, r2 = hom["r1"], hom["r2"]
    steps = [asdict(s) for s in run.steps]
    confined = all(r1 <= s["rho_min"] and s["rho_max"] <= r2 for s in steps)
    summary = {"status": run.status, "halvings": run.halvings, "message": run.message,
               "accepted_steps": len(steps), "admissibility_violations": 0,
               "epsilon": hom["epsilon"], "confined_to_annulus": confined}
    geom = radial_geometry(run.rho)
    mon = estimate_monitor(geom)
    summary["final"] = {"t": steps[-1]["t"] if steps else None,
                        "residual": float(np.max(np.abs(residual(run.rho, f, k).values))) if ok else None,
                        "kappa_max": mon["kappa_max"], "kappa_min": mon["kappa_min"], "min_u": mon["min_u"],
                        "max_grad_rho": mon["max_grad_rho"], "rho_min": float(run.rho.values.min()),
                        "rho_max": float(run.rho.values.max()),
                        "gamma_k": bool(mon["gamma_k_flags"][k])}
    try:
        summary["barrier"] = barrier_check(f, k, r1, r2, grid)
    except (DomainError, ConfigurationError) as exc:
        summary["barrier"] = {"error": str(exc)}
    if rho_exact is not None:
        summary["manufactured_max_error"] = float(np.max(np.abs(run.rho.values - rho_exact)))
    if ok and cfg["uniqueness_probe"]["enabled"]:
        t0 = time.perf_counter()
        probe = uniqueness_probe(f, k, run.rho, ncfg, cfg["uniqueness_probe"]["amplitudes"], seed=seed)
        timings["uniqueness_probe"] = time.perf_counter() - t0
        summary["uniqueness_probe"] = probe
    out = cfg["outputs"]
    buf = io.StringIO()
    write_field_csv(buf, geom)
    files = {out["monitor"]: csv_text(MONITOR_COLUMNS, steps), out["field"]: buf.getvalue(),
             out["summary"]: dump_yaml(summary)}
    lines = [f"status: {run.status}", f"kappa_max: {fmt(mon['kappa_max'])}",
             f"rho range: [{fmt(summary['final']['rho_min'])}, {fmt(summary['final']['rho_max'])}]"]
    return files, (EXIT_OK if ok else EXIT_FAIL), timings, lines


# ---------------------------------------------------------------------------
# counterexample

def resolve_counterexample(doc):
    cfg = _section(doc, {"n": 2, "degree": 2, "amplitudes": None, "grid": None, "t_grid": None,
                         "pairs": None}, "counterexample config")
    n = _int(cfg["n"], "n", 2)
    degree = _int(cfg["degree"], "degree", 2)
    amps = cfg["amplitudes"]
    if amps is None or isinstance(amps, dict):
        amps = _section(amps, {"step": 0.05, "top": 2.0}, "amplitudes")
        amps = {"step": _float(amps["step"], "amplitudes.step"), "top": _float(amps["top"], "amplitudes.top")}
        if amps["step"] <= 0 or amps["top"] < amps["step"]:
            raise ConfigurationError("amplitude grid needs 0 < step <= top")
    else:
        amps = _floats(amps if isinstance(amps, (list, tuple)) else [amps], "amplitudes")
        if not amps:
            raise ConfigurationError("amplitudes must not be empty")
    g = {} if cfg["grid"] is None else cfg["grid"]
    if not isinstance(g, dict):
        raise ConfigurationError("grid must be a mapping")
    g = dict(g)
    g.setdefault("mode", "axisym")
    g.setdefault("n_theta", 256 if g["mode"] == "axisym" else 64)
    grid_cfg, _ = _grid(g, n)
    tg = cfg["t_grid"]
    if tg is None or isinstance(tg, dict):
        tg = _section(tg, {"depth": 4.0, "per_decade": 2}, "t_grid")
        tg = {"depth": _float(tg["depth"], "t_grid.depth"), "per_decade": _int(tg["per_decade"], "t_grid.per_decade", 1)}
        if tg["depth"] < 1:
            raise ConfigurationError("t_grid.depth must be >= 1")
    else:
        tg = _floats(tg, "t_grid")
    pairs = cfg["pairs"] if cfg["pairs"] is not None else [[2, 1]]
    if not isinstance(pairs, (list, tuple)) or not pairs:
        raise ConfigurationError("pairs must be a list of [k, l]")
    pairs = [[_int(p, "pairs") for p in pair] for pair in pairs]
    for kk, ll in pairs:
        if not (1 <= ll < kk <= n):
            raise ConfigurationError(f"quotient pair ({kk}, {ll}) needs 1 <= l < k <= n")
    return {"n": n, "degree": degree, "amplitudes": amps, "grid": grid_cfg, "t_grid": tg, "pairs": pairs}


def cmd_counterexample(cfg, seed, threads):
    from . import counterexample as ce

    n = cfg["n"]
    _, grid = _grid(cfg["grid"], n)
    amps = cfg["amplitudes"]
    if isinstance(amps, dict):
        amps = ce.default_amplitudes(amps["step"], amps["top"])
    timings = {}
    t0 = time.perf_counter()
    try:
        seed_fn = ce.seed_search(n, cfg["degree"], amps, grid, threads=threads)
    except SearchFailure as exc:
        timings["seed_search"] = time.perf_counter() - t0
        summary = {"status": "search_failed", "message": str(exc), "closest": exc.closest}
        return {"certificate.yaml": dump_yaml(summary)}, EXIT_FAIL, timings, [f"search failed: {exc}"]
    timings["seed_search"] = time.perf_counter() - t0
    cert = seed_fn.certificate
    dt = ce.degeneracy_time(seed_fn)
    tg = cfg["t_grid"]
    t_grid = ce.default_t_grid(dt.closed_form, tg["depth"], tg["per_decade"]) if isinstance(tg, dict) else tg
    t0 = time.perf_counter()
    status = "complete"
    message = ""
    rows = []
    try:
        rows = ce.blowup_curve(seed_fn, t_grid, [tuple(p) for p in cfg["pairs"]], threads=threads)
    except (DomainError, ConfigurationError, PreconditionError) as exc:
        status, message = "incomplete", str(exc)
    timings["blowup_curve"] = time.perf_counter() - t0
    summary = {"status": status, "message": message, "amplitude": seed_fn.amplitude, "degree": seed_fn.degree,
               "certificate": cert.to_dict(), "t0_closed_form": dt.closed_form, "t0_bisection": dt.t0,
               "t0_difference": abs(dt.t0 - dt.closed_form), "bisection_iterations": dt.iterations,
               "t_grid": list(t_grid)}
    if rows:
        summary["kappa_max_last"] = rows[-1]["kappa_max"]
        summary["c0_min"] = min(r["c0"] for r in rows)
        summary["max_product_deviation"] = max(abs(r["kappa_mu_product"] - 1.0) for r in rows)
    if grid.mode == "axisym" and rows:
        summary["radial_crosscheck_half_t0"] = ce.quotient_identity_radial(seed_fn, 0.5 * dt.closed_form)
    files = {"certificate.yaml": dump_yaml(summary)}
    if rows:
        files["blowup.csv"] = csv_text(list(rows[0]), rows)
    lines = [f"certificate: amplitude={fmt(seed_fn.amplitude)} mu_min={fmt(cert.mu_min)}",
             f"t0 = {fmt(dt.closed_form)} (bisection {fmt(dt.t0)})",
             f"blow-up table: {status}" + (f", last kappa_max={fmt(rows[-1]['kappa_max'])}" if rows else "")]
    return files, (EXIT_OK if status == "complete" else EXIT_FAIL), timings, lines


# ---------------------------------------------------------------------------
# geomcheck

def resolve_geomcheck(doc):
    from .geometry import STUDY_CASES

    cfg = _section(doc, {"case": "sphere", "n": 2, "grid": None, "refinements": 4, "radius": 1.0,
                         "center": None, "semi_axes": [1.0, 2.0], "min_order": 1.9,
                         "sphere_tolerance": 1e-12}, "geomcheck config")
    _choice(cfg["case"], STUDY_CASES, "case")
    n = _int(cfg["n"], "n", 2)
    grid_cfg, _ = _grid(cfg["grid"], n, n_theta=16)
    refinements = _int(cfg["refinements"], "refinements", 1)
    if cfg["case"] != "sphere" and refinements < 2:
        raise ConfigurationError("an order needs at least 2 refinements")
    if cfg["center"] is None:
        center = [0.0] * (n + 1)
        if grid_cfg["mode"] == "full2d":
            center[1:] = [0.2, 0.3]
        else:
            center[-1] = 0.3
    else:
        center = _floats(cfg["center"], "center", n + 1)
    return {"case": cfg["case"], "n": n, "grid": grid_cfg, "refinements": refinements,
            "radius": _float(cfg["radius"], "radius"), "center": center,
            "semi_axes": _floats(cfg["semi_axes"], "semi_axes", 2),
            "min_order": _float(cfg["min_order"], "min_order"),
            "sphere_tolerance": _float(cfg["sphere_tolerance"], "sphere_tolerance")}


def geomcheck_verdict(case, rows, min_order, sphere_tolerance):
    """Sphere rows must be exact; otherwise every observed order must reach ``min_order``."""
    errors = [k for k in rows[0] if k not in ("n_theta", "n_phi") and not k.endswith("_order")]
    if case == "sphere":
        return all(row[e] <= sphere_tolerance for row in rows for e in errors)
    orders = [row[e + "_order"] for row in rows[1:] for e in errors]
    return all(np.isfinite(o) and o >= min_order for o in orders)


def cmd_geomcheck(cfg, seed, threads):
    from .geometry import convergence_study

    _, grid = _grid(cfg["grid"], cfg["n"])
    t0 = time.perf_counter()
    rows = convergence_study(cfg["case"], grid, cfg["refinements"], cfg["radius"], cfg["center"],
                             cfg["semi_axes"])
    timings = {"study": time.perf_counter() - t0}
    ok = geomcheck_verdict(cfg["case"], rows, cfg["min_order"], cfg["sphere_tolerance"])
    for row in rows:
        row["pass"] = ok
    files = {"convergence.csv": csv_text(list(rows[0]), rows)}
    lines = [", ".join(f"{k}={_cell(v)}" for k, v in row.items()) for row in rows]
    return files, (EXIT_OK if ok else EXIT_FAIL), timings, lines


# ---------------------------------------------------------------------------
# driver

COMMANDS = {
    "ineq": (resolve_ineq, cmd_ineq, "randomized inequality campaigns and constant searches"),
    "solve": (resolve_solve, cmd_solve, "continuation solve of sigma_k(kappa) = f on a sphere grid"),
    "counterexample": (resolve_counterexample, cmd_counterexample, "curvature blow-up with bounded data"),
    "geomcheck": (resolve_geomcheck, cmd_geomcheck, "convergence studies of the discrete geometry"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="weingarten", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, _, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="YAML or JSON config document (a previous manifest works too)")
        p.add_argument("--seed", type=int, default=None, help="master seed, 0 <= seed < 2^64 (default 0)")
        p.add_argument("--out", default="weingarten-out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = all cores")
        p.add_argument("--quiet", action="store_true", help="suppress the console summary")
    return parser


def prepare(command, doc, seed_flag):
    """Split command/seed off the document and resolve the rest; returns (seed, config)."""
    doc = dict(doc)
    cmd = doc.pop("command", command)
    if cmd != command:
        raise ConfigurationError(f"config was written for {cmd!r}, not {command!r}")
    seed = doc.pop("seed", 0)
    if seed_flag is not None:
        seed = seed_flag
    seed = _int(seed, "seed", 0)
    if seed > MAX_SEED:
        raise ConfigurationError("seed must fit in 64 bits")
    resolve = COMMANDS[command][0]
    return seed, resolve(doc)


def write_outputs(out_dir, files):
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            fh.write(text)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    threads = resolve_threads(args.threads)
    try:
        seed, cfg = prepare(args.command, load_config(args.config), args.seed)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    run = COMMANDS[args.command][1]
    start = time.perf_counter()
    try:
        files, code, timings, lines = run(cfg, seed, threads)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = dict({"command": args.command, "seed": seed}, **cfg)
    files["manifest.yaml"] = dump_yaml(manifest)
    files["timings.yaml"] = dump_yaml({"command": args.command, "threads": threads, "version": __version__,
                                       "total_seconds": time.perf_counter() - start, "parts": timings})
    write_outputs(args.out, files)
    if not args.quiet:
        for line in lines:
            print(line)
        print(f"exit {code}: outputs in {args.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
