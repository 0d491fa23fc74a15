"""Batch front end: declarative experiment configs, deterministic runs,
machine-readable results.

A config is one JSON or TOML document (the schema is the contract, not the
syntax).  Spectra and plot data land in CSV files, index and
non-propagation reports in JSON; every result body embeds the config hash
and certificate summaries, and identical configs produce byte-identical
bodies regardless of worker count.

Exit codes: 0 success, 1 numerical failure with diagnostic, 2 config error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError, InterfaceKitError
from .dynamics import (
    SpectralFilter,
    non_propagation_experiment,
    operator_hull_bounds,
    smooth_bump,
)
from .index import cone_decomposition, domain_wall_decomposition, fredholm_check
from .models import build, list_models
from .operators import TruncationBox
from .profiles import TranslationInvariantSystem, quasi_orbits
from .spectra import BlochGrid, bloch_symbols, essential_spectrum
from .truncation import convergence_study, in_gap_states, spectrum_truncated

TASKS = (
    "essential_spectrum",
    "truncation_spectrum",
    "convergence",
    "index",
    "domain_wall_decomposition",
    "cone_decomposition",
    "non_propagation",
)

_SECTION_KEYS = {
    "model": {"name", "params"},
    "spectra": {"grid_counts", "sphere_count", "fiber_count"},
    "truncation": {"half_width", "window", "locus"},
    "convergence": {"half_widths"},
    "index": {"half_width", "n_winding", "pairs"},
    "non_propagation": {"half_width", "eps", "max_time", "window", "target",
                        "radii_max", "budget", "samples_per_unit"},
    "output": {"prefix"},
}


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        return tomllib.loads(raw.decode())
    try:
        return json.loads(raw.decode())
    except json.JSONDecodeError:
        try:
            return tomllib.loads(raw.decode())
        except Exception as exc:
            raise ConfigError(f"{path} is neither valid JSON nor TOML: {exc}")


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(cfg) - ({"task"} | set(_SECTION_KEYS))
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    task = cfg.get("task")
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")
    model = cfg.get("model")
    if not isinstance(model, dict) or "name" not in model:
        raise ConfigError("config needs a model section with a name")
    for section, allowed in _SECTION_KEYS.items():
        if section in cfg:
            if not isinstance(cfg[section], dict):
                raise ConfigError(f"section '{section}' must be a mapping")
            bad = set(cfg[section]) - allowed
            if bad:
                raise ConfigError(
                    f"unknown keys in section '{section}': {sorted(bad)}"
                )
    if model["name"] not in list_models():
        raise ConfigError(
            f"unknown model '{model['name']}'; try the list-models command"
        )
    params = model.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("model.params must be a mapping")
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _to_plain(obj):
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_to_plain(payload), fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_csv(path: Path, header, rows, meta: dict) -> None:
    with open(path, "w", newline="") as fh:
        for k in sorted(meta):
            fh.write(f"# {k}: {meta[k]}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def _grid(cfg: dict, dimension: int) -> BlochGrid | None:
    counts = cfg.get("spectra", {}).get("grid_counts")
    if counts is None:
        return None
    counts = list(counts)
    if len(counts) == 1 and dimension > 1:
        counts = counts * dimension
    return BlochGrid(tuple(counts))


def _task_essential_spectrum(cfg, model, out, meta):
    sp_cfg = cfg.get("spectra", {})
    sphere = int(sp_cfg.get("sphere_count", 360))
    fiber = int(sp_cfg.get("fiber_count", 128))
    grid = _grid(cfg, model.operator.lattice.dimension)
    sp = essential_spectrum(model.operator, grid=grid, sphere_count=sphere,
                            fiber_count=fiber)
    meta["resolution"] = repr(float(sp.resolution))
    meta["kind"] = sp.kind
    hull_rows = [(sp.kind, float(a), float(b)) for a, b in sp.hull]
    _write_csv(out / "hull.csv", ["kind", "lower", "upper"], hull_rows, meta)

    # theta-resolved plot data per translation-invariant quasi-orbit
    rows = []
    systems = sorted((s for s in quasi_orbits(model.operator, sphere_count=sphere)
                      if isinstance(s, TranslationInvariantSystem)),
                     key=lambda s: s.label)
    grid0 = grid or BlochGrid.default(model.operator.lattice.dimension)
    angles = grid0.angles()
    for system in systems:
        if not system.symbol:
            continue
        symbols = bloch_symbols(system, angles)
        if system.hermitian:
            evals = np.linalg.eigvalsh(symbols)
        else:
            evals = np.linalg.eigvals(symbols)
        for i in range(len(angles)):
            for ev in np.atleast_1d(evals[i]):
                rows.append((system.label, float(angles[i][0]),
                             float(np.real(ev)), float(np.imag(ev))))
    _write_csv(out / "points.csv", ["orbit", "theta", "eig_re", "eig_im"],
               rows, meta)
    return {"hull": hull_rows}


def _task_truncation_spectrum(cfg, model, out, meta):
    tr = cfg.get("truncation", {})
    L = int(tr.get("half_width", 100))
    box = TruncationBox(L, model.operator.lattice.dimension)
    rep = spectrum_truncated(model.operator, box)
    rows = [(k, float(ev.real), float(ev.imag))
            for k, ev in enumerate(rep.eigenvalues)]
    meta["half_width"] = L
    _write_csv(out / "eigenvalues.csv", ["k", "eig_re", "eig_im"], rows, meta)
    payload = {"n_eigenvalues": len(rows), "half_width": L}
    window = tr.get("window")
    if window is not None:
        igs = in_gap_states(model.operator, box, tuple(window),
                            locus=tr.get("locus", "origin"))
        payload["in_gap"] = [{
            "eigenvalue_re": float(s.eigenvalue.real),
            "decay_rate": s.decay_rate,
            "participation_ratio": s.participation_ratio,
            "boundary_mass": s.boundary_mass,
            "artifact": s.is_boundary_artifact,
        } for s in igs.states]
        payload["warning"] = igs.warning
    return payload


def _task_convergence(cfg, model, out, meta):
    half_widths = cfg.get("convergence", {}).get("half_widths", [25, 50, 100])
    rep = convergence_study(model.operator, half_widths,
                            locus=cfg.get("truncation", {}).get("locus",
                                                                "origin"))
    rows = [(r.half_width, float(r.distance)) for r in rep.rows]
    meta["converged"] = rep.converged
    _write_csv(out / "convergence.csv", ["half_width", "hausdorff_distance"],
               rows, meta)
    return {"converged": rep.converged,
            "distances": {str(r.half_width): r.distance for r in rep.rows}}


def _index_pair_row(args) -> dict:
    name, params, pair, half_width, n_winding = args
    p = dict(params)
    p["m_left"], p["m_right"] = pair
    model = build(name, p)
    box = TruncationBox(half_width, model.operator.lattice.dimension)
    rep = domain_wall_decomposition(model.operator, model.chiral, box,
                                    n_winding=n_winding)
    row = rep.to_dict()
    row["m_left"], row["m_right"] = pair
    return row


def _task_index(cfg, model, out, meta, workers):
    idx = cfg.get("index", {})
    L = int(idx.get("half_width", 100))
    n_winding = int(idx.get("n_winding", 4096))
    pairs = idx.get("pairs")
    name = cfg["model"]["name"]
    params = cfg["model"].get("params", {})
    if pairs:
        jobs = [(name, params, tuple(p), L, n_winding) for p in pairs]
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(workers) as pool:
                rows = list(pool.map(_index_pair_row, jobs))
        else:
            rows = [_index_pair_row(j) for j in jobs]
        payload = {"rows": rows}
    else:
        box = TruncationBox(L, model.operator.lattice.dimension)
        if cfg["task"] == "cone_decomposition":
            rep = cone_decomposition(model.operator, model.chiral, box)
        else:
            rep = domain_wall_decomposition(model.operator, model.chiral, box,
                                            n_winding=n_winding)
        ok, cert = fredholm_check(model.operator, 0.0)
        payload = rep.to_dict()
        payload["fredholm_at_zero"] = {"flag": ok, "certificate": cert}
    return payload


def _cached_hull(cfg, op, box):
    """Spectral hull bounds, memoized in INTERFACEKIT_CACHE when set."""
    cache_dir = os.environ.get("INTERFACEKIT_CACHE")
    key = config_hash({"model": cfg["model"], "half_width": box.half_width})
    path = Path(cache_dir) / f"hull_{key}.json" if cache_dir else None
    if path is not None and path.exists():
        data = json.loads(path.read_text())
        return float(data["center"]), float(data["radius"])
    hull = operator_hull_bounds(op, box)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"center": hull[0], "radius": hull[1]}))
    return hull


def _task_non_propagation(cfg, model, out, meta):
    np_cfg = cfg.get("non_propagation", {})
    L = int(np_cfg.get("half_width", 400))
    eps = float(np_cfg.get("eps", 1e-2))
    max_time = float(np_cfg.get("max_time", 100.0))
    window = np_cfg.get("window")
    if window is None:
        raise ConfigError("non_propagation needs a spectral window [a, b]")
    target = np_cfg.get("target", "left")
    budget = float(np_cfg.get("budget", 1e-6))
    spu = int(np_cfg.get("samples_per_unit", 64))
    radii_max = int(np_cfg.get("radii_max", max(L // 2 - 1, 1)))

    op = model.operator
    box = TruncationBox(L, op.lattice.dimension)
    psi = box.basis_vector((0,) * op.lattice.dimension, 0, op.lattice.fiber_dim)
    hull = None
    if op.unitary:
        a, b = float(window[0]), float(window[1])
        wrapped = smooth_bump(a, b)
        filt = SpectralFilter.trigonometric(
            lambda ang: wrapped(np.mod(np.asarray(ang), 2.0 * np.pi)),
            support=(a, b), budget=budget)
    else:
        hull = _cached_hull(cfg, op, box)
        a, b = float(window[0]), float(window[1])
        filt = SpectralFilter.chebyshev(smooth_bump(a, b), support=(a, b),
                                        hull=hull, budget=budget)
    rep = non_propagation_experiment(
        op, filt, target, psi, box, eps=eps, max_time=max_time,
        samples_per_unit=spu, radii=range(0, radii_max + 1, 2), hull=hull)
    rows = sorted((float(r), float(m)) for r, m in rep.mass_by_radius.items())
    meta["filter_degree"] = filt.degree
    meta["filter_error"] = repr(float(filt.approximation_error))
    _write_csv(out / "region_mass.csv", ["radius", "max_mass"], rows, meta)
    payload = rep.to_dict()
    payload["filter"] = {"degree": filt.degree,
                         "approximation_error": filt.approximation_error,
                         "support": list(filt.support)}
    return payload


def run(config_path, out_dir=None, workers: int | None = None) -> int:
    """Execute one experiment config; returns the process exit code."""
    try:
        cfg = validate_config(load_config(config_path))
    except ConfigError as exc:
        print(json.dumps({"error": "config", "detail": str(exc)}),
              file=sys.stderr)
        return 2
    digest = config_hash(cfg)
    out = Path(out_dir) if out_dir else Path.cwd() / f"result_{digest}"
    out.mkdir(parents=True, exist_ok=True)
    workers = workers or os.cpu_count() or 1
    meta = {"config_hash": digest, "task": cfg["task"],
            "model": cfg["model"]["name"]}
    try:
        pairs_mode = (cfg["task"] in ("index", "domain_wall_decomposition")
                      and cfg.get("index", {}).get("pairs"))
        model = None if pairs_mode else build(cfg["model"]["name"],
                                              cfg["model"].get("params", {}))
        if cfg["task"] == "essential_spectrum":
            payload = _task_essential_spectrum(cfg, model, out, dict(meta))
        elif cfg["task"] == "truncation_spectrum":
            payload = _task_truncation_spectrum(cfg, model, out, dict(meta))
        elif cfg["task"] == "convergence":
            payload = _task_convergence(cfg, model, out, dict(meta))
        elif cfg["task"] in ("index", "domain_wall_decomposition",
                             "cone_decomposition"):
            payload = _task_index(cfg, model, out, dict(meta), workers)
        elif cfg["task"] == "non_propagation":
            payload = _task_non_propagation(cfg, model, out, dict(meta))
        else:  # pragma: no cover - guarded by validate_config
            raise ConfigError(f"unhandled task {cfg['task']}")
    except ConfigError as exc:
        print(json.dumps({"error": "config", "detail": str(exc)}),
              file=sys.stderr)
        return 2
    except (InterfaceKitError, np.linalg.LinAlgError) as exc:
        diagnostic = {"error": type(exc).__name__, "detail": str(exc),
                      "config_hash": digest}
        _write_json(out / "failure.json", diagnostic)
        print(json.dumps(diagnostic), file=sys.stderr)
        return 1
    payload["config_hash"] = digest
    payload["model"] = cfg["model"]
    payload["task"] = cfg["task"]
    _write_json(out / "result.json", payload)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="interfacekit",
        description="spectral and index experiments on lattice interface "
                    "operators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--workers", type=int,
                       default=int(os.environ.get("INTERFACEKIT_WORKERS", 0))
                       or None,
                       help="worker processes (default: available cores)")
    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config")
    sub.add_parser("list-models", help="print the model catalog")
    args = parser.parse_args(argv)

    if args.command == "list-models":
        for name in list_models():
            print(name)
        return 0
    if args.command == "validate":
        try:
            validate_config(load_config(args.config))
        except ConfigError as exc:
            print(json.dumps({"error": "config", "detail": str(exc)}),
                  file=sys.stderr)
            return 2
        print("ok")
        return 0
    return run(args.config, out_dir=args.out, workers=args.workers)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
