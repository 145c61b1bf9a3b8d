"""Command-line front end.

Commands
--------
evolve        one walk; writes ``series.csv``, ``manifest.json`` and optionally ``snapshots.json``
sweep         cartesian product over fields, lattices and models, run in a process pool
fit           power-law fit of a ``series.csv``
export-map    density snapshots joined with dual-tessellation patches
lattice-info  vertex/edge summary, or the full lattice as JSON

All quantities are in QW units (a = hbar = q = 1); times are ``Jt`` with the
hopping amplitude of the chosen lattice. Exit codes: 0 success, 2 invalid
configuration, 3 numerical guard failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import (
    ObservableSeries,
    fit_power_law,
    localized_state,
    simulate,
    time_grid,
)
from .errors import LatticeError, ModelError, NumericalGuardError, UnsupportedStencil
from .hamiltonian import GaugeField, MagneticLengthWarning, ModelKind, build_hamiltonian
from .lattice import LatticeKind, LatticeSpec, build_lattice, center_vertex, dual_patches, patches_to_dict
from .operators import hopping_from_js

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
MAX_SWEEP_RUNS = 10_000

SERIES_FILE = "series.csv"
MANIFEST_FILE = "manifest.json"
SNAPSHOT_FILE = "snapshots.json"
INDEX_FILE = "index.json"


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    lattice: str = "square"
    nj: int = 31
    nk: int = 31
    model: str = "free"
    field: float = 0.0
    js: float = 1.0
    t_max: float = 6.0
    steps: int = 121
    start: str = "center"
    snapshots: tuple = ()
    seed: int | None = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["snapshots"] = list(self.snapshots)
        return d


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _parse_floats(text: str, name: str) -> tuple:
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    try:
        return tuple(float(s) for s in items)
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _coerce(name: str, value):
    try:
        if name in ("nj", "nk", "steps"):
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if name == "seed":
            return None if value in (None, "", "none") else int(value)
        if name in ("field", "js", "t_max"):
            return float(value)
        if name == "snapshots":
            return value if isinstance(value, tuple) else _parse_floats(value, "snapshots")
        return str(value).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot interpret {value!r}") from None


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def parse_start(spec: LatticeSpec, start: str):
    if start == "center":
        n_j, n_k = spec.n_j, spec.n_k
        if n_j % 2 == 0 or n_k % 2 == 0:
            raise ConfigError(f"start: 'center' needs odd --nj/--nk, got {n_j}x{n_k}")
        return (n_j + 1) // 2, (n_k + 1) // 2
    try:
        j, k = (int(s) for s in start.split(","))
    except ValueError:
        raise ConfigError(f"start: expected 'j,k' or 'center', got {start!r}") from None
    if not (1 <= j <= spec.n_j and 1 <= k <= spec.n_k):
        raise ConfigError(f"start: vertex ({j}, {k}) outside {spec.n_j}x{spec.n_k} lattice")
    return j, k


def validate(cfg: RunConfig, walk: bool = True) -> RunConfig:
    """Raise ``ConfigError`` for the first invalid field.

    ``walk=False`` checks only the lattice fields.
    """
    try:
        kind = LatticeKind(cfg.lattice)
    except ValueError:
        raise ConfigError(f"lattice: unknown kind {cfg.lattice!r}") from None
    try:
        model = ModelKind(cfg.model)
    except ValueError:
        raise ConfigError(f"model: unknown model {cfg.model!r}") from None
    try:
        spec = LatticeSpec(kind, cfg.nj, cfg.nk)
    except LatticeError as exc:
        raise ConfigError(f"nj/nk: {exc}") from None
    if not walk:
        return cfg
    if not np.isfinite(cfg.field) or cfg.field < 0:
        raise ConfigError(f"field: modulus must be >= 0, got {cfg.field}")
    if model.needs_regular_lattice and kind.semiregular:
        raise ConfigError(f"model: {model.value} is not defined on the {kind.value} lattice")
    if model is not ModelKind.FREE and (cfg.nj % 2 == 0 or cfg.nk % 2 == 0):
        raise ConfigError("nj/nk: magnetic models centre the gauge on the central vertex and need odd dimensions")
    if not (np.isfinite(cfg.js) and cfg.js > 0):
        raise ConfigError(f"js: must be positive, got {cfg.js}")
    if not (np.isfinite(cfg.t_max) and cfg.t_max > 0):
        raise ConfigError(f"t_max: must be positive, got {cfg.t_max}")
    if cfg.steps < 2:
        raise ConfigError(f"steps: need at least 2 samples, got {cfg.steps}")
    parse_start(spec, cfg.start)
    step = cfg.t_max / (cfg.steps - 1)
    for t in cfg.snapshots:
        if not (-step / 2 <= t <= cfg.t_max + step / 2):
            raise ConfigError(f"snapshots: Jt={t} outside the time grid [0, {cfg.t_max}]")
    return cfg


def resolve_config(args: argparse.Namespace, walk: bool = True) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for name in _FIELD_TYPES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in values.items()})
    return validate(cfg, walk)


@dataclass
class RunResult:
    config: RunConfig
    series: ObservableSeries
    J: float
    start: tuple = field(default=(0, 0))

    def manifest(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "J": self.J,
            "start": list(self.start),
            "jt_boundary": self.series.jt_boundary,
            "units": "QW (a = hbar = q = 1); time column is Jt",
        }


def run(cfg: RunConfig) -> RunResult:
    """Build the lattice and Hamiltonian for ``cfg`` and collect observables."""
    kind = LatticeKind(cfg.lattice)
    lattice = build_lattice(LatticeSpec(kind, cfg.nj, cfg.nk))
    start = parse_start(lattice.spec, cfg.start)
    hopping = hopping_from_js(kind, cfg.js)
    model = ModelKind(cfg.model)
    gauge = None
    if model is ModelKind.FREE and cfg.field > 1:
        warnings.warn(f"magnetic length below lattice constant (B={cfg.field:g} > 1)", MagneticLengthWarning)
    if model is not ModelKind.FREE:
        c = center_vertex(lattice)
        gauge = GaugeField(cfg.field, tuple(lattice.coords[c.position]))
    H = build_hamiltonian(lattice, model, hopping, gauge)
    series = simulate(lattice, H, localized_state(lattice, start), time_grid(cfg.t_max, cfg.steps), cfg.snapshots)
    return RunResult(cfg, series, hopping.J, start)


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_evolve(args) -> int:
    cfg = resolve_config(args)
    result = run(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / SERIES_FILE).write_text(result.series.to_csv())
    _write_json(out / MANIFEST_FILE, result.manifest())
    if cfg.snapshots:
        (out / SNAPSHOT_FILE).write_text(result.series.snapshots_json() + "\n")
    jb = result.series.jt_boundary
    print(f"wrote {out / SERIES_FILE} ({len(result.series.times)} samples, boundary contact at Jt={jb})")
    return EXIT_OK


def _sweep_worker(cfg: RunConfig):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MagneticLengthWarning)
        result = run(cfg)
    return result.series.to_csv(), result.manifest()


def _run_name(i: int, cfg: RunConfig) -> str:
    return f"run_{i:04d}_{cfg.lattice}_{cfg.model}_B{cfg.field:g}.csv"


def cmd_sweep(args) -> int:
    fields = _parse_floats(args.field, "field") if args.field is not None else None
    lattices = [s.strip() for s in args.lattice.split(",") if s.strip()] if args.lattice is not None else None
    models = [s.strip() for s in args.model.split(",") if s.strip()] if args.model is not None else None
    for name, axis in (("field", fields), ("lattice", lattices), ("model", models)):
        if axis is not None and not axis:
            raise ConfigError(f"{name}: empty sweep axis")
    # first value of each axis stands in for the base config
    base_args = argparse.Namespace(**vars(args))
    base_args.field = fields[0] if fields else None
    base_args.lattice = lattices[0] if lattices else None
    base_args.model = models[0] if models else None
    base = resolve_config(base_args)
    axes = (fields or (base.field,), lattices or (base.lattice,), models or (base.model,))
    n_runs = len(axes[0]) * len(axes[1]) * len(axes[2])
    if n_runs > MAX_SWEEP_RUNS:
        raise ConfigError(f"sweep: {n_runs} runs exceed the limit of {MAX_SWEEP_RUNS}")
    configs = [validate(dataclasses.replace(base, field=B, lattice=L, model=M)) for L, M, B in itertools.product(axes[1], axes[2], axes[0])]
    for B in sorted({c.field for c in configs}):
        if B > 1:
            _warn_field(B)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    workers = args.workers or min(len(configs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, configs))
    else:
        results = [_sweep_worker(c) for c in configs]

    runs = []
    for i, (cfg, (csv_text, manifest)) in enumerate(zip(configs, results)):
        name = _run_name(i, cfg)
        (out / name).write_text(csv_text)
        runs.append({"file": name, "lattice": cfg.lattice, "model": cfg.model, "field": cfg.field, **manifest})
    _write_json(out / INDEX_FILE, {"base": base.to_dict(), "runs": runs})
    print(f"wrote {len(runs)} runs and {out / INDEX_FILE}")
    return EXIT_OK


def _read_manifest(csv_path: Path):
    candidate = csv_path.parent / MANIFEST_FILE
    return json.loads(candidate.read_text()) if candidate.exists() else None


def cmd_fit(args) -> int:
    path = Path(args.csv)
    try:
        series = ObservableSeries.from_csv(path.read_text())
    except OSError as exc:
        raise ConfigError(f"csv: cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(f"csv: {exc}") from None
    manifest = _read_manifest(path)
    if manifest is not None:
        series.jt_boundary = manifest.get("jt_boundary")
    window = None
    if args.window:
        w = _parse_floats(args.window, "window")
        if len(w) != 2:
            raise ConfigError(f"window: expected 'lo,hi', got {args.window!r}")
        window = w
    try:
        result = fit_power_law(series, args.component, window)
    except ValueError as exc:
        raise ConfigError(f"window: {exc}") from None
    print(f"A = {result.A:.10g}")
    print(f"p = {result.p:.10g}")
    print(f"rms_residual = {result.rms_residual:.3e}")
    print(f"window = [{result.window[0]:g}, {result.window[1]:g}] ({result.n_samples} samples)")
    out = Path(args.out) if args.out else path.with_name(path.stem + "_fit.json")
    payload = {"csv": str(path), "component": args.component, **result.to_dict()}
    _write_json(out, payload)
    return EXIT_OK


def cmd_export_map(args) -> int:
    run_dir = Path(args.run)
    try:
        manifest = json.loads((run_dir / MANIFEST_FILE).read_text())
        snaps = json.loads((run_dir / SNAPSHOT_FILE).read_text())
    except OSError as exc:
        raise ConfigError(f"run: cannot read {exc.filename}: {exc.strerror}") from None
    cfg = manifest["config"]
    if not snaps:
        raise ConfigError("run: no snapshots were stored; rerun evolve with --snapshots")
    available = np.array([s["Jt"] for s in snaps])
    step = cfg["t_max"] / (cfg["steps"] - 1)
    wanted = _parse_floats(args.snapshots, "snapshots") if args.snapshots else tuple(available)
    lattice = build_lattice(LatticeSpec(cfg["lattice"], cfg["nj"], cfg["nk"]))
    patches = dual_patches(lattice)
    frames = []
    for t in wanted:
        i = int(np.argmin(np.abs(available - t)))
        if abs(available[i] - t) > step / 2 + 1e-12:
            raise ConfigError(f"snapshots: no stored snapshot within half a step of Jt={t}")
        frames.append({"Jt": float(available[i]), "patches": patches_to_dict(patches, snaps[i]["rho"])})
    out = Path(args.out) if args.out else run_dir / "map.json"
    payload = {"lattice": cfg["lattice"], "nj": cfg["nj"], "nk": cfg["nk"], "frames": frames}
    out.write_text(json.dumps(payload) + "\n")
    print(f"wrote {len(frames)} frame(s) to {out}")
    return EXIT_OK


def cmd_lattice_info(args) -> int:
    cfg = resolve_config(args, walk=False)
    lattice = build_lattice(LatticeSpec(cfg.lattice, cfg.nj, cfg.nk))
    if args.out:
        Path(args.out).write_text(json.dumps(lattice.to_dict()) + "\n")
    pairs, _ = lattice.edges
    classes, counts = np.unique([c.value for c in lattice.classes], return_counts=True)
    info = {
        "kind": lattice.kind.value,
        "n_j": lattice.spec.n_j,
        "n_k": lattice.spec.n_k,
        "vertices": lattice.size,
        "edges": int(len(pairs)),
        "boundary_vertices": int(lattice.boundary_mask.sum()),
        "classes": {str(c): int(n) for c, n in zip(classes, counts)},
        "J": hopping_from_js(lattice.kind, cfg.js).J,
    }
    print(json.dumps(info, indent=2))
    return EXIT_OK


def _add_run_flags(p: argparse.ArgumentParser, sweep: bool = False):
    listy = " (comma-separated list)" if sweep else ""
    p.add_argument("--lattice", help="square | triangular | honeycomb | truncated-square" + listy)
    p.add_argument("--nj", type=int, help="vertices per j-polyline")
    p.add_argument("--nk", type=int, help="vertices per k-polyline")
    p.add_argument("--model", help="free | peierls | peierls-modified | discretized | harmonic" + listy)
    p.add_argument("--field", type=None if sweep else float, help="field modulus B" + listy)
    p.add_argument("--js", type=float, help="square-lattice hopping amplitude J_S (default 1.0)")
    p.add_argument("--t-max", dest="t_max", type=float, help="final Jt (default 6)")
    p.add_argument("--steps", type=int, help="number of time samples (default 121)")
    p.add_argument("--start", help="'j,k' or 'center' (default)")
    p.add_argument("--snapshots", help="Jt values at which to store densities, e.g. 1,2,4")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--seed", type=int, help="reserved; the core is deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planarwalk", description="Continuous-time quantum walks on planar lattices.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run one walk")
    _add_run_flags(p)
    p.add_argument("--out", default="run", help="output directory")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="run a grid of walks concurrently")
    _add_run_flags(p, sweep=True)
    p.add_argument("--out", default="sweep", help="output directory")
    p.add_argument("--workers", type=int, default=None, help="process pool size")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit A (Jt)^p to a series CSV")
    p.add_argument("csv")
    p.add_argument("--window", help="lo,hi in Jt (default 0.5 to boundary contact)")
    p.add_argument("--component", default="sigma2", choices=["sigma2", "sigma_x2", "sigma_y2", "coherence"])
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("export-map", help="join density snapshots with dual-lattice patches")
    p.add_argument("run", help="directory written by evolve")
    p.add_argument("--snapshots", help="Jt values to export (default: all stored)")
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=cmd_export_map)

    p = sub.add_parser("lattice-info", help="summarise a lattice")
    _add_run_flags(p)
    p.add_argument("--out", help="write the full lattice JSON here")
    p.set_defaults(func=cmd_lattice_info)
    return parser


def _warn_field(B: float):
    print(f"warning: magnetic length below lattice constant (B={B:g} > 1)", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", MagneticLengthWarning)
            code = args.func(args)
        for w in caught:
            if issubclass(w.category, MagneticLengthWarning):
                print(f"warning: {w.message}", file=sys.stderr)
            else:
                warnings.showwarning(w.message, w.category, w.filename, w.lineno)
        return code
    except (ConfigError, LatticeError, ModelError, UnsupportedStencil) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
