"""Command-line runner for the experiment presets.

    ottospin list-presets
    ottospin run qubit-cycle --out results/qubit
    ottospin run work-vs-gammabar --j 20 --out results/work-vs-gammabar
    ottospin sweep tT-vs-j --grid grid.json --out results/tT --workers 4

Defaults come from the preset, then from an optional JSON config file
(``--config``), then from command-line flags. Flag names mirror the
``CycleConfig`` fields (``--lambda_i`` and ``--lambda-i`` both work). For
preset axes (e.g. ``j`` in tT-vs-j) a comma-separated value replaces the axis.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import itertools
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, lindblad, otto
from .experiments import PRESETS, TRAJECTORY_COLUMNS, Result, Table, _guard
from .otto import CycleConfig

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2
NUMERICAL_ERRORS = (lindblad.IntegratorError, lindblad.NotThermalizedError,
                    otto.LimitCycleNotReached, FloatingPointError, np.linalg.LinAlgError)
MANIFEST_NAME = "manifest.txt"
CONVENTIONS = {
    "units": "hbar = k_B = 1; energies and temperatures in units of omega",
    "t_star": "inf when the state is maximally mixed, 0 when it is a ground state",
    "lmg_psi": "psi_0 is the global ground state; psi_1 the lowest excited state of the same parity",
    "work_sign": "W_prime = -(W_12 + W_34) is the work extracted per cycle",
}

CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(CycleConfig)}
_DEFAULTS = CycleConfig()


class ValidationError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class ExperimentSpec:
    preset: str
    overrides: dict
    out: Path
    workers: int = 1

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValidationError(f"unknown preset {self.preset!r}; see `list-presets`")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        unknown = set(self.overrides) - set(CONFIG_FIELDS)
        if unknown:
            raise ValidationError(f"unknown parameter(s): {', '.join(sorted(unknown))}")

    def echo(self) -> dict:
        return {"preset": self.preset, "overrides": _jsonable(self.overrides), "workers": self.workers}


@dataclasses.dataclass
class ResultManifest:
    spec: dict
    version: str
    started: str
    finished: str
    files: list  # (name, sha256, bytes)

    def render(self) -> str:
        lines = [f"ottospin {self.version}",
                 f"spec: {json.dumps(self.spec, sort_keys=True)}",
                 f"started: {self.started}",
                 f"finished: {self.finished}",
                 "files:"]
        lines += [f"{digest}  {size:>10d}  {name}" for name, digest, size in self.files]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- value parsing

def coerce(name: str, raw):
    """Type-check one override against the CycleConfig field it targets."""
    if name not in CONFIG_FIELDS:
        raise ValidationError(f"unknown parameter {name!r}")
    default = getattr(_DEFAULTS, name)
    try:
        if name == "t_th":
            if isinstance(raw, str) and raw.strip().lower() == otto.FULL:
                return otto.FULL
            return _as_float(raw)
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            if str(raw).lower() in ("1", "true", "yes", "on"):
                return True
            if str(raw).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(raw)
        if isinstance(default, float):
            return _as_float(raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"bad value for {name}: {raw!r}") from None


def _as_float(raw) -> float:
    if isinstance(raw, bool):
        raise ValueError(raw)
    if isinstance(raw, str) and "/" in raw:
        num, den = raw.split("/")
        return float(num) / float(den)
    x = float(raw)
    if not math.isfinite(x):
        raise ValueError(raw)
    return x


def coerce_any(name: str, raw):
    """Scalar, list, or comma-separated string of values."""
    if isinstance(raw, (list, tuple)):
        return [coerce(name, r) for r in raw]
    if isinstance(raw, str) and "," in raw:
        return [coerce(name, r) for r in raw.split(",") if r.strip()]
    return coerce(name, raw)


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object")
    return data


def resolve(spec: ExperimentSpec):
    """Merge preset defaults with overrides: returns (CycleConfig, axes)."""
    preset = PRESETS[spec.preset]
    params = dict(preset.base)
    axes = {k: list(v) for k, v in preset.axes.items()}
    for name, raw in spec.overrides.items():
        value = coerce_any(name, raw)
        if isinstance(value, list):
            if name not in axes:
                raise ValidationError(f"{name} is not a sweep axis of {spec.preset}; give one value")
            if not value:
                raise ValidationError(f"empty value list for {name}")
            axes[name] = value
        elif name in axes:
            axes[name] = [value]
        else:
            params[name] = value
    for name, values in axes.items():
        params.setdefault(name, values[0])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            config = CycleConfig(**params)
            for name, values in axes.items():
                for v in values:
                    dataclasses.replace(config, **{name: v})
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return config, axes


# ---------------------------------------------------------------- writers

def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def table_bytes(table: Table) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue().encode("utf-8")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, Path):
        return str(x)
    return x


def json_bytes(obj) -> bytes:
    return (json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n").encode("utf-8")


def write_outputs(out: Path, spec: ExperimentSpec, result: Result, summary: dict, started: str) -> ResultManifest:
    """Single writer: all files of one invocation, then the manifest listing them."""
    payload = {}
    schema = {}
    for name, table in result.tables.items():
        payload[f"{name}.csv"] = table_bytes(table)
        schema[f"{name}.csv"] = {"columns": list(table.columns), "description": table.description}
    payload["summary.json"] = json_bytes(summary)
    payload["schema.json"] = json_bytes({
        "files": schema,
        "trajectory_columns": list(TRAJECTORY_COLUMNS),
        "notes": "empty cells mark failed sweep points; see the status column",
    })
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for name in sorted(payload):
        data = payload[name]
        (out / name).write_bytes(data)
        files.append((name, hashlib.sha256(data).hexdigest(), len(data)))
    manifest = ResultManifest(spec.echo(), __version__, started, _now(), files)
    (out / MANIFEST_NAME).write_text(manifest.render(), encoding="utf-8")
    return manifest


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _pmap(workers: int):
    if workers == 1:
        return lambda fn, items: [fn(x) for x in items]

    def pmap(fn, items):
        items = list(items)
        with ProcessPoolExecutor(max_workers=min(workers, max(1, len(items)))) as pool:
            return list(pool.map(fn, items))
    return pmap


# ---------------------------------------------------------------- commands

def run(spec: ExperimentSpec) -> ResultManifest:
    config, axes = resolve(spec)
    preset = PRESETS[spec.preset]
    started = _now()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            result = preset.run(config, axes, _pmap(spec.workers))
        except (*NUMERICAL_ERRORS, ValueError) as exc:
            raise NumericalFailure(f"{spec.preset} at {_describe(config, axes)}: {exc}") from exc
    summary = {"preset": spec.preset, "config": dataclasses.asdict(config),
               "axes": axes, "conventions": CONVENTIONS, "results": result.summary}
    return write_outputs(spec.out, spec, result, summary, started)


class NumericalFailure(RuntimeError):
    pass


def _describe(config, axes) -> str:
    keys = ("j", "T_c", "T_h", "t_th", "t_u", "gamma_bar")
    return ", ".join(f"{k}={axes.get(k, getattr(config, k))}" for k in keys)


def load_grid(path) -> dict:
    grid = load_config_file(path)
    if not grid:
        raise ValidationError("empty grid")
    out = {}
    for name, values in grid.items():
        if not isinstance(values, list):
            values = [values]
        if not values:
            raise ValidationError(f"empty grid axis {name!r}")
        out[name] = [coerce(name, v) for v in values]
    return out


def _point_key(point: dict):
    return tuple((math.inf, 0.0) if v == otto.FULL else (0, v) if not isinstance(v, str) else (1, v)
                 for v in point.values())


def _eval_point(args):
    preset_name, base, point = args
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            config = dataclasses.replace(base, **point)
    except ValueError as exc:
        return None, f"invalid: {exc}"
    return _guard(PRESETS[preset_name].point, config)


def sweep(spec: ExperimentSpec, grid: dict) -> tuple[ResultManifest, int, int]:
    """Evaluate the preset's point function on the Cartesian product of ``grid``.

    Returns the manifest, the number of failed points and the total.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValidationError("empty grid")
    config, _ = resolve(spec)
    preset = PRESETS[spec.preset]
    keys = list(grid)
    points = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    points.sort(key=_point_key)
    started = _now()
    outs = _pmap(spec.workers)(_eval_point, [(spec.preset, config, p) for p in points])
    value_cols = tuple(preset.point_columns)
    rows = []
    for p, (values, status) in zip(points, outs):
        vals = [None if values is None else values.get(c) for c in value_cols]
        rows.append((*p.values(), *vals, status))
    failed = sum(1 for _, s in outs if s != "ok")
    result = Result(tables={"sweep": Table((*keys, *value_cols, "status"), rows,
                                           f"{spec.preset} point values over the grid")})
    summary = {"preset": spec.preset, "config": dataclasses.asdict(config),
               "grid": grid, "n_points": len(points), "n_failed": failed, "conventions": CONVENTIONS}
    manifest = write_outputs(spec.out, spec, result, summary, started)
    return manifest, failed, len(points)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ottospin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list-presets", help="show available presets")

    def common(p):
        p.add_argument("preset")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--config", type=Path, help="JSON file of CycleConfig defaults")
        p.add_argument("--workers", type=int, default=None, help="concurrent worker processes")
        group = p.add_argument_group("CycleConfig overrides")
        for name in CONFIG_FIELDS:
            flags = [f"--{name}"] + ([f"--{name.replace('_', '-')}"] if "_" in name else [])
            group.add_argument(*flags, dest=f"param_{name}", default=None, metavar="VALUE")

    common(sub.add_parser("run", help="run one preset"))
    sw = sub.add_parser("sweep", help="evaluate a preset over a JSON grid")
    common(sw)
    sw.add_argument("--grid", required=True, type=Path, help="JSON object: field -> list of values")
    return parser


def spec_from_args(args) -> ExperimentSpec:
    overrides = {}
    workers = 1
    if args.config is not None:
        file_vals = load_config_file(args.config)
        workers = file_vals.pop("workers", 1)
        overrides.update(file_vals)
    for name in CONFIG_FIELDS:
        v = getattr(args, f"param_{name}")
        if v is not None:
            overrides[name] = v
    if args.workers is not None:
        workers = args.workers
    if not isinstance(workers, int) or isinstance(workers, bool):
        raise ValidationError(f"workers must be an integer, got {workers!r}")
    return ExperimentSpec(args.preset, overrides, args.out, workers)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    if args.command == "list-presets":
        for p in PRESETS.values():
            print(f"{p.name:22s} {p.description}")
        return EXIT_OK
    try:
        spec = spec_from_args(args)
        if args.command == "run":
            manifest = run(spec)
            failed = total = 0
        else:
            manifest, failed, total = sweep(spec, load_grid(args.grid))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for name, _, _ in manifest.files:
        print(spec.out / name)
    if failed:
        print(f"{failed} sweep point(s) failed; see the status column", file=sys.stderr)
        if failed == total:
            return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
