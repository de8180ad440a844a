"""Batch command-line interface.

Subcommands: ``analyze`` (run the hydrology pipeline on a DEM and export
its rasters), ``optimize`` (seeded NSGA-II run with full export of the
archive, history and decision picks) and ``pick`` (re-run decision
selection on a stored run without re-optimizing).

Configuration comes from an optional flat ``key = value`` text file plus
command-line flags; flags override file values. Every run directory
contains a ``manifest.txt`` in the same flat format, echoing the
resolved configuration, so a manifest can be fed back as ``--config``.

Exit codes: 0 success, 2 configuration error, 3 input error, 4 runtime
error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decision import aasf_pick, best_per_objective, sample_interval
from .evolve import (
    GenerationStats,
    Individual,
    OptimizerConfig,
    ParetoArchive,
    history_csv,
    run_nsga2,
)
from .hydrology import (
    HydroParams,
    accumulation_threshold,
    extract_flow_path,
    fill_depressions,
    flow_accumulation,
    flow_directions,
    max_velocity,
    runoff_velocity,
    slope,
)
from .objectives import CostParams, ObjectiveVector, apply_plan, plan_to_grid
from .raster import Grid, GridFormatError, load_ascii_grid, save_ascii_grid, _format_value

__all__ = ["main", "RunConfig"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_RUNTIME = 4


class ConfigError(Exception):
    pass


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved configuration of one CLI invocation."""

    dem_path: str = ""
    output_dir: str = "run"
    hydro: HydroParams = HydroParams()
    cost: CostParams = CostParams()
    optimizer: OptimizerConfig = OptimizerConfig()
    write_snapshot_rasters: bool = False
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    rho: float = 1e-4
    every_k: int = 10


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_tuple(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(t) for t in text.split(","))


def _parse_weights(text: str) -> tuple[float, float, float]:
    parts = [float(t) for t in text.split(",")]
    if len(parts) != 3:
        raise ValueError("weights must be three comma-separated numbers")
    if any(w <= 0 for w in parts):
        raise ValueError("weights must be positive")
    return tuple(parts)


def _parse_optional_prob(text: str):
    low = text.strip().lower()
    if low in ("", "auto", "none"):
        return None
    return float(text)


# config-file key -> (target, field name, parser)
_KEY_TABLE = {
    "dem_path": ("top", "dem_path", str),
    "output_dir": ("top", "output_dir", str),
    "write_snapshot_rasters": ("top", "write_snapshot_rasters", _parse_bool),
    "weights": ("top", "weights", _parse_weights),
    "rho": ("top", "rho", float),
    "every_k": ("top", "every_k", int),
    "manning_n": ("hydro", "manning_n", float),
    "channel_width": ("hydro", "channel_width", float),
    "rain_intensity": ("hydro", "rain_intensity", float),
    "threshold_fraction": ("hydro", "accumulation_threshold_fraction", float),
    "fill_epsilon": ("hydro", "fill_epsilon", float),
    "slope_as_percent": ("hydro", "slope_as_percent", _parse_bool),
    "unit_price": ("cost", "unit_price", float),
    "cell_area": ("cost", "cell_area", float),
    "population": ("optimizer", "population_size", int),
    "offspring": ("optimizer", "offspring_size", int),
    "generations": ("optimizer", "generations", int),
    "crossover_probability": ("optimizer", "crossover_probability", float),
    "crossover_eta": ("optimizer", "crossover_eta", float),
    "mutation_probability": ("optimizer", "mutation_probability", _parse_optional_prob),
    "mutation_eta": ("optimizer", "mutation_eta", float),
    "seed": ("optimizer", "rng_seed", int),
    "lower_bound": ("optimizer", "lower_bound", float),
    "upper_bound": ("optimizer", "upper_bound", float),
    "seed_with_zero_plan": ("optimizer", "seed_with_zero_plan", _parse_bool),
    "snapshot_generations": ("optimizer", "snapshot_generations", _parse_int_tuple),
}


def read_flat_config(path: Path) -> dict[str, str]:
    """Read a flat ``key = value`` file; '#' starts a comment."""
    raw = {}
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        raw[key.strip().lower()] = value.strip()
    return raw


# run-report keys a manifest carries beyond the configuration itself;
# skipped on read so a manifest can be fed back with --config
_RESERVED_KEYS = {"status", "error"}
_RESERVED_PREFIX = "result_"


def build_run_config(raw: dict[str, str], *, ignore_unknown: bool = False) -> RunConfig:
    """Turn flat key/value strings into a validated RunConfig."""
    top: dict = {}
    parts: dict[str, dict] = {"hydro": {}, "cost": {}, "optimizer": {}}
    for key, text in raw.items():
        if key in _RESERVED_KEYS or key.startswith(_RESERVED_PREFIX):
            continue
        entry = _KEY_TABLE.get(key)
        if entry is None:
            if ignore_unknown:
                continue
            raise ConfigError(f"unknown configuration key {key!r}")
        target, field_name, parser = entry
        try:
            value = parser(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
        if target == "top":
            top[field_name] = value
        else:
            parts[target][field_name] = value
    try:
        return RunConfig(
            hydro=HydroParams(**parts["hydro"]),
            cost=CostParams(**parts["cost"]),
            optimizer=OptimizerConfig(**parts["optimizer"]),
            **top,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


_FLAG_TO_KEY = {
    "dem": "dem_path",
    "out": "output_dir",
    "seed": "seed",
    "generations": "generations",
    "population": "population",
    "offspring": "offspring",
    "threshold_fraction": "threshold_fraction",
    "unit_price": "unit_price",
    "rain_intensity": "rain_intensity",
    "manning_n": "manning_n",
    "weights": "weights",
    "rho": "rho",
    "every_k": "every_k",
}


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    raw: dict[str, str] = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        raw.update(read_flat_config(path))
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag, None)
        if value is not None:
            raw[key] = str(value)
    return build_run_config(raw)


def _manifest_lines(cfg: RunConfig) -> list[str]:
    hp, cp, oc = cfg.hydro, cfg.cost, cfg.optimizer
    pm = "auto" if oc.mutation_probability is None else _format_value(oc.mutation_probability)
    return [
        f"dem_path = {cfg.dem_path}",
        f"output_dir = {cfg.output_dir}",
        f"manning_n = {_format_value(hp.manning_n)}",
        f"channel_width = {_format_value(hp.channel_width)}",
        f"rain_intensity = {_format_value(hp.rain_intensity)}",
        f"threshold_fraction = {_format_value(hp.accumulation_threshold_fraction)}",
        f"fill_epsilon = {_format_value(hp.fill_epsilon)}",
        f"slope_as_percent = {str(hp.slope_as_percent).lower()}",
        f"unit_price = {_format_value(cp.unit_price)}",
        f"cell_area = {_format_value(cp.cell_area)}",
        f"population = {oc.population_size}",
        f"offspring = {oc.offspring_size}",
        f"generations = {oc.generations}",
        f"crossover_probability = {_format_value(oc.crossover_probability)}",
        f"crossover_eta = {_format_value(oc.crossover_eta)}",
        f"mutation_probability = {pm}",
        f"mutation_eta = {_format_value(oc.mutation_eta)}",
        f"seed = {oc.rng_seed}",
        f"lower_bound = {_format_value(oc.lower_bound)}",
        f"upper_bound = {_format_value(oc.upper_bound)}",
        f"seed_with_zero_plan = {str(oc.seed_with_zero_plan).lower()}",
        f"snapshot_generations = {','.join(str(g) for g in oc.snapshot_generations)}",
        f"write_snapshot_rasters = {str(cfg.write_snapshot_rasters).lower()}",
        f"weights = {','.join(_format_value(w) for w in cfg.weights)}",
        f"rho = {_format_value(cfg.rho)}",
        f"every_k = {cfg.every_k}",
    ]


def _write_manifest(path: Path, cfg: RunConfig, status: str, extra: list[str] = ()) -> None:
    lines = _manifest_lines(cfg) + [f"status = {status}"] + list(extra)
    path.write_text("\n".join(lines) + "\n")


def _load_dem(cfg: RunConfig) -> Grid:
    if not cfg.dem_path:
        raise ConfigError("no DEM given; use --dem or dem_path in the config file")
    path = Path(cfg.dem_path)
    if not path.exists():
        raise InputError(f"DEM file not found: {path}")
    try:
        dem = load_ascii_grid(path)
    except GridFormatError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if dem.n_valid == 0:
        raise InputError(f"{path}: no valid cells")
    return dem


def plan_checksum(plan: np.ndarray) -> str:
    """Stable 16-hex-digit digest of a plan's float64 little-endian bytes."""
    return hashlib.sha256(np.asarray(plan, dtype="<f8").tobytes()).hexdigest()[:16]


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _objective_row(o: ObjectiveVector) -> list[str]:
    return [str(o.path_cells), _format_value(o.v_max), _format_value(o.cost)]


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    dem = _load_dem(cfg)
    hp = cfg.hydro
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    filled = fill_depressions(dem, hp.fill_epsilon)
    ff = flow_directions(filled)
    acc = flow_accumulation(ff)
    mask, path_cells = extract_flow_path(acc, hp.accumulation_threshold_fraction)
    slope_grid = slope(filled)
    velocity = runoff_velocity(slope_grid, acc, hp, cfg.cost.cell_area)

    codes = np.where(dem.valid_mask, ff.codes.astype(np.float64), dem.nodata_sentinel)
    path_raster = np.where(dem.valid_mask, mask.astype(np.float64), dem.nodata_sentinel)
    save_ascii_grid(out_dir / "filled.asc", filled)
    save_ascii_grid(out_dir / "flow_directions.asc", dem.with_values(codes))
    save_ascii_grid(out_dir / "flow_accumulation.asc", acc)
    save_ascii_grid(out_dir / "flow_path.asc", dem.with_values(path_raster))
    save_ascii_grid(out_dir / "slope.asc", slope_grid)
    save_ascii_grid(out_dir / "velocity.asc", velocity)

    max_acc = float(acc.values[acc.valid_mask].max())
    threshold = accumulation_threshold(acc, hp.accumulation_threshold_fraction)
    print(f"path_cells = {path_cells}")
    print(f"max_velocity_mps = {_format_value(max_velocity(velocity))}")
    print(f"max_accumulation = {_format_value(max_acc)}")
    print(
        f"threshold = {_format_value(hp.accumulation_threshold_fraction)}"
        f" x {_format_value(max_acc)} = {_format_value(threshold)}"
    )
    print(f"rasters written to {out_dir}")
    return EXIT_OK


def _export_selections(
    out_dir: Path,
    base: Grid,
    archive: ParetoArchive,
    weights,
    rho: float,
    every_k: int,
) -> list[list[str]]:
    """Write delta + modified-DEM rasters for all picks; return summary rows."""
    out_dir.mkdir(parents=True, exist_ok=True)
    index_of = {id(m): i for i, m in enumerate(archive.members)}
    best_path, best_vmax, best_cost = best_per_objective(archive)
    selections = [
        ("best_path_cells", best_path),
        ("best_v_max", best_vmax),
        ("best_cost", best_cost),
        ("balanced", aasf_pick(archive, weights, rho)),
    ]
    selections += [
        (f"sample_{i:02d}", member)
        for i, member in enumerate(sample_interval(archive, every_k))
    ]
    rows = []
    for role, member in selections:
        save_ascii_grid(out_dir / f"{role}_delta.asc", plan_to_grid(base, member.plan))
        save_ascii_grid(out_dir / f"{role}_dem.asc", apply_plan(base, member.plan))
        rows.append([role, str(index_of[id(member)])] + _objective_row(member.objectives))
    _write_csv(
        out_dir / "summary.csv",
        ["role", "member_id", "path_cells", "v_max_mps", "cost"],
        rows,
    )
    return rows


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    dem = _load_dem(cfg)
    run_dir = Path(cfg.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    genomes_dir = run_dir / "genomes"
    genomes_dir.mkdir(exist_ok=True)
    snapshots = set(cfg.optimizer.snapshot_generations)
    manifest = run_dir / "manifest.txt"

    def on_generation(gen: int, front: list[Individual], stats: GenerationStats) -> None:
        print(
            f"[gen {gen:4d}] front {stats.front_size:4d} | "
            f"path_cells {stats.path_cells_max} | v_max {stats.v_max_min:.6g} | "
            f"cost {stats.cost_min:.6g} | {stats.wall_ms:.0f} ms",
            file=sys.stderr,
        )
        if gen in snapshots:
            snap_dir = run_dir / "snapshots"
            snap_dir.mkdir(exist_ok=True)
            _write_csv(
                snap_dir / f"front_gen{gen:04d}.csv",
                ["path_cells", "v_max_mps", "cost"],
                [_objective_row(m.objectives) for m in front],
            )
            if cfg.write_snapshot_rasters:
                raster_dir = snap_dir / f"gen{gen:04d}"
                raster_dir.mkdir(exist_ok=True)
                for i, member in enumerate(front):
                    save_ascii_grid(
                        raster_dir / f"member_{i:04d}.asc", plan_to_grid(dem, member.plan)
                    )

    try:
        archive = run_nsga2(dem, cfg.hydro, cfg.cost, cfg.optimizer, on_generation)
        # wall time stays out of history.csv so equal seeds give equal bytes
        (run_dir / "history.csv").write_text(history_csv(archive.history))
        _write_csv(
            run_dir / "pareto.csv",
            ["id", "path_cells", "v_max_mps", "cost", "delta_checksum"],
            [
                [str(i)] + _objective_row(m.objectives) + [plan_checksum(m.plan)]
                for i, m in enumerate(archive.members)
            ],
        )
        for i, member in enumerate(archive.members):
            save_ascii_grid(genomes_dir / f"member_{i:04d}.asc", plan_to_grid(dem, member.plan))
        rows = _export_selections(
            run_dir / "picks", dem, archive, cfg.weights, cfg.rho, cfg.every_k
        )
    except Exception as exc:
        _write_manifest(manifest, cfg, "partial", [f"error = {exc}"])
        raise
    _write_manifest(
        manifest,
        cfg,
        "complete",
        [
            f"result_n_var = {archive.n_var}",
            f"result_mutation_probability = {_format_value(archive.mutation_probability)}",
            f"result_archive_size = {len(archive.members)}",
        ],
    )
    for role, member_id, path_cells, v_max, cost in rows[:4]:
        print(f"{role}: id={member_id} path_cells={path_cells} v_max_mps={v_max} cost={cost}")
    print(f"run written to {run_dir}")
    return EXIT_OK


def _load_archive(run_dir: Path) -> tuple[ParetoArchive, RunConfig]:
    manifest = run_dir / "manifest.txt"
    pareto = run_dir / "pareto.csv"
    genomes = run_dir / "genomes"
    for required in (manifest, pareto, genomes):
        if not required.exists():
            raise InputError(f"missing run artifact: {required}")
    cfg = build_run_config(read_flat_config(manifest), ignore_unknown=True)
    members = []
    with open(pareto, newline="") as fh:
        for row in csv.DictReader(fh):
            raster_path = genomes / f"member_{int(row['id']):04d}.asc"
            if not raster_path.exists():
                raise InputError(f"missing run artifact: {raster_path}")
            delta_grid = load_ascii_grid(raster_path)
            plan = delta_grid.values[delta_grid.valid_mask].copy()
            if plan_checksum(plan) != row["delta_checksum"]:
                raise InputError(f"corrupt run artifact: {raster_path} fails its checksum")
            members.append(
                Individual(
                    plan=plan,
                    objectives=ObjectiveVector(
                        path_cells=int(row["path_cells"]),
                        v_max=float(row["v_max_mps"]),
                        cost=float(row["cost"]),
                    ),
                )
            )
    if not members:
        raise InputError(f"{pareto}: no archive members")
    archive = ParetoArchive(
        members=members,
        config=cfg.optimizer,
        history=[],
        n_var=len(members[0].plan),
        mutation_probability=(
            cfg.optimizer.mutation_probability
            if cfg.optimizer.mutation_probability is not None
            else 1.0 / len(members[0].plan)
        ),
    )
    return archive, cfg


def cmd_pick(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    if args.weights is not None:
        try:
            weights_override = _parse_weights(args.weights)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if not run_dir.is_dir():
        raise InputError(f"run directory not found: {run_dir}")
    archive, cfg = _load_archive(run_dir)
    weights = weights_override if args.weights is not None else cfg.weights
    rho = args.rho if args.rho is not None else cfg.rho
    every_k = args.every_k if args.every_k is not None else cfg.every_k
    base = _load_dem(cfg)
    out_dir = Path(args.out) if args.out else run_dir / "picks"
    rows = _export_selections(out_dir, base, archive, weights, rho, every_k)
    for role, member_id, path_cells, v_max, cost in rows:
        print(f"{role}: id={member_id} path_cells={path_cells} v_max_mps={v_max} cost={cost}")
    return EXIT_OK


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--dem", help="input DEM (ESRI ASCII grid)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="optimizer RNG seed")
    parser.add_argument("--generations", type=int)
    parser.add_argument("--population", type=int)
    parser.add_argument("--offspring", type=int)
    parser.add_argument("--threshold-fraction", dest="threshold_fraction", type=float)
    parser.add_argument("--unit-price", dest="unit_price", type=float)
    parser.add_argument("--rain-intensity", dest="rain_intensity", type=float)
    parser.add_argument("--manning-n", dest="manning_n", type=float)
    parser.add_argument("--weights", help="three comma-separated positive weights")
    parser.add_argument("--rho", type=float, help="AASF augmentation coefficient")
    parser.add_argument("--every-k", dest="every_k", type=int, help="sampling interval")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="terrainopt",
        description="Terrain modification search: hydrology analysis, NSGA-II optimization, decision picks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="run the hydrology pipeline on a DEM")
    _add_common_flags(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_opt = sub.add_parser("optimize", help="run a seeded NSGA-II optimization")
    _add_common_flags(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_pick = sub.add_parser("pick", help="re-run decision picks on a stored run")
    p_pick.add_argument("run_dir", help="directory produced by 'optimize'")
    _add_common_flags(p_pick)
    p_pick.set_defaults(func=cmd_pick)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pipeline/runtime failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
