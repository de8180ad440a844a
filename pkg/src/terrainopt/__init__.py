"""Multi-objective terrain modification search on raster DEMs.

The package turns a DEM into a search problem over per-cell elevation
changes: D8 hydrology scores flow-path length and peak runoff velocity,
an earthwork model scores cost, and a from-scratch NSGA-II explores the
trade-offs. Decision helpers pick per-objective optima, an AASF-balanced
compromise and evenly spaced samples from the resulting Pareto front.
"""
from .raster import (
    CellIndex,
    Grid,
    GridFormatError,
    load_ascii_grid,
    neighbors8,
    parse_ascii_grid,
    save_ascii_grid,
    write_ascii_grid,
)
from .hydrology import (
    D8_CODES,
    OUTLET,
    FlowCycleError,
    FlowField,
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
from .objectives import (
    CostParams,
    ObjectiveVector,
    apply_plan,
    earthwork_cost,
    evaluate,
    grid_to_plan,
    plan_length,
    plan_to_grid,
)
from .evolve import (
    GenerationStats,
    Individual,
    OptimizerConfig,
    ParetoArchive,
    crowding_distance,
    dominates,
    history_csv,
    non_dominated_sort,
    polynomial_mutation,
    run_nsga2,
    sbx_crossover,
    tournament_select,
)
from .decision import (
    NormalizedFront,
    aasf_pick,
    aasf_scores,
    best_per_objective,
    normalize_front,
    sample_interval,
)
from .synthetic import synthetic_dem

__version__ = "0.1.0"
