"""CLI subcommands: analyze, optimize, pick; exit codes and file contracts."""
import csv

import numpy as np
import pytest

from terrainopt import (
    Grid,
    load_ascii_grid,
    save_ascii_grid,
    synthetic_dem,
)
from terrainopt.cli import main, plan_checksum

from oracles import scalar_dominates


@pytest.fixture
def east_plane_asc(tmp_path):
    path = tmp_path / "plane.asc"
    save_ascii_grid(path, Grid(np.array([[20.0, 10.0, 0.0]] * 3), 10.0))
    return path


@pytest.fixture
def small_run(tmp_path):
    """A finished optimize run on a small synthetic DEM."""
    dem_path = tmp_path / "dem.asc"
    save_ascii_grid(dem_path, synthetic_dem(8, 8, seed=5))
    run_dir = tmp_path / "run"
    code = main(
        [
            "optimize",
            "--dem", str(dem_path),
            "--out", str(run_dir),
            "--seed", "7",
            "--population", "12",
            "--offspring", "8",
            "--generations", "10",
        ]
    )
    assert code == 0
    return dem_path, run_dir


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestAnalyze:
    def test_plane_outputs_and_summary(self, tmp_path, east_plane_asc, capsys):
        out = tmp_path / "analysis"
        code = main(["analyze", "--dem", str(east_plane_asc), "--out", str(out)])
        assert code == 0
        captured = capsys.readouterr().out
        assert "path_cells = 6" in captured
        assert "max_accumulation = 2" in captured
        for name in (
            "filled.asc",
            "flow_directions.asc",
            "flow_accumulation.asc",
            "flow_path.asc",
            "slope.asc",
            "velocity.asc",
        ):
            raster = load_ascii_grid(out / name)
            assert raster.congruent(load_ascii_grid(east_plane_asc))
        acc = load_ascii_grid(out / "flow_accumulation.asc")
        assert np.array_equal(acc.values, np.tile([0.0, 1.0, 2.0], (3, 1)))
        path_mask = load_ascii_grid(out / "flow_path.asc")
        assert np.array_equal(path_mask.values, np.tile([0.0, 1.0, 1.0], (3, 1)))
        # peak velocity sits on the center cell; value from the scalar hand trace
        velocity = load_ascii_grid(out / "velocity.asc")
        assert velocity.values[1, 1] == pytest.approx(0.3314454017339988, rel=1e-12)
        assert velocity.values.max() == velocity.values[1, 1]

    def test_threshold_line_two_percent_of_max(self, tmp_path, capsys):
        # a 719-cell chain has maximum accumulation 718; 2% of that is 14.36
        dem_path = tmp_path / "chain.asc"
        save_ascii_grid(dem_path, Grid(np.arange(719.0, 0.0, -1.0).reshape(1, 719), 10.0))
        code = main(["analyze", "--dem", str(dem_path), "--out", str(tmp_path / "a")])
        assert code == 0
        captured = capsys.readouterr().out
        assert "max_accumulation = 718" in captured
        assert "threshold = 0.02 x 718 = 14.36" in captured

    def test_all_nodata_dem_is_input_error(self, tmp_path, capsys):
        dem_path = tmp_path / "bad.asc"
        save_ascii_grid(dem_path, Grid(np.array([[1.0]]), 10.0, nodata_sentinel=1.0))
        code = main(["analyze", "--dem", str(dem_path), "--out", str(tmp_path / "x")])
        assert code == 3
        assert "no valid cells" in capsys.readouterr().err

    def test_missing_dem_is_input_error(self, tmp_path, capsys):
        code = main(["analyze", "--dem", str(tmp_path / "nope.asc"), "--out", str(tmp_path)])
        assert code == 3

    def test_malformed_dem_is_input_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.asc"
        bad.write_text("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 10\nfoo\n")
        code = main(["analyze", "--dem", str(bad), "--out", str(tmp_path / "x")])
        assert code == 3
        assert "line 6" in capsys.readouterr().err

    def test_missing_dem_flag_is_config_error(self, capsys):
        assert main(["analyze"]) == 2

    def test_unknown_config_key_is_config_error(self, tmp_path, east_plane_asc, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"dem_path = {east_plane_asc}\nwhatever = 3\n")
        assert main(["analyze", "--config", str(cfg)]) == 2
        assert "whatever" in capsys.readouterr().err

    def test_config_file_with_flag_override(self, tmp_path, east_plane_asc, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# analysis settings\n"
            f"dem_path = {east_plane_asc}\n"
            "threshold_fraction = 1.0\n"
            f"output_dir = {tmp_path / 'from_cfg'}\n"
        )
        assert main(["analyze", "--config", str(cfg)]) == 0
        assert "path_cells = 3" in capsys.readouterr().out  # only acc == max survives
        assert main(["analyze", "--config", str(cfg), "--threshold-fraction", "0.5"]) == 0
        assert "path_cells = 6" in capsys.readouterr().out


class TestOptimize:
    def test_run_directory_contents(self, small_run):
        dem_path, run_dir = small_run
        for name in ("manifest.txt", "pareto.csv", "history.csv"):
            assert (run_dir / name).exists()
        assert (run_dir / "genomes").is_dir()
        assert (run_dir / "picks" / "summary.csv").exists()
        manifest = (run_dir / "manifest.txt").read_text()
        assert "status = complete" in manifest
        assert "seed = 7" in manifest

    def test_pareto_rows_pairwise_non_dominated(self, small_run):
        _, run_dir = small_run
        rows = read_csv(run_dir / "pareto.csv")
        objs = [
            (-int(r["path_cells"]), float(r["v_max_mps"]), float(r["cost"])) for r in rows
        ]
        for i, a in enumerate(objs):
            for j, b in enumerate(objs):
                if i != j:
                    assert not scalar_dominates(a, b)

    def test_genome_rasters_congruent_and_checksummed(self, small_run):
        dem_path, run_dir = small_run
        dem = load_ascii_grid(dem_path)
        for row in read_csv(run_dir / "pareto.csv"):
            raster = load_ascii_grid(run_dir / "genomes" / f"member_{int(row['id']):04d}.asc")
            assert raster.congruent(dem)
            plan = raster.values[raster.valid_mask]
            assert plan_checksum(plan) == row["delta_checksum"]
            assert np.all(np.abs(plan) <= 2.0)

    def test_history_columns_and_rows(self, small_run):
        _, run_dir = small_run
        rows = read_csv(run_dir / "history.csv")
        assert len(rows) == 11  # generations 0..10
        assert list(rows[0].keys()) == [
            "generation",
            "front_size",
            "path_cells_min",
            "path_cells_max",
            "v_max_min",
            "v_max_max",
            "cost_min",
            "cost_max",
        ]

    def test_seeded_runs_byte_identical(self, tmp_path):
        dem_path = tmp_path / "dem.asc"
        save_ascii_grid(dem_path, synthetic_dem(8, 8, seed=5))
        args = [
            "optimize", "--dem", str(dem_path), "--seed", "3",
            "--population", "8", "--offspring", "4", "--generations", "3",
        ]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        for name in ("pareto.csv", "history.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_manifest_reusable_as_config(self, small_run):
        dem_path, run_dir = small_run
        from terrainopt.cli import build_run_config, read_flat_config

        cfg = build_run_config(read_flat_config(run_dir / "manifest.txt"))
        assert cfg.optimizer.rng_seed == 7
        assert cfg.optimizer.population_size == 12

    def test_manifest_plus_seed_reproduces_run(self, small_run, tmp_path):
        # end-to-end reproducibility: rerunning from a run's manifest
        # regenerates the same machine outputs
        _, run_dir = small_run
        redo = tmp_path / "redo"
        assert main(
            ["optimize", "--config", str(run_dir / "manifest.txt"), "--out", str(redo)]
        ) == 0
        for name in ("pareto.csv", "history.csv"):
            assert (redo / name).read_bytes() == (run_dir / name).read_bytes()

    def test_zero_plan_row_present(self, small_run):
        _, run_dir = small_run
        costs = [float(r["cost"]) for r in read_csv(run_dir / "pareto.csv")]
        assert 0.0 in costs  # the seeded zero plan survives as non-dominated

    def test_snapshot_rasters(self, tmp_path):
        dem_path = tmp_path / "dem.asc"
        save_ascii_grid(dem_path, synthetic_dem(6, 6, seed=2))
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"dem_path = {dem_path}\n"
            f"output_dir = {tmp_path / 'snap_run'}\n"
            "population = 6\noffspring = 4\ngenerations = 3\nseed = 1\n"
            "snapshot_generations = 2,3\nwrite_snapshot_rasters = true\n"
        )
        assert main(["optimize", "--config", str(cfg)]) == 0
        snap = tmp_path / "snap_run" / "snapshots"
        assert (snap / "front_gen0002.csv").exists()
        assert (snap / "front_gen0003.csv").exists()
        assert list((snap / "gen0003").glob("member_*.asc"))


class TestPick:
    def test_equal_weights_reproduce_stored_balanced_pick(self, small_run, capsys):
        _, run_dir = small_run
        stored = {r["role"]: r["member_id"] for r in read_csv(run_dir / "picks" / "summary.csv")}
        code = main(["pick", str(run_dir), "--out", str(run_dir / "repick")])
        assert code == 0
        redone = {r["role"]: r["member_id"] for r in read_csv(run_dir / "repick" / "summary.csv")}
        assert redone["balanced"] == stored["balanced"]
        assert redone == stored

    def test_near_zero_weight_recovers_path_optimum(self, small_run):
        # a tiny weight tightens that objective's tolerance, so the AASF
        # pick converges onto the members attaining the best path length
        _, run_dir = small_run
        out = run_dir / "limit"
        assert main(
            ["pick", str(run_dir), "--weights", "0.000001,1,1", "--out", str(out)]
        ) == 0
        rows = {r["role"]: r for r in read_csv(out / "summary.csv")}
        assert rows["balanced"]["path_cells"] == rows["best_path_cells"]["path_cells"]

    def test_every_k_on_200_member_archive(self, tmp_path):
        # fabricate a stored run with 200 members to exercise interval sampling
        rng = np.random.default_rng(42)
        base = synthetic_dem(6, 6, seed=9)
        dem_path = tmp_path / "dem.asc"
        save_ascii_grid(dem_path, base)
        run_dir = tmp_path / "fake_run"
        genomes = run_dir / "genomes"
        genomes.mkdir(parents=True)
        from terrainopt.cli import _manifest_lines, RunConfig, build_run_config
        from terrainopt import plan_to_grid

        cfg = RunConfig(dem_path=str(dem_path), output_dir=str(run_dir))
        (run_dir / "manifest.txt").write_text(
            "\n".join(_manifest_lines(cfg) + ["status = complete"]) + "\n"
        )
        rows = [["id", "path_cells", "v_max_mps", "cost", "delta_checksum"]]
        for i in range(200):
            plan = rng.uniform(-2, 2, base.n_valid)
            save_ascii_grid(genomes / f"member_{i:04d}.asc", plan_to_grid(base, plan))
            rows.append(
                [str(i), str(rng.integers(1, 50)), repr(float(rng.uniform(0, 2))),
                 repr(float(rng.uniform(0, 9999))), plan_checksum(plan)]
            )
        (run_dir / "pareto.csv").write_text("\n".join(",".join(r) for r in rows) + "\n")
        out = run_dir / "picks"
        assert main(["pick", str(run_dir), "--every-k", "10", "--out", str(out)]) == 0
        sample_rows = [
            r for r in read_csv(out / "summary.csv") if r["role"].startswith("sample_")
        ]
        assert len(sample_rows) == 20
        costs = [float(r["cost"]) for r in sample_rows]
        assert costs == sorted(costs)

    def test_corrupt_genome_detected(self, small_run, capsys):
        _, run_dir = small_run
        target = next((run_dir / "genomes").glob("member_*.asc"))
        grid = load_ascii_grid(target)
        tampered = grid.values.copy()
        row, col = np.argwhere(grid.valid_mask)[0]
        tampered[row, col] += 0.5
        save_ascii_grid(target, Grid(tampered, grid.cell_size, grid.x_ll, grid.y_ll, grid.nodata_sentinel))
        assert main(["pick", str(run_dir), "--out", str(run_dir / "x")]) == 3
        assert "checksum" in capsys.readouterr().err

    def test_missing_artifacts_detected(self, small_run, capsys):
        _, run_dir = small_run
        (run_dir / "pareto.csv").unlink()
        assert main(["pick", str(run_dir), "--out", str(run_dir / "x")]) == 3
        assert "missing run artifact" in capsys.readouterr().err

    def test_missing_run_dir(self, tmp_path):
        assert main(["pick", str(tmp_path / "ghost")]) == 3

    def test_bad_weights_flag_is_config_error(self, small_run, capsys):
        _, run_dir = small_run
        assert main(["pick", str(run_dir), "--weights", "1,2"]) == 2
