import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from models import RunConfigFile, validate_run_config
from supplychain import ConfigError, median_convergence_time
from utils import env_int, expand_grid

from .client import read_problem_file
from .run import execute, resolve_problem, summarize

logger = logging.getLogger("dapd-sco")

COMPARE_FILE = "compare.csv"
SWEEP_FILE = "sweep.csv"
COMPARE_COLUMNS = (
    "algorithm",
    "seed",
    "final_cost",
    "gap",
    "violation",
    "messages",
    "k_star",
)
DEFAULT_SWEEP_CAP = 64


def run_cell(config_data: Dict[str, Any], base_dir: Optional[str]) -> Dict[str, Any]:
    """One run reduced to its comparison row; module level so worker processes can import it."""
    config = validate_run_config(config_data)
    problem = resolve_problem(
        config, Path(base_dir) if base_dir else None, read_problem_file
    )
    trace = execute(config, problem)
    summary = summarize(config, problem, trace)
    return {
        "algorithm": config.algorithm,
        "seed": config.seed,
        "final_cost": summary.final.objective,
        "gap": summary.final.gap,
        "violation": summary.final.violation,
        "messages": summary.messages.sent,
        "k_star": summary.k_star,
    }


def median_row(algorithm: str, rows: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    """Per-column medians; runs that never converged count as k* = inf."""
    return {
        "algorithm": algorithm,
        "seed": "median",
        "final_cost": float(np.median([r["final_cost"] for r in rows])),
        "gap": float(np.median([r["gap"] for r in rows])),
        "violation": float(np.median([r["violation"] for r in rows])),
        "messages": float(np.median([r["messages"] for r in rows])),
        "k_star": median_convergence_time([r["k_star"] for r in rows]),
    }


def _csv_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({name: _csv_value(row.get(name)) for name in columns})
    return buffer.getvalue()


class CompareMixin:
    """Mixin for the compare and sweep verbs"""

    def _map_cells(
        self, configs: List[Dict[str, Any]], base_dir: Optional[Path]
    ) -> List[Dict[str, Any]]:
        base = str(base_dir) if base_dir is not None else None
        if self.workers > 1 and len(configs) > 1:
            logger.debug({"message": "Running cells in a process pool", "workers": self.workers})
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(run_cell, configs, [base] * len(configs)))
        return [run_cell(data, base) for data in configs]

    def compare(
        self,
        config: RunConfigFile,
        algorithms: Sequence[str],
        seeds: Sequence[int],
        output: Optional[Path] = None,
        base_dir: Optional[Path] = None,
    ) -> Dict[str, Any]:
        """Run every algorithm over every seed and write a comparison table.

        Args:
            config: Base run config shared by all cells
            algorithms: At least two algorithm tags
            seeds: At least one seed
            output: Output directory, defaults to one under the output root
            base_dir: Directory that relative problem paths are resolved against

        Returns:
            Dictionary with the CSV path, its row count and the median rows
        """
        return self._run_job("compare", self._compare, config, algorithms, seeds, output, base_dir)

    def _compare(self, config, algorithms, seeds, output, base_dir) -> Dict[str, Any]:
        algorithms = list(dict.fromkeys(algorithms))
        seeds = list(seeds)
        if len(algorithms) < 2:
            raise ConfigError("algorithms", "compare needs at least two algorithms")
        if not seeds:
            raise ConfigError("seeds", "compare needs at least one seed")
        output = Path(output) if output is not None else self.output_root / f"compare-{config.preset}"
        if output.is_dir() and any(output.iterdir()) and not self.overwrite:
            raise ConfigError("output", f"'{output}' already exists; pass overwrite to replace it")

        cells = [
            config.with_overrides(algorithm=algorithm, seed=seed).model_dump(mode="json")
            for algorithm in algorithms
            for seed in seeds
        ]
        results = self._map_cells(cells, base_dir)

        rows: List[Dict[str, Any]] = list(results)
        medians = []
        for algorithm in algorithms:
            own = [r for r in results if r["algorithm"] == algorithm]
            medians.append(median_row(algorithm, own))
        rows.extend(medians)

        self._prepare_dir(output)
        path = self._write_text(output / COMPARE_FILE, rows_to_csv(COMPARE_COLUMNS, rows))
        logger.info(
            {
                "message": "Comparison finished",
                "path": str(path),
                "algorithms": algorithms,
                "seeds": len(seeds),
                "median_k_star": {m["algorithm"]: m["k_star"] for m in medians},
            }
        )
        return {"path": str(path), "rows": len(rows), "medians": medians}

    def sweep(
        self,
        config: RunConfigFile,
        grid: Dict[str, Sequence[Any]],
        seeds: Optional[Sequence[int]] = None,
        output: Optional[Path] = None,
        base_dir: Optional[Path] = None,
    ) -> Dict[str, Any]:
        """Cross product of dotted-key overrides, every cell run on the same seeds.

        Args:
            config: Base run config
            grid: Mapping of dotted config keys to the values to sweep
            seeds: Seeds shared by every cell, defaults to the config seed
            output: Output directory, defaults to one under the output root
            base_dir: Directory that relative problem paths are resolved against

        Returns:
            Dictionary with the CSV path and one aggregate row per cell
        """
        return self._run_job("sweep", self._sweep, config, grid, seeds, output, base_dir)

    def _sweep(self, config, grid, seeds, output, base_dir) -> Dict[str, Any]:
        cells = expand_grid(grid) if grid else []
        if not cells:
            raise ConfigError("grid", "sweep grid is empty")
        if "seed" in grid:
            raise ConfigError("grid", "seeds are swept with the seed list, not the grid")
        cap = env_int("DAPD_SWEEP_CAP", DEFAULT_SWEEP_CAP)
        if len(cells) > cap:
            raise ConfigError("grid", f"{len(cells)} cells exceed the sweep cap of {cap}")
        seeds = list(seeds) if seeds else [config.seed]
        output = Path(output) if output is not None else self.output_root / f"sweep-{config.preset}"
        if output.is_dir() and any(output.iterdir()) and not self.overwrite:
            raise ConfigError("output", f"'{output}' already exists; pass overwrite to replace it")

        configs = [
            config.with_overrides(**cell, seed=seed).model_dump(mode="json")
            for cell in cells
            for seed in seeds
        ]
        results = self._map_cells(configs, base_dir)

        keys = list(grid)
        aggregates = []
        for index, cell in enumerate(cells):
            own = results[index * len(seeds) : (index + 1) * len(seeds)]
            k_stars = [r["k_star"] for r in own]
            aggregates.append(
                {
                    "cell": index,
                    **cell,
                    "seeds": len(own),
                    "converged": sum(k is not None for k in k_stars),
                    "k_star_median": median_convergence_time(k_stars),
                    "gap_median": float(np.median([r["gap"] for r in own])),
                    "violation_median": float(np.median([r["violation"] for r in own])),
                }
            )

        columns = ["cell", *keys, "seeds", "converged", "k_star_median", "gap_median", "violation_median"]
        self._prepare_dir(output)
        path = self._write_text(output / SWEEP_FILE, rows_to_csv(columns, aggregates))
        logger.info({"message": "Sweep finished", "path": str(path), "cells": len(cells)})
        return {"path": str(path), "cells": aggregates}
