import json
import logging
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional

from fastmcp import FastMCP

from harness import ExperimentHarness
from models import load_run_config
from supplychain.tracing import json_safe
from utils import format_error_response

logger = logging.getLogger("dapd-sco")


def register_run_tools(mcp: FastMCP, harness: ExperimentHarness) -> None:
    """Register instance generation and run tools with the MCP server."""

    @mcp.tool()
    def generate_problem(
        output_path: str,
        kind: str = "three_tier",
        seed: Optional[int] = None,
        n_s: int = 2,
        n_w: int = 3,
        n_r: int = 5,
    ) -> str:
        """Generate a seeded problem instance and write it as a problem JSON file.

        Args:
            output_path: Where to write the problem file
            kind: three_tier, fig1 or quadratic
            seed: Generator seed (defaults to 0)
            n_s: Number of suppliers (three_tier and quadratic)
            n_w: Number of warehouses (three_tier and quadratic)
            n_r: Number of retailers (three_tier and quadratic)

        Returns:
            str: JSON with the written path plus Slater or KKT status of the instance
        """
        try:
            logger.info(
                {"message": "Generating problem", "kind": kind, "seed": seed, "path": output_path}
            )
            spec = {"kind": kind, "n_s": n_s, "n_w": n_w, "n_r": n_r}
            return json.dumps(json_safe(harness.generate(spec, output_path, seed)))
        except Exception as e:
            error_msg = f"Error generating problem: {str(e)}"
            logger.error({"message": error_msg})
            logger.debug(
                {"message": "Error traceback", "traceback": traceback.format_exc()}
            )
            return format_error_response(error_msg)

    @mcp.tool()
    def run_experiment(
        config: Optional[Dict[str, Any]] = None,
        config_path: Optional[str] = None,
        run_dir: Optional[str] = None,
    ) -> str:
        """Run DAPD-SCO or a baseline and write trace, summary and config echo.

        Args:
            config: Inline run config (same keys as the YAML file), merged over its preset
            config_path: Path of a YAML run config; used when no inline config is given
            run_dir: Target run directory (defaults to one under the output root)

        Returns:
            str: JSON with the run directory and summary (k*, final gap, violation, message totals)
        """
        try:
            logger.info({"message": "Running experiment", "config_path": config_path})
            if config is None and config_path:
                loaded = harness.load_config(config_path)
                base_dir = Path(config_path).parent
            else:
                loaded = load_run_config(config)
                base_dir = None
            return json.dumps(json_safe(harness.run(loaded, run_dir, base_dir)))
        except Exception as e:
            error_msg = f"Error running experiment: {str(e)}"
            logger.error({"message": error_msg})
            logger.debug(
                {"message": "Error traceback", "traceback": traceback.format_exc()}
            )
            return format_error_response(error_msg)

    @mcp.tool()
    def compare_algorithms(
        algorithms: List[str],
        seeds: List[int],
        config: Optional[Dict[str, Any]] = None,
        output_dir: Optional[str] = None,
    ) -> str:
        """Run several algorithms over a seed list and write the comparison CSV.

        Args:
            algorithms: Two or more of dapdsco, sync_pd, admm, gradient_push
            seeds: Seeds to run every algorithm on
            config: Inline base run config merged over its preset
            output_dir: Output directory for compare.csv

        Returns:
            str: JSON with the CSV path, row count and the median row per algorithm
        """
        try:
            logger.info(
                {"message": "Comparing algorithms", "algorithms": algorithms, "seeds": seeds}
            )
            result = harness.compare(load_run_config(config), algorithms, seeds, output_dir)
            return json.dumps(json_safe(result))
        except Exception as e:
            error_msg = f"Error comparing algorithms: {str(e)}"
            logger.error({"message": error_msg})
            logger.debug(
                {"message": "Error traceback", "traceback": traceback.format_exc()}
            )
            return format_error_response(error_msg)

    @mcp.tool()
    def sweep_parameters(
        grid: Dict[str, List[Any]],
        seeds: Optional[List[int]] = None,
        config: Optional[Dict[str, Any]] = None,
        output_dir: Optional[str] = None,
    ) -> str:
        """Run the cross product of config overrides on shared seeds.

        Args:
            grid: Dotted config keys mapped to value lists, e.g. {"impairments.loss_rate": [0, 0.1]}
            seeds: Seeds shared by every cell
            config: Inline base run config merged over its preset
            output_dir: Output directory for sweep.csv

        Returns:
            str: JSON with the CSV path and one aggregate row per cell
        """
        try:
            logger.info({"message": "Sweeping parameters", "keys": list(grid)})
            result = harness.sweep(load_run_config(config), grid, seeds, output_dir)
            return json.dumps(json_safe(result))
        except Exception as e:
            error_msg = f"Error sweeping parameters: {str(e)}"
            logger.error({"message": error_msg})
            logger.debug(
                {"message": "Error traceback", "traceback": traceback.format_exc()}
            )
            return format_error_response(error_msg)
