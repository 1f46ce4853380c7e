import json
import logging
import traceback
from typing import Optional

import numpy as np
from fastmcp import FastMCP

from harness import ExperimentHarness
from supplychain import (
    compute_constants,
    default_lambda_max,
    exact_oracle,
    iteration_budget_for,
)
from supplychain.tracing import json_safe
from utils import format_error_response

logger = logging.getLogger("dapd-sco")


def register_analysis_tools(mcp: FastMCP, harness: ExperimentHarness) -> None:
    """Register verification and oracle tools with the MCP server."""

    @mcp.tool()
    def verify_run(run_dir: str) -> str:
        """Run the descent, error-series and rate checks on a run directory.

        Args:
            run_dir: Directory written by run_experiment

        Returns:
            str: JSON analysis report with a pass/fail/n/a status per check
        """
        try:
            logger.info({"message": "Verifying run", "run_dir": run_dir})
            report = harness.verify(run_dir)
            return json.dumps(json_safe(report.model_dump(mode="json")))
        except Exception as e:
            error_msg = f"Error verifying run '{run_dir}': {str(e)}"
            logger.error({"message": error_msg})
            logger.debug(
                {"message": "Error traceback", "traceback": traceback.format_exc()}
            )
            return format_error_response(error_msg)

    @mcp.tool()
    def solve_saddle_point(problem_path: str) -> str:
        """Exact saddle point of a problem file (greedy for flow instances, KKT for quadratic).

        Args:
            problem_path: Path of a problem JSON file

        Returns:
            str: JSON with x*, λ*, the optimal value and the default dual radius
        """
        try:
            logger.info({"message": "Solving saddle point", "path": problem_path})
            problem = harness.load_problem(problem_path)
            saddle = exact_oracle(problem)
            return json.dumps(
                json_safe(
                    {
                        "x_star": saddle.x_star,
                        "lambda_star": saddle.lambda_star,
                        "optimal_value": saddle.optimal_value,
                        "lambda_max": default_lambda_max(problem, saddle),
                        "metadata": saddle.metadata,
                    }
                )
            )
        except Exception as e:
            error_msg = f"Error solving '{problem_path}': {str(e)}"
            logger.error({"message": error_msg})
            logger.debug(
                {"message": "Error traceback", "traceback": traceback.format_exc()}
            )
            return format_error_response(error_msg)

    @mcp.tool()
    def iteration_budget(
        problem_path: str,
        epsilon: float,
        lambda_max: Optional[float] = None,
    ) -> str:
        """Iterations K sufficient for an ergodic gap below epsilon, started from zero.

        Args:
            problem_path: Path of a flow problem JSON file
            epsilon: Target accuracy
            lambda_max: Dual radius; defaults to twice the largest oracle price

        Returns:
            str: JSON with the budget and the constants G, D, U, Λ_max it was derived from
        """
        try:
            logger.info(
                {"message": "Computing iteration budget", "path": problem_path, "epsilon": epsilon}
            )
            problem = harness.load_problem(problem_path)
            saddle = exact_oracle(problem)
            radius = lambda_max if lambda_max is not None else default_lambda_max(problem, saddle)
            constants = compute_constants(problem, radius)
            v0 = float(np.sum(saddle.x_star**2) + np.sum(saddle.lambda_star**2))
            budget = iteration_budget_for(epsilon, constants, v0)
            return json.dumps(
                json_safe({"iterations": budget, "v0": v0, "constants": constants.as_dict()})
            )
        except Exception as e:
            error_msg = f"Error computing iteration budget: {str(e)}"
            logger.error({"message": error_msg})
            logger.debug(
                {"message": "Error traceback", "traceback": traceback.format_exc()}
            )
            return format_error_response(error_msg)
