import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

from models import GeneratorSpec, problem_to_file
from supplychain import (
    ConfigError,
    Problem,
    QuadraticProblem,
    SingularSystemError,
    exact_oracle_kkt,
    slater_check,
)

from .client import validation_key

logger = logging.getLogger("dapd-sco")


def problem_status(problem: Problem) -> Dict[str, Any]:
    """Slater status for flow instances, KKT nonsingularity for quadratic ones."""
    if isinstance(problem, QuadraticProblem):
        try:
            exact_oracle_kkt(problem)
            nonsingular = True
        except SingularSystemError as e:
            logger.warning({"message": "KKT system is singular", "pivot": e.pivot})
            nonsingular = False
        return {
            "kind": "quadratic",
            "n_nodes": problem.n_agents,
            "n_rows": problem.n_rows,
            "kkt_nonsingular": nonsingular,
        }
    return {
        "kind": "flow",
        "n_nodes": len(problem.nodes),
        "n_edges": problem.n_edges,
        "n_retailers": problem.n_retailers,
        "slater": slater_check(problem).holds,
    }


class GenerateMixin:
    """Mixin for the generate verb"""

    def generate(
        self,
        spec: Union[GeneratorSpec, Dict[str, Any]],
        output: Path,
        seed: Optional[int] = None,
    ) -> Dict[str, Any]:
        """Build a seeded instance and write it as a problem file.

        Args:
            spec: Generator spec (kind, seed, tier counts, ranges)
            output: Path of the problem JSON file to write
            seed: Overrides the spec seed when given

        Returns:
            Dictionary with the written path and the instance status
        """
        return self._run_job("generate", self._generate, spec, Path(output), seed)

    def _generate(self, spec, output: Path, seed: Optional[int]) -> Dict[str, Any]:
        if not isinstance(spec, GeneratorSpec):
            try:
                spec = GeneratorSpec.model_validate(spec or {})
            except ValidationError as e:
                raise ConfigError(validation_key(e), e.errors()[0]["msg"]) from e
        if seed is not None:
            spec = spec.model_copy(update={"seed": seed})
        if output.exists() and not self.overwrite:
            raise ConfigError("output", f"'{output}' already exists; pass overwrite to replace it")

        problem = spec.build()
        record = problem_to_file(problem)
        self._write_json(output, record.model_dump(mode="json"))
        status = problem_status(problem)
        logger.info({"message": "Problem generated", "path": str(output), **status})
        return {"path": str(output), "generator": spec.model_dump(mode="json"), **status}
