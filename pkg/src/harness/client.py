import json
import logging
import os
import traceback
from pathlib import Path
from typing import Any, Callable, Optional, TypeVar

import yaml
from pydantic import ValidationError

from models import RunConfigFile, load_run_config, problem_file_adapter
from supplychain import ConfigError, Problem, ProblemError, SupplyChainError
from supplychain.tracing import json_safe
from utils import atomic_write_text, env_int

logger = logging.getLogger("dapd-sco")

T = TypeVar("T")

DEFAULT_OUTPUT_ROOT = "./runs"


def validation_key(error: ValidationError) -> str:
    first = error.errors()[0]
    return ".".join(str(part) for part in first["loc"]) or "<root>"


def read_text(path: Path, error: type = ConfigError, key: str = "path") -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        if error is ConfigError:
            raise ConfigError(key, f"file '{path}' does not exist")
        raise error(f"File '{path}' does not exist", {"path": str(path)})


def read_problem_file(path: Path) -> Problem:
    """Parse a problem JSON file; schema errors name the offending key."""
    text = read_text(path, error=ProblemError)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemError(f"Problem file '{path}' is not valid JSON: {e}")
    try:
        record = problem_file_adapter.validate_python(data)
    except ValidationError as e:
        raise ConfigError(validation_key(e), e.errors()[0]["msg"]) from e
    return record.to_problem()


class HarnessClient:
    """Owns the output workspace and runs every job through one error handler."""

    def __init__(
        self,
        output_root: Optional[str] = None,
        overwrite: bool = False,
        workers: Optional[int] = None,
    ):
        root = output_root or os.getenv("DAPD_OUTPUT_ROOT") or DEFAULT_OUTPUT_ROOT
        self.output_root = Path(root)
        self.overwrite = overwrite
        self.workers = workers if workers is not None else env_int("DAPD_WORKERS", 1)
        if self.workers < 1:
            raise ConfigError("workers", "must be at least 1")
        logger.debug(
            {
                "message": "Initializing HarnessClient",
                "output_root": str(self.output_root),
                "overwrite": overwrite,
                "workers": self.workers,
            }
        )

    def _run_job(self, name: str, job: Callable[..., T], *args, **kwargs) -> T:
        """Common job handler with error handling for every verb."""
        try:
            logger.debug({"message": "Starting job", "job": name})
            result = job(*args, **kwargs)
            logger.debug({"message": "Job finished", "job": name})
            return result
        except SupplyChainError as e:
            logger.error(
                {
                    "message": "Job failed",
                    "job": name,
                    "error_type": type(e).__name__,
                    "error": e.message,
                    "details": json_safe(e.details),
                }
            )
            logger.debug(
                {"message": "Error traceback", "traceback": traceback.format_exc()}
            )
            raise
        except Exception as e:
            error_msg = f"Unexpected error in {name}: {str(e)}"
            logger.error({"message": error_msg, "job": name, "error": str(e)})
            logger.debug(
                {"message": "Error traceback", "traceback": traceback.format_exc()}
            )
            raise SupplyChainError(error_msg, {"job": name}) from e

    def _prepare_dir(self, path: Path) -> Path:
        """Create an output directory, refusing to reuse a non-empty one unless overwriting."""
        path = Path(path)
        if path.exists() and not path.is_dir():
            raise ConfigError("output", f"'{path}' exists and is not a directory")
        if path.is_dir() and any(path.iterdir()) and not self.overwrite:
            raise ConfigError(
                "output", f"'{path}' already exists; pass overwrite to replace it"
            )
        path.mkdir(parents=True, exist_ok=True)
        return path

    def _write_text(self, path: Path, text: str) -> Path:
        return atomic_write_text(path, text)

    def _write_json(self, path: Path, data: Any) -> Path:
        text = json.dumps(json_safe(data), indent=2, sort_keys=False) + "\n"
        return atomic_write_text(path, text)

    def _write_yaml(self, path: Path, data: Any) -> Path:
        return atomic_write_text(path, yaml.safe_dump(json_safe(data), sort_keys=False))

    def _read_text(self, path: Path, error: type = ConfigError, key: str = "path") -> str:
        return read_text(path, error, key)

    def load_config(self, path: Path) -> RunConfigFile:
        """Read a YAML run config and merge it over its preset."""
        text = self._read_text(path, key="config")
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError("config", f"not valid YAML: {e}")
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config", "top level must be a mapping")
        logger.debug({"message": "Loaded run config", "path": str(path)})
        return load_run_config(data)

    def load_problem(self, path: Path) -> Problem:
        return read_problem_file(path)
