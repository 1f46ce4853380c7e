"""Shared pytest fixtures for the dapd-sco test suite."""

import sys
from pathlib import Path

import pytest
from fastmcp import FastMCP

# Add src to Python path to allow imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from supplychain import (  # noqa: E402
    Edge,
    Node,
    SupplyChainProblem,
    generate_fig1,
    generate_quadratic,
    generate_three_tier,
)


@pytest.fixture
def output_root(tmp_path):
    root = tmp_path / "runs"
    root.mkdir()
    return root


@pytest.fixture
def test_env(monkeypatch, output_root):
    """Set up test environment variables."""
    monkeypatch.setenv("LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("DAPD_OUTPUT_ROOT", str(output_root))
    monkeypatch.setenv("DAPD_WORKERS", "1")
    monkeypatch.setenv("DAPD_SWEEP_CAP", "64")


@pytest.fixture
def single_edge_problem():
    """One supplier feeding one retailer: cost 1, capacity 2, demand 1."""
    return SupplyChainProblem(
        nodes=(Node("S1", "supplier"), Node("R1", "retailer")),
        edges=(Edge("S1-R1", "S1", "R1", 1.0, 2.0),),
        demands={"R1": 1.0},
    )


@pytest.fixture
def two_edge_problem():
    """Two parallel suppliers into one retailer; the cheap one cannot cover demand alone."""
    return SupplyChainProblem(
        nodes=(Node("S1", "supplier"), Node("S2", "supplier"), Node("R1", "retailer")),
        edges=(
            Edge("S1-R1", "S1", "R1", 1.0, 0.6),
            Edge("S2-R1", "S2", "R1", 2.0, 1.0),
        ),
        demands={"R1": 1.0},
    )


@pytest.fixture
def fig1_problem():
    return generate_fig1(seed=7)


@pytest.fixture
def three_tier_problem():
    return generate_three_tier(seed=3)


@pytest.fixture
def quadratic_problem():
    return generate_quadratic(seed=11)


def tool_text(result) -> str:
    """Text of the first content block for both list and CallToolResult returns."""
    content = getattr(result, "content", result)
    return content[0].text


def create_test_server(output_root=None):
    """Helper function to create a test server writing under ``output_root``."""
    # Import here to ensure proper initialization order
    from harness import ExperimentHarness
    from prompts import register_prompts
    from tools import register_all_tools

    mcp = FastMCP("test-supplychain-server")
    harness = ExperimentHarness(
        output_root=str(output_root) if output_root else None, workers=1
    )
    register_prompts(mcp)
    register_all_tools(mcp, harness)
    return mcp
