"""Unit tests for MCP tool functions."""

import json

import pytest
from fastmcp import Client

from tests.conftest import create_test_server, tool_text

SMALL_RUN = {
    "preset": "theory",
    "generator": {"kind": "fig1"},
    "iterations": 200,
}


async def _call(server, name, arguments):
    async with Client(server) as client:
        result = await client.call_tool(name, arguments)
        return json.loads(tool_text(result))


@pytest.mark.asyncio
async def test_tools_registered(test_env, output_root):
    """Test that every tool is exposed."""
    mcp_server = create_test_server(output_root)
    async with Client(mcp_server) as client:
        tools = await client.list_tools()
    names = {tool.name for tool in tools}
    assert names == {
        "generate_problem",
        "run_experiment",
        "compare_algorithms",
        "sweep_parameters",
        "verify_run",
        "solve_saddle_point",
        "iteration_budget",
    }


@pytest.mark.asyncio
async def test_generate_problem_tool(test_env, output_root):
    """Test the generate tool writes a file and reports Slater status."""
    mcp_server = create_test_server(output_root)
    path = output_root / "fig1.json"
    response = await _call(
        mcp_server, "generate_problem", {"output_path": str(path), "kind": "fig1", "seed": 7}
    )
    assert response["kind"] == "flow"
    assert response["slater"] is True
    assert response["n_edges"] == 6
    assert path.exists()


@pytest.mark.asyncio
async def test_generate_problem_refuses_existing(test_env, output_root):
    """Test an existing problem file is not overwritten."""
    mcp_server = create_test_server(output_root)
    path = output_root / "taken.json"
    path.write_text("{}")
    response = await _call(mcp_server, "generate_problem", {"output_path": str(path)})
    assert response["success"] is False
    assert "already exists" in response["error"]


@pytest.mark.asyncio
async def test_run_and_verify_tools(test_env, output_root):
    """Test a short run followed by verification of its directory."""
    mcp_server = create_test_server(output_root)
    run_dir = output_root / "short"
    response = await _call(
        mcp_server, "run_experiment", {"config": SMALL_RUN, "run_dir": str(run_dir)}
    )
    summary = response["summary"]
    assert summary["algorithm"] == "dapdsco"
    assert summary["trace_rows"] == 201
    assert summary["messages"]["sent"] == 200 * 10
    assert (run_dir / "trace.csv").exists()

    report = await _call(mcp_server, "verify_run", {"run_dir": str(run_dir)})
    assert set(report["checks"]) == {"descent", "error_series", "rate"}
    assert report["checks"]["rate"]["status"] == "n/a"
    assert (run_dir / "analysis.json").exists()


@pytest.mark.asyncio
async def test_run_experiment_reports_config_key(test_env, output_root):
    """Test an invalid config returns an error naming the key."""
    mcp_server = create_test_server(output_root)
    response = await _call(
        mcp_server,
        "run_experiment",
        {"config": {**SMALL_RUN, "impairments": {"loss_rate": 1.5}}},
    )
    assert response["success"] is False
    assert "impairments.loss_rate" in response["error"]


@pytest.mark.asyncio
async def test_oracle_tools(test_env, output_root):
    """Test the saddle point and iteration budget of a generated instance."""
    mcp_server = create_test_server(output_root)
    path = output_root / "single.json"
    await _call(mcp_server, "generate_problem", {"output_path": str(path), "kind": "fig1"})

    saddle = await _call(mcp_server, "solve_saddle_point", {"problem_path": str(path)})
    assert len(saddle["x_star"]) == 6
    assert len(saddle["lambda_star"]) == 4
    assert saddle["lambda_max"] >= 2.0

    budget = await _call(
        mcp_server, "iteration_budget", {"problem_path": str(path), "epsilon": 0.1}
    )
    assert budget["iterations"] > 0
    assert budget["constants"]["lambda_max"] == saddle["lambda_max"]


@pytest.mark.asyncio
async def test_iteration_budget_rejects_quadratic(test_env, output_root):
    """Test the budget tool reports that quadratic instances are unsupported."""
    mcp_server = create_test_server(output_root)
    path = output_root / "quad.json"
    await _call(mcp_server, "generate_problem", {"output_path": str(path), "kind": "quadratic"})
    response = await _call(
        mcp_server, "iteration_budget", {"problem_path": str(path), "epsilon": 0.1}
    )
    assert response["success"] is False


@pytest.mark.asyncio
async def test_compare_tool(test_env, output_root):
    """Test per-seed rows plus one median row per algorithm."""
    mcp_server = create_test_server(output_root)
    response = await _call(
        mcp_server,
        "compare_algorithms",
        {
            "algorithms": ["dapdsco", "sync_pd"],
            "seeds": [0, 1],
            "config": SMALL_RUN,
            "output_dir": str(output_root / "cmp"),
        },
    )
    assert response["rows"] == 2 * 2 + 2
    assert [m["algorithm"] for m in response["medians"]] == ["dapdsco", "sync_pd"]


@pytest.mark.asyncio
async def test_sweep_tool(test_env, output_root):
    """Test one aggregate row per grid cell."""
    mcp_server = create_test_server(output_root)
    response = await _call(
        mcp_server,
        "sweep_parameters",
        {
            "grid": {"impairments.loss_rate": [0.0, 0.2]},
            "seeds": [0],
            "config": SMALL_RUN,
            "output_dir": str(output_root / "sweep"),
        },
    )
    assert [cell["impairments.loss_rate"] for cell in response["cells"]] == [0.0, 0.2]


@pytest.mark.asyncio
async def test_tool_unexpected_error(test_env, output_root, mocker):
    """Test unexpected exceptions become error responses."""
    from harness import ExperimentHarness

    mocker.patch.object(ExperimentHarness, "compare", side_effect=RuntimeError("boom"))
    mcp_server = create_test_server(output_root)
    response = await _call(
        mcp_server,
        "compare_algorithms",
        {"algorithms": ["dapdsco", "admm"], "seeds": [0], "config": SMALL_RUN},
    )
    assert response["success"] is False
    assert response["error"] == "Error comparing algorithms: boom"
