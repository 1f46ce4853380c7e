"""Integration tests for the MCP server."""

import pytest
from fastmcp import Client

from tests.conftest import create_test_server


@pytest.mark.asyncio
async def test_server_initialization(test_env, output_root):
    """Test that the server initializes correctly with all tools."""
    mcp_server = create_test_server(output_root)

    async with Client(mcp_server) as client:
        tools = await client.list_tools()

        tool_names = [tool.name for tool in tools]

        expected_tools = [
            "generate_problem",
            "run_experiment",
            "compare_algorithms",
            "sweep_parameters",
            "verify_run",
            "solve_saddle_point",
            "iteration_budget",
        ]

        for tool in expected_tools:
            assert tool in tool_names, f"Tool {tool} not found in registered tools"


@pytest.mark.asyncio
async def test_server_prompts(test_env, output_root):
    """Test that prompts are registered correctly."""
    mcp_server = create_test_server(output_root)

    async with Client(mcp_server) as client:
        prompts = await client.list_prompts()

        prompt_names = [prompt.name for prompt in prompts]

        assert "convergence_study" in prompt_names


@pytest.mark.asyncio
async def test_prompt_generation(test_env, output_root):
    """Test that prompts generate expected messages."""
    mcp_server = create_test_server(output_root)

    async with Client(mcp_server) as client:
        prompt_result = await client.get_prompt(
            "convergence_study", {"focus": "packet loss"}
        )

        messages = prompt_result.messages
        assert len(messages) == 2

        # Check system message contains instructions
        system_msg = messages[0].content.text
        assert "supply chain optimization simulator" in system_msg
        assert "Tool Usage Guidelines" in system_msg

        # Check user message contains the focus
        user_msg = messages[1].content.text
        assert "packet loss" in user_msg


@pytest.mark.asyncio
async def test_server_uses_output_root_from_env(test_env, output_root):
    """Test runs land under DAPD_OUTPUT_ROOT when no root is passed."""
    from harness import ExperimentHarness

    harness = ExperimentHarness()
    assert harness.output_root == output_root
    assert harness.workers == 1
