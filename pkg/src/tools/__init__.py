from .analysis_tools import register_analysis_tools
from .run_tools import register_run_tools


def register_all_tools(mcp, harness):
    """Register all tools with the MCP server."""
    register_run_tools(mcp, harness)
    register_analysis_tools(mcp, harness)


__all__ = [
    "register_all_tools",
    "register_run_tools",
    "register_analysis_tools",
]
