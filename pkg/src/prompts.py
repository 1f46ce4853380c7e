from fastmcp import FastMCP
from fastmcp.prompts import Message


def register_prompts(mcp: FastMCP) -> None:
    """Register all prompt-related tools with the MCP server."""

    @mcp.prompt()
    def convergence_study(focus: str = "") -> list[Message]:
        """Guides a convergence study of DAPD-SCO against the baselines.

        Args:
            focus: Optional impairment or question to concentrate on (e.g. packet loss)
        """
        system_content = """
<context>
You drive a local supply chain optimization simulator. Edge agents own flows, retailer agents own prices, and they exchange stale, lossy messages. Every run writes a directory with config.yaml, problem.json, trace.csv and summary.json.

## Tool Usage Guidelines

### Run Tools
- generate_problem: Write a seeded instance (three_tier, fig1 or quadratic)
- run_experiment: Run one algorithm; pass an inline config or a YAML config path
- compare_algorithms: Same config across algorithms and seeds, writes compare.csv with median rows
- sweep_parameters: Cross product of dotted config keys, e.g. impairments.loss_rate and impairments.gamma

### Analysis Tools
- verify_run: Descent, error-series and rate checks for a finished run
- solve_saddle_point: Exact oracle solution of a problem file
- iteration_budget: Iterations sufficient for a target gap on a flow instance
</context>

<instructions>
# Study Guidelines
- Start from the theory preset for flow instances and experiment-s10 for quadratic instances
- Keep seeds fixed across algorithms so the comparison is paired
- Report convergence time k* as the first iteration with gap < 0.1 and violation < 0.05
- Judge baselines by medians over seeds, not by a single run
- Keep the sweep grid small; the cell cap rejects oversized grids

# User Interaction
- Summarize results in a table of algorithm, median k*, final gap, final violation and messages
- Explain failed checks from the analysis report before proposing new runs
- Ask before launching runs longer than 10^4 iterations
</instructions>
"""

        user_content = "Help me study how DAPD-SCO converges compared with the baselines."

        if focus:
            user_content += f" I want to focus on: {focus}"

        return [
            Message(content=system_content, role="assistant"),
            Message(content=user_content, role="user"),
        ]
