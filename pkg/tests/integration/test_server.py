"""
Integration tests for the MCP tool handlers.
"""

import json
import math

import pytest

from stepscatter import server


K_CHECK = 2.0 * math.pi / 1.1


@pytest.fixture
def mcp_service(service, monkeypatch):
    """Install the test service in the server module."""
    monkeypatch.setattr(server, "scattering_service", service)
    return service


def _payload(contents):
    assert len(contents) == 1
    return json.loads(contents[0].text)


class TestToolListing:
    """Test tool discovery."""

    @pytest.mark.asyncio
    async def test_list_tools(self):
        """Test that every tool is advertised with a schema."""
        tools = await server.handle_list_tools()
        names = {tool.name for tool in tools}
        assert names == {
            "green_eval", "far_field", "modal_coeffs", "wh_identities", "solve_scattering", "run_convergence",
        }
        assert all(tool.inputSchema["type"] == "object" for tool in tools)


class TestToolCalls:
    """Test tool dispatch and error responses."""

    @pytest.mark.asyncio
    async def test_uninitialized(self, monkeypatch):
        """Test RuntimeError before main() installs the service."""
        monkeypatch.setattr(server, "scattering_service", None)
        with pytest.raises(RuntimeError):
            await server.handle_call_tool("green_eval", {})

    @pytest.mark.asyncio
    async def test_unknown_tool(self, mcp_service):
        """Test the error payload of an unknown tool."""
        payload = _payload(await server.handle_call_tool("plot", {}))
        assert payload["category"] == "invalid_arguments"
        assert "plot" in payload["error"]

    @pytest.mark.asyncio
    async def test_missing_arguments(self, mcp_service):
        """Test KeyError reported as invalid arguments."""
        payload = _payload(await server.handle_call_tool("green_eval", {"k": K_CHECK}))
        assert payload["category"] == "invalid_arguments"

    @pytest.mark.asyncio
    async def test_region_error_category(self, mcp_service):
        """Test that scattering errors keep their category."""
        payload = _payload(await server.handle_call_tool(
            "green_eval", {"k": K_CHECK, "h": 1.0, "src": [-0.5, 0.0], "points": [[1.0, 1.0]]}
        ))
        assert payload["category"] == "domain"

    @pytest.mark.asyncio
    async def test_green_eval(self, mcp_service):
        """Test a successful evaluation."""
        payload = _payload(await server.handle_call_tool(
            "green_eval", {"k": K_CHECK, "h": 1.0, "src": [0.3, 0.4], "points": [[-1.5, 0.8], [-0.7, 0.0]]}
        ))
        assert len(payload) == 2
        assert payload[1]["value"] == [0.0, 0.0]

    @pytest.mark.asyncio
    async def test_modal_coeffs(self, mcp_service):
        """Test the modal data payload."""
        payload = _payload(await server.handle_call_tool(
            "modal_coeffs", {"k": K_CHECK, "h": 1.0, "src": [0.3, 0.4]}
        ))
        assert payload["M"] == 1

    @pytest.mark.slow
    @pytest.mark.asyncio
    async def test_solve_scattering(self, mcp_service):
        """Test a coarse plane-wave solve."""
        payload = _payload(await server.handle_call_tool(
            "solve_scattering", {"wavelength": 1.6, "nodes": 48, "points": [[-1.0, 1.0]]}
        ))
        assert payload["example"] == "step"
        assert len(payload["u_tot"]) == 1
        assert payload["residual"] < 1e-10
