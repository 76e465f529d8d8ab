"""
MCP Server for the step scattering toolkit.

This is a thin layer that translates MCP protocol to ScatteringService calls.
Business logic is in scattering_service.py, not here.
"""

import asyncio
import json
import logging
import math
import sys

import mcp.server.stdio
import mcp.types as types
from mcp.server import NotificationOptions, Server
from mcp.server.models import InitializationOptions

from .config import Config
from .models import ExperimentSpec, PmlProfile, model_to_dict
from .scattering_service import ScatteringService


logger = logging.getLogger(__name__)

# MCP Server instance
app = Server("stepscatter")

# Service instance (initialized in main)
scattering_service: ScatteringService | None = None


_POINT = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}

_MEDIUM = {
    "k": {"type": "number", "description": "Número de onda k > 0"},
    "h": {"type": "number", "description": "Altura del escalón h > 0"},
    "src": {**_POINT, "description": "Fuente puntual [x1, x2]"},
}


@app.list_tools()
async def handle_list_tools() -> list[types.Tool]:
    """List available MCP tools."""
    return [
        types.Tool(
            name="green_eval",
            description="Evalúa la función de Green G(x; x*) del semiplano con grieta y escalón",
            inputSchema={
                "type": "object",
                "properties": {
                    **_MEDIUM,
                    "points": {
                        "type": "array",
                        "items": _POINT,
                        "description": "Puntos de evaluación [[x1, x2], ...]"
                    },
                    "representation": {
                        "type": "string",
                        "enum": ["auto", "direct", "deformed", "modal"],
                        "description": "Representación integral (por defecto: auto)",
                        "default": "auto"
                    },
                    "gradient": {
                        "type": "boolean",
                        "description": "Calcular también el gradiente (por defecto: false)",
                        "default": False
                    }
                },
                "required": ["k", "h", "src", "points"]
            }
        ),
        types.Tool(
            name="far_field",
            description="Patrón de campo lejano de G en los ángulos dados (radianes, en [0, π])",
            inputSchema={
                "type": "object",
                "properties": {
                    **_MEDIUM,
                    "angles": {
                        "type": "array",
                        "items": {"type": "number"},
                        "description": "Ángulos de observación"
                    },
                    "part": {
                        "type": "string",
                        "enum": ["total", "scattered"],
                        "default": "total"
                    }
                },
                "required": ["k", "h", "src", "angles"]
            }
        ),
        types.Tool(
            name="modal_coeffs",
            description="Coeficientes modales de G en la guía de ondas (x1 < 0)",
            inputSchema={
                "type": "object",
                "properties": {
                    **_MEDIUM,
                    "n_modes": {
                        "type": "integer",
                        "description": "Número de modos (por defecto: los propagantes)"
                    }
                },
                "required": ["k", "h", "src"]
            }
        ),
        types.Tool(
            name="wh_identities",
            description="Residuos de las identidades de factorización de Wiener–Hopf",
            inputSchema={
                "type": "object",
                "properties": {
                    **_MEDIUM,
                    "n": {
                        "type": "integer",
                        "description": "Nodos del contorno (por defecto: 50)",
                        "default": 50
                    }
                },
                "required": ["k", "h", "src"]
            }
        ),
        types.Tool(
            name="solve_scattering",
            description="Resuelve la dispersión de una onda plana con el método PML-BIE",
            inputSchema={
                "type": "object",
                "properties": {
                    "example": {
                        "type": "string",
                        "enum": ["step", "rounded_step", "step_with_inclusion"],
                        "default": "step"
                    },
                    "theta": {"type": "number", "description": "Ángulo de incidencia en (0, π)"},
                    "wavelength": {"type": "number", "default": 1.0},
                    "h": {"type": "number", "default": 1.0},
                    "D": {"type": "number", "description": "Espesor de la PML", "default": 2.0},
                    "S": {"type": "number", "description": "Intensidad de absorción", "default": 2.0},
                    "nodes": {"type": "integer", "description": "Nodos por segmento suave"},
                    "points": {
                        "type": "array",
                        "items": _POINT,
                        "description": "Puntos físicos donde evaluar u_tot"
                    }
                },
                "required": []
            }
        ),
        types.Tool(
            name="run_convergence",
            description="Barrido de E_rel respecto a D o S frente a la solución de referencia (D=2, S=2)",
            inputSchema={
                "type": "object",
                "properties": {
                    "example": {
                        "type": "string",
                        "enum": ["step", "rounded_step", "step_with_inclusion"],
                        "default": "step"
                    },
                    "sweep": {"type": "string", "enum": ["D", "S"], "default": "D"},
                    "values": {"type": "array", "items": {"type": "number"}},
                    "resolution": {"type": "integer", "description": "Nodos por segmento suave"},
                    "theta": {"type": "number"},
                    "wavelength": {"type": "number", "default": 1.0}
                },
                "required": []
            }
        ),
    ]


@app.call_tool()
async def handle_call_tool(
    name: str, arguments: dict | None
) -> list[types.TextContent | types.ImageContent | types.EmbeddedResource]:
    """
    Handle MCP tool calls.

    Translates MCP requests to ScatteringService calls.
    """
    if scattering_service is None:
        raise RuntimeError("Scattering service not initialized")

    arguments = arguments or {}
    try:
        result = None

        if name == "green_eval":
            result = scattering_service.green_eval(
                arguments["k"],
                arguments["h"],
                tuple(arguments["src"]),
                [tuple(p) for p in arguments["points"]],
                arguments.get("representation", "auto"),
                arguments.get("gradient", False),
            )

        elif name == "far_field":
            result = scattering_service.far_field(
                arguments["k"],
                arguments["h"],
                tuple(arguments["src"]),
                arguments["angles"],
                arguments.get("part", "total"),
            )

        elif name == "modal_coeffs":
            result = scattering_service.modal(
                arguments["k"], arguments["h"], tuple(arguments["src"]), arguments.get("n_modes")
            )

        elif name == "wh_identities":
            result = scattering_service.wh_identities(
                arguments["k"], arguments["h"], tuple(arguments["src"]), arguments.get("n", 50)
            )

        elif name == "solve_scattering":
            D = arguments.get("D", 2.0)
            points = arguments.get("points")
            result = scattering_service.solve_scattering(
                example=arguments.get("example", "step"),
                theta=arguments.get("theta", math.pi / 3),
                wavelength=arguments.get("wavelength", 1.0),
                h=arguments.get("h", 1.0),
                profile=PmlProfile(D1=D, D2=D, S=arguments.get("S", 2.0)),
                points=[tuple(p) for p in points] if points else None,
                nodes=arguments.get("nodes"),
            )

        elif name == "run_convergence":
            spec = ExperimentSpec(
                example=arguments.get("example", "step"),
                sweep=arguments.get("sweep", "D"),
                resolution=arguments.get("resolution", scattering_service.config.nodes),
                theta=arguments.get("theta", math.pi / 3),
                wavelength=arguments.get("wavelength", 1.0),
            )
            if "values" in arguments:
                spec.values = list(arguments["values"])
            result = scattering_service.run_convergence(spec)

        else:
            raise ValueError(f"Unknown tool: {name}")

        # Convert dataclass to dict for JSON serialization
        result_dict = model_to_dict(result)

        return [types.TextContent(
            type="text",
            text=json.dumps(result_dict, indent=2, ensure_ascii=False)
        )]

    except Exception as e:
        logger.error(f"Error executing tool {name}: {e}", exc_info=True)
        fallback = "invalid_arguments" if isinstance(e, (KeyError, ValueError)) else "error"
        category = getattr(e, "category", fallback)
        return [types.TextContent(
            type="text",
            text=json.dumps({"error": str(e), "category": category}, indent=2, ensure_ascii=False)
        )]


async def main():
    """Main entry point for the MCP server."""
    global scattering_service

    try:
        # Load configuration
        config = Config()

        # Initialize service
        scattering_service = ScatteringService(config)

        # Run MCP server
        async with mcp.server.stdio.stdio_server() as (read_stream, write_stream):
            await app.run(
                read_stream,
                write_stream,
                InitializationOptions(
                    server_name=config.SERVER_NAME,
                    server_version=config.SERVER_VERSION,
                    capabilities=app.get_capabilities(
                        notification_options=NotificationOptions(),
                        experimental_capabilities={}
                    )
                )
            )

    except Exception as e:
        logger.critical(f"Failed to start server: {e}", exc_info=True)
        raise


if __name__ == "__main__":
    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        print("\nServer stopped by user", file=sys.stderr)
        sys.exit(0)
    except Exception as e:
        print(f"Fatal error: {e}", file=sys.stderr)
        sys.exit(1)
