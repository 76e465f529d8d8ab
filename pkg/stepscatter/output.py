"""
CSV and JSON emission of result tables.

Every table carries its parameter block: as ``# key = value`` comment lines in
CSV and under ``"parameters"`` in JSON. Floats are written with 17 significant
digits so that identical inputs give identical files.
"""

import json
import logging
from dataclasses import dataclass, field
from functools import singledispatch
from pathlib import Path
from typing import Any

import numpy as np

from .config import Config
from .models import (
    ConvergenceReport,
    CrossCheckTable,
    FactorSample,
    FarFieldPattern,
    GreenValue,
    IdentityReport,
    ModalData,
    RadiationTable,
    SolveSummary,
    model_to_dict,
)


logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")


@dataclass
class Table:
    """Column-oriented view of a result, ready for CSV."""

    columns: list[str]
    rows: list[list[Any]]
    parameters: dict[str, Any] = field(default_factory=dict)


def format_value(value: Any) -> str:
    """Render one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return Config.FLOAT_FORMAT % float(value)
    return str(value)


def _parts(z: complex | None) -> list[float | None]:
    if z is None:
        return [None, None]
    z = complex(z)
    return [z.real, z.imag]


@singledispatch
def tabulate(result: Any, parameters: dict[str, Any] | None = None) -> Table:
    """
    Flatten a result model into a Table.

    Args:
        result: A result model or a list of GreenValue / FactorSample.
        parameters: Parameter block for models that do not carry one.

    Raises:
        TypeError: For results without a tabular form.
    """
    if isinstance(result, list) and result and isinstance(result[0], GreenValue):
        with_grad = any(v.grad is not None for v in result)
        columns = ["x1", "x2", "re", "im", "representation"]
        if with_grad:
            columns += ["d1_re", "d1_im", "d2_re", "d2_im"]
        rows = []
        for v in result:
            row = [v.point[0], v.point[1], *_parts(v.value), v.representation]
            if with_grad:
                g = v.grad or (None, None)
                row += _parts(g[0]) + _parts(g[1])
            rows.append(row)
        return Table(columns, rows, dict(parameters or {}))
    if isinstance(result, list) and result and isinstance(result[0], FactorSample):
        rows = [[*_parts(s.xi), *_parts(s.k_plus), *_parts(s.k_minus)] for s in result]
        return Table(
            ["xi_re", "xi_im", "k_plus_re", "k_plus_im", "k_minus_re", "k_minus_im"],
            rows, dict(parameters or {}),
        )
    raise TypeError(f"no tabular form for {type(result).__name__}")


@tabulate.register
def _(result: ConvergenceReport, parameters: dict[str, Any] | None = None) -> Table:
    params = {**result.parameters, "slope": result.slope, "floor": result.floor}
    rows = [[r.param, r.e_rel, r.seconds] for r in result.records]
    return Table(["param", "E_rel", "seconds"], rows, params)


@tabulate.register
def _(result: CrossCheckTable, parameters: dict[str, Any] | None = None) -> Table:
    params = {
        **result.parameters,
        "max_physical_discrepancy": result.max_physical_discrepancy,
        "decay_slope": result.decay_slope,
    }
    rows = [[r.x1, *_parts(r.bie), *_parts(r.wiener_hopf), *_parts(r.extended)] for r in result.rows]
    columns = ["x1", "bie_re", "bie_im", "wh_re", "wh_im", "extended_re", "extended_im"]
    return Table(columns, rows, params)


@tabulate.register
def _(result: RadiationTable, parameters: dict[str, Any] | None = None) -> Table:
    params = dict(result.parameters)
    for angle, exponent in result.usrc_exponents.items():
        params[f"usrc_exponent[{angle}]"] = exponent
    for angle, exponent in result.tangential_exponents.items():
        params[f"tangential_exponent[{angle}]"] = exponent
    for r, integral in result.circle_integrals:
        params[f"circle_integral[{format_value(r)}]"] = integral
    rows = [[r.r, r.alpha, r.usrc, r.tangential] for r in result.residuals]
    return Table(["r", "alpha", "usrc", "tangential"], rows, params)


@tabulate.register
def _(result: FarFieldPattern, parameters: dict[str, Any] | None = None) -> Table:
    params = {**(parameters or {}), "radius": result.radius}
    rows = [[a, *_parts(v)] for a, v in zip(result.angles, result.values)]
    return Table(["alpha", "re", "im"], rows, params)


@tabulate.register
def _(result: ModalData, parameters: dict[str, Any] | None = None) -> Table:
    params = {**(parameters or {}), "M": result.M, "cutoff": result.cutoff_flag}
    if result.slope is not None:
        params["slope_re"], params["slope_im"] = _parts(result.slope)
    rows = [
        [m + 1, mu_m, *_parts(xi_m), *_parts(c_m)]
        for m, (mu_m, xi_m, c_m) in enumerate(zip(result.mu_m, result.xi_m, result.c_m))
    ]
    return Table(["m", "mu_m", "xi_re", "xi_im", "c_re", "c_im"], rows, params)


@tabulate.register
def _(result: IdentityReport, parameters: dict[str, Any] | None = None) -> Table:
    rows = [
        ["product", result.product_residual],
        ["split", result.split_residual],
        ["two_form", result.two_form_residual],
        ["plemelj", result.plemelj_residual],
    ]
    return Table(["identity", "residual"], rows, {**(parameters or {}), "n_nodes": result.n_nodes})


@tabulate.register
def _(result: SolveSummary, parameters: dict[str, Any] | None = None) -> Table:
    params = {
        **(parameters or {}),
        "example": result.example,
        "theta": result.theta,
        "unknowns": result.unknowns,
        "residual": result.residual,
        "condition": result.condition,
        "seconds": result.seconds,
    }
    rows = [[p[0], p[1], *_parts(u)] for p, u in zip(result.points, result.u_tot)]
    return Table(["x1", "x2", "re", "im"], rows, params)


def to_csv(table: Table) -> str:
    """CSV text with ``#`` parameter comments above the header."""
    lines = [f"# {key} = {format_value(value)}" for key, value in table.parameters.items()]
    lines.append(",".join(table.columns))
    lines.extend(",".join(format_value(cell) for cell in row) for row in table.rows)
    return "\n".join(lines) + "\n"


def to_json(result: Any, parameters: dict[str, Any] | None = None) -> str:
    """JSON mirror of a result with its parameter block."""
    payload = model_to_dict(result)
    if parameters and not (isinstance(payload, dict) and "parameters" in payload):
        payload = {"parameters": model_to_dict(parameters), "result": payload}
    return json.dumps(payload, indent=2, ensure_ascii=False, allow_nan=True)


def render(result: Any, fmt: str = "csv", parameters: dict[str, Any] | None = None) -> str:
    """
    Render a result as CSV or JSON text.

    Raises:
        ValueError: For unknown formats.
    """
    if fmt == "csv":
        return to_csv(tabulate(result, parameters))
    if fmt == "json":
        return to_json(result, parameters)
    raise ValueError(f"Unknown output format '{fmt}' (expected one of {', '.join(FORMATS)})")


def emit(result: Any, fmt: str = "csv", path: str | Path | None = None,
         parameters: dict[str, Any] | None = None) -> str:
    """Render and, when ``path`` is given, write the text to disk."""
    text = render(result, fmt, parameters)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {fmt.upper()} output to {path}")
    return text
