"""
Unit tests for output module.
"""

import json
import math

import pytest

from stepscatter.models import (
    ConvergenceRecord,
    ConvergenceReport,
    FactorSample,
    GreenValue,
    IdentityReport,
    SolveSummary,
)
from stepscatter.output import emit, format_value, render, tabulate, to_csv


class TestFormatValue:
    """Test CSV cell rendering."""

    def test_float_round_trips(self):
        """Test that floats keep 17 significant digits."""
        assert format_value(0.1) == "0.10000000000000001"
        assert float(format_value(math.pi)) == math.pi

    def test_other_types(self):
        """Test integers, booleans and missing values."""
        assert format_value(3) == "3"
        assert format_value(True) == "true"
        assert format_value(None) == ""
        assert format_value(float("nan")) == "nan"


class TestTables:
    """Test result flattening."""

    def test_green_values(self):
        """Test columns for Green function values."""
        values = [GreenValue((1.0, 0.5), 1 + 2j, "direct")]
        table = tabulate(values, {"k": 2.0})
        assert table.columns == ["x1", "x2", "re", "im", "representation"]
        assert table.rows == [[1.0, 0.5, 1.0, 2.0, "direct"]]

    def test_green_gradient_columns(self):
        """Test that gradients add four columns."""
        values = [GreenValue((1.0, 0.5), 1j, "direct", (2 + 0j, 3j))]
        table = tabulate(values)
        assert table.columns[-4:] == ["d1_re", "d1_im", "d2_re", "d2_im"]
        assert table.rows[0][-4:] == [2.0, 0.0, 0.0, 3.0]

    def test_factor_samples(self):
        """Test columns for K+ and K- samples."""
        table = tabulate([FactorSample(1j, 2 + 0j, 3 + 0j)])
        assert table.columns[0] == "xi_re"
        assert table.rows[0] == [0.0, 1.0, 2.0, 0.0, 3.0, 0.0]

    def test_convergence_parameters(self):
        """Test that slope and floor join the parameter block."""
        report = ConvergenceReport(
            {"example": "step"}, [ConvergenceRecord(0.5, 1e-3, 0.1)], slope=-2.5, floor=1e-9
        )
        table = tabulate(report)
        assert table.parameters == {"example": "step", "slope": -2.5, "floor": 1e-9}
        assert table.columns == ["param", "E_rel", "seconds"]

    def test_identity_rows(self):
        """Test one row per identity."""
        table = tabulate(IdentityReport(10, 1e-12, 2e-9, 3e-11, 4e-9))
        assert [row[0] for row in table.rows] == ["product", "split", "two_form", "plemelj"]
        assert table.parameters["n_nodes"] == 10

    def test_unsupported(self):
        """Test TypeError for results without a table."""
        with pytest.raises(TypeError):
            tabulate({"a": 1})


class TestRender:
    """Test CSV and JSON text."""

    def test_csv_layout(self):
        """Test comment lines, header and rows."""
        summary = SolveSummary("step", 1.0, 100, 1e-14, 50.0, [(1.0, 1.0)], [0.5 - 0.25j], 0.0)
        text = to_csv(tabulate(summary, {"wavelength": 1.0}))
        lines = text.splitlines()
        assert lines[0] == "# wavelength = 1"
        assert "# unknowns = 100" in lines
        header = lines.index("x1,x2,re,im")
        assert lines[header + 1] == "1,1,0.5,-0.25"

    def test_json_wraps_parameters(self):
        """Test that list results are wrapped with their parameters."""
        text = render([GreenValue((1.0, 0.5), 1 + 2j, "direct")], "json", {"k": 2.0})
        payload = json.loads(text)
        assert payload["parameters"] == {"k": 2.0}
        assert payload["result"][0]["value"] == [1.0, 2.0]

    def test_json_keeps_own_parameters(self):
        """Test that models with a parameter block are not wrapped."""
        report = ConvergenceReport({"sweep": "D"}, [], None, None)
        payload = json.loads(render(report, "json", {"ignored": 1}))
        assert payload["parameters"] == {"sweep": "D"}

    def test_unknown_format(self):
        """Test ValueError for an unknown format."""
        with pytest.raises(ValueError):
            render([], "xml")

    def test_emit_writes_file(self, temp_dir):
        """Test that emit creates parent directories and writes the text."""
        path = temp_dir / "out" / "identities.csv"
        text = emit(IdentityReport(4, 0.0, 0.0, 0.0, 0.0), "csv", path)
        assert path.read_text(encoding="utf-8") == text
