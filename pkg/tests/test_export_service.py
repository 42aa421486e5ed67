from __future__ import annotations

from pathlib import Path

import pandas as pd

from riemann_surfaces_ex.core.schemas import ResultEnvelope
from riemann_surfaces_ex.services import periods
from riemann_surfaces_ex.services.curve import Curve
from riemann_surfaces_ex.services.export_service import ExportService


def test_envelope_file(tmp_path: Path) -> None:
    """Test a written envelope loads back with its outputs."""
    envelope = ResultEnvelope(command="genus", outputs={"genus": 2}, tool_version="0.1.0", exit_code=0)
    path = tmp_path / "result.json"
    ExportService.write_envelope(envelope, path)
    loaded = ExportService.load_envelope(path)
    assert loaded.command == "genus"
    assert loaded.outputs == {"genus": 2}
    assert loaded.error is None


def test_plots_skipped_without_directory(elliptic_curve: Curve) -> None:
    """Test no files are written when no plot directory is given."""
    assert ExportService().branch_points(elliptic_curve) is None


def test_branch_point_csv(tmp_path: Path, elliptic_curve: Curve) -> None:
    """Test one CSV row per finite branch point."""
    exporter = ExportService(tmp_path / "plots")
    path = exporter.branch_points(elliptic_curve)
    assert path is not None and path.exists()
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["index", "re", "im", "source"]
    assert sorted(frame["re"].round(8)) == [0.0, 1.0, 2.0]
    assert set(frame["source"]) == {"disc_zero"}


def test_loop_and_cycle_csv(tmp_path: Path, elliptic_curve: Curve) -> None:
    """Test loop waypoints and cycle outlines are exported per loop and per cycle."""
    exporter = ExportService(tmp_path)
    loops = pd.read_csv(exporter.monodromy_loops(elliptic_curve))
    assert sorted(loops["branch_index"].unique()) == [0, 1, 2]

    cycles = pd.read_csv(exporter.homology_cycles(periods.homology_basis(elliptic_curve)))
    assert set(cycles["cycle"]) == {"a1", "b1"}
