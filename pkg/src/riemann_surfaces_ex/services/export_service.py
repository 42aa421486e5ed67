from __future__ import annotations

import logging
from pathlib import Path

import pandas as pd

from riemann_surfaces_ex.core.schemas import ResultEnvelope
from riemann_surfaces_ex.services import tracker
from riemann_surfaces_ex.services.curve import Curve
from riemann_surfaces_ex.services.periods import HomologyBasis

logger = logging.getLogger(__name__)


class ExportService:
    """Writes result envelopes and plot data (CSV) for a command run."""

    def __init__(self, plot_dir: Path | None = None) -> None:
        """Initialize the exporter.

        Args:
            plot_dir: Directory for CSV plot data; plot exports are skipped when None.
        """
        self.plot_dir = plot_dir
        if plot_dir is not None:
            plot_dir.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def write_envelope(envelope: ResultEnvelope, path: Path) -> None:
        path.write_text(envelope.model_dump_json(indent=2))
        logger.info(f"Wrote {envelope.command} result to {path}")

    @staticmethod
    def load_envelope(path: Path) -> ResultEnvelope:
        return ResultEnvelope.model_validate_json(path.read_text())

    def _write(self, frame: pd.DataFrame, name: str) -> Path | None:
        if self.plot_dir is None:
            return None
        path = self.plot_dir / name
        frame.to_csv(path, index=False)
        logger.info(f"Wrote {len(frame)} plot rows to {path}")
        return path

    def branch_points(self, curve: Curve) -> Path | None:
        """Finite branch points with their source (discriminant or leading coefficient)."""
        frame = pd.DataFrame(
            [
                {"index": k, "re": b.z.real, "im": b.z.imag, "source": b.source.value}
                for k, b in enumerate(curve.finite_branch_points)
            ],
            columns=["index", "re", "im", "source"],
        )
        return self._write(frame, "branch_points.csv")

    def monodromy_loops(self, curve: Curve) -> Path | None:
        """Waypoints of every loop from the base point, one row per waypoint."""
        rows = []
        for j in range(len(curve.finite_branch_zs)):
            for seq, z in enumerate(tracker.loop_path(curve, j).waypoints):
                rows.append({"branch_index": j, "seq": seq, "re": z.real, "im": z.imag})
        frame = pd.DataFrame(rows, columns=["branch_index", "seq", "re", "im"])
        return self._write(frame, "monodromy_loops.csv")

    def homology_cycles(self, cycles: HomologyBasis) -> Path | None:
        """Stadium outlines of the a- and b-cycles around their chain segments."""
        width = 0.25 * cycles.min_branch_distance()
        rows = []
        for cycle in (*cycles.a_cycles, *cycles.b_cycles):
            for part, loop in enumerate(cycle.waypoints(cycles.chain, width)):
                for seq, z in enumerate(loop):
                    rows.append({"cycle": cycle.name, "part": part, "seq": seq, "re": z.real, "im": z.imag})
        frame = pd.DataFrame(rows, columns=["cycle", "part", "seq", "re", "im"])
        return self._write(frame, "homology_cycles.csv")
