#!/usr/bin/env python
# encoding: utf-8

import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Union

from fiber_tactile.grasp_sim import SortingReport, SortingRow

logger = logging.getLogger("fiber_tactile")

SCHEMA_VERSION = 1

ROW_FIELDS = [
    "object_id",
    "name",
    "shape_class",
    "outcome",
    "true_diameter",
    "estimated_diameter",
    "true_strain",
    "estimated_strain",
    "classification",
    "truth_class",
    "anomalies",
    "midpoint_displacement",
    "estimated_force",
]


def row_to_dict(row: SortingRow) -> Dict[str, Any]:
    data = asdict(row)
    data["anomalies"] = list(row.anomalies)
    return data


def report_to_document(report: SortingReport) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": report.seed,
        "rows": [row_to_dict(row) for row in report.rows],
        "metrics": asdict(report.metrics),
    }


class ReportExporter:
    """Base class for sorting report writers"""

    suffix = ""

    def __init__(self, report: SortingReport):
        """
        Args:
            report: the sorting report to write
        """
        self.report = report

    def export(self, path: Union[str, Path]) -> Path:
        """Render the report and write it to ``path``"""
        path = Path(path)
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        content = self.render()
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        logger.debug(f"Wrote {len(self.report.rows)} report rows to {path}")
        return path

    def rows(self) -> List[Dict[str, Any]]:
        return [row_to_dict(row) for row in self.report.rows]

    # Methods that must be implemented by subclasses
    def render(self) -> str:
        """Full file content"""
        raise NotImplementedError("Subclass must implement render()")
