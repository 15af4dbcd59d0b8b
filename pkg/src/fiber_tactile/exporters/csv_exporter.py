#!/usr/bin/env python
# encoding: utf-8

import csv
import io
from typing import Any

from fiber_tactile.estimation import sorted_anomalies

from .base import ROW_FIELDS, ReportExporter


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


class CsvReportExporter(ReportExporter):
    """One row per object with a header line; blank cells for missing estimates"""

    suffix = ".csv"

    def render(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(ROW_FIELDS)
        for row in self.rows():
            row["anomalies"] = sorted_anomalies(row["anomalies"])
            writer.writerow([_cell(row[name]) for name in ROW_FIELDS])
        return buffer.getvalue()
