# src/fiber_tactile/exporters/__init__.py
from .base import ReportExporter
from .csv_exporter import CsvReportExporter
from .json_exporter import JsonReportExporter

__all__ = ["ReportExporter", "CsvReportExporter", "JsonReportExporter"]
