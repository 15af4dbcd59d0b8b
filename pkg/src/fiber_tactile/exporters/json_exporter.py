#!/usr/bin/env python
# encoding: utf-8

import json

from .base import ReportExporter, report_to_document


class JsonReportExporter(ReportExporter):
    suffix = ".json"

    def render(self) -> str:
        document = report_to_document(self.report)
        return json.dumps(document, indent=2, allow_nan=False) + "\n"
