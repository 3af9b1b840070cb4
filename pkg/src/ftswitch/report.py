"""Report serialization: JSON document and a per-fault summary CSV."""

from __future__ import annotations

import csv
import io
import json

from .metrics import MetricsReport

CSV_COLUMNS = ("test_case", "loss_percent", "mttr_ms", "success_percent")


def report_json(report: MetricsReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def report_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    if not report.faults:
        writer.writerow([report.scenario, report.loss_rate_percent, "", 100.0])
    for fault in report.faults:
        writer.writerow([
            f"{report.scenario}:{fault.fault_id}",
            report.loss_rate_percent,
            "" if fault.mttr_ms is None else fault.mttr_ms,
            "" if fault.success_rate_percent is None else fault.success_rate_percent,
        ])
    return buf.getvalue()
