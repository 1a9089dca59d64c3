import sys
import pathlib

sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent))

import json
import logging

from app import observability
from app.observability import JSONFormatter, generate_metrics


def test_json_formatter_includes_extra_fields():
    record = logging.LogRecord("vcgs", logging.INFO, __file__, 1, "checked formula", None, None)
    record.correlation_id = "run-1"
    record.verdict = True
    data = json.loads(JSONFormatter().format(record))
    assert data["message"] == "checked formula"
    assert data["correlation_id"] == "run-1"
    assert data["verdict"] is True
    assert "lineno" not in data


def test_counters_render(monkeypatch):
    before = observability.PROFILES_COUNTER.value
    observability.inc_profiles(3)
    assert observability.PROFILES_COUNTER.value == before + 3
    text = generate_metrics().decode()
    assert "# TYPE strategy_profiles_total counter" in text
    assert "resource_bound_errors_total" in text


def test_threshold_warning(monkeypatch, caplog):
    monkeypatch.setitem(observability.THRESHOLDS, "xval_disagreements_total", 1)
    with caplog.at_level(logging.WARNING, logger="observability"):
        observability.inc_xval_disagreement()
    assert any("threshold" in r.getMessage() for r in caplog.records)
