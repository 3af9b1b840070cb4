import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftswitch.metrics import FaultNotQuiesced, MetricsCollector, RunNotEnded, UnknownFault, percent


def _packet(seq, outcome="delivered", reason=None, created_at=0, flow="f1"):
    return {"t": created_at, "type": "packet", "flow": flow, "seq": seq, "created_at": created_at,
            "outcome": outcome, "reason": reason}


def _fault(fid, at, affected, links=(("R1", "S2"),), target=("S2", "R1"), kind="link_down"):
    return {"t": at, "type": "fault", "fault_id": fid, "kind": kind, "target": list(target) if not isinstance(target, str) else target,
            "links": [list(l) for l in links], "affected": list(affected)}


def _commit(n, t, flow, path):
    return {"t": t, "type": "commit", "action": n, "flow": flow, "path": path, "via": "backup"}


def test_packet_counting_and_reasons():
    m = MetricsCollector()
    assert m.record(_packet(0))
    assert m.record(_packet(1, "lost", "link-down"))
    assert m.delivered == 1 and m.lost == 1
    assert m.lost_by_reason == {"link-down": 1}


def test_duplicate_packet_rejected():
    m = MetricsCollector()
    m.record(_packet(0, "lost", "congestion"))
    assert m.record(_packet(0, "lost", "congestion")) is False
    assert m.lost == 1 and m.packets_sent == 1


def test_duplicate_action_rejected():
    m = MetricsCollector()
    m.record(_fault("F1", 5000, ["a", "b"]))
    m.record({"t": 5035, "type": "detect", "link": ["R1", "S2"]})
    m.record(_commit(1, 5040, "a", ["S1", "S3"]))
    assert m.record(_commit(1, 5090, "b", ["S1", "S3"])) is False
    assert m.fault("F1").pending == {"b"}


@pytest.mark.parametrize("lost,sent,expected", [(12, 1000, 1.2), (0, 1000, 0.0), (59, 1000, 5.9), (0, 0, 0.0)])
def test_loss_rate_examples(lost, sent, expected):
    m = MetricsCollector()
    for i in range(sent):
        m.record(_packet(i, "lost" if i < lost else "delivered", "link-down" if i < lost else None, created_at=i))
    window = m.packet_loss_rate(0, 10_000)
    assert window.percent == expected
    assert window.empty == (sent == 0)


def test_loss_window_by_creation_time():
    m = MetricsCollector()
    for i in range(10):
        m.record(_packet(i, "lost" if i >= 5 else "delivered", "link-down" if i >= 5 else None, created_at=i * 10))
    assert m.packet_loss_rate(50, 90).percent == 100.0
    assert m.packet_loss_rate(0, 40).percent == 0.0
    with pytest.raises(ValueError):
        m.packet_loss_rate(10, 5)


def test_percent_rounds_half_up():
    assert percent(2, 3) == 66.7
    assert percent(1, 8) == 12.5
    assert percent(1, 16) == 6.3  # 6.25 rounds up
    assert percent(1, 2000) == 0.1  # 0.05 rounds up
    assert percent(0, 0, empty=100.0) == 100.0


@given(st.integers(0, 10_000), st.integers(1, 10_000))
def test_percent_matches_decimal_rounding(num, den):
    from decimal import ROUND_HALF_UP, Decimal
    num = min(num, den)
    expected = float((Decimal(100 * num) / Decimal(den)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))
    # 28 significant digits cannot fake a tie at the hundredths digit
    assert percent(num, den) == expected


def test_mttr_example():
    m = MetricsCollector()
    m.record(_fault("F1", 5000, ["f1"]))
    with pytest.raises(FaultNotQuiesced):
        m.mttr("F1")
    m.record({"t": 5035, "type": "detect", "link": ["R1", "S2"]})
    m.record(_commit(1, 5085, "f1", ["S1", "S3", "S4", "S5", "R2", "S6"]))
    assert m.mttr("F1") == 85
    assert m.success_rate("F1") == 100.0
    with pytest.raises(UnknownFault):
        m.mttr("F9")


def test_mttr_without_affected_flows_is_detection_time():
    m = MetricsCollector()
    m.record(_fault("F1", 5000, []))
    m.record({"t": 5035, "type": "detect", "link": ["R1", "S2"]})
    assert m.mttr("F1") == 35
    assert m.success_rate("F1") == 100.0


def test_commit_still_on_failed_element_does_not_count():
    m = MetricsCollector()
    m.record(_fault("F1", 5000, ["f1"]))
    m.record({"t": 5035, "type": "detect", "link": ["R1", "S2"]})
    m.record(_commit(1, 5040, "f1", ["S1", "S2", "R1"]))
    assert not m.fault("F1").quiesced


def test_success_rate_partial():
    m = MetricsCollector()
    m.record(_fault("F1", 5000, ["a", "b", "c"]))
    m.record({"t": 5035, "type": "detect", "link": ["R1", "S2"]})
    m.record(_commit(1, 5040, "a", ["S1", "S3"]))
    m.record(_commit(2, 5042, "b", ["S1", "S3"]))
    m.record({"t": 5044, "type": "unrouted", "action": 3, "flow": "c", "path": None, "via": "no-path"})
    assert m.success_rate("F1") == 66.7
    assert m.mttr("F1") == 44


def test_same_instant_faults_have_own_records():
    m = MetricsCollector()
    m.record(_fault("F1", 5000, ["a"]))
    m.record(_fault("F2", 5000, ["a", "b"], links=(("R1", "R2"),), target=("R1", "R2")))
    m.record({"t": 5035, "type": "detect", "link": ["R1", "S2"]})
    m.record({"t": 5035, "type": "detect", "link": ["R1", "R2"]})
    m.record(_commit(1, 5040, "a", ["S1", "S3", "R2"]))
    m.record({"t": 5042, "type": "unrouted", "action": 2, "flow": "b", "path": None, "via": "no-path"})
    m.record({"t": 6000, "type": "run_end"})
    assert (m.mttr("F1"), m.mttr("F2")) == (40, 42)
    report = m.report()
    assert [f.fault_id for f in report.faults] == ["F1", "F2"]
    # flow a counted once across both faults
    assert report.success_rate_percent == 50.0
    assert report.mttr_ms == 42


def test_report_needs_run_end_and_is_pure():
    m = MetricsCollector("x", 3, 100)
    with pytest.raises(RunNotEnded):
        m.report()
    m.record({"t": 100, "type": "run_end"})
    first = m.report()
    assert first == m.report()
    assert first.loss_rate_percent == 0.0 and first.faults == ()
    assert first.to_dict()["summary"] == {"loss_percent": 0.0, "mttr_ms": None, "success_percent": 100.0}


def test_report_invariants_on_bundled_run(run_bundled):
    report = run_bundled("testcase1").report
    assert report.packets_sent == report.delivered + report.lost + report.in_flight
    assert sum(report.lost_by_reason.values()) == report.lost
    [fault] = report.faults
    assert fault.success_rate_percent == 100.0
    assert fault.fault_at <= fault.detected_at <= fault.last_commit_at
    assert fault.rerouted_flows <= fault.affected_flows
