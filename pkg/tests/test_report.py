import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alwibp.instance import InfeasibleError
from alwibp.report import (COLUMNS, Record, aggregate, attach_smin, compute_metrics,
                           records_from_csv, records_to_csv, to_csv, to_text)

from helpers import line, t1, worker

T1W = t1([worker("w1", (800, 1000, 600))])


def test_t1_metrics():
    rec = compute_metrics(T1W, line({1, 2}, ({3}, 0)), salbp_m=2, method="cih")
    assert (rec.m, rec.m_up, rec.m_up_pct) == (2, 0, 0.0)
    assert rec.tau == 400 and rec.beta_pct == 50 and rec.eta_pct == 50 and rec.theta
    attach_smin(rec, T1W, line(({2}, 0), {1, 3}))
    assert rec.tau_smin == 0 and rec.eta_smin_pct == 50


def test_extra_station_metrics():
    rec = compute_metrics(T1W, line({1}, ({2}, 0), {3}), salbp_m=2, model_m=2)
    assert rec.m_up == 1 and rec.m_up_pct == 50 and not rec.theta and rec.ties is False
    assert rec.eta_pct == 100


def test_no_workers():
    rec = compute_metrics(t1(), line({1, 2}, {3}), salbp_m=2)
    assert rec.tau is None and rec.eta_pct is None and rec.beta_pct == 0


def test_invalid_line_rejected():
    with pytest.raises(InfeasibleError):
        compute_metrics(T1W, line({3}, ({1, 2}, 0)), salbp_m=2)
    with pytest.raises(ValueError):
        compute_metrics(T1W, line({1, 2}, ({3}, 0)), salbp_m=0)


def _rec(m_up, status="heuristic", W=1, inc=0.1, model_m=None):
    return Record("i", "cih", 2 + m_up, 2, W, "low", inc, status, 0.5, m_up, 50.0 * m_up,
                  beta_pct=100.0 * W / (2 + m_up), theta=m_up == 0, model_m=model_m)


def test_aggregate_statistics():
    rows = aggregate([_rec(0, "optimal", model_m=2), _rec(1, model_m=2)])
    assert len(rows) == 1
    row = rows[0]
    assert row["m_up_mean"] == 0.5
    assert row["m_up_sd"] == pytest.approx(math.sqrt(0.5))
    assert row["Delta"] == 1 and row["theta"] == 1 and row["ties"] == 1
    assert row["tau"] is None
    assert aggregate([_rec(3)])[0]["m_up_sd"] == 0.0


def test_empty_cells_are_skipped(caplog):
    rows = aggregate([_rec(0)], cells=[(1, "low", 0.1), (2, "high", 0.2)])
    assert len(rows) == 1 and "no records" in caplog.text


def test_table_formats():
    rows = aggregate([_rec(0), _rec(1), _rec(0, W=2, inc=0.2)])
    text = to_csv(rows)
    lines = text.splitlines()
    assert lines[0].split(",") == list(COLUMNS)
    assert lines[1] == "1,low,0.10,0,0.50,0.50,0.71,25.0,35.4,,,,,41.7,11.8,1,0"
    assert len(to_text(rows).splitlines()) == 3


def test_records_roundtrip():
    recs = [compute_metrics(T1W, line({1, 2}, ({3}, 0)), 2, "cih", seconds=0.123456789,
                            variability="low", incompat=0.1, model_m=2),
            compute_metrics(t1(), line({1, 2}, {3}), 2, "oracle", status="optimal")]
    recs[0].salbp_source = "oracle"
    back = records_from_csv(records_to_csv(recs))
    assert back == recs


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=30))
def test_sd_matches_definition(ups):
    row = aggregate([_rec(u) for u in ups])[0]
    mean = sum(ups) / len(ups)
    assert row["m_up_mean"] == pytest.approx(mean)
    ref = 0.0 if len(ups) == 1 else math.sqrt(sum((u - mean) ** 2 for u in ups) / (len(ups) - 1))
    assert row["m_up_sd"] == pytest.approx(ref)
    assert row["theta"] == ups.count(0)
