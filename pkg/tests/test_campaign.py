import io
import json

import pytest

from presage.campaign import (
    CampaignConfig, CampaignResult, RunRecord, Variant, aggregate, compare_report, run_campaign,
)
from presage.interp import Model


def cfg(kernel="foo1", variant=Variant.NATIVE, model=Model.EM1, runs=40, seed=3, **kw):
    return CampaignConfig(kernel, variant, model, runs, seed, **kw)


def test_counts_conserved_and_rates_bounded():
    for c in (cfg(), cfg(variant=Variant.PRESAGE, model=Model.EM2)):
        res = run_campaign(c)
        assert sum(res.counts.values()) == c.runs
        assert all(0.0 <= r <= 1.0 for r in res.rates.values())
        assert res.fault_free_detections == 0


def test_same_config_same_bytes():
    c = cfg("bicg-mini", Variant.PRESAGE, runs=30)
    assert run_campaign(c).dumps() == run_campaign(c).dumps()


def test_worker_count_does_not_change_result():
    c = cfg("atax-mini", runs=24)
    assert run_campaign(c, workers=1).dumps() == run_campaign(c, workers=3).dumps()


def test_seed_changes_result():
    a = run_campaign(cfg("trmm-mini", seed=1))
    b = run_campaign(cfg("trmm-mini", seed=2))
    assert [r.k for r in a.records] != [r.k for r in b.records]


def test_invalid_configs():
    with pytest.raises(ValueError):
        cfg(runs=0)
    with pytest.raises(KeyError):
        cfg("no-such-kernel")


def test_em1_on_chained_kernel_never_completes_silently():
    res = run_campaign(cfg("gesummv-mini", Variant.PRESAGE, runs=80))
    for r in res.records:
        if r.outcome in ("sdc", "benign"):
            assert r.detected, r
        else:
            assert not r.detected


def test_native_never_detects():
    res = run_campaign(cfg("lu-mini", runs=40))
    assert res.detected_total == 0


def _result(sdc=0, benign=0, crash=0, hang=0, no_site=0, det=0, variant="native", model="em1",
            kernel="k", dic=100.0):
    runs = sdc + benign + crash + hang + no_site
    conf = {"kernel": kernel, "variant": variant, "model": model, "runs": runs, "seed": 0,
            "budget_multiplier": 10}
    counts = {"sdc": sdc, "benign": benign, "crash": crash, "hang": hang, "no_site": no_site}
    return CampaignResult(conf, counts, det, det, 0, dic)


def test_zero_sdc_detection_rate_is_null():
    assert _result(benign=3, crash=2).detection_rate is None
    assert json.loads(_result(benign=1).dumps())["detection_rate"] is None


def test_no_site_runs_excluded_from_denominators():
    r = _result(sdc=1, crash=1, no_site=2)
    assert r.rates["sdc"] == 0.5


def test_aggregate_marks_no_site():
    c = cfg(runs=2)
    recs = [RunRecord(0, None, None, "no_site", False, 0, 5, None),
            RunRecord(1, 1, 3, "crash", False, 4, 5, 2)]
    res = aggregate(c, recs)
    assert res.counts["no_site"] == 1 and res.rates["crash"] == 1.0


def test_compare_report_full_and_partial():
    results = [
        _result(sdc=4, crash=6, dic=100.0),
        _result(sdc=2, crash=8, det=2, variant="presage", dic=130.0),
        _result(sdc=5, benign=5, model="em2"),
    ]
    doc = compare_report(results)["kernels"]["k"]
    assert doc["dic_overhead"] == pytest.approx(1.3)
    em1 = doc["models"]["em1"]
    assert em1["crash_delta"] == pytest.approx(0.2)
    assert em1["detection_rate"] == 1.0
    em2 = doc["models"]["em2"]
    assert em2["crash_delta"] is None and em2["detection_rate"] is None
    assert doc["sets"]["presage/em2"] is None
    assert doc["sets"]["presage/em1"]["dic_overhead"] == pytest.approx(1.3)
    assert results[1].dic_overhead is None  # inputs untouched


def test_json_round_trip():
    res = run_campaign(cfg(runs=10))
    back = CampaignResult.from_json(json.loads(res.dumps()))
    assert back.dumps() == res.dumps()


def test_csv_export():
    res = run_campaign(cfg(runs=5))
    buf = io.StringIO()
    res.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "run,k,bit,outcome,detected"
    assert len(lines) == 6 and lines[1].startswith("0,")


def test_output_file(tmp_path):
    out = tmp_path / "r.json"
    res = run_campaign(cfg(runs=5, output=str(out)))
    assert out.read_text(encoding="utf-8") == res.dumps()


@pytest.mark.slow
def test_cholesky_crash_promotion_em1():
    native = run_campaign(cfg("cholesky-mini", runs=500, seed=7))
    presage = run_campaign(cfg("cholesky-mini", Variant.PRESAGE, runs=500, seed=7))
    assert presage.rates["crash"] > native.rates["crash"]
