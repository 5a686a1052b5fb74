import json

import numpy as np
import pytest

from mixclust.errors import ConfigError
from mixclust.evaluation import CSV_FIELDS, SdrReport, box_stats, evaluate, write_boxplot_data


@pytest.fixture(scope="module")
def oracle_reports(small_dataset):
    return {m: evaluate(m, small_dataset, seed=0) for m in ("initial", "oracle-DS", "oracle-BPD")}


def test_initial_near_zero(oracle_reports):
    rep = oracle_reports["initial"]
    assert rep.method == "Initial"
    assert np.all(rep.improvements() == 0.0)
    # two sources of equal power: each reference scores about 0 dB against the sum
    assert abs(np.median(rep.sdrs())) < 3.0


def test_oracles_improve(oracle_reports):
    ds, bpd = oracle_reports["oracle-DS"], oracle_reports["oracle-BPD"]
    assert np.median(ds.improvements()) > 5.0
    assert abs(np.median(ds.sdrs()) - np.median(bpd.sdrs())) < 3.0


def test_improvement_is_difference(oracle_reports):
    for r in oracle_reports["oracle-DS"].rows:
        assert r["improvement_db"] == pytest.approx(r["sdr_db"] - r["initial_sdr_db"])


def test_summary_groups(oracle_reports):
    s = oracle_reports["oracle-BPD"].summary()
    assert set(s) == {"fm", "all"}
    assert s["all"]["sdr"]["n"] == 8
    assert s["all"]["improvement"]["iqr"] >= 0


def test_csv_round_trip(oracle_reports, tmp_path):
    path = tmp_path / "sdr.csv"
    for i, rep in enumerate(oracle_reports.values()):
        rep.to_csv(path, append=i > 0)
    assert path.read_text().splitlines()[0] == ",".join(CSV_FIELDS)
    back = {r.method: r for r in SdrReport.from_csv(path)}
    for rep in oracle_reports.values():
        np.testing.assert_array_equal(back[rep.method].sdrs(), rep.sdrs())


def test_boxplot_data(oracle_reports, tmp_path):
    data = json.loads(write_boxplot_data(tmp_path / "b.json", oracle_reports.values()).read_text())
    assert set(data) == {"Initial", "DS oracle", "BPD oracle"}
    b = data["DS oracle"]["improvement"]
    assert b["whisker_lo"] <= b["q1"] <= b["median"] <= b["q3"] <= b["whisker_hi"]


def test_box_stats_known():
    b = box_stats([1, 2, 3, 4, 100])
    assert b["median"] == 3 and b["q1"] == 2 and b["q3"] == 4
    assert b["whisker_hi"] == 4 and b["whisker_lo"] == 1


def test_three_clusters_on_two_sources(small_dataset):
    rep = evaluate("oracle-BPD", small_dataset, n_sources=3, limit=2)
    assert len(rep.rows) == 4


def test_errors(small_dataset):
    with pytest.raises(ConfigError):
        evaluate("checkpoint", small_dataset)
    with pytest.raises(ConfigError):
        evaluate("magic", small_dataset)
    with pytest.raises(ConfigError):
        evaluate("initial", small_dataset, split="eval")
