import pytest

from padbench.errors import DomainError, FormatError
from padbench.metrics import GroundTruth, MetricsReport, PaisMetrics, metrics_report
from padbench.report import (
    PUBLISHED_APCER_ACCURACY,
    PUBLISHED_HTER,
    audit_paper_consistency,
    flatten_table,
    fmt_percent,
    read_table_csv,
    render_tables,
    write_table_csv,
)
from padbench.scores import (
    ScoreRecord,
    format_scores,
    parse_scores,
    read_scores,
    write_scores,
)


def _report(apcers, bpcer=0.0):
    per = {p: PaisMetrics(a, (a + bpcer) / 2, 10) for p, a in apcers.items()}
    return MetricsReport(0.5, bpcer, 10, per)


# -- score files --------------------------------------------------------------


def test_score_file_round_trip(tmp_path):
    records = [
        ScoreRecord("subject001_L_front_00.png", GroundTruth.BONA_FIDE, None, 0.0132),
        ScoreRecord("Cap_SGA7_Disp_4K_0001.png", GroundTruth.ATTACK, "Dell-GA7", 0.1 + 0.2),
    ]
    write_scores(tmp_path / "s.csv", records)
    assert read_scores(tmp_path / "s.csv") == records


def test_score_file_tab_delimited():
    text = "sample_id\tground_truth\tpais\tscore\na\tbonafide\t\t0.1\nb\tattack\tDell-GA7\t0.9\n"
    recs = parse_scores(text)
    assert [r.ground_truth for r in recs] == [GroundTruth.BONA_FIDE, GroundTruth.ATTACK]


@pytest.mark.parametrize(
    "body",
    [
        "",
        "id,gt,pais,score\n",
        "sample_id,ground_truth,pais,score\na,bonafide,,1.5\n",
        "sample_id,ground_truth,pais,score\na,bonafide,,nan\n",
        "sample_id,ground_truth,pais,score\na,attack,,0.5\n",
        "sample_id,ground_truth,pais,score\na,bonafide,Dell-GA7,0.5\n",
        "sample_id,ground_truth,pais,score\na,maybe,,0.5\n",
        "sample_id,ground_truth,pais,score\na,bonafide,0.5\n",
    ],
)
def test_score_file_errors(body):
    with pytest.raises(FormatError):
        parse_scores(body)


def test_format_is_stable():
    recs = [ScoreRecord("a", GroundTruth.BONA_FIDE, None, 0.25)]
    assert format_scores(recs) == "sample_id,ground_truth,pais,score\na,bonafide,,0.25\n"


# -- rendering ----------------------------------------------------------------


def test_fmt_percent_half_up():
    assert fmt_percent(100 * (1 - 0.2326)) == "76.74"
    assert fmt_percent(0.085) == "0.09"
    assert fmt_percent(1.215) == "1.22"
    assert fmt_percent(0.0) == "0.00"


def test_accuracy_style():
    tables = render_tables(_report({"Dell-GA7": 0.2326}), "paper_accuracy")
    assert "76.74" in tables.text and "11.63" in tables.text


def test_zero_apcer_both_styles():
    err = render_tables(_report({"A": 0.0}), "error_rates").text.splitlines()
    acc = render_tables(_report({"A": 0.0}), "paper_accuracy").text.splitlines()
    assert err[4].split()[2] == "0.00"
    assert acc[4].split()[2] == "100.00"


def test_csv_rows_and_raw_fractions():
    report = _report({"A": 0.2326, "B": 0.5, "C": 0.0}, bpcer=0.1)
    lines = render_tables(report).csv.splitlines()
    assert lines[0] == "row,pais,n,apcer,bpcer,hter"
    assert len(lines) - 1 == 3 + 1
    assert lines[1].split(",")[3] == "0.2326"
    assert lines[-1].startswith("bona_fide,")


def test_styles_mutually_recoverable():
    report = _report({"A": 0.2326, "B": 0.1768, "C": 0.0061, "D": 0.12345})
    err = render_tables(report, "error").text.splitlines()[4:8]
    acc = render_tables(report, "paper").text.splitlines()[4:8]
    for e, a in zip(err, acc):
        assert float(e.split()[2]) + float(a.split()[2]) == pytest.approx(100.0, abs=0.011)


def test_render_from_metrics_report():
    from padbench.metrics import Decision

    ds = [Decision("a", 0.9, "attack", "Dell-GA7"), Decision("b", 0.1, "bona_fide")]
    assert "Dell-GA7" in render_tables(metrics_report(ds)).text


# -- audit --------------------------------------------------------------------


def test_audit_examples():
    (row,) = audit_paper_consistency({"Dell-GA7": 76.74}, {"Dell-GA7": 11.63})
    assert row.passed and row.residual == pytest.approx(0.0, abs=1e-9)
    (row,) = audit_paper_consistency({"S3D-GA7": 99.83}, {"S3D-GA7": 0.08})
    assert row.passed and row.residual == pytest.approx(0.005, abs=1e-9)
    (row,) = audit_paper_consistency({"X": 50.0}, {"X": 10.0})
    assert not row.passed and row.residual == pytest.approx(15.0)


def test_audit_key_mismatch():
    with pytest.raises(DomainError):
        audit_paper_consistency({"A": 1.0}, {"B": 1.0})


def test_published_tables_pass_audit():
    rows = audit_paper_consistency(flatten_table(PUBLISHED_APCER_ACCURACY), flatten_table(PUBLISHED_HTER))
    assert len(rows) == 14 and all(r.passed for r in rows)
    assert max(r.residual for r in rows) == pytest.approx(0.005, abs=1e-9)


def test_table_csv_round_trip(tmp_path):
    write_table_csv(tmp_path / "t7.csv", PUBLISHED_HTER)
    values = read_table_csv(tmp_path / "t7.csv")
    assert values == flatten_table(PUBLISHED_HTER)
    assert values["Dell-GS9@PADNet-2"] == 12.555


def test_table_csv_without_variant(tmp_path):
    (tmp_path / "t.csv").write_text("pais,value\nDell-GA7,76.74\n")
    assert read_table_csv(tmp_path / "t.csv") == {"Dell-GA7": 76.74}


@pytest.mark.parametrize("body", ["a,b\n1,2\n", "pais,value\nX,abc\n", "pais,value\nX,1\nX,2\n", "pais,value\nX,inf\n"])
def test_table_csv_errors(tmp_path, body):
    (tmp_path / "t.csv").write_text(body)
    with pytest.raises(FormatError):
        read_table_csv(tmp_path / "t.csv")
