from __future__ import annotations

from fractions import Fraction

import pytest

from gsrc.bench import CSV_HEADER, SweepRow, emit_csv, rs_baseline, sweep_alpha


def test_rs_baseline():
    assert rs_baseline(14, 10) == 10
    assert rs_baseline(5, 3) == 3
    assert rs_baseline(2, 1) == 1


def test_small_sweep():
    rows = sweep_alpha(5, 3, [4, 1, 2, 3])
    assert [r.alpha for r in rows] == [1, 2, 3, 4]
    assert rows[0].avg_gamma == 3 and rows[0].source == "rs-baseline" and rows[0].reduction_vs_rs == 0
    assert rows[-1].avg_gamma == 2
    assert rows[-1].reduction_vs_rs == Fraction(100, 3)
    for r in rows:
        assert r.ok and r.within_bounds()
        assert r.reduction_vs_rs == (3 - r.avg_gamma) / 3 * 100


def test_errors_do_not_abort():
    rows = sweep_alpha(8, 4, [2, 3, 4, 9])
    by = {r.alpha: r for r in rows}
    assert by[3].error and "NoValidPartition" in by[3].error
    assert by[9].error
    assert by[2].ok and by[4].ok


def test_csv(tmp_path):
    rows = [SweepRow(64, Fraction(13, 4), Fraction(13, 4), Fraction(11, 2), Fraction(135, 2))]
    path = emit_csv(rows, tmp_path / "s.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1] == "64,3.25,3.25,5.5,67.5,13/4"
    assert len(lines) == 2


def test_csv_empty(tmp_path):
    assert (emit_csv([], tmp_path / "e.csv")).read_text() == ",".join(CSV_HEADER) + "\n"


def test_csv_bad_path(tmp_path):
    with pytest.raises(OSError, match="missing"):
        emit_csv([], tmp_path / "missing" / "x.csv")
