"""Dataset loaders, CSV round-trips, and the synthetic generator."""

from __future__ import annotations

import json

import numpy as np
import pytest

from tsadkit import (
    DatasetManifest,
    SynthSpec,
    excluded_from_benchmark,
    generate_synthetic,
    load_manifest,
    load_nab_csv,
    load_yahoo_csv,
    synthetic_base,
    write_series_csv,
)
from tsadkit.errors import (
    InvalidSpec,
    LabelFileMissingEntry,
    MissingColumn,
    ParseError,
)

from conftest import series


class TestYahooCsv:
    def test_three_row_transcription(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("timestamp,value,is_anomaly\n1,5.0,0\n2,9.0,1\n3,5.1,0\n")
        out = load_yahoo_csv(path)
        assert out.values.tolist() == [5.0, 9.0, 5.1]
        assert out.labels.tolist() == [0, 1, 0]
        assert out.series_id == "a"

    def test_anomaly_column_alias(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("timestamps,value,anomaly\n1,1.0,0\n2,2.0,1\n")
        out = load_yahoo_csv(path)
        assert out.labels.tolist() == [0, 1]

    def test_changepoint_flags_are_merged(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text(
            "timestamps,value,anomaly,changepoint\n1,1.0,0,0\n2,2.0,1,0\n3,3.0,0,1\n4,4.0,0,0\n"
        )
        out = load_yahoo_csv(path)
        assert out.labels.tolist() == [0, 1, 1, 0]

    def test_missing_label_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("timestamp,value\n1,5.0\n")
        with pytest.raises(MissingColumn) as err:
            load_yahoo_csv(path)
        assert err.value.column == "is_anomaly"

    def test_missing_value_column(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("timestamp,is_anomaly\n1,0\n")
        with pytest.raises(MissingColumn) as err:
            load_yahoo_csv(path)
        assert err.value.column == "value"

    def test_parse_error_carries_row(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("timestamp,value,is_anomaly\n1,5.0,0\n2,oops,0\n")
        with pytest.raises(ParseError) as err:
            load_yahoo_csv(path)
        assert err.value.row == 3  # header is line 1

    def test_non_binary_label_rejected(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("timestamp,value,is_anomaly\n1,5.0,2\n")
        with pytest.raises(ParseError):
            load_yahoo_csv(path)


class TestNabCsv:
    def test_interval_membership(self, tmp_path):
        data = tmp_path / "taxi.csv"
        data.write_text(
            "timestamp,value\n"
            "2014-07-01 00:00:00,10.0\n"
            "2014-07-01 00:30:00,11.0\n"
            "2014-07-01 01:00:00,12.0\n"
            "2014-07-01 01:30:00,13.0\n"
        )
        labels = tmp_path / "windows.json"
        labels.write_text(
            json.dumps({"taxi.csv": [["2014-07-01 00:30:00", "2014-07-01 01:00:00"]]})
        )
        out = load_nab_csv(data, labels)
        assert out.values.tolist() == [10.0, 11.0, 12.0, 13.0]
        assert out.labels.tolist() == [0, 1, 1, 0]

    def test_missing_entry(self, tmp_path):
        data = tmp_path / "taxi.csv"
        data.write_text("timestamp,value\n2014-07-01 00:00:00,10.0\n")
        labels = tmp_path / "windows.json"
        labels.write_text(json.dumps({"other.csv": []}))
        with pytest.raises(LabelFileMissingEntry):
            load_nab_csv(data, labels)

    def test_relative_key_match(self, tmp_path):
        data = tmp_path / "taxi.csv"
        data.write_text("timestamp,value\n2014-07-01 00:00:00,10.0\n")
        labels = tmp_path / "windows.json"
        labels.write_text(json.dumps({"realKnownCause/taxi.csv": []}))
        out = load_nab_csv(data, labels)
        assert out.labels.tolist() == [0]


class TestRoundTrip:
    def test_bit_equal_after_rewrite(self, tmp_path):
        rng = np.random.default_rng(11)
        original = series(rng.standard_normal(64) * 1e3, labels=(rng.random(64) < 0.1).astype(int))
        first = tmp_path / "one.csv"
        write_series_csv(original, first)
        loaded = load_yahoo_csv(first)
        second = tmp_path / "two.csv"
        write_series_csv(loaded, second)
        again = load_yahoo_csv(second)
        assert np.array_equal(loaded.values, original.values)
        assert np.array_equal(again.values, original.values)
        assert np.array_equal(again.labels, original.labels)


class TestManifest:
    def test_load_with_comments(self, tmp_path):
        csv_a = tmp_path / "s1.csv"
        csv_a.write_text("timestamp,value,is_anomaly\n1,1.0,0\n")
        csv_b = tmp_path / "s2.csv"
        csv_b.write_text("timestamp,value,is_anomaly\n1,2.0,0\n")
        manifest = tmp_path / "UD1.txt"
        manifest.write_text("# comment\ns1.csv\n\ns2.csv\n")
        out = load_manifest(manifest, "UD1")
        assert [sid for sid, _ in out.series] == ["s1", "s2"]

    def test_expected_count_mismatch(self, tmp_path):
        csv_a = tmp_path / "s1.csv"
        csv_a.write_text("timestamp,value,is_anomaly\n1,1.0,0\n")
        manifest = tmp_path / "UD1.txt"
        manifest.write_text("s1.csv\n")
        with pytest.raises(InvalidSpec):
            load_manifest(manifest, "UD1", expected_count=2)

    def test_duplicate_series_id(self):
        with pytest.raises(InvalidSpec):
            DatasetManifest(dataset_id="UD1", series=(("s", "a.csv"), ("s", "b.csv")))

    def test_unknown_dataset_id(self):
        with pytest.raises(InvalidSpec):
            DatasetManifest(dataset_id="BOGUS", series=())


class TestSynthetic:
    def test_deterministic(self):
        spec = SynthSpec(length=200, base="ar_process", anomaly_rate=0.02, ar_coeffs=(0.5,), seed=7)
        a = generate_synthetic(spec)
        b = generate_synthetic(spec)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.labels, b.labels)

    def test_point_count(self):
        spec = SynthSpec(length=1000, base="ar_process", anomaly_rate=0.01, seed=3)
        out = generate_synthetic(spec)
        assert int(out.labels.sum()) == 10

    def test_point_displacement(self):
        spec = SynthSpec(length=1000, base="ar_process", anomaly_rate=0.01, seed=5)
        out = generate_synthetic(spec)
        base = synthetic_base(spec)
        sd = base.std()
        moved = np.flatnonzero(out.labels)
        assert np.all(np.abs(out.values[moved] - base[moved]) >= 6 * sd)

    def test_unlabeled_values_untouched(self):
        for kind in ("point", "collective"):
            spec = SynthSpec(length=600, base="sine_seasonal", anomaly_rate=0.02, anomaly_kind=kind, seed=9)
            out = generate_synthetic(spec)
            base = synthetic_base(spec)
            clean = out.labels == 0
            assert np.array_equal(out.values[clean], base[clean])

    def test_collective_run_is_contiguous(self):
        spec = SynthSpec(length=800, base="ar_process", anomaly_rate=0.02, anomaly_kind="collective", seed=2)
        out = generate_synthetic(spec)
        marked = np.flatnonzero(out.labels)
        assert marked.size >= 2
        assert np.all(np.diff(marked) == 1)

    def test_changepoint_shift_and_trailing_labels(self):
        spec = SynthSpec(length=1000, base="ar_process", anomaly_rate=0.02, anomaly_kind="changepoint", seed=4)
        out = generate_synthetic(spec)
        base = synthetic_base(spec)
        sd = base.std()
        marked = np.flatnonzero(out.labels)
        change = marked[0]
        assert np.all(np.diff(marked) == 1)
        shift = np.abs(out.values[change:] - base[change:])
        assert np.all(shift >= 3 * sd)
        assert np.array_equal(out.values[:change], base[:change])

    def test_sine_sets_period_hint(self):
        spec = SynthSpec(length=300, base="sine_seasonal", anomaly_rate=0.01, seed=1, season_period=25)
        assert generate_synthetic(spec).period_hint == 25

    def test_invalid_specs(self):
        with pytest.raises(InvalidSpec):
            SynthSpec(length=50, base="ar_process", anomaly_rate=0.01, seed=1)  # rate*length < 1
        with pytest.raises(InvalidSpec):
            SynthSpec(length=1, base="ar_process", anomaly_rate=0.9, seed=1)
        with pytest.raises(InvalidSpec):
            SynthSpec(length=100, base="ar_process", anomaly_rate=0.1, seed=1, ar_coeffs=(1.0,))
        with pytest.raises(InvalidSpec):
            SynthSpec(length=100, base="nope", anomaly_rate=0.1, seed=1)

    def test_stationary_coeffs_accepted(self):
        spec = SynthSpec(length=120, base="ar_process", anomaly_rate=0.1, seed=1, ar_coeffs=(0.5, -0.3))
        assert generate_synthetic(spec).values.size == 120


class TestExclusion:
    def test_anomaly_free_test_split(self):
        labels = np.zeros(100, dtype=np.int64)
        labels[4] = 1  # only inside the train segment
        assert excluded_from_benchmark(series(np.arange(100.0), labels=labels))

    def test_kept_when_test_has_positives(self):
        labels = np.zeros(100, dtype=np.int64)
        labels[80] = 1
        assert not excluded_from_benchmark(series(np.arange(100.0), labels=labels))

    def test_unlabeled_series_excluded(self):
        assert excluded_from_benchmark(series(np.arange(100.0)))
