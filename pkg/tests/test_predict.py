import numpy as np
import pytest

from tdlforge.core import ContractError, TdlParams, ValidationError
from tdlforge.predict import (
    PredictionRecord,
    baseline_nearest_tdl,
    load_predictions,
    save_predictions,
)


def tdl(p=-60.0, n=1):
    delays = np.arange(n) * 33.3
    powers = np.concatenate([[0.0], np.full(n - 1, -6.0)]) if n > 1 else np.zeros(1)
    return TdlParams(first_tap_power_db=p, k_factor_db=5.0, num_taps=n,
                     delays_ns=delays, powers_db=powers)


class TestLoadPredictions:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "pred.jsonl"
        path.write_text("")
        assert load_predictions(path) == []

    def test_single_record(self, tmp_path):
        path = tmp_path / "pred.jsonl"
        save_predictions([PredictionRecord(timestamp_s=1.5, tdl=tdl())], path)
        records = load_predictions(path)
        assert len(records) == 1
        assert records[0].timestamp_s == 1.5
        assert records[0].tdl.first_tap_power_db == -60.0

    def test_sorted_by_timestamp(self, tmp_path):
        path = tmp_path / "pred.jsonl"
        save_predictions([PredictionRecord(2.0, tdl(-61.0)),
                          PredictionRecord(1.0, tdl(-62.0))], path)
        records = load_predictions(path)
        assert [r.timestamp_s for r in records] == [1.0, 2.0]

    def test_invalid_tdl_names_line(self, tmp_path):
        path = tmp_path / "pred.jsonl"
        path.write_text('{"timestamp_s": 1.0, "tdl": {"first_tap_power_db": -60}}\n')
        with pytest.raises(ValidationError, match=":1"):
            load_predictions(path)

    def test_bad_json_names_line(self, tmp_path):
        path = tmp_path / "pred.jsonl"
        path.write_text("not json\n")
        with pytest.raises(ValidationError, match=":1"):
            load_predictions(path)


class TestBaselineNearest:
    def test_singleton(self):
        t = tdl()
        assert baseline_nearest_tdl([(100.0, t)], 5.0) is t

    def test_exact_match(self):
        a, b = tdl(-60.0), tdl(-70.0)
        assert baseline_nearest_tdl([(100.0, a), (200.0, b)], 200.0) is b

    def test_query_between_anchors(self):
        a, b = tdl(-60.0), tdl(-70.0)
        assert baseline_nearest_tdl([(100.0, a), (200.0, b)], 130.0) is a

    def test_tie_prefers_smaller_distance(self):
        a, b = tdl(-60.0), tdl(-70.0)
        assert baseline_nearest_tdl([(100.0, a), (200.0, b)], 150.0) is a

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            baseline_nearest_tdl([], 1.0)
