"""CSV records and sweep config validation."""

import pytest

from src.errors import ConfigError, InvalidArgumentError
from src.experiments import (RECORD_FIELDS, ExperimentRecord, SweepConfig,
                             load_sweep_config, parse_sweep_config,
                             read_records_csv, write_records_csv)

HEADER = "experiment,k,D,sigma,estimator,S,value,std_error,stage1_s,stage2_s,stage3_s,hvp_calls,seed"


def record(**overrides) -> ExperimentRecord:
    fields = dict(
        experiment="decay", k=8, D=5, sigma=1e-3, estimator="direct_mc", S=4096,
        value=0.1 + 0.2, std_error=1.0 / 3.0, stage1_s=0.25, stage2_s=0.0,
        stage3_s=0.125, hvp_calls=317, seed=42,
    )
    fields.update(overrides)
    return ExperimentRecord(**fields)


class TestRecordsCsv:
    """Test suite for write_records_csv / read_records_csv"""

    def test_exact_header(self, tmp_path):
        """The header matches the published column order"""
        path = write_records_csv([record()], tmp_path / "out.csv")
        assert path.read_text().splitlines()[0] == HEADER
        assert ",".join(RECORD_FIELDS) == HEADER

    def test_round_trip(self, tmp_path):
        """Parsing an emitted file gives the same records"""
        records = [record(), record(k=16, value=1e-300), record(estimator="delta1", D=0, sigma=0.0)]
        path = write_records_csv(records, tmp_path / "out.csv")
        assert sorted(read_records_csv(path), key=ExperimentRecord.sort_key) == sorted(
            records, key=ExperimentRecord.sort_key
        )

    def test_shortest_float_form(self, tmp_path):
        """Floats are written in shortest round-trip form"""
        path = write_records_csv([record()], tmp_path / "out.csv")
        row = path.read_text().splitlines()[1].split(",")
        assert row[RECORD_FIELDS.index("value")] == "0.30000000000000004"
        assert row[RECORD_FIELDS.index("sigma")] == "0.001"

    def test_rows_sorted(self, tmp_path):
        """Rows come out by (experiment, k, D, sigma, estimator, S)"""
        records = [record(k=32), record(k=8, D=10), record(k=8, D=5)]
        rows = read_records_csv(write_records_csv(records, tmp_path / "out.csv"))
        assert [(r.k, r.D) for r in rows] == [(8, 5), (8, 10), (32, 5)]

    def test_zero_timings(self, tmp_path):
        """Determinism mode zeroes the three stage columns only"""
        rows = read_records_csv(write_records_csv([record()], tmp_path / "out.csv", zero_timings=True))
        assert rows[0].stage1_s == rows[0].stage2_s == rows[0].stage3_s == 0.0
        assert rows[0].hvp_calls == 317

    def test_bad_header(self, tmp_path):
        """A foreign CSV is rejected"""
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(InvalidArgumentError, match="header"):
            read_records_csv(path)

    def test_negative_value_rejected(self):
        """Record values are non-negative"""
        with pytest.raises(ValueError):
            record(value=-1.0)


# ============================================================================
# Sweep config
# ============================================================================


class TestSweepConfig:
    """Test suite for SweepConfig validation"""

    def setup_method(self):
        """Setup for each test"""
        self.data = {
            "experiment": "decay",
            "family": {"kind": "quadratic", "dimension": 16, "max_samples": 17},
            "k_grid": [2, 4, 8, 16],
            "D_grid": [2, 4],
            "sigma_grid": [1e-3],
        }

    def test_valid(self):
        """A well-formed config parses with defaults filled in"""
        cfg = parse_sweep_config(self.data)
        assert isinstance(cfg, SweepConfig)
        assert cfg.family.kind == "quadratic"
        assert cfg.threads == 1 and cfg.S >= 2

    def test_unsorted_grid(self):
        """Grids must be strictly ascending"""
        self.data["k_grid"] = [4, 2]
        with pytest.raises(ConfigError, match="k_grid"):
            parse_sweep_config(self.data)

    def test_k_exceeds_samples(self):
        """max(k_grid) + 1 must fit in the family"""
        self.data["k_grid"] = [2, 17]
        with pytest.raises(ConfigError, match="max_samples"):
            parse_sweep_config(self.data)

    def test_d_exceeds_dimension(self):
        """D cannot exceed N"""
        self.data["D_grid"] = [2, 32]
        with pytest.raises(ConfigError, match="D_grid"):
            parse_sweep_config(self.data)

    def test_error_location(self):
        """Field errors carry their dotted location"""
        self.data["family"]["dimension"] = 0
        with pytest.raises(ConfigError, match="family.quadratic.dimension"):
            parse_sweep_config(self.data)

    def test_unknown_experiment(self):
        """The experiment tag is checked"""
        self.data["experiment"] = "sharpness"
        with pytest.raises(ConfigError, match="experiment"):
            parse_sweep_config(self.data)

    def test_load_missing_file(self, tmp_path):
        """A missing config file is a config error"""
        with pytest.raises(ConfigError, match="not found"):
            load_sweep_config(tmp_path / "absent.json")

    def test_load_bad_json(self, tmp_path):
        """Broken JSON reports its line"""
        path = tmp_path / "bad.json"
        path.write_text('{\n  "experiment": \n}')
        with pytest.raises(ConfigError, match="line"):
            load_sweep_config(path)
