"""Family spec parsing, hashing and JSON round trips."""

import json

import pytest

from src.errors import ConfigError
from src.loss_family import (MlpFamily, MlpFamilySpec, QuadraticFamily,
                             QuadraticFamilySpec, build_family,
                             dump_family_spec, family_hash, load_family_spec,
                             parse_family_spec)


class TestFamilySpecs:
    """Test suite for the JSON family specs"""

    def test_discriminated_by_kind(self):
        """`kind` selects the spec model"""
        assert isinstance(parse_family_spec({"kind": "quadratic"}), QuadraticFamilySpec)
        assert isinstance(parse_family_spec({"kind": "mlp"}), MlpFamilySpec)

    def test_build_family_dispatch(self):
        """build_family returns the matching family type"""
        quad = build_family(QuadraticFamilySpec(dimension=6, max_samples=4, d_true=2))
        mlp = build_family(MlpFamilySpec(layer_sizes=[2, 3, 1], max_samples=4))
        assert isinstance(quad, QuadraticFamily) and quad.dimension == 6
        assert isinstance(mlp, MlpFamily) and mlp.dimension == 13

    def test_error_names_location(self):
        """Validation errors report the offending field"""
        with pytest.raises(ConfigError, match="quadratic.dimension"):
            parse_family_spec({"kind": "quadratic", "dimension": 0})

    def test_unknown_kind(self):
        """An unknown kind is a config error"""
        with pytest.raises(ConfigError, match="invalid family spec"):
            parse_family_spec({"kind": "transformer"})

    def test_d_true_bounded(self):
        """d_true cannot exceed the dimension"""
        with pytest.raises(ConfigError, match="d_true"):
            parse_family_spec({"kind": "quadratic", "dimension": 3, "d_true": 5})

    def test_mlp_needs_scalar_output(self):
        """The last layer must have one unit"""
        with pytest.raises(ConfigError, match="single unit"):
            parse_family_spec({"kind": "mlp", "layer_sizes": [4, 2]})

    def test_hash_stable_and_sensitive(self):
        """Equal specs hash equal; any field change changes the hash"""
        a = QuadraticFamilySpec(seed=1)
        assert family_hash(a) == family_hash(QuadraticFamilySpec(seed=1))
        assert family_hash(a) != family_hash(QuadraticFamilySpec(seed=2))

    def test_file_round_trip(self, tmp_path):
        """dump then load gives an equal spec and identical text"""
        spec = MlpFamilySpec(layer_sizes=[4, 8, 1], noise=0.05, seed=9)
        path = tmp_path / "family.json"
        path.write_text(dump_family_spec(spec), encoding="utf-8")
        loaded = load_family_spec(path)
        assert loaded == spec
        assert dump_family_spec(loaded) == path.read_text(encoding="utf-8")

    def test_invalid_json_file(self, tmp_path):
        """Malformed JSON is a config error with a line number"""
        path = tmp_path / "broken.json"
        path.write_text('{"kind": "mlp",\n', encoding="utf-8")
        with pytest.raises(ConfigError, match="line"):
            load_family_spec(path)

    def test_missing_file(self, tmp_path):
        """A missing file is a config error"""
        with pytest.raises(ConfigError, match="not found"):
            load_family_spec(tmp_path / "absent.json")

    def test_dump_is_sorted_json(self):
        """The dump is valid JSON with sorted keys"""
        text = dump_family_spec(QuadraticFamilySpec())
        data = json.loads(text)
        assert list(data) == sorted(data)
