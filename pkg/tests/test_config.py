import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardtorus.config import (ExperimentConfig, parse_config,
                              serialize_config, with_point)
from hardtorus.errors import ConfigError
from hardtorus.geometry import Tolerances

MINIMAL = """\
[system]
masses = 1.0, 2.0
radius = 0.1
"""


class TestParse:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.masses == (1.0, 2.0)
        assert cfg.radius == 0.1
        assert cfg.seed == 0
        assert cfg.t_max == 10.0
        assert cfg.tolerances == Tolerances()
        assert cfg.l0 is None
        assert cfg.ensemble == 1
        assert cfg.radius_grid == () and cfg.mass_grid == ()

    def test_comments_and_blank_lines_ignored(self):
        text = "# leading comment\n\n; alt comment\n" + MINIMAL
        assert parse_config(text) == parse_config(MINIMAL)

    def test_full_document(self):
        text = MINIMAL + """
[run]
seed = 42
t_max = 25.0

[tolerances]
tangency_tol = 1e-9

[analysis]
c0 = 2.0
l0 = 1, -2
ensemble = 3
max_group = 4

[scan]
radius_grid = 0.05, 0.1
mass_grid = 1.0, 1.0; 1.0, 2.0
"""
        cfg = parse_config(text)
        assert cfg.seed == 42 and cfg.t_max == 25.0
        assert cfg.tolerances.tangency_tol == 1e-9
        assert cfg.c0 == 2.0 and cfg.l0 == (1, -2)
        assert cfg.ensemble == 3 and cfg.max_group == 4
        assert cfg.radius_grid == (0.05, 0.1)
        assert cfg.mass_grid == ((1.0, 1.0), (1.0, 2.0))

    def test_unknown_key_named_with_line(self):
        text = "[system]\nmasses = 1.0, 1.0\nraduis = 0.1\n"
        with pytest.raises(ConfigError, match="raduis") as exc:
            parse_config(text)
        assert exc.value.line == 3

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match=r"unknown section \[sytem\]"):
            parse_config("[sytem]\nmasses = 1.0\n")

    def test_unterminated_header(self):
        with pytest.raises(ConfigError, match="unterminated"):
            parse_config("[system\nmasses = 1.0\n")

    def test_key_outside_section(self):
        with pytest.raises(ConfigError, match="outside"):
            parse_config("masses = 1.0, 1.0\n")

    def test_duplicate_key(self):
        text = MINIMAL + "radius = 0.2\n"
        with pytest.raises(ConfigError, match="duplicate") as exc:
            parse_config(text)
        assert exc.value.line == 4

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="missing required key radius"):
            parse_config("[system]\nmasses = 1.0, 1.0\n")

    def test_malformed_number_has_line(self):
        text = "[system]\nmasses = 1.0, 1.0\nradius = fat\n"
        with pytest.raises(ConfigError, match="expects a number") as exc:
            parse_config(text)
        assert exc.value.line == 3

    def test_l0_needs_two_integers(self):
        with pytest.raises(ConfigError, match="two comma-separated"):
            parse_config(MINIMAL + "[analysis]\nl0 = 1\n")

    def test_seed_bounds(self):
        with pytest.raises(ConfigError, match="64-bit"):
            parse_config(MINIMAL + "[run]\nseed = -1\n")
        with pytest.raises(ConfigError, match="64-bit"):
            parse_config(MINIMAL + f"[run]\nseed = {2 ** 64}\n")

    def test_value_checks(self):
        with pytest.raises(ConfigError, match="t_max"):
            parse_config(MINIMAL + "[run]\nt_max = 0\n")
        with pytest.raises(ConfigError, match="ensemble"):
            parse_config(MINIMAL + "[analysis]\nensemble = 0\n")
        with pytest.raises(ConfigError, match="tolerance"):
            parse_config(MINIMAL + "[tolerances]\ntangency_tol = -1\n")


class TestSerialize:
    def test_round_trip_equality(self):
        cfg = parse_config(MINIMAL)
        assert parse_config(serialize_config(cfg)) == cfg

    def test_idempotent_normal_form(self):
        text = serialize_config(parse_config(MINIMAL))
        assert serialize_config(parse_config(text)) == text

    def test_optional_fields_written_only_when_set(self):
        text = serialize_config(parse_config(MINIMAL))
        assert "l0" not in text and "[scan]" not in text
        cfg = ExperimentConfig(masses=(1.0, 1.0), radius=0.1, l0=(0, 1),
                               radius_grid=(0.05,))
        text2 = serialize_config(cfg)
        assert "l0 = 0, 1" in text2 and "radius_grid" in text2

    def test_with_point(self):
        cfg = parse_config(MINIMAL)
        pt = with_point(cfg, masses=(2.0, 3.0), radius=0.05)
        assert pt.masses == (2.0, 3.0) and pt.radius == 0.05
        assert pt.seed == cfg.seed

    @given(
        st.lists(st.floats(0.1, 10.0), min_size=2, max_size=4),
        st.floats(0.01, 0.12),
        st.integers(0, 2 ** 64 - 1),
        st.floats(0.1, 100.0),
        st.one_of(st.none(),
                  st.tuples(st.integers(-5, 5), st.integers(-5, 5))),
        st.integers(1, 4),
    )
    @settings(max_examples=100)
    def test_round_trip_fuzz(self, masses, radius, seed, t_max, l0, ensemble):
        cfg = ExperimentConfig(masses=tuple(masses), radius=radius,
                               seed=seed, t_max=t_max, l0=l0,
                               ensemble=ensemble)
        assert parse_config(serialize_config(cfg)) == cfg
