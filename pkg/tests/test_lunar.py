"""
Tests for the Moon-anomaly perturbation sweep.
"""

import math

import numpy as np
import pytest

from eco_deflect.lunar import (
    LunarSweepConfig,
    build_entry_state,
    perigee_distance,
    sweep_moon_anomaly,
)
from eco_deflect.units import make_earth_centred_units


@pytest.fixture(scope="module")
def entry(scenario):
    return build_entry_state(scenario, 10.0)


class TestEntryState:
    def test_entry_on_soi_sphere(self, scenario, entry):
        units = make_earth_centred_units()
        expected = scenario.soi_radius * scenario.units.length_unit / units.length_unit
        assert entry.radius == pytest.approx(expected, rel=1e-12)

    def test_entry_is_inbound_prograde_and_planar(self, entry):
        assert float(entry.position @ entry.velocity) < 0.0
        assert np.cross(entry.position, entry.velocity)[2] > 0.0
        assert entry.position[2] == 0.0
        assert entry.velocity[2] == 0.0

    def test_two_body_perigee_matches_nominal(self, entry):
        r0, v0 = entry.radius, entry.speed
        energy = 0.5 * v0 * v0 - 1.0 / r0
        h = float(np.linalg.norm(np.cross(entry.position, entry.velocity)))
        ecc = math.sqrt(1.0 + 2.0 * energy * h * h)
        assert h * h / (1.0 + ecc) == pytest.approx(10.0, rel=1e-10)

    def test_non_positive_miss_rejected(self, scenario):
        with pytest.raises(ValueError):
            build_entry_state(scenario, 0.0)


class TestSweepConfig:
    def test_empty_grid_rejected(self, entry):
        with pytest.raises(ValueError, match="empty"):
            LunarSweepConfig(10.0, entry, anomaly_grid_deg=np.array([]))

    def test_negative_moon_rejected(self, entry):
        with pytest.raises(ValueError):
            LunarSweepConfig(10.0, entry, mu_moon=-1.0)

    def test_moon_orbit_in_earth_radii(self, entry):
        cfg = LunarSweepConfig(10.0, entry)
        assert cfg.moon_semi_axis == pytest.approx(60.3, rel=1e-2)
        assert cfg.anomaly_grid_deg.size == 360


class TestSweep:
    def test_no_moon_reproduces_the_conic(self, entry):
        cfg = LunarSweepConfig(10.0, entry, anomaly_grid_deg=[0.0, 120.0, 240.0], mu_moon=0.0)
        result = sweep_moon_anomaly(cfg)
        assert all(p.status == "ok" for p in result.points)
        assert result.max_abs_error < 1e-8
        assert not result.jumps

    def test_moon_shifts_the_perigee(self, entry):
        cfg = LunarSweepConfig(10.0, entry, anomaly_grid_deg=[0.0, 90.0, 180.0, 270.0])
        result = sweep_moon_anomaly(cfg)
        assert [p.f_deg for p in result.points] == [0.0, 90.0, 180.0, 270.0]
        assert all(p.status == "ok" for p in result.points)
        assert 0.0 < result.max_abs_error < 0.5
        assert result.max_reduction().rel_error <= result.max_gain().rel_error

    def test_rows(self, entry):
        cfg = LunarSweepConfig(10.0, entry, anomaly_grid_deg=[45.0], mu_moon=0.0)
        (row,) = sweep_moon_anomaly(cfg).rows()
        assert set(row) == {"f_deg", "miss_re", "rel_error"}
        assert row["miss_re"] == pytest.approx(10.0, rel=1e-8)

    def test_single_point(self, entry):
        cfg = LunarSweepConfig(10.0, entry, mu_moon=0.0)
        assert perigee_distance(cfg, 0.0) == pytest.approx(10.0, rel=1e-8)


@pytest.mark.slow
class TestFullSweep:
    def test_full_circle(self, entry):
        result = sweep_moon_anomaly(LunarSweepConfig(10.0, entry, workers=2))
        assert len(result.points) == 360
        assert result.max_abs_error >= 0.01
        lo, hi = result.max_reduction().f_deg, result.max_gain().f_deg
        gap = abs(lo - hi) % 360.0
        assert min(gap, 360.0 - gap) <= 3.0
