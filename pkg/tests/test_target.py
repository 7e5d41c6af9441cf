"""
Tests for the box geometry, heated sampling and dataset I/O.
"""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import trapezoid

from betagan.diagnostics import nearest_point_distances
from betagan.models import BoxDomain, ContractError, DataFormatError, Dataset, DimensionError, InverseTemperature
from betagan.target import (
    heated_density,
    load_dataset,
    reflect_into_box,
    rescale_dataset,
    sample_heated,
    sample_target,
    sample_uniform,
    save_dataset,
)


class TestRescaleDataset:
    """Test the affine map into the box."""

    def test_endpoints_map_to_endpoints(self):
        data = rescale_dataset(np.array([[0.0], [10.0]]), BoxDomain(dim=1))
        np.testing.assert_array_equal(data.points[:, 0], [-1.0, 1.0])

    def test_spanning_data_unchanged(self):
        raw = np.array([[-1.0, 1.0], [0.25, -1.0], [1.0, 0.5]])
        data = rescale_dataset(raw, BoxDomain(dim=2))
        np.testing.assert_allclose(data.points, raw, atol=1e-15)

    def test_constant_coordinate_goes_to_midpoint(self):
        raw = np.array([[0.0, 7.0], [3.0, 7.0], [5.0, 7.0]])
        data = rescale_dataset(raw, BoxDomain(dim=2))
        np.testing.assert_array_equal(data.points[:, 1], 0.0)

    def test_transform_inverts(self):
        raw = np.random.default_rng(0).normal(size=(50, 3))
        data = rescale_dataset(raw)
        np.testing.assert_allclose(data.transform.invert(data.points), raw, atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            rescale_dataset(np.zeros((0, 2)))

    def test_box_dimension_checked(self):
        with pytest.raises(DimensionError):
            rescale_dataset(np.zeros((4, 2)), BoxDomain(dim=3))


class TestReflection:
    """Test mirror folding at the walls."""

    def test_inside_points_unchanged(self):
        box = BoxDomain(dim=1)
        points = np.array([[-0.9], [0.0], [0.3]])
        np.testing.assert_array_equal(reflect_into_box(points, box), points)

    def test_single_and_multiple_reflections(self):
        box = BoxDomain(dim=1)
        points = np.array([[1.25], [-1.5], [3.5], [5.0]])
        np.testing.assert_allclose(reflect_into_box(points, box), [[0.75], [-0.5], [-0.5], [1.0]], atol=1e-12)


class TestSampling:
    """Test uniform and heated samplers."""

    def setup_method(self):
        self.rng = np.random.default_rng(2024)

    def test_infinity_returns_data_points(self):
        data = Dataset(points=np.array([[0.1, 0.2], [-0.5, 0.4]]), box=BoxDomain(dim=2))
        samples = sample_heated(data, InverseTemperature.infinity(), 200, self.rng)
        rows = {tuple(p) for p in data.points}
        assert all(tuple(s) in rows for s in samples)

    def test_uniform_rejected_by_heated_sampler(self):
        data = Dataset(points=np.zeros((1, 1)), box=BoxDomain(dim=1))
        with pytest.raises(ContractError):
            sample_heated(data, InverseTemperature.uniform(), 10, self.rng)

    def test_dispatch_needs_data_for_finite_beta(self):
        with pytest.raises(ContractError):
            sample_target(None, BoxDomain(dim=1), InverseTemperature.finite(1.0), 10, self.rng)
        assert sample_target(None, BoxDomain(dim=2), InverseTemperature.uniform(), 10, self.rng).shape == (10, 2)

    def test_heated_std_one_dimension(self):
        data = Dataset(points=np.zeros((1, 1)), box=BoxDomain(-10.0, 10.0, 1))
        samples = sample_heated(data, InverseTemperature.finite(4.0), 1_000_000, self.rng)
        assert samples.std() == pytest.approx(0.5, abs=0.002)

    def test_heated_second_moment_three_dimensions(self):
        data = Dataset(points=np.zeros((1, 3)), box=BoxDomain(-10.0, 10.0, 3))
        samples = sample_heated(data, InverseTemperature.finite(1.0), 1_000_000, self.rng)
        assert np.mean(np.sum(samples ** 2, axis=1)) == pytest.approx(3.0, abs=0.02)

    def test_heated_samples_stay_in_box(self):
        data = Dataset(points=np.array([[0.95, -0.95]]), box=BoxDomain(dim=2))
        samples = sample_heated(data, InverseTemperature.finite(0.1), 10_000, self.rng)
        assert data.box.contains(samples)

    def test_concentrates_as_beta_grows(self):
        points = np.array([[-0.6, -0.6], [0.6, 0.6]])
        data = Dataset(points=points, box=BoxDomain(dim=2))
        distances = [
            nearest_point_distances(sample_heated(data, InverseTemperature.finite(b), 100_000, self.rng), points).mean()
            for b in (1.0, 10.0, 100.0)
        ]
        assert distances[0] > distances[1] * 1.1
        assert distances[1] > distances[2] * 1.1

    def test_heated_reproducible(self):
        data = Dataset(points=np.array([[0.0], [0.5]]), box=BoxDomain(dim=1))
        a = sample_heated(data, InverseTemperature.finite(3.0), 100, np.random.default_rng(9))
        b = sample_heated(data, InverseTemperature.finite(3.0), 100, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_uniform_moments(self):
        samples = sample_uniform(BoxDomain(dim=2), 1_000_000, self.rng)
        np.testing.assert_allclose(samples.mean(axis=0), 0.0, atol=0.003)
        np.testing.assert_allclose(samples.var(axis=0), 1.0 / 3.0, atol=0.002)

    def test_uniform_support_and_ks(self):
        box = BoxDomain(0.0, 1.0, 1)
        samples = sample_uniform(box, 1_000_000, self.rng)
        assert box.contains(samples)
        assert stats.kstest(samples[:, 0], "uniform").statistic < 0.002


class TestHeatedDensity:
    """Test the untruncated mixture density oracle."""

    def test_unit_prefactor(self):
        data = Dataset(points=np.array([[0.3]]), box=BoxDomain(dim=1))
        assert heated_density(data, 2 * math.pi, np.array([0.3])) == pytest.approx(1.0, rel=1e-12)

    def test_symmetric_pair(self):
        data = Dataset(points=np.array([[-1.0], [1.0]]), box=BoxDomain(-2.0, 2.0, 1))
        beta = 3.0
        expected = math.sqrt(beta / (2 * math.pi)) * math.exp(-beta / 2)
        assert heated_density(data, beta, np.array([0.0])) == pytest.approx(expected, rel=1e-12)

    def test_integrates_to_one(self):
        data = Dataset(points=np.array([[-0.5], [0.2], [0.9]]), box=BoxDomain(dim=1))
        grid = np.linspace(-12.0, 12.0, 48_001)
        values = [heated_density(data, 4.0, np.array([x])) for x in grid]
        assert trapezoid(values, grid) == pytest.approx(1.0, abs=1e-6)

    def test_rejects_infinite_beta(self):
        data = Dataset(points=np.zeros((1, 1)), box=BoxDomain(dim=1))
        with pytest.raises(ContractError):
            heated_density(data, math.inf, np.zeros(1))


class TestDatasetFiles:
    """Test CSV load/save."""

    def test_round_trip(self, tmp_path):
        points = np.random.default_rng(1).uniform(-1, 1, size=(25, 3))
        path = save_dataset(Dataset(points=points, box=BoxDomain(dim=3)), tmp_path / "data.csv")
        loaded = load_dataset(path)
        np.testing.assert_array_equal(loaded.points, points)

    def test_loader_rescales_with_box(self, tmp_path):
        (tmp_path / "raw.csv").write_text("0,5\n10,7\n")
        loaded = load_dataset(tmp_path / "raw.csv", BoxDomain(dim=1))
        np.testing.assert_array_equal(loaded.points, [[-1.0, -1.0], [1.0, 1.0]])

    def test_malformed_row_reports_line(self, tmp_path):
        (tmp_path / "bad.csv").write_text("0.1,0.2\n0.3,abc\n")
        with pytest.raises(DataFormatError) as excinfo:
            load_dataset(tmp_path / "bad.csv")
        assert excinfo.value.line == 2

    def test_undecodable_row_reports_line(self, tmp_path):
        (tmp_path / "latin.csv").write_bytes(b"0.1,0.2\n0.4,0.5\n\xff\xfe,0.3\n")
        with pytest.raises(DataFormatError) as excinfo:
            load_dataset(tmp_path / "latin.csv")
        assert excinfo.value.line == 3
        assert "UTF-8" in str(excinfo.value)

    def test_crlf_line_endings(self, tmp_path):
        (tmp_path / "dos.csv").write_bytes(b"0.1,0.2\r\n-0.3,0.4\r\n")
        np.testing.assert_array_equal(load_dataset(tmp_path / "dos.csv").points, [[0.1, 0.2], [-0.3, 0.4]])
