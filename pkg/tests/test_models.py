import numpy as np
import pytest

from src.models import (
    CUMULATIVE,
    HERMITIAN,
    FourierGrid,
    GridMismatch,
    InvalidTimeSeries,
    LevelGrid,
    NonFourierFrequency,
    QSpecQuantity,
    TimeSeries,
    UnknownFrequency,
    UnknownLevel,
    fold_frequency,
    full_circle,
    level_positions,
    snap_frequency,
    sorted_levels,
)


# ============================================================
# TimeSeries and grids
# ============================================================

class TestTimeSeries:
    def test_stores_read_only_float_copy(self):
        data = [1, 2, 3]
        Y = TimeSeries(data)
        assert Y.n == 3
        assert Y.observations.dtype == np.float64
        with pytest.raises(ValueError):
            Y.observations[0] = 5.0

    def test_rejects_short_series(self):
        with pytest.raises(InvalidTimeSeries):
            TimeSeries([1.0])

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(InvalidTimeSeries):
            TimeSeries([0.0, bad, 1.0])

    def test_transform(self):
        Y = TimeSeries([0.0, 1.0]).transform(np.exp)
        np.testing.assert_allclose(Y.observations, [1.0, np.e])


def test_fourier_grid_half_grid():
    grid = FourierGrid(8)
    assert len(grid) == 5
    np.testing.assert_allclose(grid.frequencies, 2 * np.pi * np.arange(5) / 8)
    assert FourierGrid(7).indices.tolist() == [0, 1, 2, 3]


class TestLevelGrid:
    def test_same(self):
        grid = LevelGrid.same([0.25, 0.5])
        assert grid.same_levels
        assert grid.levels1 == (0.25, 0.5)

    def test_requires_strictly_increasing(self):
        with pytest.raises(ValueError):
            LevelGrid((0.5, 0.25), (0.5,))

    def test_check_probabilities(self):
        assert LevelGrid.same([0.1, 0.9]).check_probabilities()
        assert not LevelGrid.same([0.0, 0.5]).check_probabilities()
        assert LevelGrid.same([0.0, 1.0]).check_probabilities(closed=True)


def test_sorted_levels_deduplicates():
    assert sorted_levels([0.75, 0.25, 0.75, 0.5]) == (0.25, 0.5, 0.75)


def test_level_positions():
    assert level_positions((0.25, 0.5, 0.75), [0.75, 0.25]) == [2, 0]
    assert level_positions((0.25, 0.5), None) == [0, 1]
    with pytest.raises(UnknownLevel):
        level_positions((0.25, 0.5), [0.3])


# ============================================================
# Frequency conventions
# ============================================================

class TestFoldFrequency:
    @pytest.mark.parametrize("s_in,expected", [
        (7, (1, True)),
        (8, (0, False)),
        (-5, (3, False)),
        (4, (4, False)),
        (5, (3, True)),
        (11, (3, False)),
    ])
    def test_fold(self, s_in, expected):
        assert fold_frequency(2 * np.pi * s_in / 8, 8) == expected

    def test_rejects_off_grid(self):
        with pytest.raises(NonFourierFrequency):
            fold_frequency(0.1, 8)

    def test_tolerates_rounding(self):
        omega = 2 * np.pi / 3 * 1.0000000001
        assert fold_frequency(omega, 3) == (1, False)


def test_snap_frequency_keeps_two_pi():
    assert snap_frequency(2 * np.pi, 8) == 8
    with pytest.raises(NonFourierFrequency):
        snap_frequency(-2 * np.pi / 8, 8)


# ============================================================
# Quantities
# ============================================================

def _quantity(n=8, B=0, kind=HERMITIAN):
    J = n // 2 + 1 if kind == HERMITIAN else n + 1
    levels = LevelGrid.same([0.25, 0.5])
    rng = np.random.default_rng(1)
    values = rng.standard_normal((J, 2, 2, B + 1)) + 1j * rng.standard_normal((J, 2, 2, B + 1))
    return QSpecQuantity(n=n, grid=np.arange(J), levels=levels, values=values, frequency_kind=kind)


class TestQSpecQuantity:
    def test_shape_checked(self):
        with pytest.raises(GridMismatch):
            QSpecQuantity(
                n=8, grid=np.arange(5), levels=LevelGrid.same([0.5]),
                values=np.zeros((4, 1, 1, 1)), frequency_kind=HERMITIAN
            )

    def test_unknown_frequency_kind(self):
        with pytest.raises(ValueError):
            QSpecQuantity(
                n=8, grid=np.arange(5), levels=LevelGrid.same([0.5]),
                values=np.zeros((5, 1, 1, 1)), frequency_kind="other"
            )

    def test_get_values_conjugates_upper_half(self):
        q = _quantity()
        upper = q.get_values([2 * np.pi * 6 / 8])
        np.testing.assert_allclose(upper[0], np.conj(q.values[2]))
        periodic = q.get_values([2 * np.pi * 10 / 8])
        np.testing.assert_allclose(periodic[0], q.values[2])

    def test_get_values_level_subset(self):
        q = _quantity(B=2)
        out = q.get_values(None, [0.5], [0.25])
        assert out.shape == (5, 1, 1, 3)
        np.testing.assert_allclose(out[:, 0, 0], q.values[:, 1, 0])

    def test_get_values_missing_frequency(self):
        q = QSpecQuantity(
            n=8, grid=[1, 2], levels=LevelGrid.same([0.5]),
            values=np.ones((2, 1, 1, 1)), frequency_kind=HERMITIAN
        )
        with pytest.raises(UnknownFrequency):
            q.get_values([0.0])

    def test_cumulative_quantities_are_not_folded(self):
        q = _quantity(kind=CUMULATIVE)
        out = q.get_values([2 * np.pi])
        np.testing.assert_allclose(out[0], q.values[8])

    def test_summary_header(self):
        text = _quantity(B=1).summary()
        assert text.splitlines()[0] == "QSpecQuantity (J=5, K1=2, K2=2, B+1=2)"


def test_full_circle_mirrors_conjugates():
    half = np.arange(5) + 1j * np.arange(5)
    circle = full_circle(half, 8)
    assert circle.shape == (8,)
    np.testing.assert_allclose(circle[5:], np.conj(half[[3, 2, 1]]))
    odd = full_circle(np.arange(4) * 1j, 7)
    np.testing.assert_allclose(odd[4:], np.conj(odd[[3, 2, 1]]))
