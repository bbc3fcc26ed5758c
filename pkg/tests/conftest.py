import numpy as np
import pytest

from src.models import TimeSeries


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def tiny_series():
    """Four observations whose rank periodogram is worked out by hand"""
    return TimeSeries([3.0, 1.0, 2.0, 0.0])


@pytest.fixture
def gaussian_series(rng):
    def make(n: int) -> TimeSeries:
        return TimeSeries(rng.standard_normal(n))
    return make


@pytest.fixture
def csv_file(tmp_path):
    def write(values, header=None, name="series.csv"):
        path = tmp_path / name
        lines = ([header] if header else []) + [str(v) for v in values]
        path.write_text("\n".join(lines) + "\n")
        return path
    return write
