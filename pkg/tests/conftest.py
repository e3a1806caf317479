import numpy as np
import pytest

from skinforge import (Direction, FeasibilitySet, Frequency, LayerStack,
                       PlaneWave, default_surrogate_table)

BENCH_PITCH = 3.7e-3


@pytest.fixture(scope="session")
def f26():
    return Frequency.from_ghz(26.0)


@pytest.fixture(scope="session")
def benchmark_feasibility():
    return FeasibilitySet.benchmark()


@pytest.fixture(scope="session")
def surrogate(benchmark_feasibility, f26):
    return default_surrogate_table(benchmark_feasibility, 41, BENCH_PITCH, f26)


@pytest.fixture(scope="session")
def normal_wave(f26):
    return PlaneWave(Direction(0.0, 0.0), "phi", f26, 1.0)


@pytest.fixture(scope="session")
def glass_stack():
    return LayerStack.insulating_glass_4_10_4()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
