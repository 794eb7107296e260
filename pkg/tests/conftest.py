"""Fixtures compartilhadas: datasets sintéticos pequenos e CSVs temporários."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
import setup_path  # noqa: E402,F401

from src.flowdata import Dataset  # noqa: E402
from src.synthgen import SynthConfig, generate, write_csv  # noqa: E402


@pytest.fixture
def small_dataset() -> Dataset:
    return generate(SynthConfig(n_rows=200, attack_fraction=0.5, n_features=6,
                                class_separation=4.0, noise_std=1.0, seed=7))


@pytest.fixture
def imbalanced_dataset() -> Dataset:
    return generate(SynthConfig(n_rows=400, attack_fraction=0.9, n_features=5,
                                class_separation=4.0, noise_std=1.0, seed=11))


@pytest.fixture
def synthetic_csv(tmp_path) -> Path:
    path = tmp_path / "flows.csv"
    write_csv(SynthConfig(n_rows=300, attack_fraction=0.5, n_features=8, seed=3), path)
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


@pytest.fixture
def write_lines(tmp_path):
    """Grava linhas de texto como um CSV em tmp_path."""
    def _write(name: str, lines) -> Path:
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path
    return _write
