import json
from pathlib import Path

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


def random_density(rng, dim):
    """Random full-rank density matrix via a Wishart draw."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_state(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def write_config(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def _cell(text):
    if not text:
        return np.nan
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path):
    """Parse a tool CSV into (header, rows); numeric cells become floats,
    empty cells nan, anything else stays a string."""
    lines = Path(path).read_text().split("\n")
    assert lines[-1] == ""
    header = lines[0].split(",")
    rows = [[_cell(c) for c in line.split(",")] for line in lines[1:-1]]
    return header, rows
