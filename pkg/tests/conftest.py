from __future__ import annotations

from pathlib import Path

import pytest

from threescale.decomp import decompose, load_mu
from threescale.network import load_model
from threescale.scaling import apply_surface, load_scaling, parse_scaling

MODELS = Path(__file__).resolve().parent.parent / "src" / "threescale" / "models"


def model_path(name: str) -> str:
    return str(MODELS / name)


def system(model: str, scaling: str | None = None):
    vf = load_model(model_path(model))
    surf = load_scaling(model_path(scaling)) if scaling else parse_scaling("")
    return apply_surface(vf, surf)


def decomposed(model: str, case: str):
    """(ThreeScaleSystem, Decomposition) for a bundled model/case pair."""
    stem = model.rsplit(".", 1)[0]
    ts = system(model, f"{stem}_{case}.scaling")
    mu1, mu2 = load_mu(model_path(f"{stem}_{case}.mu"))
    return ts, decompose(ts, mu1, mu2)


BUNDLED = [
    ("compinhib.txt", "slowinhib"),
    ("compinhib.txt", "k1zero"),
    ("compinhib.txt", "k2zero"),
    ("compinhib.txt", "e0zero"),
    ("compinhib.txt", "km3zero"),
    ("cooperative.txt", "k1zero"),
    ("cooperative.txt", "e0zero"),
]


@pytest.fixture(scope="session")
def slowinhib():
    return decomposed("compinhib.txt", "slowinhib")


@pytest.fixture(scope="session")
def compkone():
    return decomposed("compinhib.txt", "k1zero")


@pytest.fixture(scope="session")
def coopkone():
    return decomposed("cooperative.txt", "k1zero")
