"""Published reactor models shipped as versioned JSON.

``plants.json`` holds, per operating point (rod drop and initial power):
the identified rational model, the reduced fractional models and the
reference DC gain and normalized reduction errors. ``controllers.json``
holds the reference FOPID and PID controllers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..lti.serialize import system_from_dict
from ..lti.systems import RationalTf
from ..modred import NioptdI, NioptdII
from ..tuner import FopidParams

__all__ = ["PlantFixture", "load_plants", "plant_names", "get_plant", "load_controllers", "design_plant_name", "fixture_text"]


@dataclass(frozen=True)
class PlantFixture:
    name: str
    rod_drop_percent: int
    initial_power_percent: int
    identified: RationalTf
    nioptd1: NioptdI
    nioptd2: NioptdII
    reference_dc_gain: float
    reference_J_normalized: dict


def fixture_text(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text()


@lru_cache(maxsize=None)
def load_plants() -> tuple[PlantFixture, ...]:
    raw = json.loads(fixture_text("plants.json"))
    out = []
    for f in raw["fixtures"]:
        n1, n2 = f["nioptd1"], f["nioptd2"]
        out.append(
            PlantFixture(
                name=f["name"],
                rod_drop_percent=f["rod_drop_percent"],
                initial_power_percent=f["initial_power_percent"],
                identified=system_from_dict(f["identified"]),
                nioptd1=NioptdI(K=n1["K"], T=n1["T"], L=n1["L"], alpha=n1["alpha"]),
                nioptd2=NioptdII.from_coefficients(n2["K"], n2["alpha"], n2["two_zeta_omega_n"], n2["beta"], n2["omega_n_sq"], n2["L"]),
                reference_dc_gain=f["reference"]["dc_gain"],
                reference_J_normalized=dict(f["reference"]["J_normalized"]),
            )
        )
    return tuple(out)


def plant_names() -> list[str]:
    return [f.name for f in load_plants()]


def get_plant(name: str) -> PlantFixture:
    for f in load_plants():
        if f.name == name:
            return f
    raise KeyError(f"unknown fixture {name!r}; available: {', '.join(plant_names())}")


@lru_cache(maxsize=None)
def _controllers() -> dict:
    return json.loads(fixture_text("controllers.json"))


def load_controllers() -> dict[str, FopidParams]:
    raw = _controllers()["controllers"]
    return {k: FopidParams.from_dict(v) for k, v in raw.items()}


def design_plant_name() -> str:
    """Fixture the bundled controllers were designed on."""
    return _controllers()["design_plant"]
