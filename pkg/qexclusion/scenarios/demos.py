"""
Canned scenarios shipped with the CLI.

qutrit-triangle three-block U(3)-type spectrum with equal d_mu |a_mu|; polygon closure
qutrit-shifted  amplitudes violating the polygon condition, rescued by Heisenberg-Weyl shifts
pbr-sweep       minimal copy count for theta = 10..90 degrees
pbr-pi-over-3   single copy at theta = 60 degrees; not excludable, optimal error t^2
capacity-z4     uniform Z_4 orbit; zero-error capacity from the orbit-complement POVM
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List

from qexclusion.config import PBR_CONFIG
from qexclusion.constants import (
    COMMAND_CAPACITY,
    COMMAND_CONSTRUCT,
    COMMAND_PBR,
    DEMO_CAPACITY_Z4,
    DEMO_QUTRIT_TRIANGLE,
    DEMO_QUTRIT_SHIFTED,
    DEMO_PBR_PI_OVER_3,
    DEMO_PBR_SWEEP,
    QUTRIT_CUBE_BLOCKS,
)
from qexclusion.errors import UnknownDemo
from qexclusion.models import ScenarioFile


@dataclass(frozen=True)
class Demo:
    name: str
    command: str
    description: str
    scenario: Dict[str, Any]

    def load(self) -> ScenarioFile:
        return ScenarioFile.model_validate(self.scenario)


def _qutrit_spectrum(moduli: Dict[str, float]) -> List[Dict[str, Any]]:
    return [
        {"label": label, "d": block["d"], "m": block["m"], "amp": moduli[label]}
        for label, block in QUTRIT_CUBE_BLOCKS.items()
    ]


_NORM_A = math.sqrt(1641.0)

DEMOS: Dict[str, Demo] = {
    DEMO_QUTRIT_TRIANGLE: Demo(
        name=DEMO_QUTRIT_TRIANGLE,
        command=COMMAND_CONSTRUCT,
        description="d = (10, 8, 1), |a| = (4, 5, 40)/sqrt(1641): all d|a| equal, closed by an equilateral triangle",
        scenario={
            "name": DEMO_QUTRIT_TRIANGLE,
            "instance": {
                "mode": "block",
                "group": {"kind": "continuous", "name": "SU(3) on (C^3)^x3"},
                "spectrum": _qutrit_spectrum(
                    {"[3]": 4.0 / _NORM_A, "[2,1]": 5.0 / _NORM_A, "[1,1,1]": 40.0 / _NORM_A}
                ),
            },
        },
    ),
    DEMO_QUTRIT_SHIFTED: Demo(
        name=DEMO_QUTRIT_SHIFTED,
        command=COMMAND_CONSTRUCT,
        description="|a| = (1/sqrt2, 1/sqrt2, 0): condition fails, shifts W_{1,1} on both large blocks still exclude",
        scenario={
            "name": DEMO_QUTRIT_SHIFTED,
            "instance": {
                "mode": "block",
                "group": {"kind": "continuous", "name": "SU(3) on (C^3)^x3"},
                "spectrum": _qutrit_spectrum(
                    {"[3]": 1.0 / math.sqrt(2.0), "[2,1]": 1.0 / math.sqrt(2.0), "[1,1,1]": 0.0}
                ),
                "shifts": {"[3]": [1, 1], "[2,1]": [1, 1]},
            },
        },
    ),
    DEMO_PBR_SWEEP: Demo(
        name=DEMO_PBR_SWEEP,
        command=COMMAND_PBR,
        description="minimal n with (1 + tan(theta/2))^n >= 2 over 10..90 degrees",
        scenario={
            "name": DEMO_PBR_SWEEP,
            "pbr": {"unit": "deg"},
            "options": {"sweep_degrees": list(PBR_CONFIG["sweep_degrees"])},
        },
    ),
    DEMO_PBR_PI_OVER_3: Demo(
        name=DEMO_PBR_PI_OVER_3,
        command=COMMAND_PBR,
        description="theta = pi/3, one copy: not excludable, optimal error ((sqrt3 - 1)/2)^2",
        scenario={"name": DEMO_PBR_PI_OVER_3, "pbr": {"theta": 60.0, "unit": "deg", "n": 1}},
    ),
    DEMO_CAPACITY_Z4: Demo(
        name=DEMO_CAPACITY_Z4,
        command=COMMAND_CAPACITY,
        description="uniform Z_4 orbit: complete-minus-matching graph, alpha* = 4/3, log2(4/3) bits",
        scenario={
            "name": DEMO_CAPACITY_Z4,
            "instance": {
                "group": {"kind": "cyclic", "n": 4},
                "spectrum": [{"label": str(k), "amp": 0.5} for k in range(4)],
            },
            "options": {"capacity_povm": "complement"},
        },
    ),
}


def get_demo(name: str) -> Demo:
    try:
        return DEMOS[name]
    except KeyError:
        raise UnknownDemo(f"Unknown demo: {name}", {"available": sorted(DEMOS)})


def list_demos() -> List[Dict[str, str]]:
    return [{"name": d.name, "command": d.command, "description": d.description} for d in DEMOS.values()]
