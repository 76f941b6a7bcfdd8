"""Named simulation scenarios.

Preset names follow the table numbering used by the acceptance suite, which
is offset from the order the settings are discussed in:

==================  ==========================================================
name                setting
==================  ==========================================================
table2              dense gamma (all 0.05), rho = 0.5, n = 30, q = 60
table3              sparse gamma (1, 1, 0, ...), rho = 0.9, n = 30, q = 60
table3_n15          as table3 with n = 15 (power at beta = 3)
table4_clusters     three independent clusters of 20, within-cluster rho 0.9
table5_q1000_r05    q = 1000, gamma (1, 1, 0.2 x 7, 0, ...), rho = 0.5
table6_q1000_r09    as table5_q1000_r05 with rho = 0.9
table7_heavytail    table3 with centred, scaled cubed-exponential errors
table8_hetero       table3 with rho = 0 and error sd proportional to |x|
table9_npc_s1       d = 10, q = 491, gamma (3, 2, 1, 0, ...), rho = 0.5, NPC
table9_npc_s2       as s1 with rho = 0.9
table9_npc_s3       d = 10, q = 491, gamma = 0.03 on the first 100, rho = 0.9
==================  ==========================================================

All presets default to LEVEL mode (beta = 0) at desk scale (reps = w = 1000);
``full_scale=True`` switches to 10^4 replicates and 2 * 10^4 transformations.
"""

from __future__ import annotations

from .errors import UnknownPreset
from .methods import Method, MethodSpec
from .sim import Design, ErrorLaw, Mode, Scenario

SCALAR_METHODS = (
    MethodSpec(Method.FLHD_PARTIAL),
    MethodSpec(Method.FLHD_SEMIPARTIAL),
    MethodSpec(Method.DOUBLE_RESID),
)
NPC_METHODS = (MethodSpec(Method.FLHD_NPC, psi="max_abs", col=None),)

DESK_REPS, DESK_W = 1000, 1000
FULL_REPS, FULL_W = 10_000, 20_000


_DENSE = (0.0,) + (0.05,) * 59
_SPARSE = (0.0, 1.0, 1.0)
_Q60 = dict(n=30, d=1, q=60, power_beta=(1.5,), methods=SCALAR_METHODS)
_Q1000 = dict(n=30, d=1, q=1000, gamma=_SPARSE + (0.2,) * 7, power_beta=(2.0,), methods=SCALAR_METHODS)
_NPC = dict(n=30, d=10, q=491, power_beta=(3.0, 2.0, 1.0), methods=NPC_METHODS)

PRESETS: dict[str, tuple[str, dict]] = {
    "table2": (
        "dense nuisance, rho=0.5, n=30, q=60; power at beta=1.5",
        dict(_Q60, gamma=_DENSE, design=Design(0.5)),
    ),
    "table3": (
        "sparse nuisance, rho=0.9, n=30, q=60; power at beta=1.5",
        dict(_Q60, gamma=_SPARSE, design=Design(0.9)),
    ),
    "table3_n15": (
        "sparse nuisance, rho=0.9, n=15, q=60; power at beta=3",
        dict(_Q60, n=15, gamma=_SPARSE, design=Design(0.9), power_beta=(3.0,)),
    ),
    "table4_clusters": (
        "dense nuisance, three clusters of 20 with rho=0.9; power at beta=1.5",
        dict(_Q60, gamma=_DENSE, design=Design(0.9, (20, 20, 20))),
    ),
    "table5_q1000_r05": (
        "sparse nuisance, q=1000, rho=0.5; power at beta=2",
        dict(_Q1000, design=Design(0.5)),
    ),
    "table6_q1000_r09": (
        "sparse nuisance, q=1000, rho=0.9; power at beta=2",
        dict(_Q1000, design=Design(0.9)),
    ),
    "table7_heavytail": (
        "table3 with cubed-exponential errors; power at beta=1.5",
        dict(_Q60, gamma=_SPARSE, design=Design(0.9), error_law=ErrorLaw.CUBED_EXPONENTIAL),
    ),
    "table8_hetero": (
        "sparse nuisance, rho=0, errors with sd |x|; power at beta=1.5",
        dict(_Q60, gamma=_SPARSE, design=Design(0.0), error_law=ErrorLaw.HETEROSCEDASTIC),
    ),
    "table9_npc_s1": (
        "d=10 NPC (max |t|), 490 nuisance, gamma=(3,2,1), rho=0.5; power at beta=(3,2,1,0,...)",
        dict(_NPC, gamma=(0.0, 3.0, 2.0, 1.0), design=Design(0.5)),
    ),
    "table9_npc_s2": (
        "d=10 NPC (max |t|), 490 nuisance, gamma=(3,2,1), rho=0.9",
        dict(_NPC, gamma=(0.0, 3.0, 2.0, 1.0), design=Design(0.9)),
    ),
    "table9_npc_s3": (
        "d=10 NPC (max |t|), 490 nuisance, gamma=0.03 on 100 columns, rho=0.9",
        dict(_NPC, gamma=(0.0,) + (0.03,) * 100, design=Design(0.9)),
    ),
}


def preset_names() -> list[str]:
    return list(PRESETS)


def get_preset(name: str, mode=Mode.LEVEL, full_scale: bool = False, **overrides) -> Scenario:
    """Build a preset scenario; ``overrides`` are Scenario fields."""
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    reps, w = (FULL_REPS, FULL_W) if full_scale else (DESK_REPS, DESK_W)
    fields = dict(PRESETS[name][1], reps=reps, w=w, name=name)
    fields.update(overrides)
    scenario = Scenario(**fields)
    return scenario.for_mode(mode)
