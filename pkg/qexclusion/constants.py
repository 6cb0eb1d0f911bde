# Shared names used across the toolkit to avoid hardcoded strings

REPORT_VERSION = "1"

# Verdicts
VERDICT_EXCLUDABLE = "excludable"
VERDICT_NOT_EXCLUDABLE = "not_excludable"
VERDICT_UNDECIDED = "undecided"
VERDICT_NONE = "none"

# Construction paths recorded on certificates
PATH_POLYGON = "polygon_closure"
PATH_HEISENBERG_WEYL = "heisenberg_weyl_shift"
PATH_ABELIAN_DUAL = "abelian_dual"
PATH_COMPLEMENT = "orbit_complement"

# Instance modes
MODE_EXPLICIT = "explicit"
MODE_BLOCK = "block"

# Group descriptor kinds
GROUP_KIND_CYCLIC = "cyclic"
GROUP_KIND_PRODUCT = "product"
GROUP_KIND_PAULI_Z = "pauli_z"
GROUP_KIND_CLOCK = "clock"
GROUP_KIND_EXPLICIT = "explicit"
GROUP_KIND_CONTINUOUS = "continuous"

# Outcome label used for the seed effect of a block-level POVM
IDENTITY_LABEL = "e"

# CLI commands
COMMAND_CHECK = "check"
COMMAND_CONSTRUCT = "construct"
COMMAND_VERIFY = "verify"
COMMAND_PBR = "pbr"
COMMAND_CAPACITY = "capacity"
COMMAND_ORACLE = "oracle"
COMMAND_DEMO = "demo"
COMMAND_BATCH = "batch"

COMMANDS = [
    COMMAND_CHECK,
    COMMAND_CONSTRUCT,
    COMMAND_VERIFY,
    COMMAND_PBR,
    COMMAND_CAPACITY,
    COMMAND_ORACLE,
    COMMAND_DEMO,
]

# Oracle methods
ORACLE_METHOD_SPLITTING = "splitting"
ORACLE_METHOD_BISECTION = "bisection"

# Canned demos
DEMO_QUTRIT_TRIANGLE = "qutrit-triangle"
DEMO_QUTRIT_SHIFTED = "qutrit-shifted"
DEMO_PBR_SWEEP = "pbr-sweep"
DEMO_PBR_PI_OVER_3 = "pbr-pi-over-3"
DEMO_CAPACITY_Z4 = "capacity-z4"

# Young-diagram blocks of (C^3)^{x3}: irrep dimension and carrier multiplicity
QUTRIT_CUBE_BLOCKS = {
    "[3]": {"d": 10, "m": 1},
    "[2,1]": {"d": 8, "m": 2},
    "[1,1,1]": {"d": 1, "m": 1},
}
