"""Constants for quadconvex."""

from fractions import Fraction
from logging import Logger, getLogger

import voluptuous as vol

from .quadapi.types import ToleranceConfig

LOGGER: Logger = getLogger(__package__)

NAME: str = "quadconvex"
VERSION: str = "1.0.0"
EXAMPLESFOLDER: str = "examples"
MAPFILE: str = "map.json"
SCENARIOFILE: str = "scenario.json"
# Significant digits of every float in reports and CSV output
SIGNIFICANT_DIGITS: int = 12

EXIT_OK: int = 0
EXIT_FAILURE: int = 1
EXIT_INDETERMINATE: int = 2
EXIT_INFEASIBLE: int = 3
EXIT_UNBOUNDED: int = 4
EXIT_TRIVIAL_B: int = 5
EXIT_NOT_DEFINITE: int = 6
EXIT_INPUT: int = 64

SEED_MAX: int = 2**63 - 1
RAYS_MAX: int = 100000
RESTARTS_MAX: int = 100000

CHECK_KINDS: tuple[str, ...] = (
    "z_max",
    "z_of_c",
    "boundary_t",
    "support_c",
    "certificate",
    "trivial_b_error",
    "self_check",
)


def _real(value) -> float:
    """Coerce numbers and exact decimal or rational strings such as "-1/4" to float."""
    if isinstance(value, bool):
        raise vol.Invalid("boolean is not a number")
    if isinstance(value, int | float):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError) as err:
            raise vol.Invalid(f"not a number: {value!r}") from err
    raise vol.Invalid(f"not a number: {value!r}")


VALID_REAL = vol.All(_real)
VALID_ENTRY = vol.Any(VALID_REAL, vol.All(vol.ExactSequence([VALID_REAL, VALID_REAL]), list))
VALID_SEED = vol.All(vol.Coerce(int), vol.Range(min=0, max=SEED_MAX))
VALID_RAYS = vol.All(vol.Coerce(int), vol.Range(min=1, max=RAYS_MAX))
VALID_RESTARTS = vol.All(vol.Coerce(int), vol.Range(min=1, max=RESTARTS_MAX))
VALID_TOLERANCE = vol.All(
    vol.Coerce(float), vol.Range(min=ToleranceConfig.TOL_MIN, max=ToleranceConfig.TOL_MAX)
)
VALID_VECTOR = vol.All([VALID_REAL], vol.Length(min=1))

MAP_SCHEMA: vol.Schema = vol.Schema(
    {
        vol.Optional("name", default=""): str,
        vol.Required("field"): vol.In(["real", "complex"]),
        vol.Required("n"): vol.All(int, vol.Range(min=1)),
        vol.Required("m"): vol.All(int, vol.Range(min=1)),
        vol.Required("A"): [[[VALID_ENTRY]]],
        vol.Required("b"): [[VALID_ENTRY]],
    },
    extra=vol.REMOVE_EXTRA,
)

CHECK_SCHEMA: vol.Schema = vol.Schema(
    {
        vol.Required("kind"): vol.In(CHECK_KINDS),
        vol.Optional("expected"): vol.Any(VALID_REAL, VALID_VECTOR),
        vol.Optional("tol", default=1e-3): vol.All(vol.Coerce(float), vol.Range(min=0)),
        vol.Optional("c"): VALID_VECTOR,
        vol.Optional("y"): VALID_VECTOR,
        vol.Optional("d"): VALID_VECTOR,
        vol.Optional("count"): VALID_RAYS,
    }
)

SCENARIO_SCHEMA: vol.Schema = vol.Schema(
    {
        vol.Required("example"): vol.All(int, vol.Range(min=0)),
        vol.Optional("description", default=""): str,
        vol.Optional("c_plus"): VALID_VECTOR,
        vol.Optional("seed", default=0): VALID_SEED,
        vol.Optional("restarts", default=100): VALID_RESTARTS,
        vol.Optional("iters", default=100): VALID_RESTARTS,
        vol.Optional("z_guess"): VALID_REAL,
        vol.Optional("checks", default=list): [CHECK_SCHEMA],
    }
)
