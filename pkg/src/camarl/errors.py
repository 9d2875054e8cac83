"""Exception taxonomy shared across the package.

Each class maps to a distinct CLI exit code (see ``harness.cli``).
"""


class UsageError(Exception):
    """Caller broke an API or CLI contract (bad flag combination, empty batch)."""

    exit_code = 2


class ConfigurationError(Exception):
    """A config value is structurally invalid (shape mismatch, unknown env id)."""

    exit_code = 3


class CollectionError(Exception):
    """Dataset collection could not produce the requested episodes."""

    exit_code = 4


class IncompatibleInputsError(Exception):
    """Multiple inputs that must agree do not (mixed envs, eval grids)."""

    exit_code = 5
