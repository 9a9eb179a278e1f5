"""Error taxonomy shared across modules.

Exit-code mapping used by the CLI: ConfigurationError -> 2,
InfeasibleGeometryError -> 3, I/O errors (OSError) -> 4.
"""


class ConfigurationError(ValueError):
    """A scenario configuration is malformed or violates an invariant."""


class InfeasibleGeometryError(ValueError):
    """Requested geometry cannot be realized inside the machine room."""
