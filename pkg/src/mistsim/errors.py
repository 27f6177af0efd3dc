"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid configuration.  ``field`` is a dotted path into the config."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class NumericalError(Exception):
    """A numerical routine failed or failed to converge.

    ``module`` names the subsystem that raised, for CLI diagnostics.
    """

    def __init__(self, message, module=None):
        self.module = module
        super().__init__(f"[{module}] {message}" if module else message)


class LabelingError(NumericalError):
    """Dressed-state labeling was ambiguous."""
