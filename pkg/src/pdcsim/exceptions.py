"""Exception types raised across pdcsim."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class UndefinedStatisticError(ValueError):
    """A statistic cannot be formed from the data (e.g. zero mean)."""


class NonThermalError(ValueError):
    """Bunching at or below the coherent level; mode count is unbounded."""


class ConfigError(ValueError):
    """A configuration file entry is missing, unknown or malformed."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key '{key}': {message}")
