"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid or incomplete configuration (bad scenario, missing cost entry, ...)."""


class ScoringError(Exception):
    """A scoring precondition was violated (e.g. energy above the configured bound)."""
