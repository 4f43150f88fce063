class ConfigurationError(ValueError):
    """Raised when a run configuration or preset cannot be used.

    Carries the offending field (dotted path) and, when the configuration came
    from a YAML document, the 1-based line it was declared on.
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        self.reason = message
        location = f"line {line}: " if line is not None else ""
        where = f"{field}: " if field else ""
        super().__init__(f"{location}{where}{message}")


class SchedulingError(RuntimeError):
    """Raised when no selection window is left before the end of the run."""
