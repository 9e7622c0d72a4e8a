"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Inconsistent or unresolvable configuration (widths, models, sizes)."""


class FxRangeError(ValueError):
    """A real value does not fit the requested fixed-point format."""

    def __init__(self, value, fmt):
        self.value = value
        self.fmt = fmt
        super().__init__(
            f"value {value!r} outside representable range "
            f"[{fmt.min_value}, {fmt.max_value}] of {fmt}"
        )


class InputError(ValueError):
    """Numerically invalid input (zero-norm reference, non-finite data, ...)."""


class FormatError(ValueError):
    """Malformed or truncated input file."""
