"""Exception types shared across the package."""


class SingularInputError(ValueError):
    """A normalization was asked for on an input with zero norm."""


class SizeLimitError(ValueError):
    """A deliberately guarded operation was called past its size limit."""


class ConfigError(ValueError):
    """An experiment configuration is inconsistent or incomplete."""


class FormatError(Exception):
    """A container file is malformed. Carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset
