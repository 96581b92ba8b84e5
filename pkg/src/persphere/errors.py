"""Exception types shared across the file-format readers."""


class ParseError(ValueError):
    """A file exists but its contents do not match the expected format."""
