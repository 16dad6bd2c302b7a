"""Exception types raised across the package."""


class ValidationError(ValueError):
    """Input violates a documented invariant."""


class DuplicateDetectionError(ValidationError):
    """Two rows share (side, identity, camera, frame)."""


class ParseError(ValidationError):
    """Malformed input line; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class DegenerateProjectionError(ValidationError):
    """Homography maps a point to (near) infinity."""


class UndefinedMeasureError(ValueError):
    """A measure has no value for this input (e.g. MOTA with no ground truth)."""
