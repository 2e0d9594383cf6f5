from __future__ import annotations


class FormatError(ValueError):
    """Ill-formed instance text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line
