"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class HetsearchError(Exception):
    pass


class ParseError(HetsearchError):
    """Malformed expression text. ``offset`` is a byte offset into the UTF-8 source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.message = message
        self.offset = offset


class SchemaError(HetsearchError):
    """Problem document violates the JSON schema; ``path`` names the offending location."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class EvalError(HetsearchError):
    pass


class SpaceTooLargeError(HetsearchError):
    pass


class InfeasibleError(HetsearchError):
    pass
