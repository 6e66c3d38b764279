"""Exception types shared across the package.

Library code raises ValueError for caller mistakes (bad arguments,
violated preconditions) and one of the ToolError subclasses below for
failures driven by the input data itself. The CLI maps ToolError codes
to exit statuses.
"""


class ToolError(Exception):
    """Base class for data-driven failures. `code` is machine-parsable."""

    code = "error"


class ParseError(ToolError):
    """Input file or stream cannot be parsed (bad header, bad schema)."""

    code = "parse"


class DataError(ToolError):
    """Input parses but fails a contract (coverage, connectivity, ...)."""

    code = "data"
