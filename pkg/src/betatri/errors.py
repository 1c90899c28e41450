"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain of the requested operation."""


class ResourceCapError(RuntimeError):
    """A configured size cap (state space, vertex count) would be exceeded."""


class MuParseError(DomainError):
    """A heterogeneity-vector source could not be parsed.

    ``line`` is the 1-based line (or array position) of the offending entry,
    or None when the problem is not tied to one entry.
    """

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}"
        if line is not None:
            where += f"{':' if where else ''}line {line}"
        super().__init__(f"{where}: {message}" if where else message)
