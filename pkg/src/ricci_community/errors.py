"""Exception hierarchy shared by every module of the package."""


class RicciError(Exception):
    """Base class for all errors raised by ricci_community."""


class DomainError(RicciError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ParseError(DomainError):
    """A line of an input file could not be parsed."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class UnreachableError(DomainError):
    """Two nodes that must be connected have no path between them."""

    def __init__(self, source, target):
        self.source = source
        self.target = target
        super().__init__(f"node {target} is unreachable from node {source}")


class TransportError(RicciError, ArithmeticError):
    """An optimal transport solver failed numerically."""
