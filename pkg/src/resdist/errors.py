"""Exception types raised across the package."""


class ResdistError(Exception):
    pass


class DomainError(ResdistError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(ResdistError, ValueError):
    """A structural precondition (e.g. an undersized prime table) is violated."""


class UnsupportedModulusError(DomainError):
    pass


class ResourceLimitError(ResdistError, MemoryError):
    pass
