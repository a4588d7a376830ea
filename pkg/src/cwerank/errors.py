"""Exception and warning types raised across the pipeline."""


class CweRankError(Exception):
    """Base class for all fatal pipeline errors."""


class MalformedFile(CweRankError):
    pass


class UnsupportedView(CweRankError):
    pass


class ConflictingEntry(CweRankError):
    pass


class CycleDetected(CweRankError):
    def __init__(self, cycle, message=None):
        self.cycle = list(cycle)
        if message is None:
            path = " -> ".join(f"CWE-{n}" for n in self.cycle)
            message = f"cycle detected: {path}"
        super().__init__(message)


class MalformedFeed(CweRankError):
    pass


class UnknownCwe(CweRankError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownCve(CweRankError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyNode(CweRankError):
    pass


class MismatchedLists(CweRankError):
    pass


class DanglingParentWarning(UserWarning):
    pass


class RejectedEdgeWarning(UserWarning):
    pass


class DegenerateScopeWarning(UserWarning):
    pass
