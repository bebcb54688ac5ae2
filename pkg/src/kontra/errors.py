"""Exception hierarchy shared by all modules."""


class KontraError(Exception):
    """Base class for library errors."""


class GraphError(KontraError, ValueError):
    pass


class LimitExceeded(KontraError, ValueError):
    """Requested size is above a configured maximum."""


class CoincidenceError(KontraError, ValueError):
    """Two points of a configuration coincide (within tolerance)."""


class CacheError(KontraError):
    pass


class MissingWeights(KontraError, KeyError):
    def __init__(self, keys):
        self.keys = sorted(keys)
        super().__init__(f"missing weights for {len(self.keys)} graphs: {', '.join(self.keys)}")

    def __str__(self):
        return self.args[0]


class NonIntegrable(KontraError, ValueError):
    pass


class JacobiViolation(KontraError, ValueError):
    def __init__(self, triple, defect):
        self.triple = triple
        self.defect = defect
        super().__init__(f"Jacobi identity fails at {triple}: defect {defect}")


class NotNilpotent(KontraError, ValueError):
    pass


class MalformedTerm(KontraError, ValueError):
    pass
