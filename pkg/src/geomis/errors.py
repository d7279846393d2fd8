class GeomisError(Exception):
    pass


class MembershipError(GeomisError, KeyError):
    """Duplicate insert or delete of an absent element."""


class OrderingError(GeomisError, ValueError):
    """Merge/split ordering precondition violated."""


class PreconditionError(GeomisError, ValueError):
    """Operation called outside its contract."""


class InternalInvariantError(GeomisError, AssertionError):
    """A guaranteed-by-construction step failed; indicates a bug."""
