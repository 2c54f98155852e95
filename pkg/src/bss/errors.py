class BssError(Exception):
    """Base class for pipeline errors; the message is the user-facing diagnostic."""


class ParseError(BssError, ValueError):
    pass


class FetchError(BssError):
    pass


class GeometryError(BssError, ValueError):
    pass


class EmptySiteError(BssError):
    pass


class BarrierTimeout(BssError, TimeoutError):
    def __init__(self, absent):
        self.absent = sorted(absent)
        names = ", ".join(f"worker {w}" for w in self.absent)
        super().__init__(f"barrier timeout: absent {names}")
