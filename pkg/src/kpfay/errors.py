"""Exception hierarchy shared by every layer of the engine."""


class KPError(Exception):
    """Base class for all engine errors."""


class NonUnit(KPError):
    """A series that must be invertible has a zero constant term."""


class BadConstantTerm(KPError):
    """exp/log jets called on a series with the wrong constant term."""


class RangeTooNarrow(KPError):
    """The trusted range of a series cannot serve the requested coefficient."""


class IndexOutOfRange(KPError):
    pass


class IndicesNotDistinct(KPError):
    pass


class OutsideWindow(KPError):
    """A charge vector outside the tau window was requested."""

    def __init__(self, charge):
        super().__init__(f"charge {tuple(charge)} is outside the tau window")
        self.charge = tuple(charge)


class BandOverflow(KPError):
    pass


class NotUnitShape(KPError):
    pass


class InternalMismatch(KPError):
    pass


class BadParams(KPError):
    pass


class Inconsistent(KPError):
    """The jet solver met a constraint block with no solution."""

    def __init__(self, order, block):
        super().__init__(f"no solution at weight {order}; failing constraint: {block}")
        self.order = order
        self.block = block


class BudgetExceeded(KPError):
    pass


class ConfigInvalid(KPError):
    pass


class ParseError(KPError):
    def __init__(self, message, line=0, column=0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
