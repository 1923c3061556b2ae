class FockCCError(Exception):
    pass


class CapacityError(FockCCError, ValueError):
    """An input exceeds a documented size cap."""


class ParityError(FockCCError, ValueError):
    pass


class BindingError(FockCCError, KeyError):
    """A polynomial variable has no value in the evaluation point."""


class FamilyError(FockCCError, ValueError):
    """A structured parameterization was requested for the wrong level set."""


class ShapeError(FockCCError, ValueError):
    pass


class LevelSetParseError(FockCCError, ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class SeedError(FockCCError):
    """A monodromy seed does not satisfy its system."""
