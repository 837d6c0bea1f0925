"""Exception types raised across the package."""


class HndError(Exception):
    """Base class; ``code`` is the short machine-readable name."""

    code = "Error"


class EmptyInput(HndError, ValueError):
    code = "EmptyInput"


class DuplicateAnswer(HndError, ValueError):
    code = "DuplicateAnswer"

    def __init__(self, user, item):
        super().__init__(f"user {user} answered item {item} more than once")
        self.user = user
        self.item = item


class DimensionMismatch(HndError, ValueError):
    code = "DimensionMismatch"


class EmptyRow(HndError, ValueError):
    code = "EmptyRow"

    def __init__(self, user):
        super().__init__(f"user {user} has no answers")
        self.user = user


class Disconnected(HndError, ValueError):
    code = "Disconnected"

    def __init__(self, components):
        self.components = [list(map(int, c)) for c in components]
        sizes = ",".join(str(len(c)) for c in self.components)
        super().__init__(f"response graph has {len(self.components)} components (sizes {sizes})")


class BetaTooSmall(HndError, ValueError):
    code = "BetaTooSmall"


class ZeroIterate(HndError, ArithmeticError):
    code = "ZeroIterate"


class DegenerateDeflation(HndError, ArithmeticError):
    code = "DegenerateDeflation"


class NonSquare(HndError, ValueError):
    code = "NonSquare"


class NonBinary(HndError, ValueError):
    code = "NonBinary"


class TooLarge(HndError, ValueError):
    code = "TooLarge"


class NoC1POrder(HndError, ValueError):
    code = "NoC1POrder"


class MissingKey(HndError, KeyError):
    code = "MissingKey"

    def __init__(self, item):
        super().__init__(item)
        self.item = item

    def __str__(self):
        return f"no correct option given for item {self.item}"


class ThresholdOrder(HndError, ValueError):
    code = "ThresholdOrder"


class ConfigInvalid(HndError, ValueError):
    code = "ConfigInvalid"


class ConstantInput(HndError, ValueError):
    code = "ConstantInput"


class NotUnit(HndError, ValueError):
    code = "NotUnit"


class Timeout(HndError, RuntimeError):
    code = "Timeout"

    def __init__(self, method, elapsed):
        super().__init__(f"{method} exceeded its time budget after {elapsed:.3f}s")
        self.method = method
        self.elapsed = elapsed
