"""Exception hierarchy shared by every module."""


class NLDecompError(Exception):
    """Base class for all errors raised by nldecomp."""


class NonFiniteSample(NLDecompError, ValueError):
    pass


class BadBandwidth(NLDecompError, ValueError):
    pass


class BadOrder(NLDecompError, ValueError):
    pass


class LengthMismatch(NLDecompError, ValueError):
    pass


class DegenerateSignal(NLDecompError, ValueError):
    pass


class SampleOutOfRange(NLDecompError, ValueError):
    pass


class NonFiniteOutput(NLDecompError, ArithmeticError):
    pass


class NotSeparable(NLDecompError, ValueError):
    pass


class IllConditioned(NLDecompError, ArithmeticError):
    pass


class TooFewSamples(NLDecompError, ValueError):
    pass


class DegenerateDistortion(NLDecompError, ValueError):
    """E[|d|^2] is numerically zero, so the memory finiteness index is undefined."""


class DegenerateResidual(NLDecompError, ValueError):
    """Raised when r or h vanishes; ``epsilon_abs`` still carries the (zero) modulus."""

    def __init__(self, message, epsilon_abs=0.0):
        super().__init__(message)
        self.epsilon_abs = epsilon_abs


class PowerDominanceViolated(NLDecompError, ValueError):
    """E[|d|^2] < E[|h|^2]: non-realizable decomposition or fitting artifact."""

    def __init__(self, message, lhs=None, rhs=None):
        super().__init__(message)
        self.lhs = lhs
        self.rhs = rhs


class DegenerateInput(NLDecompError, ValueError):
    pass


class TooShort(NLDecompError, ValueError):
    pass


class DivergedLoss(NLDecompError, ArithmeticError):
    pass


class DegenerateTarget(NLDecompError, ValueError):
    pass


class NoReference(NLDecompError, ValueError):
    pass


class ConfigError(NLDecompError, ValueError):
    pass
