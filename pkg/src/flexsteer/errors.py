"""Exception types. Configuration problems subclass ``ValueError``;
numerical breakdowns subclass ``ArithmeticError``."""


class ModelError(ValueError):
    """Invalid modal system, preset or state description."""


class DegenerateSpectrumError(ModelError):
    """Repeated modal frequency."""


class TruncationError(ModelError):
    """A state has support outside the simulated blocks."""


class NumericalError(ArithmeticError):
    """Non-finite values or a failed numerical step."""


class GramianSingularError(NumericalError):
    def __init__(self, message, condition_estimate):
        super().__init__(message)
        self.condition_estimate = condition_estimate
