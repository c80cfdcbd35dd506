"""Exception types shared across the package.

``ValidationError`` covers bad inputs (CLI exit code 2); ``DivergenceError``
covers numerical blow-ups during encoding or training (CLI exit code 3).
"""


class ValidationError(ValueError):
    pass


class InvalidParams(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class TooLarge(ValidationError):
    pass


class UnsupportedKind(ValidationError):
    pass


class InvalidAlpha(ValidationError):
    pass


class InvalidVariance(ValidationError):
    pass


class InvalidProbability(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class KMismatch(ValidationError):
    pass


class InvalidTarget(ValidationError):
    pass


class HeterogeneousFeatureDims(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ManifestMismatch(ValidationError):
    def __init__(self, mismatches):
        self.mismatches = dict(mismatches)
        detail = ", ".join(f"{k}: expected {e}, found {f}" for k, (e, f) in self.mismatches.items())
        super().__init__(f"manifest mismatch ({detail})")


class DivergenceError(ArithmeticError):
    """Raised when a forward pass or loss term produces NaN/Inf."""

    def __init__(self, message, term=None):
        self.term = term
        super().__init__(message)
