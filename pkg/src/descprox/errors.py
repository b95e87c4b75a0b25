"""Exception types raised across descprox."""


class DescproxError(ValueError):
    """Base class for all descprox errors."""


class EmptySetError(DescproxError):
    pass


class ProbeFailure(DescproxError):
    def __init__(self, probe, element, reason=""):
        self.probe = probe
        self.element = element
        msg = f"probe {probe!r} undefined on element {element!r}"
        super().__init__(f"{msg}: {reason}" if reason else msg)


class SuiteMismatch(DescproxError):
    pass


class InvalidChain(DescproxError):
    pass


class DimensionMismatch(DescproxError):
    pass


class UnknownId(DescproxError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


class StateOutOfSpace(DescproxError):
    pass


class TooFewSamples(DescproxError):
    pass


class SupportOutOfFrame(DescproxError):
    pass


class BadWindow(DescproxError):
    pass


class FrameMismatch(DescproxError):
    pass


class LobeIdMismatch(DescproxError):
    pass


class ValidationError(DescproxError):
    """Input validation failed; ``findings`` holds every problem found."""

    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("; ".join(str(f) for f in self.findings) or "invalid input")


class NoCrossingsWarning(UserWarning):
    """The waveform never changes sign; a single frame-spanning lobe is returned."""
