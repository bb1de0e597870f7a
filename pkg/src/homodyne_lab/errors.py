"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a physical quantity."""


class InconsistentSpecError(ValueError):
    """Detector or chain parameters that contradict each other."""


class UnphysicalMeasurementError(ValueError):
    """A measured variance that no state could produce under the assumed loss."""

    def __init__(self, measured: float, bound: float):
        self.measured = measured
        self.bound = bound
        super().__init__(
            f"measured variance {measured:.6g} must exceed 1 - eta = {bound:.6g}"
        )


class NoShotNoiseVisibility(Exception):
    """Clearance of 0 dB: the electronic floor hides the shot noise entirely."""


class ConfigurationError(ValueError):
    """Invalid or inconsistent configuration.

    ``path`` names the offending field as a dotted path when known.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
